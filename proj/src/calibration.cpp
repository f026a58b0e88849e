#include "properuq/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "properuq/parallel.hpp"

namespace properuq {
namespace {

constexpr double kDensityFloor = 1e-10;
constexpr double kLogSmoothing = 1e-6;
constexpr std::int64_t kRowBlock = 256;

double top_confidence(const SimplexVector& p) { return p[p.argmax()]; }

// Upper boundary values (inclusive) for equal-mass bins; the lowest bin
// whose boundary covers a value wins, which sends ties to the lower bin.
std::vector<double> equal_mass_uppers(std::vector<double> values, int bins) {
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    std::vector<double> uppers(static_cast<std::size_t>(bins));
    for (int j = 0; j < bins; ++j) {
        std::size_t idx = (static_cast<std::size_t>(j) + 1) * n / static_cast<std::size_t>(bins);
        uppers[static_cast<std::size_t>(j)] = values[idx == 0 ? 0 : idx - 1];
    }
    uppers.back() = values.back();
    return uppers;
}

void validate_bandwidth(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw std::invalid_argument("bandwidth must be finite and > 0");
    }
}

void validate_exponent(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw std::invalid_argument("p exponent must be finite and >= 1");
    }
}

// log of the Dirichlet normalizer for concentration x/h + 1.
double log_dirichlet_normalizer(const Eigen::VectorXd& x, double h) {
    int d = static_cast<int>(x.size());
    double total = 1.0 / h + d;  // sum of alpha; simplex mass is 1
    double log_c = std::lgamma(total);
    for (int i = 0; i < d; ++i) {
        log_c -= std::lgamma(x(i) / h + 1.0);
    }
    return log_c;
}

SimplexVector smooth_for_log(const Eigen::VectorXd& c) {
    int d = static_cast<int>(c.size());
    Eigen::VectorXd s = (c.array() + kLogSmoothing) / (1.0 + d * kLogSmoothing);
    return SimplexVector(std::move(s));
}

SimplexVector row_to_simplex(const Eigen::VectorXd& row) {
    // Conditional rows are normalized weight mixtures; tiny float drift is
    // absorbed by the SimplexVector renormalization.
    return SimplexVector(row);
}

}  // namespace

BinningScheme BinningScheme::parse(const std::string& flag) {
    std::size_t colon = flag.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("binning flag '" + flag + "': expected <mode>:<bins>");
    }
    std::string mode = flag.substr(0, colon);
    int bins = std::stoi(flag.substr(colon + 1));
    if (bins < 1) {
        throw std::invalid_argument("binning flag '" + flag + "': bins must be >= 1");
    }
    BinningScheme s;
    s.bins = bins;
    if (mode == "uniform") {
        s.mode = Mode::UniformWidth;
    } else if (mode == "equal-mass") {
        s.mode = Mode::EqualMass;
    } else {
        throw std::invalid_argument("binning flag '" + flag + "': unknown mode '" + mode + "'");
    }
    return s;
}

std::string BinningScheme::to_flag_string() const {
    return (mode == Mode::UniformWidth ? std::string("uniform:") : std::string("equal-mass:")) +
           std::to_string(bins);
}

std::vector<int> assign_bins(const std::vector<double>& confidences,
                             const BinningScheme& scheme) {
    if (confidences.empty()) {
        throw std::invalid_argument("assign_bins: no values");
    }
    std::vector<int> out(confidences.size());
    if (scheme.mode == BinningScheme::Mode::UniformWidth) {
        for (std::size_t i = 0; i < confidences.size(); ++i) {
            double v = confidences[i];
            int b = static_cast<int>(std::floor(v * scheme.bins));
            if (b >= scheme.bins) b = scheme.bins - 1;  // closed last bin
            if (b < 0) b = 0;
            out[i] = b;
        }
        return out;
    }
    std::vector<double> uppers = equal_mass_uppers(confidences, scheme.bins);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        double v = confidences[i];
        int b = 0;
        while (b + 1 < scheme.bins && v > uppers[static_cast<std::size_t>(b)]) ++b;
        out[i] = b;
    }
    return out;
}

CalibrationReport tce_binned(double p_exponent, const LabeledPredictionSet& data,
                             const BinningScheme& scheme) {
    validate_exponent(p_exponent);
    int n = data.size();
    std::vector<double> conf(static_cast<std::size_t>(n));
    std::vector<int> hit(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const SimplexVector& p = data.prediction(i);
        int top = p.argmax();
        conf[static_cast<std::size_t>(i)] = p[top];
        hit[static_cast<std::size_t>(i)] = top == data.label(i) ? 1 : 0;
    }
    std::vector<int> bin = assign_bins(conf, scheme);

    std::vector<int> count(static_cast<std::size_t>(scheme.bins), 0);
    std::vector<double> acc_sum(static_cast<std::size_t>(scheme.bins), 0.0);
    std::vector<double> conf_sum(static_cast<std::size_t>(scheme.bins), 0.0);
    for (int i = 0; i < n; ++i) {
        std::size_t b = static_cast<std::size_t>(bin[static_cast<std::size_t>(i)]);
        count[b] += 1;
        acc_sum[b] += hit[static_cast<std::size_t>(i)];
        conf_sum[b] += conf[static_cast<std::size_t>(i)];
    }
    double acc_total = 0.0;
    for (int b = 0; b < scheme.bins; ++b) {
        std::size_t bi = static_cast<std::size_t>(b);
        if (count[bi] == 0) continue;
        double gap = std::abs(acc_sum[bi] / count[bi] - conf_sum[bi] / count[bi]);
        acc_total += static_cast<double>(count[bi]) / n * std::pow(gap, p_exponent);
    }
    CalibrationReport r;
    r.estimator = "tce";
    r.value = std::pow(acc_total, 1.0 / p_exponent);
    r.p_exponent = p_exponent;
    r.bins = scheme.bins;
    r.n = n;
    return r;
}

double dirichlet_kernel(const SimplexVector& x, const SimplexVector& y, double h) {
    validate_bandwidth(h);
    if (x.dim() != y.dim()) {
        throw std::invalid_argument("dirichlet_kernel: dim mismatch");
    }
    double log_k = log_dirichlet_normalizer(x.probs(), h);
    for (int i = 0; i < x.dim(); ++i) {
        double yi = std::max(y[i], kDensityFloor);
        log_k += x[i] / h * std::log(yi);
    }
    return std::exp(log_k);
}

SimplexVector kd_conditional(const LabeledPredictionSet& data, const SimplexVector& query,
                             double h, int leave_out) {
    validate_bandwidth(h);
    if (query.dim() != data.dim()) {
        throw std::invalid_argument("kd_conditional: query dim mismatch");
    }
    int n = data.size();
    int d = data.dim();
    std::vector<double> log_w(static_cast<std::size_t>(n),
                              -std::numeric_limits<double>::infinity());
    double log_c = log_dirichlet_normalizer(query.probs(), h);
    double max_lw = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        if (i == leave_out) continue;
        double lw = log_c;
        const SimplexVector& f = data.prediction(i);
        for (int j = 0; j < d; ++j) {
            lw += query[j] / h * std::log(std::max(f[j], kDensityFloor));
        }
        log_w[static_cast<std::size_t>(i)] = lw;
        if (lw > max_lw) max_lw = lw;
    }
    Eigen::VectorXd num = Eigen::VectorXd::Zero(d);
    double denom = 0.0;
    if (std::isfinite(max_lw)) {
        for (int i = 0; i < n; ++i) {
            if (i == leave_out) continue;
            double w = std::exp(log_w[static_cast<std::size_t>(i)] - max_lw);
            num(data.label(i)) += w;
            denom += w;
        }
    }
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        return SimplexVector::uniform(d);
    }
    return SimplexVector(num / denom);
}

ConditionalTable kd_conditional_all(const LabeledPredictionSet& data, double h,
                                    bool leave_one_out) {
    validate_bandwidth(h);
    int n = data.size();
    int d = data.dim();
    Eigen::MatrixXd F = data.prediction_matrix();
    // log k(query_i, f_j) = log_c(query_i) + (1/h) <query_i, log clamp(f_j)>.
    Eigen::MatrixXd L = F.array().max(kDensityFloor).log().matrix();
    Eigen::VectorXd log_c(n);
    for (int i = 0; i < n; ++i) {
        log_c(i) = log_dirichlet_normalizer(F.row(i).transpose(), h);
    }
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, d);
    for (int i = 0; i < n; ++i) {
        onehot(i, data.label(i)) = 1.0;
    }

    ConditionalTable table;
    table.rows.resize(n, d);
    std::vector<int> degenerate(static_cast<std::size_t>((n + kRowBlock - 1) / kRowBlock), 0);
    std::exception_ptr failure;
    std::mutex failure_mu;
    parallel_for_blocks(n, kRowBlock, [&](std::int64_t begin, std::int64_t end) {
        try {
            std::int64_t block_rows = end - begin;
            Eigen::MatrixXd S = (F.middleRows(begin, block_rows) * L.transpose()) / h;
            S.colwise() += log_c.segment(begin, block_rows);
            int local_degenerate = 0;
            for (std::int64_t bi = 0; bi < block_rows; ++bi) {
                std::int64_t i = begin + bi;
                if (leave_one_out) {
                    S(bi, i) = -std::numeric_limits<double>::infinity();
                }
                double m = S.row(bi).maxCoeff();
                Eigen::VectorXd w(n);
                if (std::isfinite(m)) {
                    w = (S.row(bi).transpose().array() - m).exp();
                } else {
                    w.setZero();
                }
                double denom = w.sum();
                if (!(denom > 0.0) || !std::isfinite(denom)) {
                    table.rows.row(i).setConstant(1.0 / d);
                    ++local_degenerate;
                    continue;
                }
                table.rows.row(i) = (onehot.transpose() * w).transpose() / denom;
            }
            degenerate[static_cast<std::size_t>(begin / kRowBlock)] = local_degenerate;
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    for (int c : degenerate) table.degenerate_rows += c;
    return table;
}

CalibrationReport cce_kde(double p_exponent, const LabeledPredictionSet& data, double h,
                          bool leave_one_out) {
    validate_exponent(p_exponent);
    ConditionalTable table = kd_conditional_all(data, h, leave_one_out);
    Eigen::MatrixXd F = data.prediction_matrix();
    int n = data.size();
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
        double term = (F.row(i) - table.rows.row(i))
                          .array()
                          .abs()
                          .pow(p_exponent)
                          .sum();
        acc.add(term);
    }
    CalibrationReport r;
    r.estimator = "cce";
    r.value = std::pow(acc.value() / n, 1.0 / p_exponent);
    r.p_exponent = p_exponent;
    r.bandwidth = h;
    r.n = n;
    r.degenerate_fallback = table.degenerate_rows > 0;
    return r;
}

CalibrationReport proper_ce(ScoreKind kind, const LabeledPredictionSet& data, double h,
                            bool leave_one_out) {
    ConditionalTable table = kd_conditional_all(data, h, leave_one_out);
    int n = data.size();
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
        SimplexVector chat = row_to_simplex(table.rows.row(i).transpose());
        if (kind == ScoreKind::Log) {
            chat = smooth_for_log(chat.probs());
        }
        acc.add(divergence(kind, data.prediction(i), chat));
    }
    CalibrationReport r;
    r.estimator = "proper";
    r.value = acc.value() / n;
    r.bandwidth = h;
    r.kind = to_string(kind);
    r.n = n;
    r.degenerate_fallback = table.degenerate_rows > 0;
    return r;
}

double sharpness(ScoreKind kind, const LabeledPredictionSet& data, double h,
                 bool leave_one_out) {
    ConditionalTable table = kd_conditional_all(data, h, leave_one_out);
    SimplexVector marginal = data.marginal_label_frequency();
    int n = data.size();
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
        SimplexVector chat = row_to_simplex(table.rows.row(i).transpose());
        if (kind == ScoreKind::Log) {
            chat = smooth_for_log(chat.probs());
        }
        acc.add(divergence(kind, marginal, chat));
    }
    return acc.value() / n;
}

SimplexVector temperature_scale(const SimplexVector& p, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("temperature_scale: alpha must be finite and > 0");
    }
    if (alpha == 1.0) return p;
    int d = p.dim();
    Eigen::VectorXd z(d);
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
        z(i) = p[i] > 0.0 ? alpha * std::log(p[i]) : -std::numeric_limits<double>::infinity();
        if (z(i) > m) m = z(i);
    }
    Eigen::VectorXd e(d);
    for (int i = 0; i < d; ++i) {
        e(i) = std::isfinite(z(i)) ? std::exp(z(i) - m) : 0.0;
    }
    return SimplexVector(e / e.sum());
}

namespace {

LabeledPredictionSet scaled_copy(const LabeledPredictionSet& data, double alpha) {
    std::vector<SimplexVector> preds;
    preds.reserve(static_cast<std::size_t>(data.size()));
    for (int i = 0; i < data.size(); ++i) {
        preds.push_back(temperature_scale(data.prediction(i), alpha));
    }
    return LabeledPredictionSet(std::move(preds), data.labels(), data.provenance_id());
}

}  // namespace

TemperatureFit fit_temperature(ScoreKind kind, const LabeledPredictionSet& data) {
    auto risk_at = [&](double t) {
        return empirical_risk(kind, scaled_copy(data, std::pow(10.0, t)));
    };
    constexpr double lo = -3.0, hi = 3.0;
    constexpr int kScan = 25;

    // Coarse scan brackets the minimum before golden-section refinement.
    double best_t = lo;
    double best_risk = std::numeric_limits<double>::infinity();
    int best_idx = 0;
    for (int i = 0; i < kScan; ++i) {
        double t = lo + (hi - lo) * i / (kScan - 1);
        double r = risk_at(t);
        if (r < best_risk) {
            best_risk = r;
            best_t = t;
            best_idx = i;
        }
    }
    double a = lo + (hi - lo) * std::max(0, best_idx - 1) / (kScan - 1);
    double b = lo + (hi - lo) * std::min(kScan - 1, best_idx + 1) / (kScan - 1);

    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = risk_at(x1);
    double f2 = risk_at(x2);
    while (b - a > 1e-4) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = risk_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = risk_at(x2);
        }
    }
    double t_star = 0.5 * (a + b);
    double r_star = risk_at(t_star);
    if (best_risk < r_star) {
        t_star = best_t;
        r_star = best_risk;
    }

    TemperatureFit fit;
    fit.risk_before = empirical_risk(kind, data);
    if (r_star <= fit.risk_before) {
        fit.alpha = std::pow(10.0, t_star);
        fit.risk_after = r_star;
    } else {
        // Identity guard: never report a fit worse than no scaling.
        fit.alpha = 1.0;
        fit.risk_after = fit.risk_before;
    }
    return fit;
}

ImprovementCheck improvement_check(
    ScoreKind kind, const LabeledPredictionSet& data,
    const std::function<SimplexVector(const SimplexVector&)>& exact_conditional, double alpha) {
    int n = data.size();
    KahanSum risk_delta, ce_delta;
    for (int i = 0; i < n; ++i) {
        const SimplexVector& f = data.prediction(i);
        SimplexVector g = temperature_scale(f, alpha);
        SimplexVector c = exact_conditional(f);
        risk_delta.add(score(kind, g, data.label(i)) - score(kind, f, data.label(i)));
        ce_delta.add(divergence(kind, g, c) - divergence(kind, f, c));
    }
    ImprovementCheck out;
    out.risk_delta = risk_delta.value() / n;
    out.ce_delta = ce_delta.value() / n;
    out.gap = std::abs(out.risk_delta - out.ce_delta);
    return out;
}

std::vector<EntropyLevel> aleatoric_inequality_check(ScoreKind kind,
                                                     const LabeledPredictionSet& data,
                                                     int levels) {
    if (levels < 1) {
        throw std::invalid_argument("aleatoric_inequality_check: levels must be >= 1");
    }
    int n = data.size();
    int d = data.dim();
    std::vector<double> ent(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ent[static_cast<std::size_t>(i)] = entropy(kind, data.prediction(i));
    }
    BinningScheme scheme;
    scheme.mode = BinningScheme::Mode::EqualMass;
    scheme.bins = levels;
    std::vector<int> bin = assign_bins(ent, scheme);

    std::vector<EntropyLevel> out;
    for (int b = 0; b < levels; ++b) {
        Eigen::VectorXd freq = Eigen::VectorXd::Zero(d);
        double ent_sum = 0.0;
        int count = 0;
        for (int i = 0; i < n; ++i) {
            if (bin[static_cast<std::size_t>(i)] != b) continue;
            freq(data.label(i)) += 1.0;
            ent_sum += ent[static_cast<std::size_t>(i)];
            ++count;
        }
        if (count == 0) continue;
        EntropyLevel level;
        level.count = count;
        level.predicted_entropy = ent_sum / count;
        level.conditional_entropy_estimate = entropy(kind, SimplexVector(freq / count));
        out.push_back(level);
    }
    return out;
}

std::vector<ReliabilityBin> reliability(const LabeledPredictionSet& data,
                                        const BinningScheme& scheme) {
    int n = data.size();
    std::vector<double> conf(static_cast<std::size_t>(n));
    std::vector<int> hit(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const SimplexVector& p = data.prediction(i);
        int top = p.argmax();
        conf[static_cast<std::size_t>(i)] = p[top];
        hit[static_cast<std::size_t>(i)] = top == data.label(i) ? 1 : 0;
    }
    std::vector<int> bin = assign_bins(conf, scheme);
    std::vector<ReliabilityBin> out(static_cast<std::size_t>(scheme.bins));
    for (int b = 0; b < scheme.bins; ++b) {
        std::size_t bi = static_cast<std::size_t>(b);
        if (scheme.mode == BinningScheme::Mode::UniformWidth) {
            out[bi].lo = static_cast<double>(b) / scheme.bins;
            out[bi].hi = static_cast<double>(b + 1) / scheme.bins;
        } else {
            out[bi].lo = std::numeric_limits<double>::infinity();
            out[bi].hi = -std::numeric_limits<double>::infinity();
        }
    }
    for (int i = 0; i < n; ++i) {
        std::size_t bi = static_cast<std::size_t>(bin[static_cast<std::size_t>(i)]);
        out[bi].count += 1;
        out[bi].acc += hit[static_cast<std::size_t>(i)];
        out[bi].conf += conf[static_cast<std::size_t>(i)];
        if (scheme.mode == BinningScheme::Mode::EqualMass) {
            out[bi].lo = std::min(out[bi].lo, conf[static_cast<std::size_t>(i)]);
            out[bi].hi = std::max(out[bi].hi, conf[static_cast<std::size_t>(i)]);
        }
    }
    for (auto& b : out) {
        if (b.count > 0) {
            b.acc /= b.count;
            b.conf /= b.count;
        } else {
            b.acc = 0.0;
            b.conf = 0.0;
            if (scheme.mode == BinningScheme::Mode::EqualMass) {
                b.lo = 0.0;
                b.hi = 0.0;
            }
        }
    }
    return out;
}

}  // namespace properuq

#include "properuq/estimator_risk.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "properuq/parallel.hpp"

namespace properuq {
namespace {

std::string format_param(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

Eigen::VectorXd clip_renormalize(Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) < 0.0) v(i) = 0.0;
    }
    double s = v.sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
        return Eigen::VectorXd::Constant(v.size(), 1.0 / static_cast<double>(v.size()));
    }
    return v / s;
}

}  // namespace

HSpec HSpec::binned(BinningScheme scheme) {
    HSpec s;
    s.kind = Kind::Binned;
    s.scheme = scheme;
    return s;
}

HSpec HSpec::kde(double bandwidth) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be > 0");
    HSpec s;
    s.kind = Kind::Kde;
    s.bandwidth = bandwidth;
    return s;
}

HSpec HSpec::krr(double lambda, double gamma) {
    if (!(lambda > 0.0)) throw std::invalid_argument("krr: lambda must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("krr: gamma must be > 0");
    HSpec s;
    s.kind = Kind::Krr;
    s.lambda = lambda;
    s.gamma = gamma;
    return s;
}

HSpec HSpec::oracle_fn(std::function<SimplexVector(const SimplexVector&)> fn) {
    if (!fn) throw std::invalid_argument("oracle: missing conditional handle");
    HSpec s;
    s.kind = Kind::Oracle;
    s.oracle = std::move(fn);
    return s;
}

std::string HSpec::name() const {
    switch (kind) {
        case Kind::Binned: return "binned";
        case Kind::Kde: return "kde";
        case Kind::Krr: return "krr";
        case Kind::Oracle: return "oracle";
    }
    return "?";
}

std::string HSpec::hyperparams() const {
    switch (kind) {
        case Kind::Binned: return scheme.to_flag_string();
        case Kind::Kde: return "h=" + format_param(bandwidth);
        case Kind::Krr: return "lambda=" + format_param(lambda) + ",gamma=" + format_param(gamma);
        case Kind::Oracle: return "";
    }
    return "";
}

double HSpec::complexity() const {
    switch (kind) {
        case Kind::Binned: return static_cast<double>(scheme.bins);
        case Kind::Kde: return 1.0 / bandwidth;
        case Kind::Krr: return 1.0 / lambda;
        case Kind::Oracle: return 0.0;
    }
    return 0.0;
}

Eigen::VectorXd CalibrationEstimationFunction::chat(const SimplexVector& p) const {
    return chat_(p);
}

double CalibrationEstimationFunction::h_value(const SimplexVector& p,
                                              const SimplexVector& p2) const {
    Eigen::VectorXd a = p.probs() - chat_(p);
    Eigen::VectorXd b = p2.probs() - chat_(p2);
    return a.dot(b);
}

CalibrationEstimationFunction fit(const HSpec& spec, const LabeledPredictionSet& train) {
    CalibrationEstimationFunction out;
    out.name_ = spec.name();
    out.hyperparams_ = spec.hyperparams();
    out.complexity_ = spec.complexity();
    out.train_id_ = train.provenance_id();
    int n = train.size();
    int d = train.dim();

    switch (spec.kind) {
        case HSpec::Kind::Binned: {
            // Bin on the first prediction coordinate; each bin stores its
            // label frequency, empty bins fall back to the global marginal.
            BinningScheme scheme = spec.scheme;
            std::vector<double> coord(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) coord[static_cast<std::size_t>(i)] = train.prediction(i)[0];
            std::vector<int> bin = assign_bins(coord, scheme);
            Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(scheme.bins, d);
            Eigen::VectorXd count = Eigen::VectorXd::Zero(scheme.bins);
            for (int i = 0; i < n; ++i) {
                freq(bin[static_cast<std::size_t>(i)], train.label(i)) += 1.0;
                count(bin[static_cast<std::size_t>(i)]) += 1.0;
            }
            Eigen::VectorXd marginal = train.marginal_label_frequency().probs();
            for (int b = 0; b < scheme.bins; ++b) {
                if (count(b) > 0.0) {
                    freq.row(b) /= count(b);
                } else {
                    freq.row(b) = marginal.transpose();
                }
            }
            // Query-time assignment reuses the training edges for equal-mass
            // schemes by re-binning against the training coordinates.
            if (scheme.mode == BinningScheme::Mode::UniformWidth) {
                int bins = scheme.bins;
                out.chat_ = [freq, bins](const SimplexVector& p) -> Eigen::VectorXd {
                    int b = static_cast<int>(std::floor(p[0] * bins));
                    if (b >= bins) b = bins - 1;
                    if (b < 0) b = 0;
                    return freq.row(b).transpose();
                };
            } else {
                out.chat_ = [freq, scheme, coord](const SimplexVector& p) -> Eigen::VectorXd {
                    std::vector<double> joined = coord;
                    joined.push_back(p[0]);
                    std::vector<int> bins = assign_bins(joined, scheme);
                    return freq.row(bins.back()).transpose();
                };
            }
            break;
        }
        case HSpec::Kind::Kde: {
            auto train_copy = std::make_shared<LabeledPredictionSet>(train);
            double h = spec.bandwidth;
            out.chat_ = [train_copy, h](const SimplexVector& p) -> Eigen::VectorXd {
                return kd_conditional(*train_copy, p, h).probs();
            };
            break;
        }
        case HSpec::Kind::Krr: {
            // Centered kernel ridge with one-hot targets; the intercept makes
            // chat tend to the marginal label frequency as lambda grows.
            KernelSpec kernel = KernelSpec::rbf(spec.gamma);
            Eigen::MatrixXd F = train.prediction_matrix();
            SampleSet points(F, train.provenance_id());
            Eigen::MatrixXd K = gram(kernel, points, points).values;
            Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, d);
            for (int i = 0; i < n; ++i) Y(i, train.label(i)) = 1.0;
            Eigen::VectorXd ybar = Y.colwise().mean().transpose();
            Eigen::VectorXd krow_mean = K.rowwise().mean();
            double kall = K.mean();
            Eigen::MatrixXd Kc = K;
            Kc.colwise() -= krow_mean;
            Kc.rowwise() -= krow_mean.transpose();
            Kc.array() += kall;
            Eigen::MatrixXd Yc = Y.rowwise() - ybar.transpose();
            Eigen::MatrixXd reg =
                Kc + spec.lambda * static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
            Eigen::LDLT<Eigen::MatrixXd> solver(reg);
            if (solver.info() != Eigen::Success) {
                throw std::runtime_error("krr fit: singular system at lambda=" +
                                         format_param(spec.lambda));
            }
            Eigen::MatrixXd alpha = solver.solve(Yc);
            if (!alpha.allFinite()) {
                throw std::runtime_error("krr fit: non-finite solution at lambda=" +
                                         format_param(spec.lambda));
            }
            auto train_points = std::make_shared<SampleSet>(std::move(points));
            auto alpha_p = std::make_shared<Eigen::MatrixXd>(std::move(alpha));
            auto krow_p = std::make_shared<Eigen::VectorXd>(std::move(krow_mean));
            out.chat_ = [kernel, train_points, alpha_p, krow_p,
                         ybar](const SimplexVector& p) -> Eigen::VectorXd {
                int m = train_points->size();
                Eigen::VectorXd kp(m);
                for (int i = 0; i < m; ++i) {
                    kp(i) = kernel_eval(kernel, p.probs(), train_points->point(i));
                }
                Eigen::VectorXd raw =
                    ybar + alpha_p->transpose() * (kp - *krow_p);
                return clip_renormalize(std::move(raw));
            };
            break;
        }
        case HSpec::Kind::Oracle: {
            auto fn = spec.oracle;
            out.chat_ = [fn](const SimplexVector& p) -> Eigen::VectorXd {
                return fn(p).probs();
            };
            break;
        }
    }
    return out;
}

double empirical_ce_risk(const CalibrationEstimationFunction& h,
                         const LabeledPredictionSet& data) {
    if (!h.train_id().empty() && h.train_id() == data.provenance_id()) {
        throw std::invalid_argument(
            "empirical_ce_risk: data shares provenance with the training split");
    }
    int n = data.size();
    if (n < 2) {
        throw std::invalid_argument("empirical_ce_risk: needs n >= 2");
    }
    int d = data.dim();
    // Residual factorization: target <r_i, r_j> against <s_i, s_j> with
    // r = f - e_y and s = f - chat(f); both Gram matrices come from one GEMM.
    Eigen::MatrixXd R(n, d), S(n, d);
    for (int i = 0; i < n; ++i) {
        const SimplexVector& f = data.prediction(i);
        Eigen::VectorXd r = f.probs();
        r(data.label(i)) -= 1.0;
        R.row(i) = r.transpose();
        S.row(i) = (f.probs() - h.chat(f)).transpose();
    }
    Eigen::MatrixXd target = R * R.transpose();
    Eigen::MatrixXd approx = S * S.transpose();
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double gap = target(i, j) - approx(i, j);
            acc.add(gap * gap);
        }
    }
    return acc.value() / (static_cast<double>(n) * (n - 1));
}

RiskReport pipeline(const std::vector<HSpec>& candidates, const LabeledPredictionSet& train,
                    const LabeledPredictionSet& val, const LabeledPredictionSet& test) {
    if (candidates.empty()) {
        throw std::invalid_argument("pipeline: no candidates");
    }
    const std::string& a = train.provenance_id();
    const std::string& b = val.provenance_id();
    const std::string& c = test.provenance_id();
    if (a == b || a == c || b == c) {
        throw std::invalid_argument("pipeline: overlapping splits (matching provenance)");
    }

    RiskReport report;
    std::vector<double> complexity;
    for (const HSpec& spec : candidates) {
        CalibrationEstimationFunction fitted = fit(spec, train);
        RiskCandidateRow row;
        row.name = fitted.name();
        row.hyperparams = fitted.hyperparams();
        // Train risk is in-sample and only informational; bypass the
        // disjointness guard by evaluating through a cleared-provenance view.
        LabeledPredictionSet train_view(train.predictions(), train.labels(),
                                        train.provenance_id() + ":in-sample");
        row.train_risk = empirical_ce_risk(fitted, train_view);
        row.val_risk = empirical_ce_risk(fitted, val);
        row.test_risk = empirical_ce_risk(fitted, test);
        KahanSum diag;
        for (int i = 0; i < test.size(); ++i) {
            const SimplexVector& f = test.prediction(i);
            diag.add(fitted.h_value(f, f));
        }
        row.test_ce = std::sqrt(std::max(0.0, diag.value() / test.size()));
        report.candidates.push_back(std::move(row));
        complexity.push_back(fitted.complexity());
    }

    int best = 0;
    for (int i = 1; i < static_cast<int>(report.candidates.size()); ++i) {
        const auto& cur = report.candidates[static_cast<std::size_t>(i)];
        const auto& win = report.candidates[static_cast<std::size_t>(best)];
        if (cur.val_risk < win.val_risk) {
            best = i;
        } else if (cur.val_risk == win.val_risk) {
            double cc = complexity[static_cast<std::size_t>(i)];
            double wc = complexity[static_cast<std::size_t>(best)];
            if (cc < wc || (cc == wc && cur.name < win.name)) {
                best = i;
            }
        }
    }
    report.chosen_index = best;
    return report;
}

}  // namespace properuq

#include "properuq/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "properuq/parallel.hpp"

namespace properuq {
namespace {

constexpr std::int64_t kRowBlock = 256;

double parse_param(const std::string& body, const std::string& key, bool* found = nullptr) {
    // body is "k1=v1,k2=v2,...".
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t eq = body.find('=', pos);
        if (eq == std::string::npos) break;
        std::size_t end = body.find(',', eq);
        if (end == std::string::npos) end = body.size();
        if (body.substr(pos, eq - pos) == key) {
            if (found) *found = true;
            return std::stod(body.substr(eq + 1, end - eq - 1));
        }
        pos = end + 1;
    }
    if (found) {
        *found = false;
        return 0.0;
    }
    throw std::invalid_argument("kernel flag: missing parameter '" + key + "'");
}

std::string format_param(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

KernelSpec KernelSpec::rbf(double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("rbf: gamma must be > 0");
    KernelSpec k;
    k.family = Family::Rbf;
    k.gamma = gamma;
    return k;
}

KernelSpec KernelSpec::laplacian(double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("laplacian: gamma must be > 0");
    KernelSpec k;
    k.family = Family::Laplacian;
    k.gamma = gamma;
    return k;
}

KernelSpec KernelSpec::polynomial(double gamma, double c, double degree) {
    if (!(gamma > 0.0)) throw std::invalid_argument("poly: gamma must be > 0");
    if (!(c >= 0.0)) throw std::invalid_argument("poly: c must be >= 0");
    if (!(degree > 0.0)) throw std::invalid_argument("poly: degree must be > 0");
    KernelSpec k;
    k.family = Family::Polynomial;
    k.gamma = gamma;
    k.c = c;
    k.degree = degree;
    return k;
}

KernelSpec KernelSpec::cosine() {
    KernelSpec k;
    k.family = Family::Cosine;
    return k;
}

KernelSpec KernelSpec::delta_discrete() {
    KernelSpec k;
    k.family = Family::DeltaDiscrete;
    return k;
}

KernelSpec KernelSpec::tensor_power(KernelSpec base, std::vector<std::vector<int>> blocks) {
    if (base.family == Family::TensorPower) {
        throw std::invalid_argument("tensor: base kernel cannot itself be tensor");
    }
    KernelSpec k;
    k.family = Family::TensorPower;
    k.base = std::make_shared<const KernelSpec>(std::move(base));
    k.blocks = std::move(blocks);
    for (const auto& block : k.blocks) {
        if (block.empty()) {
            throw std::invalid_argument("tensor: empty coordinate block");
        }
    }
    return k;
}

KernelSpec KernelSpec::parse(const std::string& flag) {
    std::size_t colon = flag.find(':');
    std::string name = colon == std::string::npos ? flag : flag.substr(0, colon);
    std::string body = colon == std::string::npos ? "" : flag.substr(colon + 1);
    if (name == "rbf") {
        return rbf(parse_param(body, "gamma"));
    }
    if (name == "laplacian") {
        return laplacian(parse_param(body, "gamma"));
    }
    if (name == "poly") {
        bool has_c = false, has_deg = false;
        double gamma = parse_param(body, "gamma");
        double c = parse_param(body, "c", &has_c);
        double degree = parse_param(body, "degree", &has_deg);
        return polynomial(gamma, has_c ? c : 1.0, has_deg ? degree : 2.0);
    }
    if (name == "cosine") {
        return cosine();
    }
    if (name == "delta") {
        return delta_discrete();
    }
    if (name == "tensor") {
        const std::string prefix = "base=";
        if (body.rfind(prefix, 0) != 0) {
            throw std::invalid_argument("tensor flag: expected tensor:base=<kernel>");
        }
        return tensor_power(parse(body.substr(prefix.size())));
    }
    throw std::invalid_argument("unknown kernel '" + name + "'");
}

std::string KernelSpec::to_flag_string() const {
    switch (family) {
        case Family::Rbf:
            return "rbf:gamma=" + format_param(gamma);
        case Family::Laplacian:
            return "laplacian:gamma=" + format_param(gamma);
        case Family::Polynomial:
            return "poly:gamma=" + format_param(gamma) + ",c=" + format_param(c) +
                   ",degree=" + format_param(degree);
        case Family::Cosine:
            return "cosine";
        case Family::DeltaDiscrete:
            return "delta";
        case Family::TensorPower:
            return "tensor:base=" + base->to_flag_string();
    }
    return "?";
}

double kernel_eval(const KernelSpec& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("kernel_eval: dim mismatch " + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()));
    }
    switch (k.family) {
        case KernelSpec::Family::Rbf:
            return std::exp(-k.gamma * (x - y).squaredNorm());
        case KernelSpec::Family::Laplacian:
            return std::exp(-k.gamma * (x - y).lpNorm<1>());
        case KernelSpec::Family::Polynomial:
            return std::pow(k.gamma * x.dot(y) + k.c, k.degree);
        case KernelSpec::Family::Cosine: {
            double nx = x.norm();
            double ny = y.norm();
            if (nx <= 0.0 || ny <= 0.0) {
                throw std::invalid_argument("cosine kernel: zero vector");
            }
            return x.dot(y) / (nx * ny);
        }
        case KernelSpec::Family::DeltaDiscrete: {
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                if (x(i) != y(i)) return 0.0;
            }
            return 1.0;
        }
        case KernelSpec::Family::TensorPower: {
            if (!k.base) {
                throw std::invalid_argument("tensor kernel: missing base");
            }
            double prod = 1.0;
            if (k.blocks.empty()) {
                // Per-coordinate split.
                Eigen::VectorXd xi(1), yi(1);
                for (Eigen::Index i = 0; i < x.size(); ++i) {
                    xi(0) = x(i);
                    yi(0) = y(i);
                    prod *= kernel_eval(*k.base, xi, yi);
                }
                return prod;
            }
            for (const auto& block : k.blocks) {
                Eigen::VectorXd xb(block.size()), yb(block.size());
                for (std::size_t j = 0; j < block.size(); ++j) {
                    int c = block[j];
                    if (c < 0 || c >= x.size()) {
                        throw std::invalid_argument("tensor kernel: block coordinate " +
                                                    std::to_string(c) + " out of range");
                    }
                    xb(static_cast<Eigen::Index>(j)) = x(c);
                    yb(static_cast<Eigen::Index>(j)) = y(c);
                }
                prod *= kernel_eval(*k.base, xb, yb);
            }
            return prod;
        }
    }
    return 0.0;
}

GramMatrix gram(const KernelSpec& k, const SampleSet& X, const SampleSet& Y) {
    if (X.point_dim() != Y.point_dim()) {
        throw std::invalid_argument("gram: point dim mismatch " + std::to_string(X.point_dim()) +
                                    " vs " + std::to_string(Y.point_dim()));
    }
    int n = X.size();
    int m = Y.size();
    GramMatrix g;
    g.values.resize(n, m);
    g.rows_id = X.provenance_id();
    g.cols_id = Y.provenance_id();
    // One row block per task; the output rows are disjoint.
    std::exception_ptr failure;
    std::mutex failure_mu;
    parallel_for_blocks(n, kRowBlock, [&](std::int64_t begin, std::int64_t end) {
        try {
            for (std::int64_t i = begin; i < end; ++i) {
                Eigen::VectorXd xi = X.point(static_cast<int>(i));
                for (int j = 0; j < m; ++j) {
                    g.values(i, j) = kernel_eval(k, xi, Y.point(j));
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    return g;
}

EmbeddingStats embedding_stats(const KernelSpec& k, const SampleSet& X, const SampleSet& Y,
                               bool require_unbiased) {
    int n = X.size();
    if (require_unbiased && n < 2) {
        throw std::invalid_argument("embedding_stats: unbiased squared norm needs |X| >= 2");
    }
    // Per-block partial sums, combined in block order so the reduction is
    // identical for every thread count.
    std::int64_t blocks = (n + kRowBlock - 1) / kRowBlock;
    std::vector<double> self_sum(static_cast<std::size_t>(blocks), 0.0);
    std::vector<double> diag_sum(static_cast<std::size_t>(blocks), 0.0);
    std::vector<double> cross_sum(static_cast<std::size_t>(blocks), 0.0);
    std::exception_ptr failure;
    std::mutex failure_mu;
    parallel_for_blocks(n, kRowBlock, [&](std::int64_t begin, std::int64_t end) {
        try {
            std::int64_t b = begin / kRowBlock;
            KahanSum self, diag, cross;
            for (std::int64_t i = begin; i < end; ++i) {
                Eigen::VectorXd xi = X.point(static_cast<int>(i));
                for (int j = 0; j < n; ++j) {
                    double v = kernel_eval(k, xi, X.point(j));
                    self.add(v);
                    if (j == static_cast<int>(i)) diag.add(v);
                }
                for (int j = 0; j < Y.size(); ++j) {
                    cross.add(kernel_eval(k, xi, Y.point(j)));
                }
            }
            self_sum[static_cast<std::size_t>(b)] = self.value();
            diag_sum[static_cast<std::size_t>(b)] = diag.value();
            cross_sum[static_cast<std::size_t>(b)] = cross.value();
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);

    KahanSum self_total, diag_total, cross_total;
    for (std::int64_t b = 0; b < blocks; ++b) {
        self_total.add(self_sum[static_cast<std::size_t>(b)]);
        diag_total.add(diag_sum[static_cast<std::size_t>(b)]);
        cross_total.add(cross_sum[static_cast<std::size_t>(b)]);
    }

    EmbeddingStats s;
    double nn = static_cast<double>(n);
    s.sqnorm_biased = self_total.value() / (nn * nn);
    s.sqnorm_unbiased = n >= 2 ? (self_total.value() - diag_total.value()) / (nn * (nn - 1.0))
                               : std::numeric_limits<double>::quiet_NaN();
    s.cross_inner = cross_total.value() / (nn * static_cast<double>(Y.size()));
    return s;
}

double kernel_score(const KernelSpec& k, const SampleSet& X, const Eigen::VectorXd& y) {
    Eigen::MatrixXd ym(1, y.size());
    ym.row(0) = y.transpose();
    EmbeddingStats s = embedding_stats(k, X, SampleSet(std::move(ym)), /*require_unbiased=*/true);
    return s.sqnorm_unbiased - 2.0 * s.cross_inner;
}

double kernel_entropy(const KernelSpec& k, const SampleSet& X) {
    EmbeddingStats s = embedding_stats(k, X, X, /*require_unbiased=*/true);
    return -s.sqnorm_unbiased;
}

double mmd2(const KernelSpec& k, const SampleSet& X, const SampleSet& Y, MmdMode mode) {
    bool unbiased = mode == MmdMode::Unbiased;
    EmbeddingStats sx = embedding_stats(k, X, Y, unbiased);
    EmbeddingStats sy = embedding_stats(k, Y, X, unbiased);
    if (unbiased) {
        return sx.sqnorm_unbiased + sy.sqnorm_unbiased - 2.0 * sx.cross_inner;
    }
    double v = sx.sqnorm_biased + sy.sqnorm_biased - 2.0 * sx.cross_inner;
    return v < 0.0 ? 0.0 : v;  // V-stat is nonnegative up to float error
}

double cosine_similarity(const KernelSpec& k, const SampleSet& X, const SampleSet& Y) {
    EmbeddingStats sx = embedding_stats(k, X, Y);
    EmbeddingStats sy = embedding_stats(k, Y, Y);
    if (sx.sqnorm_biased <= 1e-15 || sy.sqnorm_biased <= 1e-15) {
        throw std::runtime_error("cosine_similarity: vanishing embedding norm");
    }
    double v = sx.cross_inner / std::sqrt(sx.sqnorm_biased * sy.sqnorm_biased);
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return v;
}

double eks(const KernelSpec& k, const SampleSet& X, const SampleSet& Y) {
    EmbeddingStats sx = embedding_stats(k, X, Y);
    EmbeddingStats sy = embedding_stats(k, Y, Y);
    if (sx.sqnorm_biased <= 1e-15 || sy.sqnorm_biased <= 1e-15) {
        throw std::runtime_error("eks: vanishing embedding norm");
    }
    return -sx.cross_inner / std::sqrt(sx.sqnorm_biased);
}

}  // namespace properuq

#include "properuq/cka.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace properuq {
namespace {

Eigen::MatrixXd centered_gram(const KernelSpec& k, const SampleSet& X) {
    Eigen::MatrixXd K = gram(k, X, X).values;
    Eigen::VectorXd row_mean = K.rowwise().mean();
    double grand = K.mean();
    K.colwise() -= row_mean;
    K.rowwise() -= row_mean.transpose();
    K.array() += grand;
    return K;
}

double hsic_from_centered(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    double n = static_cast<double>(A.rows());
    return A.cwiseProduct(B).sum() / (n * n);
}

}  // namespace

double hsic(const KernelSpec& kx, const KernelSpec& ky, const SampleSet& X, const SampleSet& Y) {
    if (X.size() != Y.size()) {
        throw std::invalid_argument("hsic: sample counts differ (" + std::to_string(X.size()) +
                                    " vs " + std::to_string(Y.size()) + ")");
    }
    return hsic_from_centered(centered_gram(kx, X), centered_gram(ky, Y));
}

double cka(const KernelSpec& kx, const KernelSpec& ky, const SampleSet& X, const SampleSet& Y) {
    if (X.size() != Y.size()) {
        throw std::invalid_argument("cka: sample counts differ");
    }
    Eigen::MatrixXd A = centered_gram(kx, X);
    Eigen::MatrixXd B = centered_gram(ky, Y);
    double xx = hsic_from_centered(A, A);
    double yy = hsic_from_centered(B, B);
    if (xx <= 1e-15 || yy <= 1e-15) {
        throw std::runtime_error("cka: degenerate variable (marginal HSIC vanishes)");
    }
    double v = hsic_from_centered(A, B) / std::sqrt(xx * yy);
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return v;
}

CkaMatrix cka_matrix(const SampleSet& samples, const KernelSpec& base) {
    int d = samples.point_dim();
    int n = samples.size();
    CkaMatrix out;
    out.values = Eigen::MatrixXd::Identity(d, d);

    // One centered Gram per coordinate; marginal HSIC on the diagonal.
    std::vector<Eigen::MatrixXd> grams;
    grams.reserve(static_cast<std::size_t>(d));
    std::vector<double> marginal(static_cast<std::size_t>(d), 0.0);
    for (int c = 0; c < d; ++c) {
        SampleSet coord(samples.points().col(c), samples.provenance_id() + ":c" +
                                                     std::to_string(c));
        grams.push_back(centered_gram(base, coord));
        marginal[static_cast<std::size_t>(c)] =
            hsic_from_centered(grams.back(), grams.back());
        if (marginal[static_cast<std::size_t>(c)] <= 1e-15) {
            out.constant_coords.push_back(c);
        }
    }
    (void)n;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            bool degenerate = marginal[static_cast<std::size_t>(i)] <= 1e-15 ||
                              marginal[static_cast<std::size_t>(j)] <= 1e-15;
            double v = 0.0;
            if (!degenerate) {
                v = hsic_from_centered(grams[static_cast<std::size_t>(i)],
                                       grams[static_cast<std::size_t>(j)]) /
                    std::sqrt(marginal[static_cast<std::size_t>(i)] *
                              marginal[static_cast<std::size_t>(j)]);
                if (v < 0.0) v = 0.0;
                if (v > 1.0) v = 1.0;
            }
            out.values(i, j) = out.values(j, i) = v;
        }
    }
    return out;
}

DimensionPartition cluster_dimensions(const CkaMatrix& matrix, double tau) {
    if (!(tau > 0.0) || !(tau <= 1.0)) {
        throw std::invalid_argument("cluster_dimensions: tau must be in (0, 1]");
    }
    int d = static_cast<int>(matrix.values.rows());
    std::vector<std::vector<int>> clusters;
    for (int i = 0; i < d; ++i) clusters.push_back({i});

    double cut = 1.0 - tau;
    for (;;) {
        // Closest pair by average-linkage dissimilarity; lowest index pair
        // wins ties.
        double best = std::numeric_limits<double>::infinity();
        int bi = -1, bj = -1;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double sum = 0.0;
                for (int a : clusters[i]) {
                    for (int b : clusters[j]) {
                        sum += 1.0 - matrix.values(a, b);
                    }
                }
                double dist = sum / (static_cast<double>(clusters[i].size()) *
                                     static_cast<double>(clusters[j].size()));
                if (dist < best) {
                    best = dist;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
            }
        }
        if (bi < 0 || best > cut) break;
        auto merged = clusters[static_cast<std::size_t>(bi)];
        merged.insert(merged.end(), clusters[static_cast<std::size_t>(bj)].begin(),
                      clusters[static_cast<std::size_t>(bj)].end());
        std::sort(merged.begin(), merged.end());
        clusters.erase(clusters.begin() + bj);
        clusters[static_cast<std::size_t>(bi)] = std::move(merged);
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) { return a[0] < b[0]; });
    DimensionPartition out;
    out.clusters = std::move(clusters);
    out.tau = tau;
    return out;
}

DisentangleMode disentangle_mode_from_string(const std::string& name) {
    if (name == "cosine") return DisentangleMode::Cosine;
    if (name == "eks") return DisentangleMode::Eks;
    throw std::invalid_argument("unknown disentangle mode '" + name + "'");
}

std::string to_string(DisentangleMode mode) {
    return mode == DisentangleMode::Cosine ? "cosine" : "eks";
}

DisentangleReport disentangled_cosine(const KernelSpec& base, const DimensionPartition& partition,
                                      const SampleSet& generated, const SampleSet& reference,
                                      DisentangleMode mode) {
    if (generated.point_dim() != reference.point_dim()) {
        throw std::invalid_argument("disentangled_cosine: point dim mismatch");
    }
    if (partition.clusters.empty()) {
        throw std::invalid_argument("disentangled_cosine: empty partition");
    }
    std::vector<bool> seen(static_cast<std::size_t>(generated.point_dim()), false);
    for (const auto& cluster : partition.clusters) {
        for (int c : cluster) {
            if (c < 0 || c >= generated.point_dim()) {
                throw std::invalid_argument("disentangled_cosine: coordinate " +
                                            std::to_string(c) + " out of range");
            }
            if (seen[static_cast<std::size_t>(c)]) {
                throw std::invalid_argument("disentangled_cosine: coordinate " +
                                            std::to_string(c) + " appears twice");
            }
            seen[static_cast<std::size_t>(c)] = true;
        }
    }
    for (std::size_t c = 0; c < seen.size(); ++c) {
        if (!seen[c]) {
            throw std::invalid_argument("disentangled_cosine: coordinate " + std::to_string(c) +
                                        " missing from partition");
        }
    }

    KernelSpec base_copy = base;
    DisentangleReport report;
    report.mode = mode;
    report.n_generated = generated.size();
    report.n_reference = reference.size();

    double abs_product = 1.0;
    for (std::size_t ci = 0; ci < partition.clusters.size(); ++ci) {
        const auto& cluster = partition.clusters[ci];
        SampleSet gen_sub = generated.restrict_columns(cluster);
        SampleSet ref_sub = reference.restrict_columns(cluster);
        KernelSpec k = KernelSpec::tensor_power(base_copy);
        double factor = 0.0;
        try {
            factor = mode == DisentangleMode::Cosine ? cosine_similarity(k, gen_sub, ref_sub)
                                                     : eks(k, gen_sub, ref_sub);
        } catch (const std::exception& e) {
            throw std::runtime_error("disentangled_cosine: cluster " + std::to_string(ci + 1) +
                                     ": " + e.what());
        }
        ClusterFactor cf;
        cf.indices = cluster;
        cf.factor = factor;
        report.factors.push_back(std::move(cf));
        abs_product *= mode == DisentangleMode::Cosine ? factor : -factor;
    }

    KernelSpec full_kernel = KernelSpec::tensor_power(base_copy);
    report.full = mode == DisentangleMode::Cosine
                      ? cosine_similarity(full_kernel, generated, reference)
                      : eks(full_kernel, generated, reference);
    report.product = mode == DisentangleMode::Cosine ? abs_product : -abs_product;
    report.residual = std::abs(report.product - report.full);
    return report;
}

}  // namespace properuq

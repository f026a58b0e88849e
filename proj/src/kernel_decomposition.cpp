#include "properuq/kernel_decomposition.hpp"

#include <stdexcept>

#include "properuq/parallel.hpp"

namespace properuq {
namespace {

// Inner products between member embeddings are plain means over the Gram
// block; self products optionally switch to the U-statistic.
double self_inner(const KernelSpec& k, const SampleSet& X, EstimatorMode mode) {
    EmbeddingStats s = embedding_stats(k, X, X, mode == EstimatorMode::Unbiased);
    return mode == EstimatorMode::Unbiased ? s.sqnorm_unbiased : s.sqnorm_biased;
}

double cross_inner(const KernelSpec& k, const SampleSet& X, const SampleSet& Y) {
    return embedding_stats(k, X, Y).cross_inner;
}

}  // namespace

EstimatorMode estimator_mode_from_string(const std::string& name) {
    if (name == "plugin") return EstimatorMode::Plugin;
    if (name == "unbiased") return EstimatorMode::Unbiased;
    throw std::invalid_argument("unknown estimator mode '" + name + "'");
}

std::string to_string(EstimatorMode mode) {
    return mode == EstimatorMode::Plugin ? "plugin" : "unbiased";
}

DecompositionReport ks_bvd(const KernelSpec& k, const EnsembleGrid& ensemble,
                           const SampleSet& targets, EstimatorMode mode) {
    if (ensemble.replicate_count() != 1) {
        throw std::invalid_argument("ks_bvd: expected one replicate per member, got " +
                                    std::to_string(ensemble.replicate_count()));
    }
    int m = ensemble.member_count();
    // Pairwise member inner products; M(i, j) = <v_i, v_j>.
    Eigen::MatrixXd M(m, m);
    Eigen::VectorXd t(m);
    for (int i = 0; i < m; ++i) {
        const SampleSet& Xi = ensemble.at(i, 0);
        M(i, i) = self_inner(k, Xi, mode);
        for (int j = i + 1; j < m; ++j) {
            M(i, j) = M(j, i) = cross_inner(k, Xi, ensemble.at(j, 0));
        }
        t(i) = cross_inner(k, Xi, targets);
    }
    double qq = self_inner(k, targets, mode);

    double mean_self = M.diagonal().mean();
    double mean_pair = M.sum() / (static_cast<double>(m) * m);  // ||v_bar||^2
    double mean_cross = t.mean();

    DecompositionReport r;
    r.mode = mode;
    r.members = m;
    r.replicates = 1;
    r.n_target = targets.size();
    r.bias = mean_pair - 2.0 * mean_cross + qq;
    r.variance = mean_self - mean_pair;
    r.noise = -qq;
    r.total = mean_self - 2.0 * mean_cross;
    return r;
}

DecompositionReport ks_bvc(const KernelSpec& k, const EnsembleGrid& ensemble,
                           const SampleSet& targets, EstimatorMode mode) {
    int m = ensemble.member_count();
    int R = ensemble.replicate_count();
    if (R < 2) {
        throw std::invalid_argument("ks_bvc: needs R >= 2 replicates, got " + std::to_string(R));
    }
    // Full inner-product table over the (member, replicate) grid.
    int cells = m * R;
    auto idx = [R](int member, int rep) { return member * R + rep; };
    Eigen::MatrixXd M(cells, cells);
    Eigen::VectorXd t(cells);
    for (int a = 0; a < cells; ++a) {
        const SampleSet& Xa = ensemble.at(a / R, a % R);
        M(a, a) = self_inner(k, Xa, mode);
        for (int b = a + 1; b < cells; ++b) {
            M(a, b) = M(b, a) = cross_inner(k, Xa, ensemble.at(b / R, b % R));
        }
        t(a) = cross_inner(k, Xa, targets);
    }
    double qq = self_inner(k, targets, mode);

    // <vbar_k, vbar_l> for member means over replicates.
    Eigen::MatrixXd member_mean(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            double s = 0.0;
            for (int r = 0; r < R; ++r) {
                for (int u = 0; u < R; ++u) {
                    s += M(idx(a, r), idx(b, u));
                }
            }
            member_mean(a, b) = s / (static_cast<double>(R) * R);
        }
    }

    double grand_sq = member_mean.sum() / (static_cast<double>(m) * m);  // ||grand mean||^2
    double grand_cross = t.mean();

    // avgVar = (1/m) sum_k mean_r ||v_{k,r} - vbar_k||^2.
    double avg_var = 0.0;
    for (int a = 0; a < m; ++a) {
        double mean_self_rep = 0.0;
        for (int r = 0; r < R; ++r) mean_self_rep += M(idx(a, r), idx(a, r));
        mean_self_rep /= R;
        avg_var += mean_self_rep - member_mean(a, a);
    }
    avg_var /= m;

    // avgCov = mean over member pairs of mean_r <v_{k,r} - vbar_k, v_{l,r} - vbar_l>.
    double avg_cov = 0.0;
    if (m >= 2) {
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                if (a == b) continue;
                double same_rep = 0.0;
                for (int r = 0; r < R; ++r) same_rep += M(idx(a, r), idx(b, r));
                same_rep /= R;
                avg_cov += same_rep - member_mean(a, b);
            }
        }
        avg_cov /= static_cast<double>(m) * (m - 1);
    }

    // total: mean over replicates of the pooled-mixture plugin score, with
    // the replicate-r mixture embedding w_r = (1/m) sum_k v_{k,r}.
    double total = 0.0;
    for (int r = 0; r < R; ++r) {
        double wr_sq = 0.0;
        double wr_cross = 0.0;
        for (int a = 0; a < m; ++a) {
            wr_cross += t(idx(a, r));
            for (int b = 0; b < m; ++b) {
                wr_sq += M(idx(a, r), idx(b, r));
            }
        }
        wr_sq /= static_cast<double>(m) * m;
        wr_cross /= m;
        total += wr_sq - 2.0 * wr_cross;
    }
    total /= R;

    DecompositionReport r;
    r.mode = mode;
    r.members = m;
    r.replicates = R;
    r.n_target = targets.size();
    r.bias = grand_sq - 2.0 * grand_cross + qq;
    r.variance = avg_var / m;
    r.covariance = (1.0 - 1.0 / m) * avg_cov;
    r.noise = -qq;
    r.total = total;
    return r;
}

UncertaintyRow uncertainty_profile_row(const KernelSpec& k, const EnsembleGrid& instance_grid,
                                       const std::string& id) {
    int m = instance_grid.member_count();
    int R = instance_grid.replicate_count();
    // Pool every member/replicate sample into one set for the entropy.
    int total_rows = 0;
    for (int a = 0; a < m; ++a) {
        for (int r = 0; r < R; ++r) {
            total_rows += instance_grid.at(a, r).size();
        }
    }
    Eigen::MatrixXd pooled(total_rows, instance_grid.point_dim());
    int row = 0;
    for (int a = 0; a < m; ++a) {
        for (int r = 0; r < R; ++r) {
            const Eigen::MatrixXd& pts = instance_grid.at(a, r).points();
            pooled.middleRows(row, pts.rows()) = pts;
            row += static_cast<int>(pts.rows());
        }
    }
    UncertaintyRow out;
    out.id = id;
    out.entropy = kernel_entropy(k, SampleSet(std::move(pooled)));

    // Plugin variance across the m * R sample sets treated as members.
    int cells = m * R;
    Eigen::MatrixXd M(cells, cells);
    for (int a = 0; a < cells; ++a) {
        const SampleSet& Xa = instance_grid.at(a / R, a % R);
        M(a, a) = embedding_stats(k, Xa, Xa).sqnorm_biased;
        for (int b = a + 1; b < cells; ++b) {
            M(a, b) = M(b, a) = cross_inner(k, Xa, instance_grid.at(b / R, b % R));
        }
    }
    out.variance = M.diagonal().mean() - M.sum() / (static_cast<double>(cells) * cells);
    return out;
}

std::vector<UncertaintyRow> uncertainty_profile(const KernelSpec& k,
                                                const std::vector<EnsembleGrid>& instances,
                                                const std::vector<std::string>& ids) {
    if (instances.size() != ids.size()) {
        throw std::invalid_argument("uncertainty_profile: ids/instances size mismatch");
    }
    std::vector<UncertaintyRow> rows;
    rows.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        rows.push_back(uncertainty_profile_row(k, instances[i], ids[i]));
    }
    return rows;
}

}  // namespace properuq

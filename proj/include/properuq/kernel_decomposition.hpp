#ifndef PROPERUQ_KERNEL_DECOMPOSITION_HPP
#define PROPERUQ_KERNEL_DECOMPOSITION_HPP

#include <optional>
#include <string>
#include <vector>

#include "properuq/kernels.hpp"
#include "properuq/types.hpp"

namespace properuq {

// Plugin keeps bias + variance (+ covariance) + noise = total exact up to
// float error; unbiased swaps every self inner product for its U-statistic
// and is a point-estimate-only mode (the identity no longer holds).
enum class EstimatorMode { Plugin, Unbiased };

EstimatorMode estimator_mode_from_string(const std::string& name);
std::string to_string(EstimatorMode mode);

struct DecompositionReport {
    double bias = 0.0;
    double variance = 0.0;
    std::optional<double> covariance;  // ks_bvc only
    double noise = 0.0;
    double total = 0.0;
    EstimatorMode mode = EstimatorMode::Plugin;
    int members = 0;
    int replicates = 0;
    int n_target = 0;
};

// Bias-variance-noise split of the mean kernel score of an ensemble's member
// embeddings v_k against the target embedding:
//   bias = ||mean_k v_k - mu_Q||^2, variance = (1/m) sum_k ||v_k - mean v||^2,
//   noise = -||mu_Q||^2, total = (1/m) sum_k (||v_k||^2 - 2 <v_k, mu_Q>).
// Expects one replicate per member (flatten the grid beforehand otherwise).
DecompositionReport ks_bvd(const KernelSpec& k, const EnsembleGrid& ensemble,
                           const SampleSet& targets,
                           EstimatorMode mode = EstimatorMode::Plugin);

// Variance-covariance refinement over a full m x R grid: the variance term
// carries weight 1/m, the covariance term weight (1 - 1/m), and the total is
// the mean over replicates of the pooled-mixture plugin score. R >= 2.
DecompositionReport ks_bvc(const KernelSpec& k, const EnsembleGrid& ensemble,
                           const SampleSet& targets,
                           EstimatorMode mode = EstimatorMode::Plugin);

// Per-instance uncertainty summary: entropy of the pooled member samples and
// the plugin variance term across members.
struct UncertaintyRow {
    std::string id;
    double entropy = 0.0;
    double variance = 0.0;
};
UncertaintyRow uncertainty_profile_row(const KernelSpec& k, const EnsembleGrid& instance_grid,
                                       const std::string& id);
std::vector<UncertaintyRow> uncertainty_profile(const KernelSpec& k,
                                                const std::vector<EnsembleGrid>& instances,
                                                const std::vector<std::string>& ids);

}  // namespace properuq

#endif

#ifndef PROPERUQ_CKA_HPP
#define PROPERUQ_CKA_HPP

#include <string>
#include <vector>

#include "properuq/kernels.hpp"
#include "properuq/types.hpp"

namespace properuq {

// Biased HSIC V-statistic over paired samples:
//   (1/n^2) * sum of the elementwise product of the doubly centered Grams.
// Nonnegative up to float error; invariant to adding constants to either
// kernel. X and Y must have equal row counts (the pairing).
double hsic(const KernelSpec& kx, const KernelSpec& ky, const SampleSet& X, const SampleSet& Y);

// Normalized alignment hsic(x,y) / sqrt(hsic(x,x) hsic(y,y)), clamped to
// [0, 1]. Errors when either marginal HSIC is <= 1e-15 (degenerate variable).
double cka(const KernelSpec& kx, const KernelSpec& ky, const SampleSet& X, const SampleSet& Y);

// Pairwise CKA between scalar coordinates of one sample set under one base
// kernel. Constant coordinates cannot be normalized; they are flagged, their
// off-diagonal entries are set to 0 and the diagonal stays 1.
struct CkaMatrix {
    Eigen::MatrixXd values;
    std::vector<int> constant_coords;
};
CkaMatrix cka_matrix(const SampleSet& samples, const KernelSpec& base);

// Average-linkage agglomerative clustering on dissimilarity 1 - CKA, merging
// while the closest pair is within 1 - tau. Tie-breaking is deterministic:
// the pair with the lowest indices wins. Clusters come out sorted by their
// smallest member; members are sorted ascending.
struct DimensionPartition {
    std::vector<std::vector<int>> clusters;
    double tau = 0.0;
};
DimensionPartition cluster_dimensions(const CkaMatrix& matrix, double tau);

// Product-versus-joint factorization diagnostic. Per cluster I the factor is
// the embedding cosine (or expected kernel spherical score) between the
// cluster-restricted sample sets under the tensor power of the base kernel;
// the product of factors is compared against the full-space value. For the
// eks mode the factors are negative, so the combined product is
// -prod_I(-factor_I), which matches the cosine identity scaled by the target
// norm. Residual 0 iff the clusters are independent (population level).
enum class DisentangleMode { Cosine, Eks };

DisentangleMode disentangle_mode_from_string(const std::string& name);
std::string to_string(DisentangleMode mode);

struct ClusterFactor {
    std::vector<int> indices;
    double factor = 0.0;
};
struct DisentangleReport {
    std::vector<ClusterFactor> factors;
    double product = 0.0;
    double full = 0.0;
    double residual = 0.0;
    DisentangleMode mode = DisentangleMode::Cosine;
    int n_generated = 0;
    int n_reference = 0;
};
DisentangleReport disentangled_cosine(const KernelSpec& base, const DimensionPartition& partition,
                                      const SampleSet& generated, const SampleSet& reference,
                                      DisentangleMode mode);

}  // namespace properuq

#endif

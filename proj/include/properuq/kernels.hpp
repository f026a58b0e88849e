#ifndef PROPERUQ_KERNELS_HPP
#define PROPERUQ_KERNELS_HPP

#include <memory>
#include <string>
#include <vector>

#include "properuq/types.hpp"

namespace properuq {

// Positive-definite kernel description. Flag syntax (CLI and config files):
//   rbf:gamma=0.5 | laplacian:gamma=1 | poly:gamma=1,c=1,degree=2 |
//   cosine | delta | tensor:base=rbf:gamma=1
// TensorPower evaluates the base kernel on coordinate blocks and multiplies
// the factors; with no explicit blocks every coordinate is its own block.
struct KernelSpec {
    enum class Family { Rbf, Laplacian, Polynomial, Cosine, DeltaDiscrete, TensorPower };

    Family family = Family::Rbf;
    double gamma = 1.0;
    double c = 1.0;
    double degree = 2.0;
    std::shared_ptr<const KernelSpec> base;   // TensorPower only
    std::vector<std::vector<int>> blocks;     // TensorPower; empty = per-coordinate

    static KernelSpec rbf(double gamma);
    static KernelSpec laplacian(double gamma);
    static KernelSpec polynomial(double gamma, double c, double degree);
    static KernelSpec cosine();
    static KernelSpec delta_discrete();
    static KernelSpec tensor_power(KernelSpec base, std::vector<std::vector<int>> blocks = {});

    static KernelSpec parse(const std::string& flag);
    std::string to_flag_string() const;
};

// k(x, y). DeltaDiscrete is exact bitwise equality of all coordinates.
double kernel_eval(const KernelSpec& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Full kernel matrix between two sample sets (rows of X by rows of Y).
struct GramMatrix {
    Eigen::MatrixXd values;
    std::string rows_id;
    std::string cols_id;
};
GramMatrix gram(const KernelSpec& k, const SampleSet& X, const SampleSet& Y);

// Mean-embedding statistics of X, plus the cross inner product with Y:
//   cross_inner     = (1/nm) sum_ij k(x_i, y_j)          ~ <mu_X, mu_Y>
//   sqnorm_biased   = (1/n^2) sum_ij k(x_i, x_j)          ~ ||mu_X||^2 (V-stat)
//   sqnorm_unbiased = (1/(n(n-1))) sum_{i != j} k(x_i, x_j)  (U-stat; NaN when n < 2
//                     unless require_unbiased, which then errors)
struct EmbeddingStats {
    double sqnorm_unbiased = 0.0;
    double sqnorm_biased = 0.0;
    double cross_inner = 0.0;
};
EmbeddingStats embedding_stats(const KernelSpec& k, const SampleSet& X, const SampleSet& Y,
                               bool require_unbiased = false);

// Sample kernel score of the set X (representing the predictive law) against
// a realized point y: sqnorm_unbiased(X) - 2 mean_i k(x_i, y). Needs |X| >= 2.
double kernel_score(const KernelSpec& k, const SampleSet& X, const Eigen::VectorXd& y);

// Entropy of the embedded law: -sqnorm_unbiased(X). Needs |X| >= 2.
double kernel_entropy(const KernelSpec& k, const SampleSet& X);

// Squared maximum mean discrepancy between X and Y. Unbiased mode uses
// U-statistics for both squared norms (can be negative near equality);
// biased mode uses V-statistics (always >= 0).
enum class MmdMode { Unbiased, Biased };
double mmd2(const KernelSpec& k, const SampleSet& X, const SampleSet& Y, MmdMode mode);

// Embedding cosine cross_inner / sqrt(biased_X * biased_Y), clamped to
// [-1, 1]. Errors when either embedding norm vanishes (<= 1e-15).
double cosine_similarity(const KernelSpec& k, const SampleSet& X, const SampleSet& Y);

// Expected kernel spherical score -cross_inner / sqrt(biased_X); same
// degenerate-norm guard as cosine_similarity.
double eks(const KernelSpec& k, const SampleSet& X, const SampleSet& Y);

}  // namespace properuq

#endif

#ifndef PROPERUQ_SYNTH_HPP
#define PROPERUQ_SYNTH_HPP

#include <vector>

#include "properuq/kernels.hpp"
#include "properuq/types.hpp"

namespace properuq {

// Synthetic prediction/label bundle with a known truth. The prediction law
// is symmetric Dirichlet(alpha); labels are drawn from the latent truth P_i;
// predictions are f_i = TS_{ts_alpha}(P_i) (ts_alpha = 1 means calibrated).
// The exact label conditional of a prediction is TS_{1/ts_alpha}(f), because
// temperature scaling is injective and invertible on the interior.
struct CalibratedBundle {
    LabeledPredictionSet data;
    std::vector<SimplexVector> truth;
    double alpha = 1.0;
    double ts_alpha = 1.0;
    Seed seed;

    SimplexVector exact_conditional(const SimplexVector& f) const;
};

CalibratedBundle gen_calibrated(int d, int n, double alpha, Seed seed);
CalibratedBundle gen_miscalibrated(int d, int n, double alpha, double ts_alpha, Seed seed);

// Exact squared calibration error E ||f - TS_{1/ts_alpha}(f)||^2 of the
// miscalibrated scenario, by Monte Carlo over the Dirichlet prediction law.
double exact_squared_ce_mc(int d, double alpha, double ts_alpha, int n, Seed seed);
// Deterministic variant over a uniform simplex lattice (d <= 3 only);
// grid_points counts lattice steps per axis.
double exact_squared_ce_grid(int d, double ts_alpha, int grid_points);

// Finite discrete world for exact enumeration oracles: atoms are encoded
// points; distributions over them are explicit pmfs. At most 64 atoms so all
// pairwise enumerations stay tiny.
struct DiscretePmfWorld {
    std::vector<Eigen::VectorXd> atoms;

    explicit DiscretePmfWorld(std::vector<Eigen::VectorXd> atoms);
    int atom_count() const { return static_cast<int>(atoms.size()); }
    int point_dim() const { return static_cast<int>(atoms[0].size()); }

    // One-hot encoded class world on the simplex corners of dimension d.
    static DiscretePmfWorld one_hot_classes(int d);
    // Independent product of two worlds: atoms are concatenated coordinate
    // tuples in row-major (a-major) order; pmfs combine with product_pmf.
    static DiscretePmfWorld product(const DiscretePmfWorld& a, const DiscretePmfWorld& b);
    static std::vector<double> product_pmf(const std::vector<double>& pa,
                                           const std::vector<double>& pb);

    // Exact draw of n samples with the pmf (used to hand enumeration worlds
    // to sample-based estimators).
    SampleSet sample(const std::vector<double>& pmf, int n, Seed seed) const;
};

// Exact population quantities by pair enumeration: sums over atom pairs
// weighted by the pmfs.

// <mu_A, mu_B> for distributions A, B given as pmfs over the world.
double exact_mean_inner(const KernelSpec& k, const DiscretePmfWorld& world,
                        const std::vector<double>& pmf_a, const std::vector<double>& pmf_b);
// E_{Y~target}[ kernel score of the law pmf at Y ] = ||mu_P||^2 - 2 <mu_P, mu_T>.
double exact_kernel_score(const KernelSpec& k, const DiscretePmfWorld& world,
                          const std::vector<double>& pmf, const std::vector<double>& target_pmf);
double exact_kernel_entropy(const KernelSpec& k, const DiscretePmfWorld& world,
                            const std::vector<double>& pmf);
double exact_mmd2(const KernelSpec& k, const DiscretePmfWorld& world,
                  const std::vector<double>& pmf_a, const std::vector<double>& pmf_b);
double exact_cosine(const KernelSpec& k, const DiscretePmfWorld& world,
                    const std::vector<double>& pmf_a, const std::vector<double>& pmf_b);
double exact_eks(const KernelSpec& k, const DiscretePmfWorld& world,
                 const std::vector<double>& pmf_a, const std::vector<double>& pmf_b);

// Population kernel-score decomposition over member laws against a target:
// bias + variance + noise = total exactly.
struct ExactBvd {
    double bias = 0.0;
    double variance = 0.0;
    double noise = 0.0;
    double total = 0.0;
};
ExactBvd exact_bvd(const KernelSpec& k, const DiscretePmfWorld& world,
                   const std::vector<std::vector<double>>& member_pmfs,
                   const std::vector<double>& target_pmf);

// Factorization diagnostic on exact block worlds. Each block carries its own
// world and a (generated, reference) pmf pair; the joint world is the product
// of the blocks, with joint pmfs supplied explicitly so coupled (dependent)
// joints can be tested. The kernel is the tensor power of base over block
// coordinate ranges. For eks the combined product is -prod(-factor).
struct ExactFactorization {
    std::vector<double> factors;
    double product = 0.0;
    double full = 0.0;
    double residual = 0.0;
};
struct PmfBlock {
    DiscretePmfWorld world;
    std::vector<double> generated;
    std::vector<double> reference;
};
ExactFactorization exact_eks_factorization(const KernelSpec& base,
                                           const std::vector<PmfBlock>& blocks,
                                           const std::vector<double>& joint_generated,
                                           const std::vector<double>& joint_reference,
                                           bool eks_mode);

}  // namespace properuq

#endif

#include "properuq/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "properuq/calibration.hpp"
#include "properuq/parallel.hpp"
#include "properuq/rng.hpp"

namespace properuq {

namespace {

void check_pmf(const DiscretePmfWorld& world, const std::vector<double>& pmf,
               const char* what) {
    if (static_cast<int>(pmf.size()) != world.atom_count())
        throw std::invalid_argument(std::string(what) + ": pmf size does not match atom count");
    double mass = 0.0;
    for (double v : pmf) {
        if (!(v >= 0.0))
            throw std::invalid_argument(std::string(what) + ": pmf has a negative entry");
        mass += v;
    }
    if (std::abs(mass - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": pmf mass is not 1");
}

CalibratedBundle generate(int d, int n, double alpha, double ts_alpha, Seed seed,
                          const char* tag) {
    if (d < 2) throw std::invalid_argument("generator: dimension must be at least 2");
    if (n < 1) throw std::invalid_argument("generator: need at least one instance");
    if (!(alpha > 0.0)) throw std::invalid_argument("generator: alpha must be positive");
    if (!(ts_alpha > 0.0)) throw std::invalid_argument("generator: ts_alpha must be positive");

    Rng rng(seed);
    std::vector<SimplexVector> preds;
    std::vector<SimplexVector> truth;
    std::vector<int> labels;
    preds.reserve(n);
    truth.reserve(n);
    labels.reserve(n);
    for (int i = 0; i < n; ++i) {
        Rng stream = rng.derive(static_cast<std::uint64_t>(i));
        SimplexVector p(stream.dirichlet_symmetric(alpha, d));
        labels.push_back(stream.categorical(p.probs()));
        preds.push_back(ts_alpha == 1.0 ? p : temperature_scale(p, ts_alpha));
        truth.push_back(std::move(p));
    }
    std::string prov = std::string(tag) + ":d=" + std::to_string(d) +
                       ":alpha=" + std::to_string(alpha) +
                       ":ts=" + std::to_string(ts_alpha) +
                       ":seed=" + std::to_string(seed.value);
    CalibratedBundle out{LabeledPredictionSet(std::move(preds), std::move(labels), prov),
                         std::move(truth), alpha, ts_alpha, seed};
    return out;
}

}  // namespace

SimplexVector CalibratedBundle::exact_conditional(const SimplexVector& f) const {
    if (ts_alpha == 1.0) return f;
    return temperature_scale(f, 1.0 / ts_alpha);
}

CalibratedBundle gen_calibrated(int d, int n, double alpha, Seed seed) {
    return generate(d, n, alpha, 1.0, seed, "synth-calibrated");
}

CalibratedBundle gen_miscalibrated(int d, int n, double alpha, double ts_alpha, Seed seed) {
    return generate(d, n, alpha, ts_alpha, seed, "synth-miscalibrated");
}

double exact_squared_ce_mc(int d, double alpha, double ts_alpha, int n, Seed seed) {
    if (d < 2) throw std::invalid_argument("squared-ce mc: dimension must be at least 2");
    if (n < 1) throw std::invalid_argument("squared-ce mc: need at least one draw");
    if (!(alpha > 0.0) || !(ts_alpha > 0.0))
        throw std::invalid_argument("squared-ce mc: alpha and ts_alpha must be positive");
    Rng rng(seed);
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
        Rng stream = rng.derive(static_cast<std::uint64_t>(i));
        SimplexVector p(stream.dirichlet_symmetric(alpha, d));
        SimplexVector f = temperature_scale(p, ts_alpha);
        acc.add((f.probs() - p.probs()).squaredNorm());
    }
    return acc.value() / n;
}

double exact_squared_ce_grid(int d, double ts_alpha, int grid_points) {
    if (d != 2 && d != 3)
        throw std::invalid_argument("squared-ce grid: only dimensions 2 and 3 are supported");
    if (grid_points < 1) throw std::invalid_argument("squared-ce grid: need at least one cell");
    if (!(ts_alpha > 0.0)) throw std::invalid_argument("squared-ce grid: ts_alpha must be positive");

    auto gap = [&](const Eigen::VectorXd& x) {
        SimplexVector p(x);
        SimplexVector f = temperature_scale(p, ts_alpha);
        return (f.probs() - p.probs()).squaredNorm();
    };

    KahanSum acc;
    long cells = 0;
    const int G = grid_points;
    if (d == 2) {
        // Midpoint rule on the segment p1 in [0, 1].
        for (int j = 0; j < G; ++j) {
            double t = (j + 0.5) / G;
            Eigen::VectorXd x(2);
            x << t, 1.0 - t;
            acc.add(gap(x));
            ++cells;
        }
    } else {
        // Centroid rule over the equal-area triangulation of the 2-simplex:
        // each grid square splits into a lower and an upper triangle.
        for (int i = 0; i < G; ++i) {
            for (int j = 0; j + i < G; ++j) {
                double a = (i + 1.0 / 3.0) / G;
                double b = (j + 1.0 / 3.0) / G;
                Eigen::VectorXd x(3);
                x << a, b, 1.0 - a - b;
                acc.add(gap(x));
                ++cells;
                if (j + i < G - 1) {
                    double au = (i + 2.0 / 3.0) / G;
                    double bu = (j + 2.0 / 3.0) / G;
                    Eigen::VectorXd xu(3);
                    xu << au, bu, 1.0 - au - bu;
                    acc.add(gap(xu));
                    ++cells;
                }
            }
        }
    }
    return acc.value() / static_cast<double>(cells);
}

DiscretePmfWorld::DiscretePmfWorld(std::vector<Eigen::VectorXd> atoms_in)
    : atoms(std::move(atoms_in)) {
    if (atoms.empty() || atoms.size() > 64)
        throw std::invalid_argument("discrete world: need between 1 and 64 atoms");
    for (const auto& a : atoms)
        if (a.size() != atoms[0].size())
            throw std::invalid_argument("discrete world: atoms must share a dimension");
}

DiscretePmfWorld DiscretePmfWorld::one_hot_classes(int d) {
    if (d < 2) throw std::invalid_argument("discrete world: need at least two classes");
    std::vector<Eigen::VectorXd> atoms;
    atoms.reserve(d);
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e(i) = 1.0;
        atoms.push_back(std::move(e));
    }
    return DiscretePmfWorld(std::move(atoms));
}

DiscretePmfWorld DiscretePmfWorld::product(const DiscretePmfWorld& a, const DiscretePmfWorld& b) {
    std::vector<Eigen::VectorXd> atoms;
    atoms.reserve(static_cast<std::size_t>(a.atom_count()) * b.atom_count());
    for (int i = 0; i < a.atom_count(); ++i) {
        for (int j = 0; j < b.atom_count(); ++j) {
            Eigen::VectorXd x(a.point_dim() + b.point_dim());
            x << a.atoms[i], b.atoms[j];
            atoms.push_back(std::move(x));
        }
    }
    return DiscretePmfWorld(std::move(atoms));
}

std::vector<double> DiscretePmfWorld::product_pmf(const std::vector<double>& pa,
                                                  const std::vector<double>& pb) {
    std::vector<double> out;
    out.reserve(pa.size() * pb.size());
    for (double x : pa)
        for (double y : pb) out.push_back(x * y);
    return out;
}

SampleSet DiscretePmfWorld::sample(const std::vector<double>& pmf, int n, Seed seed) const {
    check_pmf(*this, pmf, "discrete world sample");
    if (n < 1) throw std::invalid_argument("discrete world sample: need at least one draw");
    Eigen::VectorXd weights(atom_count());
    for (int i = 0; i < atom_count(); ++i) weights(i) = pmf[i];
    Rng rng(seed);
    Eigen::MatrixXd points(n, point_dim());
    for (int i = 0; i < n; ++i)
        points.row(i) = atoms[rng.categorical(weights)].transpose();
    return SampleSet(std::move(points),
                     "discrete-world:seed=" + std::to_string(seed.value));
}

double exact_mean_inner(const KernelSpec& k, const DiscretePmfWorld& world,
                        const std::vector<double>& pmf_a, const std::vector<double>& pmf_b) {
    check_pmf(world, pmf_a, "mean inner");
    check_pmf(world, pmf_b, "mean inner");
    KahanSum acc;
    for (int i = 0; i < world.atom_count(); ++i) {
        if (pmf_a[i] == 0.0) continue;
        for (int j = 0; j < world.atom_count(); ++j) {
            if (pmf_b[j] == 0.0) continue;
            acc.add(pmf_a[i] * pmf_b[j] * kernel_eval(k, world.atoms[i], world.atoms[j]));
        }
    }
    return acc.value();
}

double exact_kernel_score(const KernelSpec& k, const DiscretePmfWorld& world,
                          const std::vector<double>& pmf, const std::vector<double>& target_pmf) {
    return exact_mean_inner(k, world, pmf, pmf) -
           2.0 * exact_mean_inner(k, world, pmf, target_pmf);
}

double exact_kernel_entropy(const KernelSpec& k, const DiscretePmfWorld& world,
                            const std::vector<double>& pmf) {
    return -exact_mean_inner(k, world, pmf, pmf);
}

double exact_mmd2(const KernelSpec& k, const DiscretePmfWorld& world,
                  const std::vector<double>& pmf_a, const std::vector<double>& pmf_b) {
    return exact_mean_inner(k, world, pmf_a, pmf_a) -
           2.0 * exact_mean_inner(k, world, pmf_a, pmf_b) +
           exact_mean_inner(k, world, pmf_b, pmf_b);
}

double exact_cosine(const KernelSpec& k, const DiscretePmfWorld& world,
                    const std::vector<double>& pmf_a, const std::vector<double>& pmf_b) {
    double na = exact_mean_inner(k, world, pmf_a, pmf_a);
    double nb = exact_mean_inner(k, world, pmf_b, pmf_b);
    if (na <= 1e-15 || nb <= 1e-15)
        throw std::domain_error("exact cosine: embedding norm vanishes");
    double v = exact_mean_inner(k, world, pmf_a, pmf_b) / std::sqrt(na * nb);
    return std::min(1.0, std::max(-1.0, v));
}

double exact_eks(const KernelSpec& k, const DiscretePmfWorld& world,
                 const std::vector<double>& pmf_a, const std::vector<double>& pmf_b) {
    double na = exact_mean_inner(k, world, pmf_a, pmf_a);
    if (na <= 1e-15) throw std::domain_error("exact eks: embedding norm vanishes");
    return -exact_mean_inner(k, world, pmf_a, pmf_b) / std::sqrt(na);
}

ExactBvd exact_bvd(const KernelSpec& k, const DiscretePmfWorld& world,
                   const std::vector<std::vector<double>>& member_pmfs,
                   const std::vector<double>& target_pmf) {
    if (member_pmfs.empty()) throw std::invalid_argument("exact bvd: need at least one member");
    const int m = static_cast<int>(member_pmfs.size());
    const int a = world.atom_count();
    // Mean embeddings are linear in the pmf, so the centroid of the member
    // embeddings is the embedding of the mixture pmf.
    std::vector<double> mixture(a, 0.0);
    for (const auto& pmf : member_pmfs) {
        check_pmf(world, pmf, "exact bvd member");
        for (int i = 0; i < a; ++i) mixture[i] += pmf[i] / m;
    }
    ExactBvd out;
    out.noise = -exact_mean_inner(k, world, target_pmf, target_pmf);
    out.bias = exact_mmd2(k, world, mixture, target_pmf);
    KahanSum self, total;
    for (const auto& pmf : member_pmfs) {
        self.add(exact_mean_inner(k, world, pmf, pmf));
        total.add(exact_kernel_score(k, world, pmf, target_pmf));
    }
    out.variance = self.value() / m - exact_mean_inner(k, world, mixture, mixture);
    out.total = total.value() / m;
    return out;
}

ExactFactorization exact_eks_factorization(const KernelSpec& base,
                                           const std::vector<PmfBlock>& blocks,
                                           const std::vector<double>& joint_generated,
                                           const std::vector<double>& joint_reference,
                                           bool eks_mode) {
    if (blocks.empty()) throw std::invalid_argument("factorization: need at least one block");

    ExactFactorization out;
    double signed_product = 1.0;
    for (const auto& blk : blocks) {
        double f = eks_mode ? exact_eks(base, blk.world, blk.generated, blk.reference)
                            : exact_cosine(base, blk.world, blk.generated, blk.reference);
        out.factors.push_back(f);
        signed_product *= eks_mode ? -f : f;
    }
    // eks factors are negative cosines; the combined score keeps a single
    // leading minus sign: -prod(-factor).
    out.product = eks_mode ? -signed_product : signed_product;

    // Joint world: product of the block worlds, leftmost block slowest.
    DiscretePmfWorld joint = blocks[0].world;
    for (std::size_t b = 1; b < blocks.size(); ++b)
        joint = DiscretePmfWorld::product(joint, blocks[b].world);
    check_pmf(joint, joint_generated, "factorization joint");
    check_pmf(joint, joint_reference, "factorization joint");

    std::vector<std::vector<int>> coord_blocks;
    int offset = 0;
    for (const auto& blk : blocks) {
        std::vector<int> cols;
        for (int c = 0; c < blk.world.point_dim(); ++c) cols.push_back(offset + c);
        offset += blk.world.point_dim();
        coord_blocks.push_back(std::move(cols));
    }
    KernelSpec tensor = KernelSpec::tensor_power(base, std::move(coord_blocks));
    out.full = eks_mode ? exact_eks(tensor, joint, joint_generated, joint_reference)
                        : exact_cosine(tensor, joint, joint_generated, joint_reference);
    out.residual = std::abs(out.product - out.full);
    return out;
}

}  // namespace properuq

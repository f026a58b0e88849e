#ifndef PROPERUQ_RNG_HPP
#define PROPERUQ_RNG_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "properuq/types.hpp"

namespace properuq {

// SplitMix64 finalizer; used to derive child seeds and to whiten raw seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic random stream. All transforms are implemented on top of raw
// 64-bit engine output so results depend only on the seed, not on the
// standard library's distribution internals.
class Rng {
public:
    explicit Rng(Seed seed);

    // Independent child stream; derive(s, k) != derive(s, l) for k != l.
    Rng derive(std::uint64_t counter) const;

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on (0, 1), never exactly zero (safe to take logs).
    double uniform_open();
    // Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal();
    // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
    double gamma(double shape);
    // Symmetric Dirichlet(alpha) draw of dimension dim.
    Eigen::VectorXd dirichlet_symmetric(double alpha, int dim);
    // Index draw from a pmf (inverse CDF walk).
    int categorical(const Eigen::VectorXd& pmf);
    // Integer in [0, n).
    int uniform_int(int n);

private:
    std::mt19937_64 engine_;
    Seed root_;
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace properuq

#endif

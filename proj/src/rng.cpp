#include "properuq/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace properuq {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng::Rng(Seed seed) : engine_(splitmix64(seed.value)), root_(seed) {}

Rng Rng::derive(std::uint64_t counter) const {
    // Child seeds mix the root with the counter; the finalizer decorrelates
    // adjacent counters.
    std::uint64_t child = splitmix64(root_.value ^ splitmix64(counter + 0x5555555555555555ULL));
    return Rng(Seed{child});
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    if (have_cached_normal_) {
        have_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) {
        throw std::invalid_argument("gamma: shape must be > 0");
    }
    if (shape < 1.0) {
        // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
        double g = gamma(shape + 1.0);
        double u = uniform_open();
        return g * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze.
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

Eigen::VectorXd Rng::dirichlet_symmetric(double alpha, int dim) {
    if (dim < 1) {
        throw std::invalid_argument("dirichlet: dim must be >= 1");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("dirichlet: alpha must be > 0");
    }
    Eigen::VectorXd g(dim);
    for (int i = 0; i < dim; ++i) {
        g(i) = gamma(alpha);
    }
    double s = g.sum();
    if (s <= 0.0) {
        // Underflow of every component; fall back to the barycenter.
        return Eigen::VectorXd::Constant(dim, 1.0 / dim);
    }
    return g / s;
}

int Rng::categorical(const Eigen::VectorXd& pmf) {
    double u = uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pmf.size(); ++i) {
        acc += pmf(i);
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(pmf.size() - 1);
}

int Rng::uniform_int(int n) {
    if (n < 1) {
        throw std::invalid_argument("uniform_int: n must be >= 1");
    }
    // Rejection keeps the draw exactly uniform.
    std::uint64_t bound = static_cast<std::uint64_t>(n);
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
        std::uint64_t x = engine_();
        if (x < limit) return static_cast<int>(x % bound);
    }
}

}  // namespace properuq

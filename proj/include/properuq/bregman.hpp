#ifndef PROPERUQ_BREGMAN_HPP
#define PROPERUQ_BREGMAN_HPP

#include <vector>

#include "properuq/scores.hpp"
#include "properuq/types.hpp"

namespace properuq {

// Scalar convex generator from a fixed catalogue, optionally shifted by an
// affine term a*x + b (Bregman divergences are invariant to the shift; the
// conjugate picks it up as g*(t - a) - b).
enum class GeneratorKind { NegativeBinaryEntropy, Square };

struct Generator1D {
    GeneratorKind kind = GeneratorKind::Square;
    double affine_a = 0.0;
    double affine_b = 0.0;

    static Generator1D negative_binary_entropy();
    static Generator1D square();
    Generator1D with_affine(double a, double b) const;

    // Open domain bounds; points outside are rejected.
    double domain_lo() const;
    double domain_hi() const;
    bool in_domain(double x) const;

    double value(double x) const;
    double grad(double x) const;
    // Convex conjugate g*(t) and its gradient (the inverse of grad).
    double conjugate_value(double t) const;
    double conjugate_grad(double t) const;
};

// D_g(x, y) = g(y) - g(x) - g'(x) (y - x). Tangent at the first argument.
double bregman_1d(const Generator1D& g, double x, double y);

// Both sides of the dual-flip identity D_g(x, y) = D_{g*}(g'(y), g'(x)).
struct DualFlipResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
};
DualFlipResult dual_flip_check(const Generator1D& g, double x, double y);

// |D_g(x, y) - (int_x^y g' - g'(x)(y - x))| with the integral evaluated by
// adaptive quadrature. Small for catalogue generators on interior points.
double integral_representation_gap(const Generator1D& g, double x, double y);

// Dual coordinates of a simplex point under a score kind's generator.
//   Log:   log p, gauged to mean zero (the gauge is immaterial for
//          divergences and Jensen gaps; fixing it makes to/from a bijection).
//   Brier: the probabilities themselves (affine-invariant embedding).
// Spherical has no implemented dual map and is rejected.
struct DualVector {
    ScoreKind kind = ScoreKind::Brier;
    Eigen::VectorXd coords;
};

DualVector to_dual(ScoreKind kind, const SimplexVector& p);
SimplexVector from_dual(const DualVector& v);

// G* evaluated on dual coordinates: log-sum-exp for Log, squared norm for
// Brier.
double conjugate_on_dual(ScoreKind kind, const Eigen::VectorXd& coords);

// Jensen gap of G* over the members' dual vectors:
//   (1/m) sum_k G*(S(p_k)) - G*((1/m) sum_k S(p_k)).
// Closed forms: Brier (1/m) sum ||p_k||^2 - ||mean p||^2; Log
// -log sum_i GM_i with GM the coordinatewise geometric mean.
double bregman_information(ScoreKind kind, const std::vector<SimplexVector>& members);

// Bias-variance decomposition of the mean expected score of an ensemble of
// simplex predictions against target distribution q:
//   total = bias + variance + noise, exactly (up to float error), where
//   bias     = dual Bregman divergence, tangent at S(q), evaluated at the
//              mean dual prediction,
//   variance = bregman_information(members),
//   noise    = entropy(q),
//   total    = (1/m) sum_k expected_score(p_k, q).
// Supported kinds: Brier, Log.
struct ClassificationBvd {
    double bias = 0.0;
    double variance = 0.0;
    double noise = 0.0;
    double total = 0.0;
};
ClassificationBvd bvd_classification(ScoreKind kind, const std::vector<SimplexVector>& members,
                                     const SimplexVector& q);

// Squared-error decomposition for the binomial mean estimator: draws
// trials realizations of the mean of n Bernoulli(p) samples and reports the
// sample variance next to the exact p(1-p)/n. The estimator is unbiased, so
// the bias field is analytically zero; noise is p(1-p).
struct BernoulliBvd {
    double empirical_variance = 0.0;
    double theoretical_variance = 0.0;
    double bias = 0.0;
    double noise = 0.0;
};
BernoulliBvd bernoulli_bvd(double p, int n, int trials, Seed seed);

}  // namespace properuq

#endif

#include "properuq/bregman.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "properuq/parallel.hpp"
#include "properuq/rng.hpp"

namespace properuq {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInteriorEps = 1e-12;

double softplus(double t) {
    // Stable on both tails.
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

double sigmoid(double t) {
    if (t >= 0.0) {
        double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(t);
    return e / (1.0 + e);
}

double logsumexp(const Eigen::VectorXd& v) {
    double m = v.maxCoeff();
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += std::exp(v(i) - m);
    }
    return m + std::log(s);
}

void require_interior(const SimplexVector& p, const char* op) {
    for (int i = 0; i < p.dim(); ++i) {
        if (p[i] < kInteriorEps) {
            throw std::invalid_argument(std::string(op) + ": coordinate " + std::to_string(i + 1) +
                                        " below interior floor 1e-12");
        }
    }
}

// Adaptive Simpson on [a, b] with absolute tolerance tol.
double simpson_segment(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = simpson_segment(f, a, m, fa, flm, fm);
    double right = simpson_segment(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    double fa = f(a);
    double fb = f(b);
    double fm = f(0.5 * (a + b));
    double whole = simpson_segment(f, a, b, fa, fm, fb);
    return sign * adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

Generator1D Generator1D::negative_binary_entropy() {
    Generator1D g;
    g.kind = GeneratorKind::NegativeBinaryEntropy;
    return g;
}

Generator1D Generator1D::square() {
    Generator1D g;
    g.kind = GeneratorKind::Square;
    return g;
}

Generator1D Generator1D::with_affine(double a, double b) const {
    Generator1D g = *this;
    g.affine_a += a;
    g.affine_b += b;
    return g;
}

double Generator1D::domain_lo() const {
    return kind == GeneratorKind::NegativeBinaryEntropy ? 0.0 : -kInf;
}

double Generator1D::domain_hi() const {
    return kind == GeneratorKind::NegativeBinaryEntropy ? 1.0 : kInf;
}

bool Generator1D::in_domain(double x) const {
    return std::isfinite(x) && x > domain_lo() && x < domain_hi();
}

double Generator1D::value(double x) const {
    if (!in_domain(x)) {
        throw std::domain_error("generator value: point outside open domain");
    }
    double base = 0.0;
    switch (kind) {
        case GeneratorKind::NegativeBinaryEntropy:
            base = x * std::log(x) + (1.0 - x) * std::log(1.0 - x);
            break;
        case GeneratorKind::Square:
            base = x * x;
            break;
    }
    return base + affine_a * x + affine_b;
}

double Generator1D::grad(double x) const {
    if (!in_domain(x)) {
        throw std::domain_error("generator grad: point outside open domain");
    }
    double base = 0.0;
    switch (kind) {
        case GeneratorKind::NegativeBinaryEntropy:
            base = std::log(x / (1.0 - x));
            break;
        case GeneratorKind::Square:
            base = 2.0 * x;
            break;
    }
    return base + affine_a;
}

double Generator1D::conjugate_value(double t) const {
    double u = t - affine_a;
    switch (kind) {
        case GeneratorKind::NegativeBinaryEntropy:
            return softplus(u) - affine_b;
        case GeneratorKind::Square:
            return 0.25 * u * u - affine_b;
    }
    return 0.0;
}

double Generator1D::conjugate_grad(double t) const {
    double u = t - affine_a;
    switch (kind) {
        case GeneratorKind::NegativeBinaryEntropy:
            return sigmoid(u);
        case GeneratorKind::Square:
            return 0.5 * u;
    }
    return 0.0;
}

double bregman_1d(const Generator1D& g, double x, double y) {
    return g.value(y) - g.value(x) - g.grad(x) * (y - x);
}

DualFlipResult dual_flip_check(const Generator1D& g, double x, double y) {
    DualFlipResult r;
    r.lhs = bregman_1d(g, x, y);
    double xd = g.grad(x);
    double yd = g.grad(y);
    // Conjugate-side divergence with tangent at g'(y).
    r.rhs = g.conjugate_value(xd) - g.conjugate_value(yd) - g.conjugate_grad(yd) * (xd - yd);
    r.gap = std::abs(r.lhs - r.rhs);
    return r;
}

double integral_representation_gap(const Generator1D& g, double x, double y) {
    if (!g.in_domain(x) || !g.in_domain(y)) {
        throw std::domain_error("integral representation: point outside open domain");
    }
    double integral = integrate([&g](double z) { return g.grad(z); }, x, y, 1e-12);
    double rhs = integral - g.grad(x) * (y - x);
    return std::abs(bregman_1d(g, x, y) - rhs);
}

DualVector to_dual(ScoreKind kind, const SimplexVector& p) {
    DualVector v;
    v.kind = kind;
    switch (kind) {
        case ScoreKind::Brier:
            v.coords = p.probs();
            return v;
        case ScoreKind::Log: {
            require_interior(p, "to_dual");
            Eigen::VectorXd logs = p.probs().array().log();
            v.coords = logs.array() - logs.mean();
            return v;
        }
        case ScoreKind::Spherical:
            throw std::invalid_argument("to_dual: spherical kind has no dual map");
    }
    throw std::invalid_argument("to_dual: unknown kind");
}

SimplexVector from_dual(const DualVector& v) {
    switch (v.kind) {
        case ScoreKind::Brier:
            return SimplexVector(v.coords);
        case ScoreKind::Log: {
            double m = v.coords.maxCoeff();
            Eigen::VectorXd e = (v.coords.array() - m).exp();
            return SimplexVector(e / e.sum());
        }
        case ScoreKind::Spherical:
            throw std::invalid_argument("from_dual: spherical kind has no dual map");
    }
    throw std::invalid_argument("from_dual: unknown kind");
}

double conjugate_on_dual(ScoreKind kind, const Eigen::VectorXd& coords) {
    switch (kind) {
        case ScoreKind::Brier:
            return coords.squaredNorm();
        case ScoreKind::Log:
            return logsumexp(coords);
        case ScoreKind::Spherical:
            throw std::invalid_argument("conjugate_on_dual: spherical kind unsupported");
    }
    throw std::invalid_argument("conjugate_on_dual: unknown kind");
}

double bregman_information(ScoreKind kind, const std::vector<SimplexVector>& members) {
    if (members.empty()) {
        throw std::invalid_argument("bregman_information: no members");
    }
    if (kind == ScoreKind::Spherical) {
        throw std::invalid_argument("bregman_information: spherical kind unsupported");
    }
    int d = members[0].dim();
    Eigen::VectorXd mean_dual = Eigen::VectorXd::Zero(d);
    KahanSum mean_conjugate;
    for (const SimplexVector& p : members) {
        if (p.dim() != d) {
            throw std::invalid_argument("bregman_information: member dim mismatch");
        }
        DualVector dv = to_dual(kind, p);
        mean_dual += dv.coords;
        mean_conjugate.add(conjugate_on_dual(kind, dv.coords));
    }
    double m = static_cast<double>(members.size());
    mean_dual /= m;
    double gap = mean_conjugate.value() / m - conjugate_on_dual(kind, mean_dual);
    return gap;
}

ClassificationBvd bvd_classification(ScoreKind kind, const std::vector<SimplexVector>& members,
                                     const SimplexVector& q) {
    if (members.empty()) {
        throw std::invalid_argument("bvd_classification: no members");
    }
    if (kind == ScoreKind::Spherical) {
        throw std::invalid_argument("bvd_classification: spherical kind unsupported");
    }
    int d = q.dim();
    for (const SimplexVector& p : members) {
        if (p.dim() != d) {
            throw std::invalid_argument("bvd_classification: member dim mismatch");
        }
    }
    double m = static_cast<double>(members.size());

    Eigen::VectorXd mean_dual = Eigen::VectorXd::Zero(d);
    for (const SimplexVector& p : members) {
        mean_dual += to_dual(kind, p).coords;
    }
    mean_dual /= m;

    ClassificationBvd out;
    out.noise = entropy(kind, q);
    out.variance = bregman_information(kind, members);

    // Bias: dual divergence with tangent at S(q). The tangent slope is the
    // gradient of G* on the stored coordinates: softmax (= q) for Log,
    // 2 * coords for the Brier squared-norm embedding.
    Eigen::VectorXd q_dual = to_dual(kind, q).coords;
    Eigen::VectorXd slope =
        kind == ScoreKind::Brier ? Eigen::VectorXd(2.0 * q_dual) : q.probs();
    out.bias = conjugate_on_dual(kind, mean_dual) - conjugate_on_dual(kind, q_dual) -
               slope.dot(mean_dual - q_dual);

    KahanSum total;
    for (const SimplexVector& p : members) {
        total.add(expected_score(kind, p, q));
    }
    out.total = total.value() / m;
    return out;
}

BernoulliBvd bernoulli_bvd(double p, int n, int trials, Seed seed) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("bernoulli_bvd: p outside [0, 1]");
    }
    if (n < 1 || trials < 2) {
        throw std::invalid_argument("bernoulli_bvd: need n >= 1 and trials >= 2");
    }
    Rng rng(seed);
    std::vector<double> means(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            if (rng.uniform() < p) ++hits;
        }
        means[static_cast<std::size_t>(t)] = static_cast<double>(hits) / n;
    }
    double grand = 0.0;
    for (double v : means) grand += v;
    grand /= trials;
    double ss = 0.0;
    for (double v : means) ss += (v - grand) * (v - grand);

    BernoulliBvd out;
    out.empirical_variance = ss / (trials - 1);
    out.theoretical_variance = p * (1.0 - p) / n;
    out.bias = 0.0;
    out.noise = p * (1.0 - p);
    return out;
}

}  // namespace properuq

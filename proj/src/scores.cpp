#include "properuq/scores.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "properuq/parallel.hpp"

namespace properuq {

ScoreKind score_kind_from_string(const std::string& name) {
    if (name == "brier") return ScoreKind::Brier;
    if (name == "log") return ScoreKind::Log;
    if (name == "spherical") return ScoreKind::Spherical;
    throw std::invalid_argument("unknown score kind '" + name + "'");
}

std::string to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::Brier: return "brier";
        case ScoreKind::Log: return "log";
        case ScoreKind::Spherical: return "spherical";
    }
    return "?";
}

double score(ScoreKind kind, const SimplexVector& p, int y) {
    if (y < 0 || y >= p.dim()) {
        throw std::invalid_argument("score: class index " + std::to_string(y) +
                                    " out of range for dim " + std::to_string(p.dim()));
    }
    const Eigen::VectorXd& v = p.probs();
    switch (kind) {
        case ScoreKind::Brier:
            return v.squaredNorm() - 2.0 * v(y);
        case ScoreKind::Log:
            if (v(y) <= 0.0) return std::numeric_limits<double>::infinity();
            return -std::log(v(y));
        case ScoreKind::Spherical:
            return -v(y) / v.norm();
    }
    return 0.0;
}

double entropy(ScoreKind kind, const SimplexVector& p) {
    const Eigen::VectorXd& v = p.probs();
    switch (kind) {
        case ScoreKind::Brier:
            return -v.squaredNorm();
        case ScoreKind::Log: {
            double h = 0.0;
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                if (v(i) > 0.0) h -= v(i) * std::log(v(i));
            }
            return h;
        }
        case ScoreKind::Spherical:
            return -v.norm();
    }
    return 0.0;
}

double divergence(ScoreKind kind, const SimplexVector& p, const SimplexVector& q) {
    if (p.dim() != q.dim()) {
        throw std::invalid_argument("divergence: dim mismatch " + std::to_string(p.dim()) +
                                    " vs " + std::to_string(q.dim()));
    }
    const Eigen::VectorXd& pv = p.probs();
    const Eigen::VectorXd& qv = q.probs();
    switch (kind) {
        case ScoreKind::Brier:
            return (pv - qv).squaredNorm();
        case ScoreKind::Log: {
            double d = 0.0;
            for (Eigen::Index i = 0; i < pv.size(); ++i) {
                if (qv(i) <= 0.0) continue;
                if (pv(i) <= 0.0) return std::numeric_limits<double>::infinity();
                d += qv(i) * std::log(qv(i) / pv(i));
            }
            return d < 0.0 ? 0.0 : d;  // clip float negatives at p ~= q
        }
        case ScoreKind::Spherical: {
            double qn = qv.norm();
            double cosine = pv.dot(qv) / (pv.norm() * qn);
            if (cosine > 1.0) cosine = 1.0;
            if (cosine < -1.0) cosine = -1.0;
            return (1.0 - cosine) * qn;
        }
    }
    return 0.0;
}

double expected_score(ScoreKind kind, const SimplexVector& p, const SimplexVector& q) {
    if (p.dim() != q.dim()) {
        throw std::invalid_argument("expected_score: dim mismatch " + std::to_string(p.dim()) +
                                    " vs " + std::to_string(q.dim()));
    }
    const Eigen::VectorXd& pv = p.probs();
    const Eigen::VectorXd& qv = q.probs();
    switch (kind) {
        case ScoreKind::Brier:
            return pv.squaredNorm() - 2.0 * pv.dot(qv);
        case ScoreKind::Log: {
            double s = 0.0;
            for (Eigen::Index i = 0; i < pv.size(); ++i) {
                if (qv(i) <= 0.0) continue;
                if (pv(i) <= 0.0) return std::numeric_limits<double>::infinity();
                s -= qv(i) * std::log(pv(i));
            }
            return s;
        }
        case ScoreKind::Spherical:
            return -pv.dot(qv) / pv.norm();
    }
    return 0.0;
}

double empirical_risk(ScoreKind kind, const LabeledPredictionSet& data) {
    KahanSum sum;
    for (int i = 0; i < data.size(); ++i) {
        sum.add(score(kind, data.prediction(i), data.label(i)));
    }
    return sum.value() / data.size();
}

std::vector<double> per_instance_scores(ScoreKind kind, const LabeledPredictionSet& data) {
    std::vector<double> out(static_cast<std::size_t>(data.size()));
    for (int i = 0; i < data.size(); ++i) {
        out[static_cast<std::size_t>(i)] = score(kind, data.prediction(i), data.label(i));
    }
    return out;
}

}  // namespace properuq

#ifndef PROPERUQ_SCORES_HPP
#define PROPERUQ_SCORES_HPP

#include <string>
#include <vector>

#include "properuq/types.hpp"

namespace properuq {

// Proper scoring rules on the probability simplex. All logarithms are
// natural, so log-kind quantities are in nats. Non-finite results are legal
// flagged values (log score with zero predicted mass on the outcome), never
// exceptions; callers test with std::isinf.
enum class ScoreKind { Brier, Log, Spherical };

ScoreKind score_kind_from_string(const std::string& name);
std::string to_string(ScoreKind kind);

// Score of prediction p against outcome class y (0-based).
//   Brier:     sum_i p_i^2 - 2 p_y
//   Log:       -log p_y
//   Spherical: -p_y / ||p||_2
double score(ScoreKind kind, const SimplexVector& p, int y);

// Entropy of p: the expected score of a truthful prediction,
// E_{Y~p}[score(p, Y)] (the minimal attainable expected score).
//   Brier: -sum p_i^2   Log: -sum p_i log p_i   Spherical: -||p||_2
// Its negative is convex; it is the noise term of the decompositions.
double entropy(ScoreKind kind, const SimplexVector& p);

// Divergence D(p, q) between prediction p and target distribution q; zero
// iff p = q, nonnegative otherwise.
//   Brier:     ||p - q||_2^2
//   Log:       sum_i q_i log(q_i / p_i)   (0 log 0 = 0; q_i > 0, p_i = 0 -> +inf)
//   Spherical: (1 - cos(p, q)) ||q||_2
double divergence(ScoreKind kind, const SimplexVector& p, const SimplexVector& q);

// E_{Y~q}[score(p, Y)], computed in closed form. Coincides with
// divergence(p, q) + entropy(q); that identity is exercised by tests rather
// than used as the implementation. (At p = q the divergence vanishes, so
// the expected score reaches its floor, the entropy of q.)
double expected_score(ScoreKind kind, const SimplexVector& p, const SimplexVector& q);

// Mean score over a labeled set: (1/n) sum_i score(predictions_i, label_i).
double empirical_risk(ScoreKind kind, const LabeledPredictionSet& data);

// Per-instance scores in row order.
std::vector<double> per_instance_scores(ScoreKind kind, const LabeledPredictionSet& data);

}  // namespace properuq

#endif

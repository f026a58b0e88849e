#ifndef PROPERUQ_CALIBRATION_HPP
#define PROPERUQ_CALIBRATION_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "properuq/scores.hpp"
#include "properuq/types.hpp"

namespace properuq {

// Confidence-axis binning. UniformWidth splits [0, 1] into equal intervals
// (last one closed); EqualMass places quantile edges over the observed
// confidences, with ties assigned to the lower bin. Flag syntax:
// "uniform:10" / "equal-mass:10".
struct BinningScheme {
    enum class Mode { UniformWidth, EqualMass };
    Mode mode = Mode::UniformWidth;
    int bins = 10;

    static BinningScheme parse(const std::string& flag);
    std::string to_flag_string() const;
};

// Assigns each confidence to its bin index under the scheme. Exposed for
// tests; every value lands in exactly one bin.
std::vector<int> assign_bins(const std::vector<double>& confidences, const BinningScheme& scheme);

struct CalibrationReport {
    std::string estimator;           // "tce" | "cce" | "proper"
    double value = 0.0;
    double p_exponent = 0.0;         // tce / cce
    std::optional<double> bandwidth; // kernel estimators
    std::optional<int> bins;         // binned estimator
    std::optional<std::string> kind; // proper estimator
    int n = 0;
    bool degenerate_fallback = false;
};

// Binned top-label calibration error:
//   ( sum_B (|B|/n) |acc(B) - conf(B)|^p )^(1/p),
// with conf the mean top-label probability and acc the top-label hit rate.
// Empty bins contribute zero mass.
CalibrationReport tce_binned(double p_exponent, const LabeledPredictionSet& data,
                             const BinningScheme& scheme);

// Dirichlet kernel on the simplex with concentration x/h + 1:
//   k(x, y) = Gamma(sum alpha) / prod Gamma(alpha_i) * prod y_i^(alpha_i - 1).
// Evaluated in log space; y entries are floored at 1e-10 inside the power.
double dirichlet_kernel(const SimplexVector& x, const SimplexVector& y, double h);

// Nadaraya-Watson estimate of the label conditional at the query point:
//   sum_i k(query, f_i) e_{y_i} / sum_i k(query, f_i).
// leave_out >= 0 removes that training index from the sums (leave-one-out);
// the default -1 keeps every point (leave-self-in).
SimplexVector kd_conditional(const LabeledPredictionSet& data, const SimplexVector& query,
                             double h, int leave_out = -1);

// Conditionals at every training prediction, one row per instance. With
// leave_one_out each row excludes its own instance. degenerate_rows counts
// rows where the weight mass was non-finite and a uniform fallback was used.
struct ConditionalTable {
    Eigen::MatrixXd rows;
    int degenerate_rows = 0;
};
ConditionalTable kd_conditional_all(const LabeledPredictionSet& data, double h,
                                    bool leave_one_out = false);

// Kernel-density calibration error:
//   ( (1/n) sum_i ||f_i - chat(f_i)||_p^p )^(1/p).
CalibrationReport cce_kde(double p_exponent, const LabeledPredictionSet& data, double h,
                          bool leave_one_out = false);

// Divergence-weighted calibration error (1/n) sum_i D_kind(f_i, chat(f_i)).
// For the log kind the estimated conditionals get 1e-6 additive smoothing
// before the KL so isolated empty classes do not blow up.
CalibrationReport proper_ce(ScoreKind kind, const LabeledPredictionSet& data, double h,
                            bool leave_one_out = false);

// Sharpness companion: (1/n) sum_i D_kind(marginal label frequency, chat(f_i)).
double sharpness(ScoreKind kind, const LabeledPredictionSet& data, double h,
                 bool leave_one_out = false);

// Temperature scaling p -> p^alpha / sum p^alpha (computed via shifted
// exp-log so large alpha cannot underflow the argmax entry). Preserves the
// argmax for every alpha > 0; TS_a(TS_b(p)) = TS_{ab}(p).
SimplexVector temperature_scale(const SimplexVector& p, double alpha);

// Minimizes empirical risk over alpha = 10^t, t in [-3, 3], by golden-section
// search (tolerance 1e-4 in t) after a coarse bracket scan. Never returns a
// fit worse than alpha = 1.
struct TemperatureFit {
    double alpha = 1.0;
    double risk_before = 0.0;
    double risk_after = 0.0;
};
TemperatureFit fit_temperature(ScoreKind kind, const LabeledPredictionSet& data);

// Compares the empirical risk change against the exact calibration-error
// change when predictions are re-scaled by TS_alpha. exact_conditional must
// return the true label conditional for an untransformed prediction; the
// sigma-algebra generated by the prediction is unchanged by the injective
// re-scaling, so the same handle serves both sides.
struct ImprovementCheck {
    double risk_delta = 0.0;
    double ce_delta = 0.0;
    double gap = 0.0;
};
ImprovementCheck improvement_check(
    ScoreKind kind, const LabeledPredictionSet& data,
    const std::function<SimplexVector(const SimplexVector&)>& exact_conditional, double alpha);

// Checks that mean predicted entropy within an entropy-level bin does not
// exceed the entropy of the pooled label conditional of that bin. Levels are
// equal-mass bins of the predicted entropy.
struct EntropyLevel {
    double predicted_entropy = 0.0;
    double conditional_entropy_estimate = 0.0;
    int count = 0;
};
std::vector<EntropyLevel> aleatoric_inequality_check(ScoreKind kind,
                                                     const LabeledPredictionSet& data,
                                                     int levels);

// Reliability diagram rows over a binning scheme.
struct ReliabilityBin {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
    double acc = 0.0;
    double conf = 0.0;
};
std::vector<ReliabilityBin> reliability(const LabeledPredictionSet& data,
                                        const BinningScheme& scheme);

}  // namespace properuq

#endif

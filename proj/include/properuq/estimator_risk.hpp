#ifndef PROPERUQ_ESTIMATOR_RISK_HPP
#define PROPERUQ_ESTIMATOR_RISK_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "properuq/calibration.hpp"
#include "properuq/kernels.hpp"
#include "properuq/types.hpp"

namespace properuq {

// Candidate calibration estimation functions. Each candidate fits a label
// conditional chat on a training split; the induced similarity
// h(p, p') = <p - chat(p), p' - chat(p')> is what the risk functional sees.
struct HSpec {
    enum class Kind { Binned, Kde, Krr, Oracle };
    Kind kind = Kind::Kde;

    BinningScheme scheme;                                        // Binned
    double bandwidth = 0.05;                                     // Kde
    double lambda = 0.1;                                         // Krr
    double gamma = 5.0;                                          // Krr RBF on the simplex
    std::function<SimplexVector(const SimplexVector&)> oracle;   // Oracle

    static HSpec binned(BinningScheme scheme);
    static HSpec kde(double bandwidth);
    static HSpec krr(double lambda, double gamma);
    static HSpec oracle_fn(std::function<SimplexVector(const SimplexVector&)> fn);

    std::string name() const;
    std::string hyperparams() const;
    // Tie-break key: smaller means simpler (fewer bins, larger bandwidth,
    // larger lambda; the oracle is simplest of all).
    double complexity() const;
};

// Fitted candidate. Copyable handle; fitting is deterministic.
class CalibrationEstimationFunction {
public:
    Eigen::VectorXd chat(const SimplexVector& p) const;
    double h_value(const SimplexVector& p, const SimplexVector& p2) const;

    const std::string& name() const { return name_; }
    const std::string& hyperparams() const { return hyperparams_; }
    double complexity() const { return complexity_; }
    const std::string& train_id() const { return train_id_; }

private:
    friend CalibrationEstimationFunction fit(const HSpec&, const LabeledPredictionSet&);
    std::function<Eigen::VectorXd(const SimplexVector&)> chat_;
    std::string name_;
    std::string hyperparams_;
    double complexity_ = 0.0;
    std::string train_id_;
};

CalibrationEstimationFunction fit(const HSpec& spec, const LabeledPredictionSet& train);

// U-statistic risk of a fitted candidate on held-out data:
//   (1/(n(n-1))) sum_{i != j} (<f_i - e_{y_i}, f_j - e_{y_j}> - h(f_i, f_j))^2.
// Errors when data shares the candidate's training provenance.
double empirical_ce_risk(const CalibrationEstimationFunction& h,
                         const LabeledPredictionSet& data);

// Fit on train, rank by validation risk, report test risk for everyone and
// the winner's calibration-error estimate sqrt(mean_i h(f_i, f_i)) on test.
// Ties break toward smaller complexity, then lexicographic name.
struct RiskCandidateRow {
    std::string name;
    std::string hyperparams;
    double train_risk = 0.0;
    double val_risk = 0.0;
    double test_risk = 0.0;
    double test_ce = 0.0;
};
struct RiskReport {
    std::vector<RiskCandidateRow> candidates;
    int chosen_index = -1;
};
RiskReport pipeline(const std::vector<HSpec>& candidates, const LabeledPredictionSet& train,
                    const LabeledPredictionSet& val, const LabeledPredictionSet& test);

}  // namespace properuq

#endif

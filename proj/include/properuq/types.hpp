#ifndef PROPERUQ_TYPES_HPP
#define PROPERUQ_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace properuq {

// Probability vector on the simplex. Entries must be >= 0 and sum to 1
// within 1e-9 at construction; stored values are renormalized so the stored
// mass is within 1e-15 of 1. Renormalization is skipped when the input is
// already within 1e-15, which makes save/load round trips byte-stable.
class SimplexVector {
public:
    explicit SimplexVector(Eigen::VectorXd probs);

    static SimplexVector one_hot(int dim, int index);
    static SimplexVector uniform(int dim);

    const Eigen::VectorXd& probs() const { return probs_; }
    int dim() const { return static_cast<int>(probs_.size()); }
    double operator[](int i) const { return probs_(i); }

    // Index of the largest entry; ties resolve to the lowest index.
    int argmax() const;

private:
    Eigen::VectorXd probs_;
};

// Paired predictions and labels. Labels are 0-based internally; the CSV
// format stores them 1-based. provenance_id identifies the originating
// artifact (file digest or generator tag) for split-disjointness checks.
class LabeledPredictionSet {
public:
    LabeledPredictionSet(std::vector<SimplexVector> predictions,
                         std::vector<int> labels,
                         std::string provenance_id = "");

    int size() const { return static_cast<int>(labels_.size()); }
    int dim() const;
    const SimplexVector& prediction(int i) const { return predictions_[i]; }
    const std::vector<SimplexVector>& predictions() const { return predictions_; }
    int label(int i) const { return labels_[i]; }
    const std::vector<int>& labels() const { return labels_; }
    const std::string& provenance_id() const { return provenance_id_; }

    // Rows of predictions as an n x d matrix.
    Eigen::MatrixXd prediction_matrix() const;
    // Empirical label frequency vector over all instances.
    SimplexVector marginal_label_frequency() const;

private:
    std::vector<SimplexVector> predictions_;
    std::vector<int> labels_;
    std::string provenance_id_;
};

// Point cloud in R^q, one sample per row. Rows are draws from some
// distribution; column count is fixed across the set.
class SampleSet {
public:
    explicit SampleSet(Eigen::MatrixXd points, std::string provenance_id = "");

    int size() const { return static_cast<int>(points_.rows()); }
    int point_dim() const { return static_cast<int>(points_.cols()); }
    const Eigen::MatrixXd& points() const { return points_; }
    Eigen::VectorXd point(int i) const { return points_.row(i).transpose(); }
    const std::string& provenance_id() const { return provenance_id_; }

    // New set holding only the listed coordinates, in the given order.
    SampleSet restrict_columns(const std::vector<int>& cols) const;

private:
    Eigen::MatrixXd points_;
    std::string provenance_id_;
};

// m members x R replicates of sample sets, all with the same point
// dimension. The grid is rectangular; ragged inputs are rejected at load.
class EnsembleGrid {
public:
    explicit EnsembleGrid(std::vector<std::vector<SampleSet>> members);

    int member_count() const { return static_cast<int>(members_.size()); }
    int replicate_count() const { return static_cast<int>(members_[0].size()); }
    int point_dim() const { return members_[0][0].point_dim(); }
    const SampleSet& at(int member, int replicate) const {
        return members_[member][replicate];
    }

private:
    std::vector<std::vector<SampleSet>> members_;
};

// Root seed for any stochastic operation. Per-trial streams are derived
// deterministically by counter, never from global state.
struct Seed {
    std::uint64_t value = 0;
};

}  // namespace properuq

#endif

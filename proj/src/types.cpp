#include "properuq/types.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace properuq {
namespace {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace

SimplexVector::SimplexVector(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0) {
        throw std::invalid_argument("simplex vector: empty");
    }
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
        double v = probs_(i);
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("simplex vector: entry " + std::to_string(i + 1) +
                                        " is " + format_double(v));
        }
    }
    double sum = probs_.sum();
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("simplex vector: mass " + format_double(sum));
    }
    if (std::abs(sum - 1.0) > 1e-15) {
        probs_ /= sum;
        // One additive fixup on the largest entry keeps the stored mass
        // within 1e-15 even when the division rounds unfavourably.
        double resid = probs_.sum() - 1.0;
        if (resid != 0.0) {
            Eigen::Index imax;
            probs_.maxCoeff(&imax);
            probs_(imax) -= resid;
        }
    }
}

SimplexVector SimplexVector::one_hot(int dim, int index) {
    if (dim < 1 || index < 0 || index >= dim) {
        throw std::invalid_argument("one_hot: index " + std::to_string(index) +
                                    " out of range for dim " + std::to_string(dim));
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v(index) = 1.0;
    return SimplexVector(std::move(v));
}

SimplexVector SimplexVector::uniform(int dim) {
    if (dim < 1) {
        throw std::invalid_argument("uniform: dim must be >= 1");
    }
    return SimplexVector(Eigen::VectorXd::Constant(dim, 1.0 / dim));
}

int SimplexVector::argmax() const {
    int best = 0;
    for (int i = 1; i < dim(); ++i) {
        if (probs_(i) > probs_(best)) best = i;
    }
    return best;
}

LabeledPredictionSet::LabeledPredictionSet(std::vector<SimplexVector> predictions,
                                           std::vector<int> labels,
                                           std::string provenance_id)
    : predictions_(std::move(predictions)),
      labels_(std::move(labels)),
      provenance_id_(std::move(provenance_id)) {
    if (predictions_.empty()) {
        throw std::invalid_argument("prediction set: empty");
    }
    if (predictions_.size() != labels_.size()) {
        throw std::invalid_argument("prediction set: " + std::to_string(predictions_.size()) +
                                    " predictions vs " + std::to_string(labels_.size()) +
                                    " labels");
    }
    int d = predictions_[0].dim();
    for (std::size_t i = 0; i < predictions_.size(); ++i) {
        if (predictions_[i].dim() != d) {
            throw std::invalid_argument("prediction set: row " + std::to_string(i + 1) +
                                        " has dim " + std::to_string(predictions_[i].dim()) +
                                        ", expected " + std::to_string(d));
        }
        if (labels_[i] < 0 || labels_[i] >= d) {
            throw std::invalid_argument("prediction set: row " + std::to_string(i + 1) +
                                        " label out of range");
        }
    }
}

int LabeledPredictionSet::dim() const { return predictions_[0].dim(); }

Eigen::MatrixXd LabeledPredictionSet::prediction_matrix() const {
    Eigen::MatrixXd m(size(), dim());
    for (int i = 0; i < size(); ++i) {
        m.row(i) = predictions_[i].probs().transpose();
    }
    return m;
}

SimplexVector LabeledPredictionSet::marginal_label_frequency() const {
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(dim());
    for (int label : labels_) {
        freq(label) += 1.0;
    }
    freq /= static_cast<double>(size());
    return SimplexVector(std::move(freq));
}

SampleSet::SampleSet(Eigen::MatrixXd points, std::string provenance_id)
    : points_(std::move(points)), provenance_id_(std::move(provenance_id)) {
    if (points_.rows() < 1 || points_.cols() < 1) {
        throw std::invalid_argument("sample set: empty");
    }
    if (!points_.allFinite()) {
        throw std::invalid_argument("sample set: non-finite entry");
    }
}

SampleSet SampleSet::restrict_columns(const std::vector<int>& cols) const {
    if (cols.empty()) {
        throw std::invalid_argument("restrict_columns: empty selection");
    }
    Eigen::MatrixXd m(points_.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] < 0 || cols[j] >= point_dim()) {
            throw std::invalid_argument("restrict_columns: column " + std::to_string(cols[j]) +
                                        " out of range");
        }
        m.col(static_cast<Eigen::Index>(j)) = points_.col(cols[j]);
    }
    return SampleSet(std::move(m), provenance_id_);
}

EnsembleGrid::EnsembleGrid(std::vector<std::vector<SampleSet>> members)
    : members_(std::move(members)) {
    if (members_.empty()) {
        throw std::invalid_argument("ensemble grid: no members");
    }
    std::size_t replicates = members_[0].size();
    if (replicates == 0) {
        throw std::invalid_argument("ensemble grid: member 1 has no replicates");
    }
    int q = members_[0][0].point_dim();
    for (std::size_t k = 0; k < members_.size(); ++k) {
        if (members_[k].size() != replicates) {
            throw std::invalid_argument("ensemble grid: member " + std::to_string(k + 1) +
                                        " has " + std::to_string(members_[k].size()) +
                                        " replicates, expected " + std::to_string(replicates));
        }
        for (std::size_t r = 0; r < members_[k].size(); ++r) {
            if (members_[k][r].point_dim() != q) {
                throw std::invalid_argument("ensemble grid: member " + std::to_string(k + 1) +
                                            " replicate " + std::to_string(r + 1) +
                                            " has point dim " +
                                            std::to_string(members_[k][r].point_dim()) +
                                            ", expected " + std::to_string(q));
            }
        }
    }
}

}  // namespace properuq

#include "dtl/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dtl/error.hpp"
#include "dtl/training.hpp"

namespace dtl {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes < 2) throw InvalidArgument("a confusion matrix needs at least 2 classes");
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
    : classes_(classes), counts_(std::move(counts)) {
  if (classes < 2) throw InvalidArgument("a confusion matrix needs at least 2 classes");
  if (counts_.size() != classes * classes) throw InvalidArgument("confusion matrix must be square");
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

void ConfusionMatrix::validate() const {
  if (total() == 0) throw InvalidArgument("confusion matrix has no counts");
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t class_count) {
  if (predictions.size() != labels.size()) {
    throw InvalidArgument(std::to_string(predictions.size()) + " predictions for " + std::to_string(labels.size()) +
                          " labels");
  }
  if (labels.empty()) throw InvalidArgument("confusion matrix of an empty sequence");
  ConfusionMatrix cm(class_count);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] >= class_count || predictions[t] >= class_count) {
      throw InvalidArgument("class index out of range at position " + std::to_string(t));
    }
    ++cm(labels[t], predictions[t]);
  }
  return cm;
}

RatioMatrices ratio_matrices(const ConfusionMatrix& cm) {
  cm.validate();
  const std::size_t c = cm.classes();
  RatioMatrices rm{c, std::vector<double>(c * c, 0.0), std::vector<double>(c * c, 0.0)};
  for (std::size_t j = 0; j < c; ++j) {
    std::uint64_t column = 0;
    for (std::size_t i = 0; i < c; ++i) column += cm(i, j);
    if (column == 0) continue;
    for (std::size_t i = 0; i < c; ++i) rm.recall[i * c + j] = static_cast<double>(cm(i, j)) / static_cast<double>(column);
  }
  for (std::size_t i = 0; i < c; ++i) {
    std::uint64_t row = 0;
    for (std::size_t j = 0; j < c; ++j) row += cm(i, j);
    if (row == 0) continue;
    for (std::size_t j = 0; j < c; ++j) rm.precision[i * c + j] = static_cast<double>(cm(i, j)) / static_cast<double>(row);
  }
  return rm;
}

ClassAssignments class_assignments(const RatioMatrices& rm) {
  const std::size_t c = rm.classes;
  double r_trace = 0.0, s_trace = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    r_trace += rm.r(i, i);
    s_trace += rm.s(i, i);
  }
  if (!(r_trace > 0.0) || !(s_trace > 0.0)) {
    throw DegenerateEvidence("confusion matrix diagonal is all zero; the classifier is never correct");
  }
  ClassAssignments out{std::vector<double>(c), std::vector<double>(c)};
  for (std::size_t i = 0; i < c; ++i) {
    out.recall[i] = rm.r(i, i) / r_trace;
    out.precision[i] = rm.s(i, i) / s_trace;
  }
  return out;
}

AssignmentVector dempster_combine(std::span<const double> recall, std::span<const double> precision, CombineMode mode) {
  if (recall.size() != precision.size() || recall.empty()) {
    throw InvalidArgument("recall and precision assignments must have equal, nonzero length");
  }
  const auto check_sum = [](std::span<const double> v, const char* name) {
    const double sum = std::accumulate(v.begin(), v.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument(std::string(name) + " assignment does not sum to 1");
    for (double x : v) {
      if (!(x >= 0.0)) throw InvalidArgument(std::string(name) + " assignment has a negative mass");
    }
  };
  check_sum(recall, "recall");
  check_sum(precision, "precision");

  double agreement = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) agreement += recall[i] * precision[i];
  const double denominator = mode == CombineMode::conflict ? 1.0 - agreement : agreement;

  AssignmentVector out;
  out.near_total_agreement = mode == CombineMode::conflict && denominator <= 0.0;
  const double d = std::max(denominator, kCombineEpsilon);
  out.masses.resize(recall.size());
  for (std::size_t i = 0; i < recall.size(); ++i) out.masses[i] = recall[i] * precision[i] / d;
  return out;
}

BpaResult bpa_from_confusion(const ConfusionMatrix& cm, CombineMode mode) {
  BpaResult out;
  out.confusion = cm;
  out.ratios = ratio_matrices(cm);
  try {
    out.assignments = class_assignments(out.ratios);
  } catch (const DegenerateEvidence&) {
    out.degenerate = true;
    out.theta.masses.assign(cm.classes(), 0.0);
    return out;
  }
  out.theta = dempster_combine(out.assignments.recall, out.assignments.precision, mode);
  return out;
}

BpaResult bpa(const Network& classifier, const LabelledDataset& data, CombineMode mode) {
  if (data.empty()) throw DatasetError("BPA needs a nonempty dataset");
  if (classifier.class_count() != data.class_count()) {
    throw InvalidArgument("classifier has " + std::to_string(classifier.class_count()) + " classes, dataset has " +
                          std::to_string(data.class_count()));
  }
  const auto predictions = predict_all(classifier, data);
  return bpa_from_confusion(confusion_matrix(predictions, data.labels(), data.class_count()), mode);
}

double filter_cost(const AssignmentVector& assignment) {
  double sq = 0.0;
  for (double m : assignment.masses) sq += m * m;
  return std::sqrt(sq);
}

std::vector<double> filter_costs(std::span<const AssignmentVector> assignments, CostScaling scaling) {
  if (assignments.empty()) throw InvalidArgument("filter_costs needs at least one assignment");
  const std::size_t c = assignments.front().masses.size();
  std::vector<double> gammas;
  gammas.reserve(assignments.size());
  for (const auto& a : assignments) {
    if (a.masses.size() != c) throw InvalidArgument("assignment vectors have different class counts");
    gammas.push_back(filter_cost(a));
  }
  if (scaling == CostScaling::max) {
    const double top = *std::max_element(gammas.begin(), gammas.end());
    if (top > 0.0) {
      for (double& g : gammas) g /= top;
    }
  }
  return gammas;
}

}  // namespace dtl

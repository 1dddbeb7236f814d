#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtl/dataset.hpp"
#include "dtl/network.hpp"

namespace dtl {

/// Square count matrix; entry (i, j) counts samples of actual class i that
/// were assigned label j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts);

  std::size_t classes() const { return classes_; }
  std::uint64_t operator()(std::size_t actual, std::size_t predicted) const { return counts_[actual * classes_ + predicted]; }
  std::uint64_t& operator()(std::size_t actual, std::size_t predicted) { return counts_[actual * classes_ + predicted]; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const;

  /// Throws unless at least one entry is positive.
  void validate() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t class_count);

/// Row-major C x C matrices. recall(i, j) = n_ij / sum_i n_ij (each column
/// normalized); precision(i, j) = n_ij / sum_j n_ij (each row normalized).
/// A zero column or row yields zero ratios.
struct RatioMatrices {
  std::size_t classes = 0;
  std::vector<double> recall;
  std::vector<double> precision;

  double r(std::size_t i, std::size_t j) const { return recall[i * classes + j]; }
  double s(std::size_t i, std::size_t j) const { return precision[i * classes + j]; }
};

RatioMatrices ratio_matrices(const ConfusionMatrix& cm);

/// Per-class recall (R) and precision (S) assignments, each summing to 1.
struct ClassAssignments {
  std::vector<double> recall;
  std::vector<double> precision;
};

/// Throws DegenerateEvidence when either diagonal sums to zero.
ClassAssignments class_assignments(const RatioMatrices& rm);

/// How the product masses R_i S_i are normalized.
///  - conflict: divide by 1 - sum_j R_j S_j, as used by the distributed transfer method
///  - textbook: divide by sum_j R_j S_j (Dempster's rule for Bayesian masses)
enum class CombineMode { conflict, textbook };

/// Lower clamp for the combination denominator.
inline constexpr double kCombineEpsilon = 1e-12;

struct AssignmentVector {
  std::vector<double> masses;
  /// Set when the unclamped denominator was <= 0 (conflict mode: R and S
  /// agree totally on one class).
  bool near_total_agreement = false;
};

AssignmentVector dempster_combine(std::span<const double> recall, std::span<const double> precision,
                                  CombineMode mode = CombineMode::conflict);

/// Every intermediate of one basic probability assignment.
struct BpaResult {
  ConfusionMatrix confusion{2};
  RatioMatrices ratios;
  ClassAssignments assignments;
  AssignmentVector theta;
  bool degenerate = false;
};

/// Confusion matrix to assignment vector. A degenerate matrix yields an
/// all-zero theta with `degenerate` set instead of throwing.
BpaResult bpa_from_confusion(const ConfusionMatrix& cm, CombineMode mode = CombineMode::conflict);

/// Runs `classifier` over `data` and assigns from the resulting confusion matrix.
BpaResult bpa(const Network& classifier, const LabelledDataset& data, CombineMode mode = CombineMode::conflict);

enum class CostScaling { none, max };

/// gamma_k = ||theta_k||_2; with CostScaling::max every gamma is divided by
/// the largest one (left at zero when all are zero).
std::vector<double> filter_costs(std::span<const AssignmentVector> assignments, CostScaling scaling = CostScaling::none);

double filter_cost(const AssignmentVector& assignment);

}  // namespace dtl

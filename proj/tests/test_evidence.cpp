#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dtl/error.hpp"
#include "dtl/evidence.hpp"
#include "support.hpp"

using namespace dtl;
using dtl::testing::diagonals_nonzero;
using dtl::testing::oracle_bpa;
using dtl::testing::random_counts;

namespace {

ConfusionMatrix cm2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return ConfusionMatrix(2, {a, b, c, d});
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

TEST(ConfusionMatrix, CountsPairs) {
  const std::vector<std::size_t> labels{0, 1}, preds{0, 1};
  EXPECT_EQ(confusion_matrix(preds, labels, 2), cm2(1, 0, 0, 1));
  const std::vector<std::size_t> l2{0, 0}, p2{1, 1};
  EXPECT_EQ(confusion_matrix(p2, l2, 2), cm2(0, 2, 0, 0));
}

TEST(ConfusionMatrix, MatchesTallyOnRandomStream) {
  Rng rng(1);
  std::vector<std::size_t> labels(200), preds(200);
  for (std::size_t t = 0; t < 200; ++t) {
    labels[t] = rng.below(4);
    preds[t] = rng.below(4);
  }
  const auto cm = confusion_matrix(preds, labels, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      std::uint64_t n = 0;
      for (std::size_t t = 0; t < 200; ++t) n += labels[t] == i && preds[t] == j;
      EXPECT_EQ(cm(i, j), n);
    }
  EXPECT_EQ(cm.total(), 200u);
}

TEST(ConfusionMatrix, RejectsBadInput) {
  const std::vector<std::size_t> a{0, 1}, b{0}, c{0, 2};
  EXPECT_THROW(confusion_matrix(a, b, 2), InvalidArgument);
  EXPECT_THROW(confusion_matrix(a, c, 2), InvalidArgument);
  EXPECT_THROW(confusion_matrix(std::vector<std::size_t>{}, std::vector<std::size_t>{}, 2), InvalidArgument);
  EXPECT_THROW(ConfusionMatrix(2, {0, 0, 0, 0}).validate(), InvalidArgument);
}

TEST(RatioMatrices, Examples) {
  const auto perfect = ratio_matrices(cm2(5, 0, 0, 5));
  EXPECT_EQ(perfect.recall, (std::vector<double>{1, 0, 0, 1}));
  EXPECT_EQ(perfect.precision, (std::vector<double>{1, 0, 0, 1}));

  const auto rm = ratio_matrices(cm2(3, 1, 2, 4));
  const std::vector<double> r{0.6, 0.2, 0.4, 0.8}, s{0.75, 0.25, 1.0 / 3, 2.0 / 3};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(rm.recall[k], r[k], 1e-15);
    EXPECT_NEAR(rm.precision[k], s[k], 1e-15);
  }

  const auto zero_col = ratio_matrices(cm2(3, 0, 2, 0));
  EXPECT_EQ(zero_col.r(0, 1), 0.0);
  EXPECT_EQ(zero_col.r(1, 1), 0.0);
}

TEST(RatioMatrices, ColumnsAndRowsSumToOneOrZero) {
  Rng rng(2);
  for (int k = 0; k < 500; ++k) {
    const std::size_t c = 2 + rng.below(4);
    const auto counts = random_counts(rng, c, 3);
    if (std::all_of(counts.begin(), counts.end(), [](auto n) { return n == 0; })) continue;
    const auto rm = ratio_matrices(ConfusionMatrix(c, counts));
    for (std::size_t a = 0; a < c; ++a) {
      double col = 0.0, row = 0.0;
      for (std::size_t b = 0; b < c; ++b) {
        col += rm.r(b, a);
        row += rm.s(a, b);
      }
      EXPECT_TRUE(col == 0.0 || std::abs(col - 1.0) < 1e-12);
      EXPECT_TRUE(row == 0.0 || std::abs(row - 1.0) < 1e-12);
    }
  }
}

TEST(ClassAssignments, Examples) {
  const auto id = class_assignments(ratio_matrices(cm2(5, 0, 0, 5)));
  EXPECT_EQ(id.recall, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(id.precision, (std::vector<double>{0.5, 0.5}));

  const auto a = class_assignments(ratio_matrices(cm2(3, 1, 2, 4)));
  EXPECT_NEAR(a.recall[0], 0.6 / 1.4, 1e-12);
  EXPECT_NEAR(a.recall[1], 0.8 / 1.4, 1e-12);
  EXPECT_NEAR(a.precision[0], 0.75 / (0.75 + 2.0 / 3), 1e-12);
  EXPECT_NEAR(a.recall[0], 0.4286, 1e-4);
  EXPECT_NEAR(a.precision[0], 0.5294, 1e-4);
  EXPECT_NEAR(a.precision[1], 0.4706, 1e-4);

  EXPECT_THROW(class_assignments(ratio_matrices(cm2(0, 3, 4, 0))), DegenerateEvidence);
}

TEST(ClassAssignments, SumToOne) {
  Rng rng(3);
  for (int k = 0; k < 2000; ++k) {
    const std::size_t c = 2 + rng.below(4);
    const auto counts = random_counts(rng, c);
    if (!diagonals_nonzero(counts, c)) continue;
    const auto a = class_assignments(ratio_matrices(ConfusionMatrix(c, counts)));
    EXPECT_NEAR(std::accumulate(a.recall.begin(), a.recall.end(), 0.0), 1.0, 1e-12);
    EXPECT_NEAR(std::accumulate(a.precision.begin(), a.precision.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(DempsterCombine, Examples) {
  const std::vector<double> half{0.5, 0.5};
  EXPECT_EQ(dempster_combine(half, half).masses, half);

  const std::vector<double> r{1, 0}, s{0, 1};
  const auto conflict = dempster_combine(r, s);
  EXPECT_EQ(conflict.masses, (std::vector<double>{0, 0}));
  EXPECT_FALSE(conflict.near_total_agreement);

  const std::vector<double> R{0.6 / 1.4, 0.8 / 1.4};
  const std::vector<double> S{0.75 / (0.75 + 2.0 / 3), (2.0 / 3) / (0.75 + 2.0 / 3)};
  const auto m = dempster_combine(R, S);
  EXPECT_NEAR(m.masses[0], 0.4501, 1e-4);
  EXPECT_NEAR(m.masses[1], 0.5333, 1e-4);
}

TEST(DempsterCombine, TotalAgreementIsFlaggedAndClamped) {
  const std::vector<double> one{1, 0};
  const auto m = dempster_combine(one, one);
  EXPECT_TRUE(m.near_total_agreement);
  EXPECT_EQ(m.masses[0], 1.0 / kCombineEpsilon);
  EXPECT_EQ(m.masses[1], 0.0);
}

TEST(DempsterCombine, TextbookModeNormalizesToOne) {
  const std::vector<double> R{0.2, 0.3, 0.5}, S{0.6, 0.1, 0.3};
  const auto m = dempster_combine(R, S, CombineMode::textbook);
  EXPECT_NEAR(std::accumulate(m.masses.begin(), m.masses.end(), 0.0), 1.0, 1e-15);
  const double agree = 0.12 + 0.03 + 0.15;
  EXPECT_NEAR(m.masses[2], 0.15 / agree, 1e-15);
}

TEST(DempsterCombine, RejectsUnnormalizedInput) {
  const std::vector<double> a{0.5, 0.6}, b{0.5, 0.5}, c{1.0};
  EXPECT_THROW(dempster_combine(a, b), InvalidArgument);
  EXPECT_THROW(dempster_combine(b, c), InvalidArgument);
}

TEST(Bpa, FixturesAndCosts) {
  const auto perfect = bpa_from_confusion(cm2(5, 0, 0, 5));
  EXPECT_EQ(perfect.theta.masses, (std::vector<double>{0.5, 0.5}));
  EXPECT_NEAR(filter_cost(perfect.theta), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(filter_cost(perfect.theta), 0.7071, 1e-4);

  const auto mixed = bpa_from_confusion(cm2(3, 1, 2, 4));
  EXPECT_NEAR(filter_cost(mixed.theta), 0.6979, 1e-4);

  const auto degenerate = bpa_from_confusion(cm2(0, 5, 5, 0));
  EXPECT_TRUE(degenerate.degenerate);
  EXPECT_EQ(degenerate.theta.masses, (std::vector<double>{0, 0}));
  EXPECT_EQ(filter_cost(degenerate.theta), 0.0);
}

TEST(Bpa, MatchesIndependentOracle) {
  Rng rng(4);
  for (int k = 0; k < 5000; ++k) {
    const std::size_t c = 2 + rng.below(4);
    const auto counts = random_counts(rng, c);
    const bool textbook = k % 2 == 1;
    const auto got = bpa_from_confusion(ConfusionMatrix(c, counts),
                                        textbook ? CombineMode::textbook : CombineMode::conflict);
    const auto want = oracle_bpa(counts, c, textbook);
    for (std::size_t i = 0; i < c; ++i) ASSERT_NEAR(got.theta.masses[i], want.theta[i], 1e-10);
    ASSERT_NEAR(filter_cost(got.theta), want.gamma, 1e-10);
  }
}

TEST(Bpa, ScaleInvariance) {
  Rng rng(5);
  for (int k = 0; k < 2000; ++k) {
    const std::size_t c = 2 + rng.below(4);
    const auto counts = random_counts(rng, c);
    if (!diagonals_nonzero(counts, c)) continue;
    const auto base = bpa_from_confusion(ConfusionMatrix(c, counts));
    for (std::uint64_t s : {2u, 3u, 7u}) {
      auto scaled = counts;
      for (auto& n : scaled) n *= s;
      const auto b = bpa_from_confusion(ConfusionMatrix(c, scaled));
      for (std::size_t i = 0; i < c; ++i) {
        EXPECT_NEAR(b.assignments.recall[i], base.assignments.recall[i], 1e-12);
        EXPECT_NEAR(b.assignments.precision[i], base.assignments.precision[i], 1e-12);
        EXPECT_NEAR(b.theta.masses[i], base.theta.masses[i], 1e-12);
      }
      EXPECT_NEAR(filter_cost(b.theta), filter_cost(base.theta), 1e-12);
    }
  }
}

TEST(Bpa, PermutationEquivariance) {
  Rng rng(6);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t c = 2 + rng.below(4);
    const auto counts = random_counts(rng, c);
    if (!diagonals_nonzero(counts, c)) continue;
    std::vector<std::size_t> perm(c);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<std::uint64_t> permuted(c * c);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) permuted[perm[i] * c + perm[j]] = counts[i * c + j];
    const auto a = bpa_from_confusion(ConfusionMatrix(c, counts));
    const auto b = bpa_from_confusion(ConfusionMatrix(c, permuted));
    for (std::size_t i = 0; i < c; ++i) EXPECT_NEAR(b.theta.masses[perm[i]], a.theta.masses[i], 1e-12);
    EXPECT_NEAR(filter_cost(b.theta), filter_cost(a.theta), 1e-12);
  }
}

TEST(Bpa, RaisingADiagonalEntryDoesNotLowerItsMass) {
  Rng rng(7);
  for (int k = 0; k < 2000; ++k) {
    const std::size_t c = 2 + rng.below(4);
    auto counts = random_counts(rng, c);
    if (!diagonals_nonzero(counts, c)) continue;
    const std::size_t i = rng.below(c);
    const auto before = bpa_from_confusion(ConfusionMatrix(c, counts));
    if (before.theta.near_total_agreement) continue;
    counts[i * c + i] += 1 + rng.below(10);
    const auto after = bpa_from_confusion(ConfusionMatrix(c, counts));
    if (after.theta.near_total_agreement) continue;
    EXPECT_GE(after.theta.masses[i], before.theta.masses[i] - 1e-12);
  }
}

TEST(Bpa, MassesAreFiniteAndNonNegative) {
  Rng rng(8);
  for (int k = 0; k < 2000; ++k) {
    const std::size_t c = 2 + rng.below(4);
    const auto counts = random_counts(rng, c, 1 + rng.below(20));
    bool any = false;
    for (auto n : counts) any = any || n > 0;
    if (!any) continue;
    const auto b = bpa_from_confusion(ConfusionMatrix(c, counts));
    for (double m : b.theta.masses) {
      EXPECT_GE(m, 0.0);
      EXPECT_TRUE(std::isfinite(m));
    }
    const double gamma = filter_cost(b.theta);
    const bool all_zero = std::all_of(b.theta.masses.begin(), b.theta.masses.end(), [](double m) { return m == 0.0; });
    EXPECT_EQ(gamma == 0.0, all_zero);
  }
}

TEST(FilterCosts, NormAndMaxRescaling) {
  std::vector<AssignmentVector> v{{{0.5, 0.5}, false}, {{0, 0}, false}, {{0.3, 0.4}, false}};
  const auto plain = filter_costs(v);
  EXPECT_NEAR(plain[0], norm({0.5, 0.5}), 1e-15);
  EXPECT_EQ(plain[1], 0.0);
  EXPECT_NEAR(plain[2], 0.5, 1e-15);
  const auto scaled = filter_costs(v, CostScaling::max);
  EXPECT_EQ(scaled[0], 1.0);
  EXPECT_EQ(scaled[1], 0.0);
  EXPECT_NEAR(scaled[2], 0.5 / norm({0.5, 0.5}), 1e-15);

  std::vector<AssignmentVector> zeros{{{0, 0}, false}};
  EXPECT_EQ(filter_costs(zeros, CostScaling::max), std::vector<double>{0.0});
}

TEST(Bpa, PerfectClassifierOnBalancedData) {
  Tensor images({4, 1, 1, 2}, std::vector<double>{1, 0, 0, 1, 1, 0, 0, 1});
  const LabelledDataset data(std::move(images), {0, 1, 0, 1}, 2);
  Network net({1, 1, 2});
  net.flatten().dense(2).softmax();
  net.layer(1).params.weights = Tensor({2, 2}, std::vector<double>{1, 0, 0, 1});
  const auto b = bpa(net, data);
  EXPECT_EQ(b.theta.masses, (std::vector<double>{0.5, 0.5}));

  // Swapped weights: never correct.
  net.layer(1).params.weights = Tensor({2, 2}, std::vector<double>{0, 1, 1, 0});
  const auto d = bpa(net, data);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.theta.masses, (std::vector<double>{0, 0}));
}

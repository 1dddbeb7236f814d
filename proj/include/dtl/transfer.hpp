#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtl/dataset.hpp"
#include "dtl/evidence.hpp"
#include "dtl/network.hpp"
#include "dtl/training.hpp"

namespace dtl {

enum class Strategy { standard, distributed };
enum class BpaSource { train, train_validation };

std::string to_string(Strategy s);
std::string to_string(BpaSource s);

struct TransferConfig {
  Strategy strategy = Strategy::distributed;
  /// Standard strategy: layers [0, freeze_depth) keep their primary values.
  std::size_t freeze_depth = 1;
  /// Distributed strategy: costs are recomputed at epochs 0, r, 2r, ...
  std::size_t bpa_refresh_epochs = 1;
  BpaSource bpa_source = BpaSource::train;
  CombineMode combine = CombineMode::conflict;
  CostScaling cost_scaling = CostScaling::none;
  /// Head-only epochs (transferred filter frozen, unit cost) run on every
  /// single-filter net before its first assignment.
  std::size_t warmup_epochs = 0;
  HyperParams hp;
  /// Joint head trained by reassemble.
  HyperParams head_hp{0.01, 64, 10, 0};
  /// Replaces assignment-derived costs (one per filter) when set.
  std::optional<std::vector<double>> forced_gammas;

  void validate() const;
};

/// One transferred filter with its own classifier head and current cost.
struct SingleFilterNet {
  std::size_t filter_index = 0;
  Network net;
  double gamma = 1.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_error = 0.0;
  double test_error = 0.0;
};

struct TransferReport {
  Strategy strategy = Strategy::distributed;
  /// Standard: the target network after each epoch. Distributed: the mean
  /// over single-filter nets after each fine-tuning epoch.
  std::vector<EpochRecord> epochs;
  /// gamma_history[k][r] is filter k's cost at refresh r.
  std::vector<std::vector<double>> gamma_history;
  std::vector<double> final_gammas;
  /// Errors of the returned target network.
  double train_error = 0.0;
  double test_error = 0.0;
  double wall_seconds = 0.0;
  TransferConfig config;
};

struct TargetData {
  LabelledDataset train;
  LabelledDataset validation;
  LabelledDataset test;
};

/// Splits the first conv layer of `primary` into d single-filter nets. Each
/// copies one filter and the layers after the conv stack are freshly
/// initialized, ending in a dense softmax head over `target_classes`.
std::vector<SingleFilterNet> decompose(const Network& primary, std::size_t target_classes, std::uint64_t seed);

/// Seed used for net k's mini-batch order during fine-tuning.
std::uint64_t finetune_seed(std::uint64_t seed, std::size_t filter_index);

/// Cost applied to a net with the given assignment: zero for degenerate or
/// saturated evidence, otherwise ||theta||_2.
double cost_from_bpa(const BpaResult& bpa);

/// Assignment and cost of every single-filter net on `data`.
struct FilterEvidence {
  std::vector<BpaResult> bpa;
  std::vector<double> gammas;
};

FilterEvidence assess_filters(const std::vector<SingleFilterNet>& nets, const LabelledDataset& data, CombineMode combine,
                              CostScaling scaling);

struct FinetuneResult {
  std::vector<SingleFilterNet> nets;
  TransferReport report;
};

/// Cost-scaled SGD on every single-filter net. Nets train independently
/// (and in parallel) between cost refreshes. `monitor`, when given, is the
/// held-out set for per-epoch errors; otherwise the validation split is used.
FinetuneResult distributed_finetune(std::vector<SingleFilterNet> nets, const LabelledDataset& train,
                                    const LabelledDataset& validation, const TransferConfig& cfg,
                                    const LabelledDataset* monitor = nullptr);

/// Stacks the filters (in filter_index order) into one frozen conv layer,
/// attaches a fresh head and trains it on `train`.
Network reassemble(std::vector<SingleFilterNet> nets, const LabelledDataset& train, const HyperParams& head_hp);

/// Copy of `primary` with a fresh final dense layer over `target_classes` and
/// layers below `freeze_depth` frozen.
Network prepare_standard(const Network& primary, std::size_t target_classes, std::size_t freeze_depth,
                         std::uint64_t seed);

struct TransferResult {
  Network network;
  TransferReport report;
};

TransferResult standard_transfer(const Network& primary, const LabelledDataset& train, const TransferConfig& cfg,
                                 const LabelledDataset* monitor = nullptr);

/// Dispatches on cfg.strategy. Final errors are measured on target.train and target.test.
TransferResult transfer(const Network& primary, const TargetData& target, const TransferConfig& cfg);

}  // namespace dtl

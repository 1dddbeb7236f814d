#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtl/checkpoint.hpp"
#include "dtl/config.hpp"
#include "dtl/dataset.hpp"
#include "dtl/report.hpp"
#include "dtl/synthetic.hpp"
#include "dtl/transfer.hpp"

namespace dtl {

/// Where one side of an experiment gets its images. Keys live under the
/// `primary.` or `target.` prefix.
struct DatasetSource {
  std::string name;
  enum class Kind { idx, synthetic } kind = Kind::synthetic;
  std::filesystem::path images;
  std::filesystem::path labels;
  /// Keep samples [first, second) of an IDX file.
  std::optional<std::pair<std::size_t, std::size_t>> range;
  SyntheticSpec synthetic;
  bool invert = false;
  SplitFractions split;
};

struct ExperimentConfig {
  Config source;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  ReportFormat format = ReportFormat::text;

  DatasetSource primary;
  DatasetSource target;

  std::size_t filters = 20;
  std::size_t kernel = 5;
  std::size_t pool = 2;
  HyperParams primary_hp;
  TransferConfig transfer;
  /// Epochs for the standard strategy. Defaults to the distributed
  /// strategy's total passes (warm-up + fine-tuning + head).
  std::size_t standard_epochs = 0;
  std::filesystem::path primary_checkpoint;

  /// Relative paths resolve against `base_dir`. `seed_override` replaces the
  /// `seed` key (as the CLI --seed flag does).
  static ExperimentConfig from_config(const Config& cfg, const std::filesystem::path& base_dir = ".",
                                      std::optional<std::uint64_t> seed_override = std::nullopt);

  /// Stream seeds derived from `seed`.
  std::uint64_t primary_init_seed() const;
  std::uint64_t primary_split_seed() const;
  std::uint64_t target_split_seed() const;
};

LabelledDataset resolve_dataset(const DatasetSource& source);

/// Channel adapters then centered pad/crop so `ds` fits `input_shape`.
LabelledDataset adapt_to(const LabelledDataset& ds, const Shape& input_shape);

/// conv(filters, kernel) -> ReLU -> maxpool(pool) -> flatten -> dense(classes) -> softmax.
Network reference_primary(const Shape& input_shape, std::size_t filters, std::size_t kernel, std::size_t pool,
                          std::size_t classes);

struct PrimaryOutcome {
  Network network;
  BaselineRow row;
};

/// Trains the reference network on the primary dataset's train split and
/// measures train/test error. No files are written.
PrimaryOutcome train_primary(const ExperimentConfig& cfg);

/// Target dataset adapted to `input_shape` and split.
TargetData prepare_target(const ExperimentConfig& cfg, const Shape& input_shape);

struct TransferOutcome {
  std::vector<ComparisonRow> rows;
  std::vector<TransferResult> results;
};

TransferOutcome run_transfer(const ExperimentConfig& cfg, const Network& primary, const std::vector<Strategy>& strategies);

/// Single-filter assignments as the distributed strategy computes them at
/// its first refresh (after any head warm-up).
FilterEvidence inspect_filters(const ExperimentConfig& cfg, const Network& primary);

// The cmd_* entry points add checkpoint and report I/O under cfg.out_dir.

PrimaryOutcome cmd_train_primary(const ExperimentConfig& cfg);
TransferOutcome cmd_transfer(const ExperimentConfig& cfg, const std::vector<Strategy>& strategies);

}  // namespace dtl

#include "dtl/experiment.hpp"

#include <fstream>

#include "dtl/error.hpp"
#include "dtl/idx.hpp"
#include "dtl/rng.hpp"

namespace dtl {

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

SplitFractions parse_split(const Config& cfg, const std::string& key, SplitFractions fallback) {
  if (!cfg.has(key)) return fallback;
  const auto v = cfg.get_double_list(key);
  if (v.size() != 3) throw ConfigError("key '" + key + "' needs three fractions train,validation,test");
  return {v[0], v[1], v[2]};
}

DatasetSource parse_source(const Config& cfg, const std::string& prefix, const std::filesystem::path& base,
                           std::uint64_t seed, SplitFractions default_split) {
  DatasetSource src;
  const std::string kind = cfg.get_string(prefix + "source", "synthetic");
  src.name = cfg.get_string(prefix + "name", prefix.substr(0, prefix.size() - 1));
  if (kind == "idx") {
    src.kind = DatasetSource::Kind::idx;
    src.images = resolve_path(base, cfg.require_string(prefix + "images"));
    src.labels = resolve_path(base, cfg.require_string(prefix + "labels"));
    if (cfg.has(prefix + "range")) {
      const auto r = cfg.get_size_list(prefix + "range");
      if (r.size() != 2 || r[0] >= r[1]) throw ConfigError("key '" + prefix + "range' needs begin,end with begin < end");
      src.range = std::make_pair(r[0], r[1]);
    }
  } else if (kind == "synthetic") {
    src.kind = DatasetSource::Kind::synthetic;
    auto& s = src.synthetic;
    s.patterns = cfg.get_list(prefix + "patterns");
    s.samples_per_class = cfg.get_size_list(prefix + "samples_per_class");
    if (s.samples_per_class.size() == 1 && s.patterns.size() > 1) {
      s.samples_per_class.assign(s.patterns.size(), s.samples_per_class[0]);
    }
    s.image_size = cfg.get_size(prefix + "image_size", 28);
    s.noise_level = cfg.get_double(prefix + "noise", 0.05);
    s.domain_shift = cfg.get_double(prefix + "shift", 0.0);
    s.seed = cfg.get_u64(prefix + "seed", seed);
    try {
      s.validate();
    } catch (const Error& e) {
      throw ConfigError(prefix + "*: " + e.what());
    }
  } else {
    throw ConfigError("key '" + prefix + "source' must be idx or synthetic, got '" + kind + "'");
  }
  src.invert = cfg.get_bool(prefix + "invert", false);
  src.split = parse_split(cfg, prefix + "split", default_split);
  return src;
}

CombineMode parse_combine(const std::string& v) {
  if (v == "conflict" || v == "paper") return CombineMode::conflict;
  if (v == "textbook") return CombineMode::textbook;
  throw ConfigError("transfer.combine must be conflict or textbook, got '" + v + "'");
}

CostScaling parse_scaling(const std::string& v) {
  if (v == "none") return CostScaling::none;
  if (v == "max") return CostScaling::max;
  throw ConfigError("transfer.cost_scaling must be none or max, got '" + v + "'");
}

BpaSource parse_bpa_source(const std::string& v) {
  if (v == "train") return BpaSource::train;
  if (v == "train+validation") return BpaSource::train_validation;
  throw ConfigError("transfer.bpa_source must be train or train+validation, got '" + v + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& cfg, const std::filesystem::path& base_dir,
                                               std::optional<std::uint64_t> seed_override) {
  ExperimentConfig x;
  x.source = cfg;
  if (seed_override) x.source.set("seed", std::to_string(*seed_override));
  x.seed = x.source.get_u64("seed", 0);
  x.out_dir = resolve_path(base_dir, x.source.get_string("out", "out"));
  x.format = parse_report_format(x.source.get_string("format", "text"));

  x.primary = parse_source(x.source, "primary.", base_dir, derive_seed(x.seed, 31), {0.8, 0.0, 0.2});
  x.target = parse_source(x.source, "target.", base_dir, derive_seed(x.seed, 32), {0.6, 0.2, 0.2});

  x.filters = x.source.get_size("arch.filters", 20);
  x.kernel = x.source.get_size("arch.kernel", 5);
  x.pool = x.source.get_size("arch.pool", 2);

  x.primary_hp.eta = x.source.get_double("train.eta", 0.01);
  x.primary_hp.batch_size = x.source.get_size("train.batch_size", 64);
  x.primary_hp.epochs = x.source.get_size("train.epochs", 30);
  x.primary_hp.seed = derive_seed(x.seed, 13);

  auto& t = x.transfer;
  t.hp.eta = x.source.get_double("transfer.eta", 0.01);
  t.hp.batch_size = x.source.get_size("transfer.batch_size", 64);
  t.hp.epochs = x.source.get_size("transfer.epochs", 30);
  t.hp.seed = derive_seed(x.seed, 22);
  t.head_hp.eta = x.source.get_double("transfer.head_eta", t.hp.eta);
  t.head_hp.batch_size = x.source.get_size("transfer.head_batch_size", t.hp.batch_size);
  t.head_hp.epochs = x.source.get_size("transfer.head_epochs", 10);
  t.head_hp.seed = derive_seed(x.seed, 23);
  t.freeze_depth = x.source.get_size("transfer.freeze_depth", 1);
  t.bpa_refresh_epochs = x.source.get_size("transfer.bpa_refresh_epochs", 1);
  t.bpa_source = parse_bpa_source(x.source.get_string("transfer.bpa_source", "train"));
  t.combine = parse_combine(x.source.get_string("transfer.combine", "conflict"));
  t.cost_scaling = parse_scaling(x.source.get_string("transfer.cost_scaling", "none"));
  t.warmup_epochs = x.source.get_size("transfer.warmup_epochs", 0);
  x.standard_epochs =
      x.source.get_size("transfer.standard_epochs", t.warmup_epochs + t.hp.epochs + t.head_hp.epochs);
  try {
    x.primary_hp.validate();
    t.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  x.primary_checkpoint = x.source.has("primary.checkpoint")
                             ? resolve_path(base_dir, x.source.get_string("primary.checkpoint", ""))
                             : x.out_dir / "primary.ckpt";
  return x;
}

std::uint64_t ExperimentConfig::primary_init_seed() const { return derive_seed(seed, 11); }
std::uint64_t ExperimentConfig::primary_split_seed() const { return derive_seed(seed, 12); }
std::uint64_t ExperimentConfig::target_split_seed() const { return derive_seed(seed, 21); }

LabelledDataset resolve_dataset(const DatasetSource& source) {
  LabelledDataset ds;
  if (source.kind == DatasetSource::Kind::idx) {
    ds = load_idx(source.images, source.labels);
    if (source.range) {
      if (source.range->second > ds.size()) {
        throw DatasetError(source.name + ": range end " + std::to_string(source.range->second) + " exceeds " +
                           std::to_string(ds.size()) + " samples");
      }
      ds = ds.slice(source.range->first, source.range->second);
    }
  } else {
    ds = synthesize(source.synthetic);
  }
  if (source.invert) ds = invert(ds);
  return ds;
}

LabelledDataset adapt_to(const LabelledDataset& ds, const Shape& input_shape) {
  LabelledDataset out = ds;
  const std::size_t have = ds.sample_shape().at(0), want = input_shape.at(0);
  if (have != want) {
    if (have == 1 && want == 3) {
      out = gray_to_rgb(out);
    } else if (have == 3 && want == 1) {
      out = rgb_to_gray(out);
    } else {
      throw ShapeError("no channel adapter from " + std::to_string(have) + " to " + std::to_string(want) + " channels");
    }
  }
  return fit_to(out, input_shape[1], input_shape[2]);
}

Network reference_primary(const Shape& input_shape, std::size_t filters, std::size_t kernel, std::size_t pool,
                          std::size_t classes) {
  Network net(input_shape);
  net.conv2d(filters, kernel).relu().maxpool(pool).flatten().dense(classes).softmax();
  return net;
}

PrimaryOutcome train_primary(const ExperimentConfig& cfg) {
  const LabelledDataset all = resolve_dataset(cfg.primary);
  const DatasetSplit parts = split(all, cfg.primary.split, cfg.primary_split_seed());
  Network net = reference_primary(all.sample_shape(), cfg.filters, cfg.kernel, cfg.pool, all.class_count());
  net.initialize(cfg.primary_init_seed());
  net = train(std::move(net), parts.train, cfg.primary_hp);
  BaselineRow row{cfg.primary.name, 100.0 * evaluate(net, parts.train),
                  parts.test.empty() ? 0.0 : 100.0 * evaluate(net, parts.test), cfg.seed, cfg.primary_hp.epochs};
  return {std::move(net), row};
}

TargetData prepare_target(const ExperimentConfig& cfg, const Shape& input_shape) {
  const LabelledDataset all = adapt_to(resolve_dataset(cfg.target), input_shape);
  auto parts = split(all, cfg.target.split, cfg.target_split_seed());
  return {std::move(parts.train), std::move(parts.validation), std::move(parts.test)};
}

TransferOutcome run_transfer(const ExperimentConfig& cfg, const Network& primary, const std::vector<Strategy>& strategies) {
  const TargetData target = prepare_target(cfg, primary.input_shape());
  TransferOutcome out;
  for (Strategy s : strategies) {
    TransferConfig tc = cfg.transfer;
    tc.strategy = s;
    if (s == Strategy::standard) tc.hp.epochs = cfg.standard_epochs;
    auto result = transfer(primary, target, tc);
    out.rows.push_back({cfg.primary.name, cfg.target.name, s, 100.0 * result.report.train_error,
                        100.0 * result.report.test_error, cfg.seed, tc.hp.epochs});
    out.results.push_back(std::move(result));
  }
  return out;
}

FilterEvidence inspect_filters(const ExperimentConfig& cfg, const Network& primary) {
  const TargetData target = prepare_target(cfg, primary.input_shape());
  TransferConfig tc = cfg.transfer;
  tc.hp.epochs = 0;
  auto tuned = distributed_finetune(decompose(primary, target.train.class_count(), tc.hp.seed), target.train,
                                    target.validation, tc);
  const bool with_validation = tc.bpa_source == BpaSource::train_validation && !target.validation.empty();
  const LabelledDataset data = with_validation ? concatenate(target.train, target.validation) : target.train;
  return assess_filters(tuned.nets, data, tc.combine, tc.cost_scaling);
}

PrimaryOutcome cmd_train_primary(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  auto outcome = train_primary(cfg);
  save_checkpoint(outcome.network, cfg.primary_checkpoint,
                  {kCheckpointVersion, outcome.network.descriptor(), cfg.seed, cfg.source.hash(), cfg.primary_hp.epochs});
  const BaselineRow rows[] = {outcome.row};
  write_text(cfg.out_dir / "baseline.csv", format_baseline(rows, ReportFormat::csv));
  return outcome;
}

TransferOutcome cmd_transfer(const ExperimentConfig& cfg, const std::vector<Strategy>& strategies) {
  ensure_dir(cfg.out_dir);
  const Checkpoint primary = load_checkpoint(cfg.primary_checkpoint);
  auto outcome = run_transfer(cfg, primary.network, strategies);
  for (const auto& r : outcome.results) {
    save_checkpoint(r.network, cfg.out_dir / ("target-" + to_string(r.report.strategy) + ".ckpt"),
                    {kCheckpointVersion, r.network.descriptor(), cfg.seed, cfg.source.hash(), r.report.config.hp.epochs});
  }
  write_text(cfg.out_dir / "transfer.csv", format_comparison(outcome.rows, ReportFormat::csv));
  return outcome;
}

}  // namespace dtl

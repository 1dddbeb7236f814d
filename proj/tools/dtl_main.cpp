// dtl: command-line front end for the experiment runner.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dtl/checkpoint.hpp"
#include "dtl/error.hpp"
#include "dtl/experiment.hpp"
#include "dtl/idx.hpp"
#include "dtl/training.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "Experiment config file")->required();
  app->add_option("--seed", f.seed, "Override the config seed");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--format", f.format, "Report format")->check(CLI::IsMember({"text", "csv"}));
}

dtl::ExperimentConfig load(const CommonFlags& f) {
  const fs::path path = f.config;
  dtl::Config cfg = dtl::Config::load(path);
  if (!f.out.empty()) cfg.set("out", fs::absolute(f.out).string());
  if (!f.format.empty()) cfg.set("format", f.format);
  // Relative paths inside a config resolve against the working directory.
  return dtl::ExperimentConfig::from_config(cfg, fs::current_path(), f.seed);
}

std::vector<dtl::Strategy> strategies_for(const std::string& name) {
  if (name == "standard") return {dtl::Strategy::standard};
  if (name == "distributed") return {dtl::Strategy::distributed};
  return {dtl::Strategy::standard, dtl::Strategy::distributed};
}

void save_side(const dtl::DatasetSource& src, const fs::path& dir) {
  const auto ds = dtl::resolve_dataset(src);
  const std::string stem = src.name;
  dtl::save_idx(ds, dir / (stem + "-images.idx"), dir / (stem + "-labels.idx"));
  std::cout << "wrote " << (dir / (stem + "-images.idx")).string() << " (" << ds.size() << " samples, "
            << ds.class_count() << " classes)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed transfer learning for small convolutional networks"};
  app.require_subcommand(1);

  CommonFlags train_flags, transfer_flags, eval_flags, inspect_flags, synth_flags;

  auto* train = app.add_subcommand("train-primary", "Train the primary network and write its checkpoint");
  add_common(train, train_flags);

  auto* transfer = app.add_subcommand("transfer", "Transfer the primary network to the target dataset");
  add_common(transfer, transfer_flags);
  std::string strategy = "both";
  transfer->add_option("--strategy", strategy, "standard, distributed or both")
      ->check(CLI::IsMember({"standard", "distributed", "both"}));

  auto* eval = app.add_subcommand("evaluate", "Report train/test error of a checkpoint");
  add_common(eval, eval_flags);
  std::string checkpoint, side = "primary";
  eval->add_option("--checkpoint", checkpoint, "Checkpoint (default: primary.ckpt or target-distributed.ckpt)");
  eval->add_option("--dataset", side, "primary or target")->check(CLI::IsMember({"primary", "target"}));

  auto* inspect = app.add_subcommand("bpa-inspect", "Dump per-filter evidence on the target train split");
  add_common(inspect, inspect_flags);
  std::string inspect_checkpoint;
  inspect->add_option("--checkpoint", inspect_checkpoint, "Checkpoint (default: the primary checkpoint)");

  auto* synth = app.add_subcommand("synth-gen", "Write the configured synthetic datasets as IDX files");
  add_common(synth, synth_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*train) {
      const auto cfg = load(train_flags);
      const auto outcome = dtl::cmd_train_primary(cfg);
      const dtl::BaselineRow rows[] = {outcome.row};
      std::cout << dtl::format_baseline(rows, cfg.format);
    } else if (*transfer) {
      const auto cfg = load(transfer_flags);
      const auto outcome = dtl::cmd_transfer(cfg, strategies_for(strategy));
      std::cout << dtl::format_comparison(outcome.rows, cfg.format);
    } else if (*eval) {
      const auto cfg = load(eval_flags);
      fs::path path = checkpoint;
      if (path.empty()) path = side == "primary" ? cfg.primary_checkpoint : cfg.out_dir / "target-distributed.ckpt";
      const auto ckpt = dtl::load_checkpoint(path);
      const auto& net = ckpt.network;
      dtl::DatasetSplit parts;
      std::string name;
      if (side == "primary") {
        const auto all = dtl::adapt_to(dtl::resolve_dataset(cfg.primary), net.input_shape());
        parts = dtl::split(all, cfg.primary.split, cfg.primary_split_seed());
        name = cfg.primary.name;
      } else {
        auto t = dtl::prepare_target(cfg, net.input_shape());
        parts = {std::move(t.train), std::move(t.validation), std::move(t.test)};
        name = cfg.target.name;
      }
      const dtl::BaselineRow rows[] = {{name, 100.0 * dtl::evaluate(net, parts.train),
                                        parts.test.empty() ? 0.0 : 100.0 * dtl::evaluate(net, parts.test),
                                        ckpt.info.seed, ckpt.info.epoch}};
      std::cout << dtl::format_baseline(rows, cfg.format);
    } else if (*inspect) {
      const auto cfg = load(inspect_flags);
      const auto ckpt =
          dtl::load_checkpoint(inspect_checkpoint.empty() ? cfg.primary_checkpoint : fs::path(inspect_checkpoint));
      const auto ev = dtl::inspect_filters(cfg, ckpt.network);
      std::cout << dtl::format_bpa_inspect(ev.bpa, ev.gammas, cfg.format);
    } else if (*synth) {
      const auto cfg = load(synth_flags);
      fs::create_directories(cfg.out_dir);
      bool any = false;
      for (const auto* src : {&cfg.primary, &cfg.target}) {
        if (src->kind != dtl::DatasetSource::Kind::synthetic) continue;
        save_side(*src, cfg.out_dir);
        any = true;
      }
      if (!any) throw dtl::ConfigError("neither primary nor target is a synthetic source");
    }
  } catch (const dtl::Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

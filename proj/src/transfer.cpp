#include "dtl/transfer.hpp"

#include <algorithm>
#include <chrono>
#include <exception>

#include "dtl/error.hpp"
#include "dtl/rng.hpp"

namespace dtl {

std::string to_string(Strategy s) { return s == Strategy::standard ? "standard" : "distributed"; }

std::string to_string(BpaSource s) { return s == BpaSource::train ? "train" : "train+validation"; }

void TransferConfig::validate() const {
  hp.validate();
  head_hp.validate();
  if (bpa_refresh_epochs == 0) throw InvalidArgument("bpa_refresh_epochs must be at least 1");
  if (forced_gammas) {
    for (double g : *forced_gammas) {
      if (!(g >= 0.0)) throw InvalidArgument("forced costs must be non-negative");
    }
  }
}

namespace {

// Re-creates `src` layer by layer with the conv at `conv_index` resized to
// `conv_filters` output filters and the last dense layer resized to
// `classes` units. Parameters are left zeroed.
Network rebuild(const Network& src, std::size_t conv_index, std::size_t conv_filters, std::size_t classes) {
  Network out(src.input_shape());
  const std::size_t head = src.last_dense();
  for (std::size_t i = 0; i < src.depth(); ++i) {
    const Layer& l = src.layer(i);
    switch (l.kind) {
      case LayerKind::conv2d: out.conv2d(i == conv_index ? conv_filters : l.size, l.kernel); break;
      case LayerKind::relu: out.relu(); break;
      case LayerKind::maxpool: out.maxpool(l.size); break;
      case LayerKind::flatten: out.flatten(); break;
      case LayerKind::dense: out.dense(i == head ? classes : l.size); break;
      case LayerKind::softmax: out.softmax(); break;
    }
  }
  return out;
}

template <typename Body>
void parallel_over(std::size_t n, Body body) {
  std::exception_ptr failure;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < count; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
#pragma omp critical(dtl_transfer_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void check_target(const Network& net, const LabelledDataset& data, const char* what) {
  if (data.empty()) throw DatasetError(std::string(what) + " set is empty");
  if (data.class_count() != net.class_count()) {
    throw InvalidArgument(std::string(what) + " set has " + std::to_string(data.class_count()) +
                          " classes but the network has " + std::to_string(net.class_count()));
  }
  if (data.sample_shape() != net.input_shape()) {
    throw ShapeError(std::string(what) + " samples are " + shape_string(data.sample_shape()) +
                     " but the network expects " + shape_string(net.input_shape()));
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::uint64_t finetune_seed(std::uint64_t seed, std::size_t filter_index) { return derive_seed(seed, 1000 + filter_index); }

double cost_from_bpa(const BpaResult& bpa) {
  if (bpa.degenerate || bpa.theta.near_total_agreement) return 0.0;
  return filter_cost(bpa.theta);
}

std::vector<SingleFilterNet> decompose(const Network& primary, std::size_t target_classes, std::uint64_t seed) {
  const std::size_t conv = primary.first_conv();
  if (conv == primary.depth()) throw InvalidArgument("primary network has no conv layer to decompose");
  if (primary.last_dense() == primary.depth() || primary.last_dense() < conv) {
    throw InvalidArgument("primary network has no dense head after its conv layer");
  }
  if (target_classes < 2) throw InvalidArgument("target needs at least 2 classes");
  const Layer& source = primary.layer(conv);
  const std::size_t d = source.size;
  const std::size_t per_filter = source.in_shape[0] * source.kernel * source.kernel;

  std::vector<SingleFilterNet> nets;
  nets.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    SingleFilterNet sf{k, rebuild(primary, conv, 1, target_classes), 1.0};
    // layers below the split conv are shared verbatim
    for (std::size_t i = 0; i < conv; ++i) sf.net.layer(i).params = primary.layer(i).params;
    Layer& target = sf.net.layer(conv);
    std::copy_n(source.params.weights.data() + k * per_filter, per_filter, target.params.weights.data());
    target.params.biases[0] = source.params.biases[k];
    const std::uint64_t head_seed = derive_seed(seed, k);
    for (std::size_t i = conv + 1; i < sf.net.depth(); ++i) sf.net.initialize_layer(i, derive_seed(head_seed, i));
    nets.push_back(std::move(sf));
  }
  return nets;
}

FilterEvidence assess_filters(const std::vector<SingleFilterNet>& nets, const LabelledDataset& data, CombineMode combine,
                              CostScaling scaling) {
  if (nets.empty()) throw InvalidArgument("no single-filter nets to assess");
  FilterEvidence out;
  out.bpa.resize(nets.size());
  parallel_over(nets.size(), [&](std::size_t k) { out.bpa[k] = bpa(nets[k].net, data, combine); });
  std::vector<AssignmentVector> thetas;
  thetas.reserve(nets.size());
  for (const auto& b : out.bpa) {
    thetas.push_back(b.theta);
    // saturated or empty evidence carries no usable cost
    if (cost_from_bpa(b) == 0.0) thetas.back().masses.assign(b.theta.masses.size(), 0.0);
  }
  out.gammas = filter_costs(thetas, scaling);
  return out;
}

FinetuneResult distributed_finetune(std::vector<SingleFilterNet> nets, const LabelledDataset& train,
                                    const LabelledDataset& validation, const TransferConfig& cfg,
                                    const LabelledDataset* monitor) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  if (nets.empty()) throw InvalidArgument("no single-filter nets to fine-tune");
  for (const auto& sf : nets) check_target(sf.net, train, "target training");
  if (cfg.forced_gammas && cfg.forced_gammas->size() != nets.size()) {
    throw InvalidArgument("forced costs given for " + std::to_string(cfg.forced_gammas->size()) + " of " +
                          std::to_string(nets.size()) + " nets");
  }
  const bool use_validation = cfg.bpa_source == BpaSource::train_validation && !validation.empty();
  const LabelledDataset bpa_data = use_validation ? concatenate(train, validation) : train;
  const LabelledDataset* held_out = monitor ? monitor : (validation.empty() ? nullptr : &validation);

  const std::size_t d = nets.size();
  FinetuneResult result;
  TransferReport& report = result.report;
  report.strategy = Strategy::distributed;
  report.config = cfg;
  report.gamma_history.assign(d, {});

  std::vector<Rng> rngs;
  rngs.reserve(d);
  for (const auto& sf : nets) rngs.emplace_back(finetune_seed(cfg.hp.seed, sf.filter_index));

  if (cfg.warmup_epochs > 0) {
    parallel_over(d, [&](std::size_t k) {
      Network& net = nets[k].net;
      net.freeze_below(net.first_conv() + 1);
      for (std::size_t e = 0; e < cfg.warmup_epochs; ++e) train_epoch(net, train, cfg.hp, 1.0, rngs[k]);
      net.freeze_below(0);
    });
  }

  std::vector<double> errors_train(d), errors_test(d);
  for (std::size_t epoch = 0; epoch < cfg.hp.epochs; ++epoch) {
    if (epoch % cfg.bpa_refresh_epochs == 0) {
      const std::vector<double> gammas =
          cfg.forced_gammas ? *cfg.forced_gammas : assess_filters(nets, bpa_data, cfg.combine, cfg.cost_scaling).gammas;
      for (std::size_t k = 0; k < d; ++k) {
        nets[k].gamma = gammas[k];
        report.gamma_history[k].push_back(gammas[k]);
      }
    }

    parallel_over(d, [&](std::size_t k) {
      train_epoch(nets[k].net, train, cfg.hp, nets[k].gamma, rngs[k]);
      errors_train[k] = evaluate(nets[k].net, train);
      errors_test[k] = held_out ? evaluate(nets[k].net, *held_out) : 0.0;
    });
    EpochRecord rec{epoch + 1, 0.0, 0.0};
    for (std::size_t k = 0; k < d; ++k) {
      rec.train_error += errors_train[k] / static_cast<double>(d);
      rec.test_error += errors_test[k] / static_cast<double>(d);
    }
    report.epochs.push_back(rec);
  }

  for (const auto& sf : nets) report.final_gammas.push_back(sf.gamma);
  report.wall_seconds = seconds_since(start);
  result.nets = std::move(nets);
  return result;
}

Network reassemble(std::vector<SingleFilterNet> nets, const LabelledDataset& train, const HyperParams& head_hp) {
  if (nets.empty()) throw InvalidArgument("no single-filter nets to reassemble");
  std::sort(nets.begin(), nets.end(), [](const auto& a, const auto& b) { return a.filter_index < b.filter_index; });
  const Network& first = nets.front().net;
  const std::size_t conv = first.first_conv();
  if (conv == first.depth()) throw InvalidArgument("single-filter net has no conv layer");
  const std::string geometry = first.descriptor();
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const Network& n = nets[k].net;
    if (n.descriptor() != geometry || n.layer(conv).size != 1) {
      throw ShapeError("single-filter net " + std::to_string(nets[k].filter_index) + " has geometry " +
                       n.descriptor() + ", expected " + geometry);
    }
    if (k > 0 && nets[k].filter_index == nets[k - 1].filter_index) {
      throw InvalidArgument("duplicate filter index " + std::to_string(nets[k].filter_index));
    }
  }

  const std::size_t d = nets.size();
  Network out = rebuild(first, conv, d, first.class_count());
  for (std::size_t i = 0; i < conv; ++i) out.layer(i).params = first.layer(i).params;
  Layer& stacked = out.layer(conv);
  const std::size_t per_filter = first.layer(conv).params.weights.size();
  for (std::size_t k = 0; k < d; ++k) {
    const auto& src = nets[k].net.layer(conv).params;
    std::copy_n(src.weights.data(), per_filter, stacked.params.weights.data() + k * per_filter);
    stacked.params.biases[k] = src.biases[0];
  }
  for (std::size_t i = conv + 1; i < out.depth(); ++i) out.initialize_layer(i, derive_seed(head_hp.seed, i));
  out.freeze_below(conv + 1);
  if (head_hp.epochs > 0) out = dtl::train(std::move(out), train, head_hp);
  out.freeze_below(0);
  return out;
}

Network prepare_standard(const Network& primary, std::size_t target_classes, std::size_t freeze_depth,
                         std::uint64_t seed) {
  const std::size_t head = primary.last_dense();
  if (head == primary.depth()) throw InvalidArgument("primary network has no dense head");
  if (freeze_depth >= primary.depth()) {
    throw InvalidArgument("freeze_depth " + std::to_string(freeze_depth) + " must be below the layer count " +
                          std::to_string(primary.depth()));
  }
  Network out = rebuild(primary, primary.depth(), 0, target_classes);
  for (std::size_t i = 0; i < head; ++i) out.layer(i).params = primary.layer(i).params;
  out.initialize_layer(head, derive_seed(seed, head));
  out.freeze_below(freeze_depth);
  return out;
}

TransferResult standard_transfer(const Network& primary, const LabelledDataset& train, const TransferConfig& cfg,
                                 const LabelledDataset* monitor) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  TransferResult result{prepare_standard(primary, train.class_count(), cfg.freeze_depth, cfg.hp.seed), {}};
  check_target(result.network, train, "target training");
  TransferReport& report = result.report;
  report.strategy = Strategy::standard;
  report.config = cfg;

  Rng rng(cfg.hp.seed);
  for (std::size_t epoch = 0; epoch < cfg.hp.epochs; ++epoch) {
    train_epoch(result.network, train, cfg.hp, 1.0, rng);
    report.epochs.push_back({epoch + 1, evaluate(result.network, train),
                             monitor ? evaluate(result.network, *monitor) : 0.0});
  }
  result.network.freeze_below(0);
  report.train_error = evaluate(result.network, train);
  report.test_error = monitor ? evaluate(result.network, *monitor) : 0.0;
  report.wall_seconds = seconds_since(start);
  return result;
}

TransferResult transfer(const Network& primary, const TargetData& target, const TransferConfig& cfg) {
  cfg.validate();
  const LabelledDataset* test = target.test.empty() ? nullptr : &target.test;
  if (cfg.strategy == Strategy::standard) return standard_transfer(primary, target.train, cfg, test);

  const auto start = std::chrono::steady_clock::now();
  auto nets = decompose(primary, target.train.class_count(), cfg.hp.seed);
  auto tuned = distributed_finetune(std::move(nets), target.train, target.validation, cfg, test);
  TransferResult result{reassemble(std::move(tuned.nets), target.train, cfg.head_hp), std::move(tuned.report)};
  result.report.train_error = evaluate(result.network, target.train);
  result.report.test_error = test ? evaluate(result.network, *test) : 0.0;
  result.report.wall_seconds = seconds_since(start);
  return result;
}

}  // namespace dtl

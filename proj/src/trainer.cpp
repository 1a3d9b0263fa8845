#include "iceberg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "iceberg/util/hash.hpp"

namespace iceberg::trainer {

using gtnp::GtnpModel;
using gtnp::Sequence;
using nn::Matrix;
using nn::Tape;
using oracle::LabeledDesign;
using surrogate::HybridDataset;
using surrogate::LabeledContext;

const char* to_string(Preset p) {
  switch (p) {
    case Preset::ice_a: return "Ice-A";
    case Preset::ice_h: return "Ice-H";
    case Preset::ice_a_ft: return "Ice-A-FT";
    case Preset::ice_h_ft: return "Ice-H-FT";
  }
  return "Ice-A";
}

Preset preset_from_string(const std::string& s) {
  if (s == "Ice-A") return Preset::ice_a;
  if (s == "Ice-H") return Preset::ice_h;
  if (s == "Ice-A-FT") return Preset::ice_a_ft;
  if (s == "Ice-H-FT") return Preset::ice_h_ft;
  throw std::invalid_argument("unknown preset: " + s);
}

double preset_ratio(Preset p) {
  return (p == Preset::ice_h || p == Preset::ice_h_ft) ? 0.5 : 0.0;
}

bool preset_finetunes(Preset p) {
  return p == Preset::ice_a_ft || p == Preset::ice_h_ft;
}

SequenceSampler::SequenceSampler(const HybridDataset& dataset, int seq_len, int m_min, Rng rng)
    : dataset_(&dataset), seq_len_(seq_len), m_min_(m_min), rng_(rng) {
  if (seq_len_ < 2 * m_min_)
    throw std::invalid_argument("SequenceSampler: seq_len must be >= 2 * m_min");
  for (int i = 0; i < static_cast<int>(dataset.actual.size()); ++i) {
    if (dataset.actual[static_cast<std::size_t>(i)].designs.size() >= 2) {
      actual_pool_.push_back(i);
    } else {
      ++skipped_;
      std::fprintf(stderr, "[trainer] warning: skipping context %s (fewer than 2 designs)\n",
                   dataset.actual[static_cast<std::size_t>(i)].kernel->id.c_str());
    }
  }
  for (int i = 0; i < static_cast<int>(dataset.weak.size()); ++i) {
    if (dataset.weak[static_cast<std::size_t>(i)].designs.size() >= 2) {
      weak_pool_.push_back(i);
    } else {
      ++skipped_;
      std::fprintf(stderr, "[trainer] warning: skipping weak context %s (fewer than 2 designs)\n",
                   dataset.weak[static_cast<std::size_t>(i)].kernel->id.c_str());
    }
  }
  if (actual_pool_.empty() && weak_pool_.empty())
    throw std::invalid_argument("SequenceSampler: dataset has no usable contexts");
  if (dataset.ratio > 0.0 && weak_pool_.empty())
    throw std::invalid_argument("SequenceSampler: ratio > 0 but no weak contexts");
  if (dataset.ratio < 1.0 && actual_pool_.empty())
    throw std::invalid_argument("SequenceSampler: ratio < 1 but no actual contexts");
}

Sequence SequenceSampler::next() {
  // Bresenham-style interleave: the number of weak draws after t draws is
  // floor(t * ratio), so an epoch of 2n draws at ratio 0.5 yields exactly n.
  const double ratio = dataset_->ratio;
  const bool draw_weak =
      std::floor(static_cast<double>(draw_count_ + 1) * ratio) >
      std::floor(static_cast<double>(draw_count_) * ratio);
  ++draw_count_;

  const LabeledContext& ctx =
      draw_weak ? dataset_->weak[static_cast<std::size_t>(weak_pool_[rng_.bounded(weak_pool_.size())])]
                : dataset_->actual[static_cast<std::size_t>(actual_pool_[rng_.bounded(actual_pool_.size())])];

  const int available = static_cast<int>(ctx.designs.size());
  const int n = seq_len_;
  std::vector<int> picks;
  picks.reserve(static_cast<std::size_t>(n));
  if (available >= n) {
    std::vector<int> order(static_cast<std::size_t>(available));
    for (int i = 0; i < available; ++i) order[static_cast<std::size_t>(i)] = i;
    rng_.shuffle(order);
    picks.assign(order.begin(), order.begin() + n);
  } else {
    for (int i = 0; i < n; ++i) picks.push_back(static_cast<int>(rng_.bounded(static_cast<std::uint64_t>(available))));
  }

  Sequence seq;
  seq.kernel = ctx.kernel;
  seq.source_function = ctx.source_function;
  seq.m = static_cast<int>(rng_.uniform_int(m_min_, n - m_min_));
  for (int i : picks) {
    const LabeledDesign& d = ctx.designs[static_cast<std::size_t>(i)];
    seq.configs.push_back(d.config);
    seq.y.push_back(d.y);
  }
  return seq;
}

Sequence sample_training_sequence(SequenceSampler& sampler) { return sampler.next(); }

namespace {

// One optimization step over a batch of sequences. Per-item gradients are
// reduced in item order so the result is independent of thread scheduling.
double train_step(GtnpModel& model, nn::AdamW& optimizer, const std::vector<Sequence>& batch,
                  std::uint64_t step_seed, int threads) {
  const int b = static_cast<int>(batch.size());
  std::vector<std::vector<Matrix>> item_grads(static_cast<std::size_t>(b));
  std::vector<double> item_loss(static_cast<std::size_t>(b), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(b));

  auto run_item = [&](int i) {
    try {
      Tape tape;
      const nn::TapeBinding binding = bind_params(tape, model.params(), true);
      Rng dropout_rng(Rng::mix(step_seed, static_cast<std::uint64_t>(i)));
      Tape::VarId loss =
          model.build_loss(tape, binding, batch[static_cast<std::size_t>(i)], &dropout_rng);
      item_loss[static_cast<std::size_t>(i)] = tape.val(loss)(0, 0);
      tape.backward(loss);
      item_grads[static_cast<std::size_t>(i)] = model.params().zero_grads();
      collect_grads(tape, binding, item_grads[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };

  const int n_threads = std::max(1, std::min(threads, b));
  if (n_threads == 1) {
    for (int i = 0; i < b; ++i) run_item(i);
  } else {
    std::vector<std::thread> workers;
    for (int t = 0; t < n_threads; ++t)
      workers.emplace_back([&, t]() {
        for (int i = t; i < b; i += n_threads) run_item(i);
      });
    for (auto& w : workers) w.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<Matrix> grads = model.params().zero_grads();
  double loss_sum = 0.0;
  for (int i = 0; i < b; ++i) {
    loss_sum += item_loss[static_cast<std::size_t>(i)];
    for (std::size_t g = 0; g < grads.size(); ++g)
      grads[g] += item_grads[static_cast<std::size_t>(i)][g];
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  for (auto& g : grads) g *= inv_b;
  optimizer.step(model.params(), grads);
  return loss_sum * inv_b;
}

void run_training(GtnpModel& model, SequenceSampler& sampler, const TrainConfig& cfg, int steps,
                  int batch, std::vector<StepLog>* log) {
  nn::AdamW optimizer(cfg.lr, cfg.beta1, cfg.beta2, cfg.weight_decay);
  for (int step = 0; step < steps; ++step) {
    std::vector<Sequence> batch_seqs;
    batch_seqs.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) batch_seqs.push_back(sampler.next());
    const double loss = train_step(model, optimizer, batch_seqs,
                                   Rng::mix(cfg.seed, 0xdead0000 + static_cast<std::uint64_t>(step)),
                                   cfg.threads);
    if (!std::isfinite(loss))
      throw std::runtime_error("training diverged: loss is not finite at step " +
                               std::to_string(step));
    if (log) log->push_back({step, loss});
  }
}

}  // namespace

namespace {

// labels of every context the sampler can draw from, weighted as stored
std::pair<double, double> dataset_label_stats(const HybridDataset& dataset) {
  double sum = 0.0, sq = 0.0;
  long n = 0;
  auto visit = [&](const std::vector<LabeledContext>& contexts) {
    for (const auto& ctx : contexts)
      for (const auto& d : ctx.designs) {
        sum += d.y;
        sq += d.y * d.y;
        ++n;
      }
  };
  if (dataset.ratio < 1.0) visit(dataset.actual);
  if (dataset.ratio > 0.0) visit(dataset.weak);
  if (n == 0) return {0.0, 1.0};
  const double mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  return {mean, std::sqrt(std::max(var, 0.0))};
}

}  // namespace

GtnpModel pretrain(const gtnp::GtnpConfig& model_cfg, const TrainConfig& cfg,
                   const HybridDataset& dataset, std::vector<StepLog>* log) {
  GtnpModel model(model_cfg, cfg.seed);
  const auto [loc, scale] = dataset_label_stats(dataset);
  model.set_label_stats(loc, scale);
  if (cfg.steps == 0) return model;
  SequenceSampler sampler(dataset, cfg.seq_len, cfg.m_min, Rng(Rng::mix(cfg.seed, 0x73616d70)));
  run_training(model, sampler, cfg, cfg.steps, cfg.batch, log);
  return model;
}

GtnpModel finetune(const GtnpModel& model, const std::vector<LabeledDesign>& adaptation_designs,
                   const kernel::Kernel& k, const TrainConfig& cfg, int steps,
                   std::vector<StepLog>* log) {
  if (adaptation_designs.size() < 2)
    throw std::invalid_argument("finetune: need at least 2 adaptation designs");
  if (steps < 0) steps = cfg.finetune_steps;

  GtnpModel tuned(model.config(), model.seed());
  tuned.params().load_tensors(model.params().to_tensors());
  tuned.set_label_stats(model.label_loc(), model.label_scale());
  if (steps == 0) return tuned;

  HybridDataset dataset;
  LabeledContext ctx;
  ctx.kernel = std::make_shared<const kernel::Kernel>(k);
  ctx.designs = adaptation_designs;
  dataset.actual.push_back(std::move(ctx));
  dataset.ratio = 0.0;

  const int n_designs = static_cast<int>(adaptation_designs.size());
  const int seq_len = std::min(cfg.seq_len, n_designs);
  const int m_min = std::min(cfg.m_min, std::max(1, seq_len / 4));

  TrainConfig ft_cfg = cfg;
  ft_cfg.seed = Rng::mix(cfg.seed, fnv1a64(k.id));
  SequenceSampler sampler(dataset, seq_len, m_min, Rng(Rng::mix(ft_cfg.seed, 0x66740000)));
  run_training(tuned, sampler, ft_cfg, steps, cfg.finetune_batch, log);
  return tuned;
}

double geomean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double log_sum = 0.0;
  for (double v : values) {
    if (v <= 0.0) return 0.0;
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

namespace {

struct FewshotSplit {
  std::vector<LabeledDesign> context;
  std::vector<LabeledDesign> targets;
};

FewshotSplit fewshot_split(const LabeledContext& program, int context_size, std::uint64_t seed) {
  std::vector<int> order(program.designs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(Rng::mix(seed, fnv1a64(program.kernel->id)));
  rng.shuffle(order);
  FewshotSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const LabeledDesign& d = program.designs[static_cast<std::size_t>(order[i])];
    if (i < static_cast<std::size_t>(context_size))
      split.context.push_back(d);
    else
      split.targets.push_back(d);
  }
  return split;
}

double mse_against(const std::vector<double>& preds, const std::vector<LabeledDesign>& targets) {
  double se = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double err = preds[i] - targets[i].y;
    se += err * err;
  }
  return se / static_cast<double>(preds.size());
}

EvalReport evaluate_impl(const std::vector<LabeledContext>& test_programs, int context_size,
                         const std::vector<std::uint64_t>& seeds,
                         const std::function<std::vector<double>(
                             const LabeledContext&, const FewshotSplit&, std::uint64_t)>& predict) {
  EvalReport report;
  report.seeds = seeds;
  std::vector<double> per_program_mse;
  for (const auto& program : test_programs) {
    if (program.designs.size() < static_cast<std::size_t>(context_size) + 1) {
      report.skipped.push_back(program.kernel->id);
      continue;
    }
    ProgramEval pe;
    pe.kernel_id = program.kernel->id;
    for (std::uint64_t seed : seeds) {
      const FewshotSplit split = fewshot_split(program, context_size, seed);
      const std::vector<double> preds = predict(program, split, seed);
      pe.per_seed.push_back(mse_against(preds, split.targets));
      pe.n_targets = static_cast<int>(split.targets.size());
    }
    double mean = 0.0;
    for (double v : pe.per_seed) mean += v;
    mean /= static_cast<double>(pe.per_seed.size());
    double var = 0.0;
    for (double v : pe.per_seed) var += (v - mean) * (v - mean);
    pe.mse_mean = mean;
    pe.mse_std = std::sqrt(var / static_cast<double>(pe.per_seed.size()));
    per_program_mse.push_back(mean);
    report.programs.push_back(std::move(pe));
  }
  report.geomean_mse = geomean(per_program_mse);
  return report;
}

}  // namespace

EvalReport evaluate_fewshot(const GtnpModel& model,
                            const std::vector<LabeledContext>& test_programs, int context_size,
                            const std::vector<std::uint64_t>& seeds) {
  return evaluate_impl(test_programs, context_size, seeds,
                       [&](const LabeledContext& program, const FewshotSplit& split, std::uint64_t) {
                         std::vector<kernel::PragmaConfig> queries;
                         for (const auto& d : split.targets) queries.push_back(d.config);
                         return model.predict_in_context(split.context, queries, *program.kernel);
                       });
}

EvalReport evaluate_fewshot_with(const Predictor& predictor,
                                 const std::vector<LabeledContext>& test_programs,
                                 int context_size, const std::vector<std::uint64_t>& seeds) {
  return evaluate_impl(test_programs, context_size, seeds,
                       [&](const LabeledContext& program, const FewshotSplit& split, std::uint64_t) {
                         std::vector<kernel::PragmaConfig> queries;
                         for (const auto& d : split.targets) queries.push_back(d.config);
                         return predictor(*program.kernel, queries);
                       });
}

EvalReport evaluate_fewshot_ft(const GtnpModel& base,
                               const std::vector<LabeledContext>& test_programs,
                               const TrainConfig& cfg, int context_size,
                               const std::vector<std::uint64_t>& seeds) {
  return evaluate_impl(
      test_programs, context_size, seeds,
      [&](const LabeledContext& program, const FewshotSplit& split, std::uint64_t seed) {
        TrainConfig ft_cfg = cfg;
        ft_cfg.seed = Rng::mix(cfg.seed, seed);
        const GtnpModel tuned = finetune(base, split.context, *program.kernel, ft_cfg);
        std::vector<kernel::PragmaConfig> queries;
        for (const auto& d : split.targets) queries.push_back(d.config);
        return tuned.predict_in_context(split.context, queries, *program.kernel);
      });
}

Predictor oracle_predictor(const oracle::OracleConstants& constants) {
  return [constants](const kernel::Kernel& k, const std::vector<kernel::PragmaConfig>& configs) {
    const kernel::DesignSpace space = kernel::build_design_space(k);
    const double base = oracle::latency(k, kernel::default_config(space), constants);
    std::vector<double> out;
    out.reserve(configs.size());
    for (const auto& c : configs)
      out.push_back(oracle::normalize_label(oracle::latency(k, c, constants), base));
    return out;
  };
}

Predictor incontext_predictor(const GtnpModel& model, std::vector<LabeledDesign> context) {
  return [&model, context = std::move(context)](const kernel::Kernel& k,
                                                const std::vector<kernel::PragmaConfig>& configs) {
    return model.predict_in_context(context, configs, k);
  };
}

OptEntry best_at_k(const Predictor& predictor, const kernel::Kernel& k,
                   const std::vector<LabeledDesign>& labeled_samples, int top_k,
                   double resource_bound, const oracle::OracleConstants& constants) {
  if (labeled_samples.empty()) throw std::invalid_argument("best_at_k: empty sample set");
  if (top_k < 1) throw std::invalid_argument("best_at_k: k must be >= 1");

  OptEntry entry;
  entry.kernel_id = k.id;
  entry.k = top_k;

  std::vector<const LabeledDesign*> feasible;
  for (const auto& d : labeled_samples)
    if (d.valid && d.resources.within(resource_bound)) feasible.push_back(&d);

  const kernel::DesignSpace space = kernel::build_design_space(k);
  const double default_latency = oracle::latency(k, kernel::default_config(space), constants);

  if (feasible.empty()) {
    entry.best_latency = default_latency;
    entry.ideal_latency = default_latency;
    entry.substituted = true;
    return entry;
  }

  entry.ideal_latency = (*std::min_element(feasible.begin(), feasible.end(),
                                           [](const LabeledDesign* a, const LabeledDesign* b) {
                                             return a->latency_cycles < b->latency_cycles;
                                           }))
                            ->latency_cycles;

  std::vector<kernel::PragmaConfig> configs;
  configs.reserve(feasible.size());
  for (const auto* d : feasible) configs.push_back(d->config);
  const std::vector<double> preds = predictor(k, configs);

  std::vector<std::size_t> order(feasible.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a] != preds[b]) return preds[a] < preds[b];
    return feasible[a]->config.lex_less(feasible[b]->config);
  });

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(top_k); ++i)
    best = std::min(best, feasible[order[i]]->latency_cycles);
  entry.best_latency = best;
  entry.substituted = false;
  return entry;
}

}  // namespace iceberg::trainer

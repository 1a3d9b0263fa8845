// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line each. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iceberg/synth.hpp"
#include "iceberg/trainer.hpp"
#include "iceberg/util/hash.hpp"
#include "iceberg/util/io.hpp"
#include "iceberg/workbench.hpp"

using namespace iceberg;
using gtnp::GtnpConfig;
using gtnp::GtnpModel;
using gtnp::Sequence;
using kernel::DesignSpace;
using kernel::PragmaConfig;
using surrogate::HybridDataset;
using surrogate::LabeledContext;
using trainer::EvalReport;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

struct Criterion {
  int id;
  std::string summary;
  bool pass;
  std::string detail;
  double seconds;
  double budget_seconds;
};

GtnpConfig micro_gtnp_config() {
  GtnpConfig cfg;
  cfg.gnn = {8, 1, 0.1};
  cfg.d_model = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.d_ff = 8;
  cfg.dropout = 0.1;
  cfg.max_seq_len = 64;
  return cfg;
}

kernel::Kernel corpus_kernel(std::uint64_t seed, int q_max = 4) {
  synth::GenSpec spec;
  spec.seed = seed;
  spec.q_min = 2;
  spec.q_max = q_max;
  spec.mem_min = 2048;
  spec.mem_max = 32768;
  spec.domain = synth::domain_list()[seed % synth::domain_list().size()];
  return synth::generate_parametric(spec);
}

// Shared corpus for the trend criteria: 30 training programs, 8 held-out,
// actual labels capped at 100 designs per program.
struct Fixture {
  std::vector<surrogate::ProgramData> train;
  std::vector<LabeledContext> test;
  surrogate::Ensemble ensemble;
  HybridDataset weak8;  // ratio 0.5, weak labels from 8 synthetic functions
  HybridDataset weak1;  // ratio 0.5, weak labels from 1 synthetic function
  std::vector<GtnpModel> ice_a;  // one model per experiment seed
  std::vector<GtnpModel> ice_h;
  std::vector<EvalReport> ice_a_reports;
  std::vector<EvalReport> ice_h_reports;
};

constexpr int kTrainPrograms = 30;
constexpr int kTestPrograms = 8;
constexpr int kDesignsPerProgram = 100;
constexpr int kEnsembleMembers = 8;
constexpr int kWeakPairs = 30;    // L
constexpr int kWeakConfigs = 60;  // K
constexpr int kPretrainSteps = 350;
constexpr int kPretrainBatch = 8;
constexpr int kSeqLen = 48;
const std::vector<std::uint64_t> kExperimentSeeds = {1, 2, 3};

trainer::TrainConfig trend_train_config(std::uint64_t seed) {
  trainer::TrainConfig cfg;
  cfg.steps = kPretrainSteps;
  cfg.batch = kPretrainBatch;
  cfg.seq_len = kSeqLen;
  cfg.m_min = 5;
  cfg.seed = seed;
  cfg.threads = 2;
  cfg.finetune_steps = 200;
  cfg.finetune_batch = 2;
  return cfg;
}

Fixture* fixture_instance = nullptr;

Fixture& fixture() {
  if (fixture_instance) return *fixture_instance;
  static Fixture f;
  std::printf("-- building shared fixture (corpus, DSE, ensemble, weak labels)\n");
  std::fflush(stdout);

  for (int i = 0; i < kTrainPrograms + kTestPrograms; ++i) {
    kernel::Kernel k = corpus_kernel(1000 + static_cast<std::uint64_t>(i));
    surrogate::ProgramData pd;
    pd.designs = oracle::run_dse(k, kDesignsPerProgram, oracle::DseStrategy::random,
                                 Rng::mix(31, fnv1a64(k.id)));
    pd.kernel = std::make_shared<const kernel::Kernel>(std::move(k));
    if (i < kTrainPrograms) {
      f.train.push_back(std::move(pd));
    } else {
      LabeledContext ctx;
      ctx.kernel = pd.kernel;
      ctx.designs = pd.designs;
      f.test.push_back(std::move(ctx));
    }
  }

  std::vector<std::uint64_t> member_seeds;
  for (int i = 0; i < kEnsembleMembers; ++i)
    member_seeds.push_back(Rng::mix(7, static_cast<std::uint64_t>(i)));
  surrogate::EnsembleTrainOptions opts;
  opts.epochs = 20;
  opts.batch = 32;
  opts.lr = 1e-3;
  opts.threads = 2;
  f.ensemble = surrogate::train_ensemble(f.train, kEnsembleMembers, member_seeds, opts);
  std::printf("-- ensemble test MSE %.4f (%.4f)\n", f.ensemble.report.mean_test_mse,
              f.ensemble.report.std_test_mse);
  std::fflush(stdout);

  surrogate::WeakLabelOptions wl;
  wl.pairs = kWeakPairs;
  wl.configs_per_pair = kWeakConfigs;
  wl.ratio = 0.5;
  wl.seed = 17;
  wl.n_functions = 8;
  f.weak8 = surrogate::build_hybrid_dataset(f.train, f.ensemble, wl);
  wl.n_functions = 1;
  f.weak1 = surrogate::build_hybrid_dataset(f.train, f.ensemble, wl);

  fixture_instance = &f;
  return f;
}

double geomean_of_means(const EvalReport& report) {
  std::vector<double> means;
  for (const auto& p : report.programs) means.push_back(p.mse_mean);
  return trainer::geomean(means);
}

double geomean_of_seed(const EvalReport& report, std::size_t seed_index) {
  std::vector<double> values;
  for (const auto& p : report.programs) values.push_back(p.per_seed[seed_index]);
  return trainer::geomean(values);
}

// ----------------------------------------------------------------- criteria

Criterion criterion_permutation() {
  const double t0 = now_seconds();
  double max_context_delta = 0.0, max_target_delta = 0.0, max_deletion_delta = 0.0;
  int checked = 0;
  for (std::uint64_t pair = 0; pair < 100; ++pair) {
    const GtnpModel model(GtnpConfig{}, Rng::mix(0x6d6f64, pair));
    auto k = std::make_shared<const kernel::Kernel>(corpus_kernel(2000 + pair, 3));
    const DesignSpace space = kernel::build_design_space(*k);
    Rng rng(Rng::mix(0x736571, pair));
    const int n = 14, m = 6;
    Sequence seq;
    seq.kernel = k;
    seq.m = m;
    for (int i = 0; i < n; ++i) {
      seq.configs.push_back(kernel::sample_config(space, rng));
      seq.y.push_back(rng.uniform(-2.0, 2.0));
    }
    const auto base = model.forward(seq);

    Sequence ctx_perm = seq;
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    for (int i = 0; i < m; ++i) {
      ctx_perm.configs[static_cast<std::size_t>(i)] =
          seq.configs[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      ctx_perm.y[static_cast<std::size_t>(i)] =
          seq.y[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    const auto ctx_out = model.forward(ctx_perm);
    for (std::size_t i = 0; i < base.size(); ++i)
      max_context_delta = std::max(max_context_delta, std::abs(base[i] - ctx_out[i]));

    const int t = n - m;
    std::vector<int> tperm(t);
    for (int i = 0; i < t; ++i) tperm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(tperm);
    Sequence tgt_perm = seq;
    for (int i = 0; i < t; ++i) {
      tgt_perm.configs[static_cast<std::size_t>(m + i)] =
          seq.configs[static_cast<std::size_t>(m + tperm[static_cast<std::size_t>(i)])];
      tgt_perm.y[static_cast<std::size_t>(m + i)] =
          seq.y[static_cast<std::size_t>(m + tperm[static_cast<std::size_t>(i)])];
    }
    const auto tgt_out = model.forward(tgt_perm);
    for (int i = 0; i < t; ++i)
      max_target_delta = std::max(
          max_target_delta,
          std::abs(tgt_out[static_cast<std::size_t>(i)] -
                   base[static_cast<std::size_t>(tperm[static_cast<std::size_t>(i)])]));

    const int victim = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(t)));
    Sequence dropped = seq;
    dropped.configs.erase(dropped.configs.begin() + m + victim);
    dropped.y.erase(dropped.y.begin() + m + victim);
    const auto fewer = model.forward(dropped);
    std::size_t j = 0;
    for (int i = 0; i < t; ++i) {
      if (i == victim) continue;
      max_deletion_delta =
          std::max(max_deletion_delta, std::abs(base[static_cast<std::size_t>(i)] - fewer[j]));
      ++j;
    }
    ++checked;
  }
  const double elapsed = now_seconds() - t0;
  Criterion c{1, "permutation properties (context invariance, target equivariance, independence)",
              false, "", elapsed, 60.0};
  c.pass = checked == 100 && max_context_delta < 1e-5 && max_target_delta < 1e-5 &&
           max_deletion_delta < 1e-5 && elapsed < c.budget_seconds;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "max deltas: context %.2e, target %.2e, deletion %.2e over %d pairs",
                max_context_delta, max_target_delta, max_deletion_delta, checked);
  c.detail = buf;
  return c;
}

Criterion criterion_gradient_oracle() {
  const double t0 = now_seconds();
  GtnpModel model(micro_gtnp_config(), 23);
  auto k = std::make_shared<const kernel::Kernel>(corpus_kernel(2300, 3));
  const DesignSpace space = kernel::build_design_space(*k);
  Rng rng(29);
  Sequence seq;
  seq.kernel = k;
  seq.m = 4;
  for (int i = 0; i < 9; ++i) {
    seq.configs.push_back(kernel::sample_config(space, rng));
    seq.y.push_back(rng.uniform(-2.0, 2.0));
  }

  auto loss_value = [&]() {
    nn::Tape tape;
    const nn::TapeBinding binding = bind_params(tape, model.params(), false);
    return tape.val(model.build_loss(tape, binding, seq, nullptr))(0, 0);
  };

  nn::Tape tape;
  const nn::TapeBinding binding = bind_params(tape, model.params(), true);
  nn::Tape::VarId loss = model.build_loss(tape, binding, seq, nullptr);
  tape.backward(loss);
  std::vector<nn::Matrix> analytic = model.params().zero_grads();
  collect_grads(tape, binding, analytic);

  const double h = 1e-4;
  long total = 0, ok = 0;
  for (int i = 0; i < model.params().count(); ++i) {
    nn::Matrix& tensor = model.params().tensor(nn::ParamStore::Handle{i});
    for (Eigen::Index cc = 0; cc < tensor.cols(); ++cc) {
      for (Eigen::Index rr = 0; rr < tensor.rows(); ++rr) {
        const double saved = tensor(rr, cc);
        tensor(rr, cc) = saved + h;
        const double up = loss_value();
        tensor(rr, cc) = saved - h;
        const double down = loss_value();
        tensor(rr, cc) = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic_v = analytic[static_cast<std::size_t>(i)](rr, cc);
        ++total;
        const double denom = std::max({std::abs(numeric), std::abs(analytic_v), 1e-8});
        if (std::abs(numeric - analytic_v) / denom <= 1e-3 ||
            (std::abs(numeric) < 1e-10 && std::abs(analytic_v) < 1e-10))
          ++ok;
      }
    }
  }
  const double elapsed = now_seconds() - t0;
  Criterion c{2, "gradient oracle (central differences, h=1e-4, rel 1e-3)", false, "", elapsed,
              120.0};
  const double frac = static_cast<double>(ok) / static_cast<double>(total);
  c.pass = frac >= 0.99 && elapsed < c.budget_seconds;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%ld/%ld parameters match (%.2f%%)", ok, total, 100.0 * frac);
  c.detail = buf;
  return c;
}

Criterion criterion_protocol_oracles() {
  const double t0 = now_seconds();
  bool dse_ok = true, best_ok = true, monotone_ok = true;
  int spaces_checked = 0;

  for (std::uint64_t seed = 0; spaces_checked < 20 && seed < 400; ++seed) {
    synth::GenSpec spec;
    spec.seed = 2400 + seed;
    spec.q_min = 1;
    spec.q_max = 1;  // larger nests blow past 200 configs
    spec.mem_min = 1024;
    spec.mem_max = 16384;
    spec.domain = synth::domain_list()[seed % synth::domain_list().size()];
    kernel::Kernel k = synth::generate_parametric(spec);
    const DesignSpace space = kernel::build_design_space(k);
    if (space.size() > 200) continue;
    ++spaces_checked;
    const auto designs =
        oracle::run_dse(k, static_cast<int>(space.size()), oracle::DseStrategy::exhaustive, seed);
    double brute = std::numeric_limits<double>::infinity();
    for (const auto& cfg : kernel::enumerate_configs(space, std::nullopt, 0))
      brute = std::min(brute, oracle::latency(k, cfg));
    dse_ok = dse_ok && designs.front().latency_cycles == brute;

    const trainer::OptEntry entry = trainer::best_at_k(trainer::oracle_predictor(), k, designs, 1);
    best_ok = best_ok && (entry.substituted || entry.best_latency == entry.ideal_latency);
  }

  for (std::uint64_t inst = 0; inst < 50; ++inst) {
    kernel::Kernel k = corpus_kernel(2500 + inst, 3);
    const auto designs = oracle::run_dse(k, 40, oracle::DseStrategy::random, inst);
    trainer::Predictor noisy = [](const kernel::Kernel& kk,
                                  const std::vector<PragmaConfig>& configs) {
      const auto truth = trainer::oracle_predictor()(kk, configs);
      std::vector<double> out;
      Rng local(fnv1a64(kk.id));
      for (double v : truth) out.push_back(v + local.uniform(-1.0, 1.0));
      return out;
    };
    double prev = std::numeric_limits<double>::infinity();
    for (int top = 1; top <= 8; ++top) {
      const trainer::OptEntry entry = trainer::best_at_k(noisy, k, designs, top);
      monotone_ok =
          monotone_ok && entry.best_latency <= prev && entry.best_latency >= entry.ideal_latency;
      prev = entry.best_latency;
    }
  }

  const double elapsed = now_seconds() - t0;
  Criterion c{3, "design-space and protocol oracles (exhaustive DSE, best@K)", false, "", elapsed,
              120.0};
  c.pass = spaces_checked == 20 && dse_ok && best_ok && monotone_ok && elapsed < c.budget_seconds;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d spaces exhaustive-vs-brute%s; best@1==ideal %s; monotone %s",
                spaces_checked, dse_ok ? " ok" : " MISMATCH", best_ok ? "ok" : "VIOLATED",
                monotone_ok ? "ok" : "VIOLATED");
  c.detail = buf;
  return c;
}

Criterion criterion_oracle_monotonicity() {
  const double t0 = now_seconds();
  int violations = 0, checked = 0;
  for (std::uint64_t trial = 0; checked < 1000; ++trial) {
    kernel::Kernel k = corpus_kernel(2600 + trial % 200, 4);
    const DesignSpace space = kernel::build_design_space(k);
    if (k.loop_count() == 0) continue;
    Rng rng(trial);
    PragmaConfig cfg = kernel::sample_config(space, rng);
    const std::size_t li = rng.bounded(cfg.per_loop.size());
    const auto& cands = space.per_loop[li].parallel;
    if (cands.size() < 2) continue;
    const std::size_t ci = rng.bounded(cands.size() - 1);
    cfg.per_loop[li].parallel_factor = cands[ci];
    PragmaConfig bumped = cfg;
    bumped.per_loop[li].parallel_factor = cands[ci + 1];
    ++checked;

    const double lat0 = oracle::latency(k, cfg);
    const double lat1 = oracle::latency(k, bumped);
    const oracle::Resources r0 = oracle::resources(k, cfg);
    const oracle::Resources r1 = oracle::resources(k, bumped);
    if (lat1 > lat0 || r1.lut < r0.lut || r1.dsp < r0.dsp || r1.bram < r0.bram) ++violations;
  }
  const double elapsed = now_seconds() - t0;
  Criterion c{4, "oracle parallel-factor monotonicity (1000 random bumps)", false, "", elapsed,
              60.0};
  c.pass = violations == 0 && elapsed < c.budget_seconds;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d violations in %d triples", violations, checked);
  c.detail = buf;
  return c;
}

Criterion criterion_weak_label_diversity() {
  const double t0 = now_seconds();
  Fixture& f = fixture();

  int wins = 0;
  std::string per_seed;
  for (std::uint64_t seed : kExperimentSeeds) {
    GtnpModel m1 = trainer::pretrain(GtnpConfig{}, trend_train_config(seed), f.weak1);
    GtnpModel m8 = trainer::pretrain(GtnpConfig{}, trend_train_config(seed), f.weak8);
    const EvalReport r1 = trainer::evaluate_fewshot(m1, f.test, 50, kExperimentSeeds);
    const EvalReport r8 = trainer::evaluate_fewshot(m8, f.test, 50, kExperimentSeeds);
    const double g1 = geomean_of_means(r1);
    const double g8 = geomean_of_means(r8);
    if (g8 < g1) ++wins;
    char buf[96];
    std::snprintf(buf, sizeof(buf), " seed%llu: 8fn %.4f vs 1fn %.4f;",
                  static_cast<unsigned long long>(seed), g8, g1);
    per_seed += buf;
    std::printf("--%s\n", buf);
    std::fflush(stdout);
    // the 8-function models double as criterion 6's Ice-H models
    f.ice_h.push_back(std::move(m8));
    f.ice_h_reports.push_back(r8);
  }
  const double elapsed = now_seconds() - t0;
  Criterion c{5, "weak-label diversity trend (8 synthetic functions vs 1)", false, "", elapsed,
              1800.0};
  c.pass = wins >= 2 && elapsed < c.budget_seconds;
  c.detail = per_seed + " wins=" + std::to_string(wins) + "/3";
  return c;
}

HybridDataset actual_only_dataset(Fixture& f) {
  HybridDataset actual_only;
  actual_only.ratio = 0.0;
  for (const auto& pd : f.train) {
    LabeledContext ctx;
    ctx.kernel = pd.kernel;
    ctx.designs = pd.designs;
    actual_only.actual.push_back(std::move(ctx));
  }
  return actual_only;
}

Criterion criterion_hybrid_vs_actual() {
  const double t0 = now_seconds();
  Fixture& f = fixture();
  if (f.ice_h.empty()) {
    for (std::uint64_t seed : kExperimentSeeds) {
      f.ice_h.push_back(trainer::pretrain(GtnpConfig{}, trend_train_config(seed), f.weak8));
      f.ice_h_reports.push_back(
          trainer::evaluate_fewshot(f.ice_h.back(), f.test, 50, kExperimentSeeds));
    }
  }
  const HybridDataset actual_only = actual_only_dataset(f);

  int wins = 0;
  std::string per_seed;
  for (std::size_t si = 0; si < kExperimentSeeds.size(); ++si) {
    const std::uint64_t seed = kExperimentSeeds[si];
    GtnpModel ice_a = trainer::pretrain(GtnpConfig{}, trend_train_config(seed), actual_only);
    const EvalReport ra = trainer::evaluate_fewshot(ice_a, f.test, 50, kExperimentSeeds);
    const double ga = geomean_of_means(ra);
    const double gh = geomean_of_means(f.ice_h_reports[si]);
    if (gh <= ga) ++wins;
    char buf[96];
    std::snprintf(buf, sizeof(buf), " seed%llu: Ice-H %.4f vs Ice-A %.4f;",
                  static_cast<unsigned long long>(seed), gh, ga);
    per_seed += buf;
    std::printf("--%s\n", buf);
    std::fflush(stdout);
    f.ice_a.push_back(std::move(ice_a));
    f.ice_a_reports.push_back(ra);
  }
  const double elapsed = now_seconds() - t0;
  Criterion c{6, "hybrid-vs-actual trend (Ice-H <= Ice-A, actual capped at 100/program)", false,
              "", elapsed, 1800.0};
  c.pass = wins >= 2 && elapsed < c.budget_seconds;
  c.detail = per_seed + " wins=" + std::to_string(wins) + "/3";
  return c;
}

Criterion criterion_finetune_trend() {
  const double t0 = now_seconds();
  Fixture& f = fixture();
  if (f.ice_a.empty()) {
    const HybridDataset actual_only = actual_only_dataset(f);
    for (std::uint64_t seed : kExperimentSeeds) {
      f.ice_a.push_back(trainer::pretrain(GtnpConfig{}, trend_train_config(seed), actual_only));
      f.ice_a_reports.push_back(
          trainer::evaluate_fewshot(f.ice_a.back(), f.test, 50, kExperimentSeeds));
    }
  }

  int wins = 0;
  std::string per_seed;
  for (std::size_t si = 0; si < kExperimentSeeds.size(); ++si) {
    const std::uint64_t seed = kExperimentSeeds[si];
    const EvalReport ft_report =
        trainer::evaluate_fewshot_ft(f.ice_a[si], f.test, trend_train_config(seed), 50, {seed});
    const double g_ft = geomean_of_seed(ft_report, 0);
    const double g_base = geomean_of_seed(f.ice_a_reports[si], si);
    if (g_ft <= g_base) ++wins;
    char buf[96];
    std::snprintf(buf, sizeof(buf), " seed%llu: Ice-A-FT %.4f vs Ice-A %.4f;",
                  static_cast<unsigned long long>(seed), g_ft, g_base);
    per_seed += buf;
    std::printf("--%s\n", buf);
    std::fflush(stdout);
  }
  const double elapsed = now_seconds() - t0;
  Criterion c{7, "fine-tuning trend (Ice-A-FT <= Ice-A after 200 steps on 50 designs)", false, "",
              elapsed, 900.0};
  c.pass = wins >= 2 && elapsed < c.budget_seconds;
  c.detail = per_seed + " wins=" + std::to_string(wins) + "/3";
  return c;
}

Criterion criterion_gp_baseline() {
  const double t0 = now_seconds();
  Fixture& f = fixture();

  surrogate::WeakLabelOptions wl;
  wl.pairs = kWeakPairs;
  wl.configs_per_pair = kWeakConfigs;
  wl.ratio = 1.0;  // weak labels alone
  wl.seed = 17;
  wl.n_functions = 8;
  const HybridDataset ens_only = surrogate::build_hybrid_dataset(f.train, f.ensemble, wl);
  const HybridDataset gp_only = surrogate::build_gp_hybrid_dataset(f.train, {}, wl);

  std::vector<double> g_ens, g_gp;
  std::string per_seed;
  for (std::uint64_t seed : kExperimentSeeds) {
    const GtnpModel m_ens = trainer::pretrain(GtnpConfig{}, trend_train_config(seed), ens_only);
    const GtnpModel m_gp = trainer::pretrain(GtnpConfig{}, trend_train_config(seed), gp_only);
    g_ens.push_back(
        geomean_of_means(trainer::evaluate_fewshot(m_ens, f.test, 50, kExperimentSeeds)));
    g_gp.push_back(
        geomean_of_means(trainer::evaluate_fewshot(m_gp, f.test, 50, kExperimentSeeds)));
    char buf[96];
    std::snprintf(buf, sizeof(buf), " seed%llu: ensemble %.4f vs GP %.4f;",
                  static_cast<unsigned long long>(seed), g_ens.back(), g_gp.back());
    per_seed += buf;
    std::printf("--%s\n", buf);
    std::fflush(stdout);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double med_ens = median(g_ens);
  const double med_gp = median(g_gp);
  const double elapsed = now_seconds() - t0;
  Criterion c{8, "GP-baseline trend (GP weak labels strictly worse than ensemble)", false, "",
              elapsed, 1200.0};
  c.pass = med_gp > med_ens && elapsed < c.budget_seconds;
  char buf[96];
  std::snprintf(buf, sizeof(buf), " medians: ensemble %.4f, GP %.4f", med_ens, med_gp);
  c.detail = per_seed + buf;
  return c;
}

Criterion criterion_substitution_rule() {
  const double t0 = now_seconds();
  // every sampled design violates the 0.8 utilization bound
  kernel::Kernel k;
  k.id = "hot";
  k.domain_tag = "dense_linear_algebra";
  kernel::Loop l;
  l.id = 0;
  l.trip_count = 32;
  l.body_ops = {0, 80, 1, 1};  // 80 mults per iteration
  l.array_refs = {"A"};
  k.loops.push_back(l);
  k.arrays.push_back({"A", 32, {64}});

  const DesignSpace space = kernel::build_design_space(k);
  std::vector<oracle::LabeledDesign> samples;
  for (auto cfg : kernel::enumerate_configs(space, 40, 1)) {
    cfg.per_loop[0].parallel_factor = 32;
    oracle::LabeledDesign d;
    d.kernel_id = k.id;
    const oracle::CostReport report = oracle::evaluate(k, cfg);
    d.config = std::move(cfg);
    d.latency_cycles = report.latency_cycles;
    d.resources = report.resources;
    d.valid = report.valid;
    d.y = 0.0;
    samples.push_back(std::move(d));
  }
  bool all_violate = true;
  for (const auto& d : samples) all_violate = all_violate && !d.resources.within(0.8);

  const trainer::OptEntry entry =
      trainer::best_at_k(trainer::oracle_predictor(), k, samples, 3, 0.8);
  const double default_latency = oracle::latency(k, kernel::default_config(space));

  const double elapsed = now_seconds() - t0;
  Criterion c{9, "substitution rule (infeasible samples fall back to the default design)", false,
              "", elapsed, 60.0};
  c.pass = all_violate && entry.substituted && entry.best_latency == default_latency &&
           entry.ideal_latency == default_latency && elapsed < c.budget_seconds;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "substituted=%s, best=%g, default=%g",
                entry.substituted ? "true" : "false", entry.best_latency, default_latency);
  c.detail = buf;
  return c;
}

Criterion criterion_reproducibility() {
  const double t0 = now_seconds();
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "iceberg_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::string config_json = R"({
    "corpus": {"n_kernels": 6, "n_test_kernels": 2, "seed": 9, "q_min": 2, "q_max": 3,
               "mem_min": 2048, "mem_max": 16384},
    "dse": {"strategy": "random", "budget": 70, "seed": 3},
    "ensemble": {"members": 3, "epochs": 4, "batch": 16, "seed": 7},
    "weaklabel": {"pairs": 6, "configs_per_pair": 24, "n_functions": 3, "seed": 11},
    "train": {"preset": "Ice-H", "steps": 30, "batch": 4, "seq_len": 32, "m_min": 5, "seed": 1},
    "eval": {"context_size": 30, "seeds": [1, 2, 3]}
  })";
  write_text_file(dir / "config.json", config_json);

  bool stages_ok = true;
  for (const std::string run : {(dir / "a").string(), (dir / "b").string()}) {
    const std::vector<std::vector<std::string>> stages = {
        {"synth", "--config", (dir / "config.json").string(), "--out", run},
        {"dse", "--config", (dir / "config.json").string(), "--out", run},
        {"train-ensemble", "--config", (dir / "config.json").string(), "--out", run},
        {"weaklabel", "--config", (dir / "config.json").string(), "--out", run},
        {"pretrain", "--config", (dir / "config.json").string(), "--out", run},
        {"eval", "--config", (dir / "config.json").string(), "--out", run}};
    for (const auto& stage : stages) stages_ok = stages_ok && workbench::run_cli(stage) == 0;
  }
  bool identical = false;
  if (stages_ok)
    identical = read_text_file(dir / "a" / "eval.csv") == read_text_file(dir / "b" / "eval.csv");

  const double elapsed = now_seconds() - t0;
  Criterion c{10, "pipeline reproducibility (identical eval.csv byte-for-byte)", false, "",
              elapsed, 1800.0};
  c.pass = stages_ok && identical && elapsed < c.budget_seconds;
  c.detail = stages_ok ? (identical ? "eval.csv identical across runs" : "eval.csv DIFFERS")
                       : "a pipeline stage failed";
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      const std::string list = argv[++i];
      std::size_t at = 0;
      while (at < list.size()) {
        only.insert(std::atoi(list.c_str() + at));
        const std::size_t comma = list.find(',', at);
        if (comma == std::string::npos) break;
        at = comma + 1;
      }
    }
  }

  using Runner = std::function<Criterion()>;
  const std::vector<std::pair<int, Runner>> criteria = {
      {1, criterion_permutation},          {2, criterion_gradient_oracle},
      {3, criterion_protocol_oracles},     {4, criterion_oracle_monotonicity},
      {5, criterion_weak_label_diversity}, {6, criterion_hybrid_vs_actual},
      {7, criterion_finetune_trend},       {8, criterion_gp_baseline},
      {9, criterion_substitution_rule},    {10, criterion_reproducibility}};

  int failures = 0;
  for (const auto& [id, runner] : criteria) {
    if (!only.empty() && !only.contains(id)) continue;
    const Criterion c = runner();
    if (!c.pass) ++failures;
    std::printf("[%s] criterion %d: %s — %s (%.1fs, budget %.0fs)\n", c.pass ? "PASS" : "FAIL",
                c.id, c.summary.c_str(), c.detail.c_str(), c.seconds, c.budget_seconds);
    std::fflush(stdout);
  }
  return failures;
}

#include "iceberg/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

namespace iceberg::surrogate {

using kernel::Kernel;
using kernel::PragmaConfig;
using nn::Matrix;
using nn::Tape;
using oracle::LabeledDesign;

SurrogateRegressor::SurrogateRegressor(const SurrogateConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed) {
  Rng init(Rng::mix(seed, 0x5347));
  encoder_ = std::make_unique<encoder::GnnEncoder>(params_, cfg_.gnn, init);
  head_w1_ = params_.add_linear_weight("head/w1", cfg_.gnn.width, cfg_.head_hidden, init);
  head_b1_ = params_.add("head/b1", 1, cfg_.head_hidden);
  head_w2_ = params_.add_linear_weight("head/w2", cfg_.head_hidden, 1, init);
  head_b2_ = params_.add("head/b2", 1, 1);
}

nn::Tape::VarId SurrogateRegressor::build_head(Tape& tape, const nn::TapeBinding& binding,
                                               Tape::VarId embedding,
                                               const encoder::DropoutPlan& dropout,
                                               Rng* dropout_rng) const {
  auto p = [&](nn::ParamStore::Handle h) { return binding.vars[static_cast<std::size_t>(h.idx)]; };
  Tape::VarId hidden =
      tape.gelu(tape.add_rowvec(tape.matmul(embedding, p(head_w1_)), p(head_b1_)));
  if (dropout_rng && cfg_.gnn.dropout > 0.0) {
    const double keep = 1.0 - cfg_.gnn.dropout;
    auto mask = std::make_shared<Matrix>(tape.val(hidden).rows(), tape.val(hidden).cols());
    for (Eigen::Index c = 0; c < mask->cols(); ++c)
      for (Eigen::Index r = 0; r < mask->rows(); ++r)
        (*mask)(r, c) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
    hidden = tape.dropout_mask(hidden, std::move(mask));
  } else if (dropout.frozen && dropout.frozen->size() > static_cast<std::size_t>(cfg_.gnn.layers)) {
    hidden = tape.mul_rowvec_const(hidden, dropout.frozen->back());
  }
  return tape.add_rowvec(tape.matmul(hidden, p(head_w2_)), p(head_b2_));
}

std::vector<double> SurrogateRegressor::predict(const Kernel& k,
                                                const std::vector<PragmaConfig>& configs,
                                                const encoder::DropoutPlan& dropout) const {
  const encoder::BatchedGraph graph = encoder::batch_graphs(k, configs);
  Tape tape;
  const nn::TapeBinding binding = bind_params(tape, params_, false);
  Tape::VarId embedding = encoder_->encode(tape, binding, graph, dropout);
  Tape::VarId out = build_head(tape, binding, embedding, dropout, nullptr);
  const Matrix& v = tape.val(out);
  std::vector<double> result(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i)
    result[i] = label_mean_ + label_std_ * v(static_cast<Eigen::Index>(i), 0);
  return result;
}

nn::Tape::VarId SurrogateRegressor::build_loss(Tape& tape, const nn::TapeBinding& binding,
                                               const encoder::BatchedGraph& graph,
                                               const std::vector<double>& labels,
                                               Rng* dropout_rng) const {
  encoder::DropoutPlan dropout;
  dropout.stochastic = dropout_rng;
  Tape::VarId embedding = encoder_->encode(tape, binding, graph, dropout);
  Tape::VarId preds = build_head(tape, binding, embedding, dropout, dropout_rng);
  Matrix target(static_cast<Eigen::Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i)
    target(static_cast<Eigen::Index>(i), 0) = (labels[i] - label_mean_) / label_std_;
  Tape::VarId diff = tape.sub(preds, tape.constant(std::move(target)));
  return tape.mean_all(tape.cmul(diff, diff));
}

namespace {

struct SplitIndices {
  std::vector<std::pair<int, int>> train, val, test;  // (program, design)
};

SplitIndices split_designs(const std::vector<ProgramData>& data, std::uint64_t seed) {
  std::vector<std::pair<int, int>> all;
  for (int p = 0; p < static_cast<int>(data.size()); ++p)
    for (int d = 0; d < static_cast<int>(data[static_cast<std::size_t>(p)].designs.size()); ++d)
      all.emplace_back(p, d);
  Rng rng(Rng::mix(seed, 0x73706c69));
  rng.shuffle(all);
  SplitIndices split;
  const std::size_t n = all.size();
  const std::size_t n_train = (n * 70) / 100;
  const std::size_t n_val = (n * 15) / 100;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train)
      split.train.push_back(all[i]);
    else if (i < n_train + n_val)
      split.val.push_back(all[i]);
    else
      split.test.push_back(all[i]);
  }
  return split;
}

double eval_mse(const SurrogateRegressor& model, const std::vector<ProgramData>& data,
                const std::vector<std::pair<int, int>>& indices) {
  if (indices.empty()) return 0.0;
  // group per program for batched prediction
  std::vector<std::vector<int>> by_program(data.size());
  for (const auto& [p, d] : indices) by_program[static_cast<std::size_t>(p)].push_back(d);
  double se = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < data.size(); ++p) {
    if (by_program[p].empty()) continue;
    std::vector<PragmaConfig> configs;
    configs.reserve(by_program[p].size());
    for (int d : by_program[p]) configs.push_back(data[p].designs[static_cast<std::size_t>(d)].config);
    const auto preds = model.predict(*data[p].kernel, configs);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double err = preds[i] - data[p].designs[static_cast<std::size_t>(by_program[p][i])].y;
      se += err * err;
    }
    count += preds.size();
  }
  return se / static_cast<double>(count);
}

std::shared_ptr<SurrogateRegressor> train_member(const std::vector<ProgramData>& data,
                                                 std::uint64_t seed,
                                                 const EnsembleTrainOptions& opts,
                                                 const SurrogateConfig& cfg, double* test_mse) {
  auto model = std::make_shared<SurrogateRegressor>(cfg, seed);
  const SplitIndices split = split_designs(data, seed);
  if (split.train.empty()) throw std::invalid_argument("train_ensemble: empty training split");

  {
    double sum = 0.0, sq = 0.0;
    for (const auto& [p, d] : split.train) {
      const double y =
          data[static_cast<std::size_t>(p)].designs[static_cast<std::size_t>(d)].y;
      sum += y;
      sq += y * y;
    }
    const double n = static_cast<double>(split.train.size());
    const double mean = sum / n;
    model->set_label_stats(mean, std::sqrt(std::max(0.0, sq / n - mean * mean)));
  }

  nn::AdamW optimizer(opts.lr, 0.9, 0.99, 1e-5);
  Rng rng(Rng::mix(seed, 0x747261));

  // per-program pools so each step can batch one kernel
  std::vector<std::vector<int>> pools(data.size());
  for (const auto& [p, d] : split.train) pools[static_cast<std::size_t>(p)].push_back(d);
  std::vector<int> programs;
  for (int p = 0; p < static_cast<int>(pools.size()); ++p)
    if (!pools[static_cast<std::size_t>(p)].empty()) programs.push_back(p);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<int> order = programs;
    rng.shuffle(order);
    for (int p : order) {
      auto& pool = pools[static_cast<std::size_t>(p)];
      rng.shuffle(pool);
      for (std::size_t at = 0; at < pool.size(); at += static_cast<std::size_t>(opts.batch)) {
        const std::size_t end = std::min(pool.size(), at + static_cast<std::size_t>(opts.batch));
        std::vector<PragmaConfig> configs;
        std::vector<double> labels;
        for (std::size_t i = at; i < end; ++i) {
          const auto& design =
              data[static_cast<std::size_t>(p)].designs[static_cast<std::size_t>(pool[i])];
          configs.push_back(design.config);
          labels.push_back(design.y);
        }
        const encoder::BatchedGraph graph =
            encoder::batch_graphs(*data[static_cast<std::size_t>(p)].kernel, configs);
        Tape tape;
        const nn::TapeBinding binding = bind_params(tape, model->params(), true);
        Rng dropout_rng(rng.next_u64());
        Tape::VarId loss = model->build_loss(tape, binding, graph, labels, &dropout_rng);
        if (!std::isfinite(tape.val(loss)(0, 0)))
          throw std::runtime_error("train_ensemble: loss diverged (NaN)");
        tape.backward(loss);
        std::vector<Matrix> grads = model->params().zero_grads();
        collect_grads(tape, binding, grads);
        optimizer.step(model->params(), grads);
      }
    }
  }
  *test_mse = eval_mse(*model, data, split.test.empty() ? split.val : split.test);
  return model;
}

}  // namespace

Ensemble train_ensemble(const std::vector<ProgramData>& actual_data, int n_members,
                        const std::vector<std::uint64_t>& seeds, const EnsembleTrainOptions& opts,
                        const SurrogateConfig& cfg) {
  if (actual_data.empty()) throw std::invalid_argument("train_ensemble: empty dataset");
  if (static_cast<int>(seeds.size()) != n_members)
    throw std::invalid_argument("train_ensemble: need one seed per member");

  Ensemble ensemble;
  ensemble.members.resize(static_cast<std::size_t>(n_members));
  ensemble.report.member_test_mse.resize(static_cast<std::size_t>(n_members));

  const int n_threads = std::max(1, std::min(opts.threads, n_members));
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t]() {
      try {
        for (int i = t; i < n_members; i += n_threads) {
          double mse = 0.0;
          ensemble.members[static_cast<std::size_t>(i)] =
              train_member(actual_data, seeds[static_cast<std::size_t>(i)], opts, cfg, &mse);
          ensemble.report.member_test_mse[static_cast<std::size_t>(i)] = mse;
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  double mean = 0.0;
  for (double m : ensemble.report.member_test_mse) mean += m;
  mean /= static_cast<double>(n_members);
  double var = 0.0;
  for (double m : ensemble.report.member_test_mse) var += (m - mean) * (m - mean);
  ensemble.report.mean_test_mse = mean;
  ensemble.report.std_test_mse = std::sqrt(var / static_cast<double>(n_members));
  return ensemble;
}

SyntheticFunction::SyntheticFunction(std::shared_ptr<const SurrogateRegressor> member,
                                     int member_index, std::uint64_t dropout_seed)
    : member_(std::move(member)), member_index_(member_index), dropout_seed_(dropout_seed) {
  const auto& cfg = member_->config();
  Rng rng(Rng::mix(dropout_seed, 0x6d61736b));
  for (int l = 0; l < cfg.gnn.layers; ++l)
    masks_.push_back(encoder::frozen_channel_mask(cfg.gnn.width, cfg.gnn.dropout, rng));
  masks_.push_back(encoder::frozen_channel_mask(cfg.head_hidden, cfg.gnn.dropout, rng));
  id_ = "m" + std::to_string(member_index) + "-d" + std::to_string(dropout_seed);
}

std::vector<double> SyntheticFunction::evaluate(const Kernel& k,
                                                const std::vector<PragmaConfig>& configs) const {
  encoder::DropoutPlan dropout;
  dropout.frozen = &masks_;
  return member_->predict(k, configs, dropout);
}

SyntheticFunction spawn_synthetic_function(const Ensemble& ensemble, int member_index,
                                           std::uint64_t dropout_seed) {
  if (member_index < 0 || member_index >= static_cast<int>(ensemble.members.size()))
    throw std::out_of_range("spawn_synthetic_function: member index " +
                            std::to_string(member_index) + " out of range");
  return SyntheticFunction(ensemble.members[static_cast<std::size_t>(member_index)], member_index,
                           dropout_seed);
}

namespace {

std::vector<PragmaConfig> sample_weak_configs(const kernel::DesignSpace& space, int count,
                                              std::uint64_t seed) {
  const std::uint64_t total = space.size();
  std::vector<PragmaConfig> configs;
  if (count <= 0) return configs;
  if (total >= static_cast<std::uint64_t>(count)) {
    Rng rng(seed);
    std::set<std::vector<double>> seen;
    while (configs.size() < static_cast<std::size_t>(count)) {
      PragmaConfig c = kernel::sample_config(space, rng);
      if (seen.insert(c.flatten()).second) configs.push_back(std::move(c));
    }
  } else {
    Rng rng(seed);
    for (int i = 0; i < count; ++i) configs.push_back(kernel::sample_config(space, rng));
  }
  return configs;
}

// actual labels take precedence: weak configs colliding with actual-labeled
// ones are dropped, which also keeps weak labels on unseen configurations
void drop_actual_collisions(std::vector<LabeledDesign>& weak,
                            const std::vector<LabeledDesign>& actual) {
  std::set<std::vector<double>> seen;
  for (const auto& d : actual) seen.insert(d.config.flatten());
  std::erase_if(weak, [&](const LabeledDesign& d) { return seen.contains(d.config.flatten()); });
}

LabeledDesign weak_design(const Kernel& k, PragmaConfig config, double y, const std::string& fn_id,
                          double base_latency, const oracle::OracleConstants& constants) {
  LabeledDesign d;
  d.kernel_id = k.id;
  d.latency_cycles = oracle::denormalize_label(y, base_latency);
  d.resources = oracle::resources(k, config, constants);
  d.config = std::move(config);
  d.y = y;
  d.valid = d.resources.within(1.0);
  d.label_kind = oracle::LabelKind::weak;
  d.source_function = fn_id;
  return d;
}

}  // namespace

std::vector<LabeledDesign> generate_weak_labels(const Kernel& k, const kernel::DesignSpace& space,
                                                const SyntheticFunction& fn, int count,
                                                std::uint64_t seed,
                                                const oracle::OracleConstants& constants) {
  std::vector<LabeledDesign> out;
  if (count <= 0) return out;
  std::vector<PragmaConfig> configs = sample_weak_configs(space, count, seed);
  const std::vector<double> ys = fn.evaluate(k, configs);
  const double base = oracle::latency(k, kernel::default_config(space), constants);
  out.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i)
    out.push_back(weak_design(k, std::move(configs[i]), ys[i], fn.id(), base, constants));
  return out;
}

HybridDataset build_hybrid_dataset(const std::vector<ProgramData>& actual_contexts,
                                   const Ensemble& ensemble, const WeakLabelOptions& opts,
                                   const oracle::OracleConstants& constants) {
  if (opts.ratio < 0.0 || opts.ratio > 1.0)
    throw std::invalid_argument("build_hybrid_dataset: ratio must be in [0, 1]");
  if (opts.ratio > 0.0 && ensemble.members.empty())
    throw std::invalid_argument("build_hybrid_dataset: nonzero ratio needs a trained ensemble");

  HybridDataset ds;
  ds.ratio = opts.ratio;
  for (const auto& pd : actual_contexts) {
    LabeledContext ctx;
    ctx.kernel = pd.kernel;
    ctx.designs = pd.designs;
    ds.actual.push_back(std::move(ctx));
  }
  if (opts.ratio == 0.0 || opts.pairs == 0) return ds;

  std::vector<SyntheticFunction> pool;
  for (int i = 0; i < opts.n_functions; ++i)
    pool.push_back(spawn_synthetic_function(ensemble,
                                            i % static_cast<int>(ensemble.members.size()),
                                            Rng::mix(opts.seed, 0x666e00 + static_cast<std::uint64_t>(i))));

  Rng rng(Rng::mix(opts.seed, 0x70616972));
  const std::size_t max_pairs =
      actual_contexts.size() * static_cast<std::size_t>(opts.n_functions);
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(opts.pairs), max_pairs);
  std::set<std::pair<int, int>> used;
  while (ds.weak.size() < want) {
    const int p = static_cast<int>(rng.bounded(actual_contexts.size()));
    const int f = static_cast<int>(rng.bounded(pool.size()));
    if (!used.insert({p, f}).second) continue;  // each (P, theta) pair defines a unique context
    const auto& pd = actual_contexts[static_cast<std::size_t>(p)];
    const kernel::DesignSpace space = kernel::build_design_space(*pd.kernel);
    LabeledContext ctx;
    ctx.kernel = pd.kernel;
    ctx.source_function = pool[static_cast<std::size_t>(f)].id();
    ctx.designs = generate_weak_labels(*pd.kernel, space, pool[static_cast<std::size_t>(f)],
                                       opts.configs_per_pair, rng.next_u64(), constants);
    drop_actual_collisions(ctx.designs, pd.designs);
    ds.weak.push_back(std::move(ctx));
  }
  return ds;
}

GpFunction::GpFunction(int dim, double length_scale, double scale, std::uint64_t seed)
    : dim_(dim),
      length_scale_(length_scale),
      scale_(scale),
      rng_(Rng::mix(seed, 0x6770)),
      id_("gp-s" + std::to_string(seed)) {
  cached_x_.resize(0, dim);
  cached_y_.resize(0);
}

double GpFunction::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  const double d2 = (a - b).squaredNorm();
  if (length_scale_ < 1e-9) return d2 == 0.0 ? scale_ * scale_ : 0.0;
  return scale_ * scale_ * std::exp(-d2 / (2.0 * length_scale_ * length_scale_));
}

Eigen::VectorXd GpFunction::evaluate_batch(const nn::Matrix& points) {
  constexpr double kJitter = 1e-6;
  const Eigen::Index n_new = points.rows();
  if (points.cols() != dim_) throw std::invalid_argument("GpFunction: wrong input dimension");
  if (n_new == 0) return Eigen::VectorXd(0);
  const Eigen::Index n_old = cached_x_.rows();

  auto kmat = [&](const nn::Matrix& a, const nn::Matrix& b) {
    nn::Matrix k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < b.rows(); ++j)
        k(i, j) = kernel(a.row(i).transpose(), b.row(j).transpose());
    return k;
  };

  nn::Matrix k22 = kmat(points, points);
  k22.diagonal().array() += kJitter;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_new);
  nn::Matrix cov = k22;
  if (n_old > 0) {
    nn::Matrix k11 = kmat(cached_x_, cached_x_);
    k11.diagonal().array() += kJitter;
    const nn::Matrix k21 = kmat(points, cached_x_);
    const Eigen::LLT<nn::Matrix> llt(k11);
    const nn::Matrix solved = llt.solve(k21.transpose());  // K11^-1 K12
    mean = k21 * llt.solve(cached_y_);
    cov = k22 - k21 * solved;
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += kJitter;
  }
  Eigen::LLT<nn::Matrix> llt(cov);
  nn::Matrix chol;
  if (llt.info() == Eigen::Success) {
    chol = llt.matrixL();
  } else {
    // fall back to an eigen-decomposition square root for nearly singular covariances
    Eigen::SelfAdjointEigenSolver<nn::Matrix> es(cov);
    chol = es.eigenvectors() *
           es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  Eigen::VectorXd z(n_new);
  for (Eigen::Index i = 0; i < n_new; ++i) z(i) = rng_.gaussian();
  const Eigen::VectorXd y = mean + chol * z;

  cached_x_.conservativeResize(n_old + n_new, dim_);
  cached_x_.bottomRows(n_new) = points;
  cached_y_.conservativeResize(n_old + n_new);
  cached_y_.tail(n_new) = y;
  return y;
}

double GpFunction::evaluate(const Eigen::VectorXd& x) {
  nn::Matrix p(1, dim_);
  p.row(0) = x.transpose();
  return evaluate_batch(p)(0);
}

namespace {

nn::Matrix config_features(const std::vector<PragmaConfig>& configs, int padded_dim) {
  const int dim = padded_dim > 0 ? padded_dim : (configs.empty() ? 0 : configs[0].dimension());
  nn::Matrix x = nn::Matrix::Zero(static_cast<Eigen::Index>(configs.size()), dim);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto flat = configs[i].flatten();
    for (std::size_t j = 0; j < flat.size() && j < static_cast<std::size_t>(dim); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[j];
  }
  return x;
}

}  // namespace

std::vector<LabeledDesign> gp_weak_labels(const Kernel& k, const kernel::DesignSpace& space,
                                          const GpRanges& ranges, std::uint64_t seed, int count,
                                          int padded_dim, const oracle::OracleConstants& constants) {
  std::vector<LabeledDesign> out;
  if (count <= 0) return out;
  Rng rng(Rng::mix(seed, 0x6770776c));
  const double l = rng.uniform(ranges.l_min, ranges.l_max);
  const double sigma = rng.uniform(ranges.sigma_min, ranges.sigma_max);
  const int dim = padded_dim > 0 ? padded_dim : space.dimension();
  GpFunction gp(dim, l, sigma, seed);

  std::vector<PragmaConfig> configs = sample_weak_configs(space, count, rng.next_u64());
  const nn::Matrix x = config_features(configs, dim);
  const Eigen::VectorXd ys = gp.evaluate_batch(x);
  const double base = oracle::latency(k, kernel::default_config(space), constants);
  out.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i)
    out.push_back(weak_design(k, std::move(configs[i]), ys(static_cast<Eigen::Index>(i)), gp.id(),
                              base, constants));
  return out;
}

HybridDataset build_gp_hybrid_dataset(const std::vector<ProgramData>& actual_contexts,
                                      const GpRanges& ranges, const WeakLabelOptions& opts,
                                      const oracle::OracleConstants& constants) {
  if (opts.ratio < 0.0 || opts.ratio > 1.0)
    throw std::invalid_argument("build_gp_hybrid_dataset: ratio must be in [0, 1]");
  HybridDataset ds;
  ds.ratio = opts.ratio;
  for (const auto& pd : actual_contexts) {
    LabeledContext ctx;
    ctx.kernel = pd.kernel;
    ctx.designs = pd.designs;
    ds.actual.push_back(std::move(ctx));
  }
  if (opts.ratio == 0.0 || opts.pairs == 0) return ds;

  int max_dim = 0;
  for (const auto& pd : actual_contexts)
    max_dim = std::max(max_dim, 3 * pd.kernel->loop_count());

  Rng rng(Rng::mix(opts.seed, 0x67707072));
  for (int i = 0; i < opts.pairs; ++i) {
    const int p = static_cast<int>(rng.bounded(actual_contexts.size()));
    const auto& pd = actual_contexts[static_cast<std::size_t>(p)];
    const kernel::DesignSpace space = kernel::build_design_space(*pd.kernel);
    const std::uint64_t gp_seed = rng.next_u64();
    LabeledContext ctx;
    ctx.kernel = pd.kernel;
    ctx.designs = gp_weak_labels(*pd.kernel, space, ranges, gp_seed, opts.configs_per_pair,
                                 max_dim, constants);
    drop_actual_collisions(ctx.designs, pd.designs);
    ctx.source_function = ctx.designs.empty() ? ("gp-s" + std::to_string(gp_seed))
                                              : *ctx.designs.front().source_function;
    ds.weak.push_back(std::move(ctx));
  }
  return ds;
}

}  // namespace iceberg::surrogate

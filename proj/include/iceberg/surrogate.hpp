#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iceberg/encoder.hpp"
#include "iceberg/oracle.hpp"

namespace iceberg::surrogate {

struct SurrogateConfig {
  encoder::GnnConfig gnn;
  int head_hidden = 128;
};

// One labeled program: the unit contexts are built from.
struct ProgramData {
  std::shared_ptr<const kernel::Kernel> kernel;
  std::vector<oracle::LabeledDesign> designs;
};

// GNN encoder + 2-layer regression head trained on normalized labels.
class SurrogateRegressor {
 public:
  SurrogateRegressor(const SurrogateConfig& cfg, std::uint64_t seed);

  std::vector<double> predict(const kernel::Kernel& k,
                              const std::vector<kernel::PragmaConfig>& configs,
                              const encoder::DropoutPlan& dropout = {}) const;

  // Training-mode loss over one batched graph; labels has one entry per config.
  nn::Tape::VarId build_loss(nn::Tape& tape, const nn::TapeBinding& binding,
                             const encoder::BatchedGraph& graph, const std::vector<double>& labels,
                             Rng* dropout_rng) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const SurrogateConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }

  // affine label transform fitted on the training split; the network always
  // regresses standardized targets
  void set_label_stats(double mean, double std_dev) {
    label_mean_ = mean;
    label_std_ = std_dev > 0.0 ? std_dev : 1.0;
  }
  double label_mean() const { return label_mean_; }
  double label_std() const { return label_std_; }

 private:
  friend class SyntheticFunction;
  nn::Tape::VarId build_head(nn::Tape& tape, const nn::TapeBinding& binding,
                             nn::Tape::VarId embedding, const encoder::DropoutPlan& dropout,
                             Rng* dropout_rng) const;

  SurrogateConfig cfg_;
  std::uint64_t seed_;
  double label_mean_ = 0.0;
  double label_std_ = 1.0;
  nn::ParamStore params_;
  std::unique_ptr<encoder::GnnEncoder> encoder_;
  nn::ParamStore::Handle head_w1_, head_b1_, head_w2_, head_b2_;
};

struct EnsembleReport {
  std::vector<double> member_test_mse;
  double mean_test_mse = 0.0;
  double std_test_mse = 0.0;
};

struct EnsembleTrainOptions {
  int epochs = 30;
  int batch = 32;
  double lr = 1e-3;
  int threads = 2;
};

struct Ensemble {
  std::vector<std::shared_ptr<const SurrogateRegressor>> members;
  EnsembleReport report;
};

// Each member trains with MSE on its own seeded 70/15/15 design split.
Ensemble train_ensemble(const std::vector<ProgramData>& actual_data, int n_members,
                        const std::vector<std::uint64_t>& seeds, const EnsembleTrainOptions& opts,
                        const SurrogateConfig& cfg = {});

// A frozen-mask member: masks are sampled once from dropout_seed, then the
// function is pure. theta_j in the weak-label mechanism.
class SyntheticFunction {
 public:
  SyntheticFunction(std::shared_ptr<const SurrogateRegressor> member, int member_index,
                    std::uint64_t dropout_seed);

  std::vector<double> evaluate(const kernel::Kernel& k,
                               const std::vector<kernel::PragmaConfig>& configs) const;
  const std::string& id() const { return id_; }
  int member_index() const { return member_index_; }

 private:
  std::shared_ptr<const SurrogateRegressor> member_;
  int member_index_;
  std::uint64_t dropout_seed_;
  std::vector<Eigen::RowVectorXd> masks_;  // gnn layers + head hidden
  std::string id_;
};

SyntheticFunction spawn_synthetic_function(const Ensemble& ensemble, int member_index,
                                           std::uint64_t dropout_seed);

std::vector<oracle::LabeledDesign> generate_weak_labels(
    const kernel::Kernel& k, const kernel::DesignSpace& space, const SyntheticFunction& fn,
    int count, std::uint64_t seed, const oracle::OracleConstants& constants = {});

// One meta-learning task: designs sharing a program and a source function.
struct LabeledContext {
  std::shared_ptr<const kernel::Kernel> kernel;
  std::optional<std::string> source_function;  // absent <=> actual labels
  std::vector<oracle::LabeledDesign> designs;
};

struct HybridDataset {
  std::vector<LabeledContext> actual;
  std::vector<LabeledContext> weak;
  double ratio = 0.0;  // weak share of training draws
};

struct WeakLabelOptions {
  int pairs = 300;        // L
  int configs_per_pair = 100;  // K
  int n_functions = 8;
  double ratio = 0.5;
  std::uint64_t seed = 0;
};

HybridDataset build_hybrid_dataset(const std::vector<ProgramData>& actual_contexts,
                                   const Ensemble& ensemble, const WeakLabelOptions& opts,
                                   const oracle::OracleConstants& constants = {});

// Lazily realized RBF-kernel sample path; reproducible per seed.
class GpFunction {
 public:
  GpFunction(int dim, double length_scale, double scale, std::uint64_t seed);

  double evaluate(const Eigen::VectorXd& x);
  Eigen::VectorXd evaluate_batch(const nn::Matrix& points);  // rows are points
  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  const std::string& id() const { return id_; }

 private:
  int dim_;
  double length_scale_, scale_;
  Rng rng_;
  std::string id_;
  nn::Matrix cached_x_;      // grows as points are realized
  Eigen::VectorXd cached_y_;
};

struct GpRanges {
  double l_min = 0.0, l_max = 7.0;
  double sigma_min = 1.0, sigma_max = 10.0;
};

std::vector<oracle::LabeledDesign> gp_weak_labels(const kernel::Kernel& k,
                                                  const kernel::DesignSpace& space,
                                                  const GpRanges& ranges, std::uint64_t seed,
                                                  int count, int padded_dim = 0,
                                                  const oracle::OracleConstants& constants = {});

// GP-sourced counterpart of build_hybrid_dataset (weak contexts only differ).
HybridDataset build_gp_hybrid_dataset(const std::vector<ProgramData>& actual_contexts,
                                      const GpRanges& ranges, const WeakLabelOptions& opts,
                                      const oracle::OracleConstants& constants = {});

}  // namespace iceberg::surrogate

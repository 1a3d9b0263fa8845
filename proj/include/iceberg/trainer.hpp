#pragma once

#include <functional>
#include <string>
#include <vector>

#include "iceberg/gtnp.hpp"
#include "iceberg/surrogate.hpp"

namespace iceberg::trainer {

enum class Preset : int { ice_a = 0, ice_h = 1, ice_a_ft = 2, ice_h_ft = 3 };

const char* to_string(Preset p);
Preset preset_from_string(const std::string& s);
double preset_ratio(Preset p);      // 0 for Ice-A*, 0.5 for Ice-H*
bool preset_finetunes(Preset p);    // FT presets add a 200-step adaptation phase

struct TrainConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 1e-5;
  int steps = 2000;
  int batch = 16;
  std::uint64_t seed = 1;
  Preset preset = Preset::ice_a;
  int seq_len = 60;   // N per training sequence
  int m_min = 5;      // m ~ U[m_min, N - m_min]
  int finetune_steps = 200;
  int finetune_batch = 8;
  int threads = 2;
};

// Draws contexts with the weak:actual ratio enforced by deterministic
// interleaving, then samples one sequence from the chosen context.
class SequenceSampler {
 public:
  SequenceSampler(const surrogate::HybridDataset& dataset, int seq_len, int m_min, Rng rng);
  gtnp::Sequence next();
  int skipped_contexts() const { return skipped_; }

 private:
  const surrogate::HybridDataset* dataset_;
  std::vector<int> actual_pool_, weak_pool_;  // contexts with >= 2 designs
  int seq_len_, m_min_;
  Rng rng_;
  long draw_count_ = 0;
  int skipped_ = 0;
};

gtnp::Sequence sample_training_sequence(SequenceSampler& sampler);

struct StepLog {
  int step = 0;
  double loss = 0.0;
};

gtnp::GtnpModel pretrain(const gtnp::GtnpConfig& model_cfg, const TrainConfig& cfg,
                         const surrogate::HybridDataset& dataset,
                         std::vector<StepLog>* log = nullptr);

// Copy-on-write: the input model is untouched. Sequences are resampled from
// the adaptation set each step.
gtnp::GtnpModel finetune(const gtnp::GtnpModel& model,
                         const std::vector<oracle::LabeledDesign>& adaptation_designs,
                         const kernel::Kernel& k, const TrainConfig& cfg, int steps = -1,
                         std::vector<StepLog>* log = nullptr);

struct ProgramEval {
  std::string kernel_id;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  std::vector<double> per_seed;
  int n_targets = 0;
};

struct EvalReport {
  std::vector<ProgramEval> programs;
  double geomean_mse = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> skipped;  // programs lacking context_size + 1 designs
};

// geometric mean; 0 if any entry is <= 0
double geomean(const std::vector<double>& values);

EvalReport evaluate_fewshot(const gtnp::GtnpModel& model,
                            const std::vector<surrogate::LabeledContext>& test_programs,
                            int context_size = 50,
                            const std::vector<std::uint64_t>& seeds = {1, 2, 3});

using Predictor = std::function<std::vector<double>(
    const kernel::Kernel&, const std::vector<kernel::PragmaConfig>&)>;

// Same protocol driven by an arbitrary predictor (context is ignored by it).
EvalReport evaluate_fewshot_with(const Predictor& predictor,
                                 const std::vector<surrogate::LabeledContext>& test_programs,
                                 int context_size = 50,
                                 const std::vector<std::uint64_t>& seeds = {1, 2, 3});

// FT protocol: per (program, seed), fine-tune on the sampled context designs
// before predicting with them in context.
EvalReport evaluate_fewshot_ft(const gtnp::GtnpModel& base,
                               const std::vector<surrogate::LabeledContext>& test_programs,
                               const TrainConfig& cfg, int context_size = 50,
                               const std::vector<std::uint64_t>& seeds = {1, 2, 3});

Predictor oracle_predictor(const oracle::OracleConstants& constants = {});
Predictor incontext_predictor(const gtnp::GtnpModel& model,
                              std::vector<oracle::LabeledDesign> context);

struct OptEntry {
  std::string kernel_id;
  double best_latency = 0.0;  // best@K
  double ideal_latency = 0.0;
  bool substituted = false;   // all selected designs invalid -> default design
  int k = 1;
};

OptEntry best_at_k(const Predictor& predictor, const kernel::Kernel& k,
                   const std::vector<oracle::LabeledDesign>& labeled_samples, int top_k,
                   double resource_bound = 0.8, const oracle::OracleConstants& constants = {});

}  // namespace iceberg::trainer

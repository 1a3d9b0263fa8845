#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "iceberg/oracle.hpp"
#include "iceberg/surrogate.hpp"
#include "iceberg/trainer.hpp"

namespace iceberg::workbench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusConfig {
  int n_kernels = 30;
  int n_test_kernels = 8;
  std::uint64_t seed = 1;
  int q_min = 2, q_max = 4;
  std::int64_t mem_min = 2048, mem_max = 32768;
  bool multi_function = false;
  std::vector<std::string> domains;            // defaults to the curated list
  std::vector<std::string> kernel_paths;       // load instead of generating
};

struct DseConfig {
  std::string strategy = "random";
  int budget = 120;
  std::uint64_t seed = 3;
};

struct EnsembleConfig {
  int members = 8;
  int epochs = 30;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  int threads = 2;
};

struct WeakLabelConfig {
  int pairs = 60;             // L
  int configs_per_pair = 60;  // K
  int n_functions = 8;
  std::string source = "ensemble";  // or "gp"
  double gp_l_min = 0.0, gp_l_max = 7.0;
  double gp_sigma_min = 1.0, gp_sigma_max = 10.0;
  std::uint64_t seed = 11;
};

struct ModelSection {
  int gnn_width = 128;
  int gnn_layers = 3;
  int d_model = 128;
  int layers = 6;
  int heads = 8;
  int d_ff = 128;
  double dropout = 0.1;
  int max_seq_len = 128;
};

struct TrainSection {
  std::string preset = "Ice-A";
  int steps = 2000;
  int batch = 16;
  int seq_len = 60;
  int m_min = 5;
  double lr = 5e-4;
  double beta1 = 0.9, beta2 = 0.99;
  double weight_decay = 1e-5;
  std::uint64_t seed = 1;
  int finetune_steps = 200;
  int finetune_batch = 8;
  int threads = 2;
};

struct EvalSection {
  int context_size = 50;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

struct OptimizeSection {
  int k = 1;
  double resource_bound = 0.8;
};

struct ExperimentConfig {
  CorpusConfig corpus;
  oracle::OracleConstants oracle_constants;
  DseConfig dse;
  EnsembleConfig ensemble;
  WeakLabelConfig weaklabel;
  ModelSection model;
  TrainSection train;
  EvalSection eval;
  OptimizeSection optimize;

  static ExperimentConfig from_json_text(const std::string& text);  // unknown keys rejected
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_json() const;  // canonical
  std::string hash() const;

  gtnp::GtnpConfig gtnp_config() const;
  trainer::TrainConfig train_config() const;
};

struct DatasetManifest {
  std::int64_t programs_generated = 0;
  std::int64_t synthesizable = 0;
  std::int64_t labeled_programs = 0;
  std::int64_t actual_labels = 0;
  std::int64_t weak_labels = 0;
  std::string oracle_hash;
  std::uint64_t creation_seed = 0;
};

struct ValidationResult {
  bool ok = false;
  std::vector<std::string> errors;  // with file:line locations
  DatasetManifest manifest;
};

// Recounts and revalidates every stored design against its kernel's space.
ValidationResult validate_dataset(const std::filesystem::path& dir);

// Loaded corpus + labels, shared by the pipeline stages.
struct Workspace {
  std::vector<surrogate::ProgramData> train_programs;
  std::vector<surrogate::ProgramData> test_programs;
};

int run_cli(const std::vector<std::string>& args);

}  // namespace iceberg::workbench

#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "iceberg/kernel.hpp"
#include "iceberg/nn/params.hpp"
#include "iceberg/nn/tape.hpp"

namespace iceberg::encoder {

struct GnnConfig {
  int width = 128;
  int layers = 3;
  double dropout = 0.1;
};

constexpr int kNodeInputDim = kernel::kStaticFeatureDim + kernel::kPragmaFeatureDim;

// One kernel evaluated under C pragma configs, flattened for the encoder.
// Rows are node-major: row = node * C + config, nodes sorted by type so each
// type's projection is a contiguous block.
struct BatchedGraph {
  int n_nodes = 0;
  int n_configs = 0;
  nn::Matrix input;  // (n_nodes * C) x kNodeInputDim
  // per node type: (first node, node count) in canonical order
  std::array<std::pair<int, int>, kernel::kNumNodeTypes> type_ranges{};
  std::shared_ptr<const std::vector<std::pair<int, int>>> edges;  // symmetrized
};

BatchedGraph batch_graphs(const kernel::Kernel& k,
                          const std::vector<kernel::PragmaConfig>& configs);
BatchedGraph batch_from_program_graphs(const std::vector<kernel::ProgramGraph>& graphs);

// How a forward pass treats dropout: eval (none), stochastic (training), or
// frozen per-channel masks (synthetic functions).
struct DropoutPlan {
  Rng* stochastic = nullptr;
  const std::vector<Eigen::RowVectorXd>* frozen = nullptr;  // one row per layer, prescaled
};

// Message-passing encoder h_phi1: per-node-type input projections, sum
// aggregation over edges, mean readout to a fixed-width embedding.
class GnnEncoder {
 public:
  GnnEncoder(nn::ParamStore& params, const GnnConfig& cfg, Rng& init_rng);

  // Returns a (C x width) embedding matrix var, one row per config.
  nn::Tape::VarId encode(nn::Tape& tape, const nn::TapeBinding& binding,
                         const BatchedGraph& graph, const DropoutPlan& dropout = {}) const;

  int width() const { return cfg_.width; }
  int layers() const { return cfg_.layers; }
  double dropout_rate() const { return cfg_.dropout; }

 private:
  GnnConfig cfg_;
  std::array<nn::ParamStore::Handle, kernel::kNumNodeTypes> type_w_{};
  std::array<nn::ParamStore::Handle, kernel::kNumNodeTypes> type_b_{};
  struct Layer {
    nn::ParamStore::Handle w_self, w_nbr, bias;
  };
  std::vector<Layer> layers_;
};

// Prescaled Bernoulli channel mask used by frozen-dropout synthetic functions.
Eigen::RowVectorXd frozen_channel_mask(int width, double rate, Rng& rng);

}  // namespace iceberg::encoder

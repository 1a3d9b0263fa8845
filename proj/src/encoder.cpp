#include "iceberg/encoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace iceberg::encoder {

using kernel::NodeType;
using nn::Matrix;
using nn::Tape;

namespace {

BatchedGraph canonicalize(const std::vector<kernel::ProgramGraph>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("batch_graphs: no graphs");
  const auto& g0 = graphs.front();
  const int n = static_cast<int>(g0.nodes.size());
  const int c = static_cast<int>(graphs.size());
  if (n == 0) throw std::invalid_argument("batch_graphs: empty graph");

  // stable sort node indices by type; structure must match across configs
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return static_cast<int>(g0.nodes[static_cast<std::size_t>(a)].type) <
           static_cast<int>(g0.nodes[static_cast<std::size_t>(b)].type);
  });
  std::vector<int> rank(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;

  BatchedGraph bg;
  bg.n_nodes = n;
  bg.n_configs = c;
  for (auto& tr : bg.type_ranges) tr = {0, 0};
  for (int i = 0; i < n; ++i) {
    const auto t = static_cast<int>(g0.nodes[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].type);
    auto& tr = bg.type_ranges[static_cast<std::size_t>(t)];
    if (tr.second == 0) tr.first = i;
    tr.second += 1;
  }

  bg.input = Matrix::Zero(static_cast<Eigen::Index>(n) * c, kNodeInputDim);
  for (const auto& g : graphs)
    if (g.nodes.size() != g0.nodes.size() || g.edges.size() != g0.edges.size())
      throw std::invalid_argument("batch_graphs: configs yield differing graph structures");
  for (int ci = 0; ci < c; ++ci) {
    const auto& g = graphs[static_cast<std::size_t>(ci)];
    for (int i = 0; i < n; ++i) {
      const auto& node = g.nodes[static_cast<std::size_t>(i)];
      const Eigen::Index row = static_cast<Eigen::Index>(rank[static_cast<std::size_t>(i)]) * c + ci;
      bg.input.row(row).head(kernel::kStaticFeatureDim) = node.static_features.transpose();
      bg.input.row(row).tail(kernel::kPragmaFeatureDim) = node.pragma_features.transpose();
    }
  }

  auto edges = std::make_shared<std::vector<std::pair<int, int>>>();
  edges->reserve(g0.edges.size() * 2);
  for (const auto& e : g0.edges) {
    const int s = rank[static_cast<std::size_t>(e.src)];
    const int d = rank[static_cast<std::size_t>(e.dst)];
    edges->emplace_back(s, d);
    edges->emplace_back(d, s);
  }
  bg.edges = std::move(edges);
  return bg;
}

}  // namespace

BatchedGraph batch_graphs(const kernel::Kernel& k,
                          const std::vector<kernel::PragmaConfig>& configs) {
  if (configs.empty()) throw std::invalid_argument("batch_graphs: no configs");
  std::vector<kernel::ProgramGraph> graphs;
  graphs.reserve(configs.size());
  for (const auto& cfg : configs) graphs.push_back(kernel::kernel_to_graph(k, cfg));
  return canonicalize(graphs);
}

BatchedGraph batch_from_program_graphs(const std::vector<kernel::ProgramGraph>& graphs) {
  return canonicalize(graphs);
}

GnnEncoder::GnnEncoder(nn::ParamStore& params, const GnnConfig& cfg, Rng& init_rng) : cfg_(cfg) {
  static const char* type_names[] = {"loop", "array", "op_group", "pragma_slot"};
  for (int t = 0; t < kernel::kNumNodeTypes; ++t) {
    type_w_[static_cast<std::size_t>(t)] = params.add_linear_weight(
        std::string("gnn/in/") + type_names[t] + "/w", kNodeInputDim, cfg_.width, init_rng);
    type_b_[static_cast<std::size_t>(t)] =
        params.add(std::string("gnn/in/") + type_names[t] + "/b", 1, cfg_.width);
  }
  for (int l = 0; l < cfg_.layers; ++l) {
    Layer layer;
    const std::string prefix = "gnn/layer" + std::to_string(l);
    layer.w_self = params.add_linear_weight(prefix + "/w_self", cfg_.width, cfg_.width, init_rng);
    layer.w_nbr = params.add_linear_weight(prefix + "/w_nbr", cfg_.width, cfg_.width, init_rng);
    layer.bias = params.add(prefix + "/b", 1, cfg_.width);
    layers_.push_back(layer);
  }
}

nn::Tape::VarId GnnEncoder::encode(Tape& tape, const nn::TapeBinding& binding,
                                   const BatchedGraph& graph, const DropoutPlan& dropout) const {
  const int c = graph.n_configs;
  auto p = [&](nn::ParamStore::Handle h) { return binding.vars[static_cast<std::size_t>(h.idx)]; };

  Tape::VarId input = tape.constant(graph.input);
  std::vector<Tape::VarId> parts;
  for (int t = 0; t < kernel::kNumNodeTypes; ++t) {
    const auto [first, count] = graph.type_ranges[static_cast<std::size_t>(t)];
    if (count == 0) continue;
    Tape::VarId rows = tape.slice_rows(input, first * c, count * c);
    parts.push_back(tape.add_rowvec(tape.matmul(rows, p(type_w_[static_cast<std::size_t>(t)])),
                                    p(type_b_[static_cast<std::size_t>(t)])));
  }
  Tape::VarId h = parts.size() == 1 ? parts.front() : tape.vconcat(parts);

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Tape::VarId msg = tape.edge_gather_add(h, graph.edges, c, graph.n_nodes);
    Tape::VarId lin = tape.add_rowvec(
        tape.add(tape.matmul(h, p(layers_[l].w_self)), tape.matmul(msg, p(layers_[l].w_nbr))),
        p(layers_[l].bias));
    h = tape.gelu(lin);
    if (dropout.stochastic && cfg_.dropout > 0.0) {
      const double keep = 1.0 - cfg_.dropout;
      auto mask = std::make_shared<Matrix>(tape.val(h).rows(), tape.val(h).cols());
      for (Eigen::Index col = 0; col < mask->cols(); ++col)
        for (Eigen::Index row = 0; row < mask->rows(); ++row)
          (*mask)(row, col) = dropout.stochastic->uniform() < keep ? 1.0 / keep : 0.0;
      h = tape.dropout_mask(h, std::move(mask));
    } else if (dropout.frozen) {
      h = tape.mul_rowvec_const(h, (*dropout.frozen)[l]);
    }
  }

  return tape.mean_node_blocks(h, graph.n_nodes, c);
}

Eigen::RowVectorXd frozen_channel_mask(int width, double rate, Rng& rng) {
  Eigen::RowVectorXd mask(width);
  const double keep = 1.0 - rate;
  for (int i = 0; i < width; ++i) mask(i) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mask;
}

}  // namespace iceberg::encoder

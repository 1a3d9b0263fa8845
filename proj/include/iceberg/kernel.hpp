#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iceberg/util/rng.hpp"

namespace iceberg::kernel {

struct OpCounts {
  std::int64_t adds = 0;
  std::int64_t mults = 0;
  std::int64_t loads = 0;
  std::int64_t stores = 0;

  std::int64_t total() const { return adds + mults + loads + stores; }
  bool operator==(const OpCounts&) const = default;
};

struct Loop {
  int id = 0;
  std::int64_t trip_count = 1;
  std::optional<int> parent;     // absent for root loops
  OpCounts body_ops;
  std::vector<std::string> array_refs;  // arrays touched by this loop's loads/stores

  bool operator==(const Loop&) const = default;
};

struct ArrayDecl {
  std::string name;
  int element_bits = 32;
  std::vector<std::int64_t> extent;

  std::int64_t element_count() const;
  std::int64_t footprint_bytes() const;
  bool operator==(const ArrayDecl&) const = default;
};

// A loop-nest program with constant trip counts; the unit "P".
struct Kernel {
  std::string id;
  std::string entry_name = "top";
  std::string domain_tag;
  std::vector<Loop> loops;   // ids must be 0..K-1 in order
  std::vector<ArrayDecl> arrays;

  int loop_count() const { return static_cast<int>(loops.size()); }
  std::vector<int> children_of(int loop_id) const;
  std::vector<int> root_loops() const;
  int depth_of(int loop_id) const;
  bool is_innermost(int loop_id) const;
  std::int64_t footprint_bytes() const;

  // Empty on success, human-readable violations otherwise.
  std::vector<std::string> validate() const;

  std::string to_json() const;
  static Kernel from_json(const std::string& text);
};

enum class PipelineMode : int { off = 0, cg = 1, fg = 2 };

const char* to_string(PipelineMode m);
PipelineMode pipeline_mode_from_string(const std::string& s);

struct LoopPragmas {
  std::int64_t parallel_factor = 1;
  PipelineMode pipeline_mode = PipelineMode::off;
  std::int64_t tile_factor = 1;
  bool operator==(const LoopPragmas&) const = default;
};

// One full pragma assignment; the unit "T" of dimension 3*K.
struct PragmaConfig {
  std::string kernel_id;
  std::vector<LoopPragmas> per_loop;

  int dimension() const { return 3 * static_cast<int>(per_loop.size()); }
  std::vector<double> flatten() const;  // (log2 parallel, mode index, log2 tile) per loop
  bool operator==(const PragmaConfig&) const = default;
  bool lex_less(const PragmaConfig& other) const;

  std::string to_json() const;
  static PragmaConfig from_json(const std::string& text);
};

struct LoopCandidates {
  std::vector<std::int64_t> parallel;     // sorted, contains 1
  std::vector<PipelineMode> pipeline;     // contains off
  std::vector<std::int64_t> tile;         // sorted, contains 1
};

struct DesignSpace {
  std::string kernel_id;
  std::vector<LoopCandidates> per_loop;

  int dimension() const { return 3 * static_cast<int>(per_loop.size()); }
  // Saturates at UINT64_MAX; K = 0 yields 1 (the empty config).
  std::uint64_t size() const;
  bool contains(const PragmaConfig& config) const;

  std::string to_json() const;
  static DesignSpace from_json(const std::string& text);
};

DesignSpace build_design_space(const Kernel& kernel);

// Full lexicographic product when it fits in `limit` (or limit absent),
// otherwise `limit` distinct uniform samples reproducible from `seed`.
std::vector<PragmaConfig> enumerate_configs(const DesignSpace& space,
                                            std::optional<std::uint64_t> limit,
                                            std::uint64_t seed);

PragmaConfig default_config(const DesignSpace& space);

PragmaConfig sample_config(const DesignSpace& space, Rng& rng);

enum class NodeType : int { loop = 0, array = 1, op_group = 2, pragma_slot = 3 };
constexpr int kNumNodeTypes = 4;

enum class EdgeType : int { parent_child = 0, loop_uses_array = 1, loop_owns_ops = 2, pragma_attaches_to_loop = 3 };

constexpr int kStaticFeatureDim = 9;
constexpr int kPragmaFeatureDim = 3;

struct GraphNode {
  NodeType type = NodeType::loop;
  Eigen::VectorXd static_features;  // kStaticFeatureDim
  Eigen::Vector3d pragma_features;  // zero except on pragma_slot nodes
};

struct GraphEdge {
  int src = 0;
  int dst = 0;
  EdgeType type = EdgeType::parent_child;
};

struct ProgramGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  bool connected() const;
};

// Deterministic encoding of (kernel, config). Throws std::invalid_argument on
// a config/kernel mismatch.
ProgramGraph kernel_to_graph(const Kernel& kernel, const PragmaConfig& config);

void validate_config_for(const Kernel& kernel, const DesignSpace& space,
                         const PragmaConfig& config);

}  // namespace iceberg::kernel

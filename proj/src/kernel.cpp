#include "iceberg/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace iceberg::kernel {

using nlohmann::json;

std::int64_t ArrayDecl::element_count() const {
  std::int64_t n = 1;
  for (auto e : extent) n *= e;
  return n;
}

std::int64_t ArrayDecl::footprint_bytes() const {
  return element_count() * (element_bits / 8);
}

std::vector<int> Kernel::children_of(int loop_id) const {
  std::vector<int> out;
  for (const auto& l : loops)
    if (l.parent && *l.parent == loop_id) out.push_back(l.id);
  return out;
}

std::vector<int> Kernel::root_loops() const {
  std::vector<int> out;
  for (const auto& l : loops)
    if (!l.parent) out.push_back(l.id);
  return out;
}

int Kernel::depth_of(int loop_id) const {
  int d = 0;
  const Loop* cur = &loops[static_cast<std::size_t>(loop_id)];
  while (cur->parent) {
    cur = &loops[static_cast<std::size_t>(*cur->parent)];
    ++d;
  }
  return d;
}

bool Kernel::is_innermost(int loop_id) const {
  return children_of(loop_id).empty();
}

std::int64_t Kernel::footprint_bytes() const {
  std::int64_t total = 0;
  for (const auto& a : arrays) total += a.footprint_bytes();
  return total;
}

std::vector<std::string> Kernel::validate() const {
  std::vector<std::string> errs;
  if (id.empty()) errs.push_back("kernel id empty");
  if (entry_name != "top") errs.push_back("entry point must be named \"top\", got \"" + entry_name + "\"");
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const auto& l = loops[i];
    if (l.id != static_cast<int>(i))
      errs.push_back("loop ids must be 0..K-1 in order; index " + std::to_string(i) +
                     " has id " + std::to_string(l.id));
    if (l.trip_count < 1)
      errs.push_back("loop " + std::to_string(l.id) + ": trip count must be a positive constant");
    if (l.parent) {
      if (*l.parent < 0 || *l.parent >= static_cast<int>(loops.size()))
        errs.push_back("loop " + std::to_string(l.id) + ": parent out of range");
      else if (*l.parent == l.id)
        errs.push_back("loop " + std::to_string(l.id) + ": self-parent");
    }
    if (l.body_ops.adds < 0 || l.body_ops.mults < 0 || l.body_ops.loads < 0 || l.body_ops.stores < 0)
      errs.push_back("loop " + std::to_string(l.id) + ": negative op count");
    for (const auto& name : l.array_refs) {
      const bool declared = std::any_of(arrays.begin(), arrays.end(),
                                        [&](const ArrayDecl& a) { return a.name == name; });
      if (!declared)
        errs.push_back("loop " + std::to_string(l.id) + ": references undeclared array \"" + name + "\"");
    }
    if ((l.body_ops.loads > 0 || l.body_ops.stores > 0) && l.array_refs.empty())
      errs.push_back("loop " + std::to_string(l.id) + ": loads/stores without any array reference");
  }
  // acyclicity: follow parents, cap at K steps
  for (const auto& l : loops) {
    int steps = 0;
    const Loop* cur = &l;
    while (cur->parent && steps <= static_cast<int>(loops.size())) {
      const int p = *cur->parent;
      if (p < 0 || p >= static_cast<int>(loops.size())) break;
      cur = &loops[static_cast<std::size_t>(p)];
      ++steps;
    }
    if (steps > static_cast<int>(loops.size())) {
      errs.push_back("loop parent chain has a cycle at loop " + std::to_string(l.id));
      break;
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& a : arrays) {
    if (!seen.insert(a.name).second) errs.push_back("duplicate array \"" + a.name + "\"");
    if (a.extent.empty()) errs.push_back("array \"" + a.name + "\": empty extent");
    for (auto e : a.extent)
      if (e < 1) errs.push_back("array \"" + a.name + "\": nonpositive extent");
    if (a.element_bits != 8 && a.element_bits != 16 && a.element_bits != 32 && a.element_bits != 64)
      errs.push_back("array \"" + a.name + "\": unsupported element width");
  }
  return errs;
}

namespace {

json op_counts_to_json(const OpCounts& c) {
  return json{{"adds", c.adds}, {"mults", c.mults}, {"loads", c.loads}, {"stores", c.stores}};
}

OpCounts op_counts_from_json(const json& j) {
  OpCounts c;
  c.adds = j.at("adds").get<std::int64_t>();
  c.mults = j.at("mults").get<std::int64_t>();
  c.loads = j.at("loads").get<std::int64_t>();
  c.stores = j.at("stores").get<std::int64_t>();
  return c;
}

}  // namespace

std::string Kernel::to_json() const {
  json j;
  j["id"] = id;
  j["entry_name"] = entry_name;
  j["domain_tag"] = domain_tag;
  j["loops"] = json::array();
  for (const auto& l : loops) {
    json jl;
    jl["id"] = l.id;
    jl["trip_count"] = l.trip_count;
    if (l.parent)
      jl["parent"] = *l.parent;
    else
      jl["parent"] = nullptr;
    jl["body_ops"] = op_counts_to_json(l.body_ops);
    jl["array_refs"] = l.array_refs;
    j["loops"].push_back(jl);
  }
  j["arrays"] = json::array();
  for (const auto& a : arrays) {
    j["arrays"].push_back(json{{"name", a.name}, {"element_bits", a.element_bits}, {"extent", a.extent}});
  }
  return j.dump();
}

Kernel Kernel::from_json(const std::string& text) {
  const json j = json::parse(text);
  Kernel k;
  k.id = j.at("id").get<std::string>();
  k.entry_name = j.at("entry_name").get<std::string>();
  k.domain_tag = j.value("domain_tag", std::string());
  for (const auto& jl : j.at("loops")) {
    Loop l;
    l.id = jl.at("id").get<int>();
    l.trip_count = jl.at("trip_count").get<std::int64_t>();
    if (!jl.at("parent").is_null()) l.parent = jl.at("parent").get<int>();
    l.body_ops = op_counts_from_json(jl.at("body_ops"));
    l.array_refs = jl.value("array_refs", std::vector<std::string>{});
    k.loops.push_back(std::move(l));
  }
  for (const auto& ja : j.at("arrays")) {
    ArrayDecl a;
    a.name = ja.at("name").get<std::string>();
    a.element_bits = ja.at("element_bits").get<int>();
    a.extent = ja.at("extent").get<std::vector<std::int64_t>>();
    k.arrays.push_back(std::move(a));
  }
  return k;
}

const char* to_string(PipelineMode m) {
  switch (m) {
    case PipelineMode::off: return "off";
    case PipelineMode::cg: return "cg";
    case PipelineMode::fg: return "fg";
  }
  return "off";
}

PipelineMode pipeline_mode_from_string(const std::string& s) {
  if (s == "off") return PipelineMode::off;
  if (s == "cg") return PipelineMode::cg;
  if (s == "fg") return PipelineMode::fg;
  throw std::invalid_argument("unknown pipeline mode: " + s);
}

std::vector<double> PragmaConfig::flatten() const {
  std::vector<double> out;
  out.reserve(per_loop.size() * 3);
  for (const auto& p : per_loop) {
    out.push_back(std::log2(static_cast<double>(p.parallel_factor)));
    out.push_back(static_cast<double>(static_cast<int>(p.pipeline_mode)));
    out.push_back(std::log2(static_cast<double>(p.tile_factor)));
  }
  return out;
}

bool PragmaConfig::lex_less(const PragmaConfig& other) const {
  const std::size_t n = std::min(per_loop.size(), other.per_loop.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = per_loop[i];
    const auto& b = other.per_loop[i];
    if (a.parallel_factor != b.parallel_factor) return a.parallel_factor < b.parallel_factor;
    if (a.pipeline_mode != b.pipeline_mode)
      return static_cast<int>(a.pipeline_mode) < static_cast<int>(b.pipeline_mode);
    if (a.tile_factor != b.tile_factor) return a.tile_factor < b.tile_factor;
  }
  return per_loop.size() < other.per_loop.size();
}

namespace {

json config_to_json_value(const PragmaConfig& c) {
  json arr = json::array();
  for (const auto& p : c.per_loop)
    arr.push_back(json::array({p.parallel_factor, to_string(p.pipeline_mode), p.tile_factor}));
  return json{{"kernel_id", c.kernel_id}, {"per_loop", arr}};
}

PragmaConfig config_from_json_value(const json& j) {
  PragmaConfig c;
  c.kernel_id = j.at("kernel_id").get<std::string>();
  for (const auto& jp : j.at("per_loop")) {
    LoopPragmas p;
    p.parallel_factor = jp.at(0).get<std::int64_t>();
    p.pipeline_mode = pipeline_mode_from_string(jp.at(1).get<std::string>());
    p.tile_factor = jp.at(2).get<std::int64_t>();
    c.per_loop.push_back(p);
  }
  return c;
}

}  // namespace

std::string PragmaConfig::to_json() const { return config_to_json_value(*this).dump(); }

PragmaConfig PragmaConfig::from_json(const std::string& text) {
  return config_from_json_value(json::parse(text));
}

std::uint64_t DesignSpace::size() const {
  std::uint64_t total = 1;
  for (const auto& lc : per_loop) {
    const std::uint64_t per =
        static_cast<std::uint64_t>(lc.parallel.size()) * lc.pipeline.size() * lc.tile.size();
    if (per == 0) return 0;
    if (total > UINT64_MAX / per) return UINT64_MAX;  // saturate
    total *= per;
  }
  return total;
}

bool DesignSpace::contains(const PragmaConfig& config) const {
  if (config.kernel_id != kernel_id) return false;
  if (config.per_loop.size() != per_loop.size()) return false;
  for (std::size_t i = 0; i < per_loop.size(); ++i) {
    const auto& lc = per_loop[i];
    const auto& p = config.per_loop[i];
    if (!std::binary_search(lc.parallel.begin(), lc.parallel.end(), p.parallel_factor)) return false;
    if (std::find(lc.pipeline.begin(), lc.pipeline.end(), p.pipeline_mode) == lc.pipeline.end())
      return false;
    if (!std::binary_search(lc.tile.begin(), lc.tile.end(), p.tile_factor)) return false;
  }
  return true;
}

std::string DesignSpace::to_json() const {
  json arr = json::array();
  for (const auto& lc : per_loop) {
    json modes = json::array();
    for (auto m : lc.pipeline) modes.push_back(to_string(m));
    arr.push_back(json::array({json(lc.parallel), modes, json(lc.tile)}));
  }
  return json{{"kernel_id", kernel_id}, {"per_loop", arr}}.dump();
}

DesignSpace DesignSpace::from_json(const std::string& text) {
  const json j = json::parse(text);
  DesignSpace s;
  s.kernel_id = j.at("kernel_id").get<std::string>();
  for (const auto& jl : j.at("per_loop")) {
    LoopCandidates lc;
    lc.parallel = jl.at(0).get<std::vector<std::int64_t>>();
    for (const auto& m : jl.at(1)) lc.pipeline.push_back(pipeline_mode_from_string(m.get<std::string>()));
    lc.tile = jl.at(2).get<std::vector<std::int64_t>>();
    s.per_loop.push_back(std::move(lc));
  }
  return s;
}

DesignSpace build_design_space(const Kernel& kernel) {
  {
    const auto errs = kernel.validate();
    if (!errs.empty()) throw std::invalid_argument("invalid kernel: " + errs.front());
  }
  DesignSpace s;
  s.kernel_id = kernel.id;
  for (const auto& l : kernel.loops) {
    LoopCandidates lc;
    const std::int64_t cap = std::min<std::int64_t>(l.trip_count, 32);
    for (std::int64_t f = 1; f <= cap; f *= 2)
      if (l.trip_count % f == 0) lc.parallel.push_back(f);
    lc.tile = lc.parallel;
    lc.pipeline = {PipelineMode::off, PipelineMode::cg, PipelineMode::fg};
    s.per_loop.push_back(std::move(lc));
  }
  return s;
}

namespace {

PragmaConfig config_from_index(const DesignSpace& space, std::uint64_t index) {
  PragmaConfig c;
  c.kernel_id = space.kernel_id;
  c.per_loop.resize(space.per_loop.size());
  // last loop's tile varies fastest
  for (std::size_t i = space.per_loop.size(); i-- > 0;) {
    const auto& lc = space.per_loop[i];
    const std::uint64_t nt = lc.tile.size();
    const std::uint64_t np = lc.pipeline.size();
    const std::uint64_t nf = lc.parallel.size();
    c.per_loop[i].tile_factor = lc.tile[index % nt];
    index /= nt;
    c.per_loop[i].pipeline_mode = lc.pipeline[index % np];
    index /= np;
    c.per_loop[i].parallel_factor = lc.parallel[index % nf];
    index /= nf;
  }
  return c;
}

}  // namespace

PragmaConfig sample_config(const DesignSpace& space, Rng& rng) {
  PragmaConfig c;
  c.kernel_id = space.kernel_id;
  for (const auto& lc : space.per_loop) {
    LoopPragmas p;
    p.parallel_factor = lc.parallel[rng.bounded(lc.parallel.size())];
    p.pipeline_mode = lc.pipeline[rng.bounded(lc.pipeline.size())];
    p.tile_factor = lc.tile[rng.bounded(lc.tile.size())];
    c.per_loop.push_back(p);
  }
  return c;
}

std::vector<PragmaConfig> enumerate_configs(const DesignSpace& space,
                                            std::optional<std::uint64_t> limit,
                                            std::uint64_t seed) {
  const std::uint64_t total = space.size();
  std::vector<PragmaConfig> out;
  if (!limit || total <= *limit) {
    out.reserve(static_cast<std::size_t>(total));
    for (std::uint64_t i = 0; i < total; ++i) out.push_back(config_from_index(space, i));
    return out;
  }
  Rng rng(seed);
  std::set<std::vector<double>> seen;
  while (out.size() < *limit) {
    PragmaConfig c = sample_config(space, rng);
    if (seen.insert(c.flatten()).second) out.push_back(std::move(c));
  }
  return out;
}

PragmaConfig default_config(const DesignSpace& space) {
  PragmaConfig c;
  c.kernel_id = space.kernel_id;
  c.per_loop.assign(space.per_loop.size(), LoopPragmas{});
  return c;
}

bool ProgramGraph::connected() const {
  if (nodes.empty()) return true;
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
    adj[static_cast<std::size_t>(e.dst)].push_back(e.src);
  }
  std::vector<bool> seen(nodes.size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == nodes.size();
}

void validate_config_for(const Kernel& kernel, const DesignSpace& space,
                         const PragmaConfig& config) {
  if (config.kernel_id != kernel.id)
    throw std::invalid_argument("config kernel_id \"" + config.kernel_id +
                                "\" does not match kernel \"" + kernel.id + "\"");
  if (static_cast<int>(config.per_loop.size()) != kernel.loop_count())
    throw std::invalid_argument("config has " + std::to_string(config.per_loop.size()) +
                                " loop entries, kernel has " + std::to_string(kernel.loop_count()));
  if (!space.contains(config))
    throw std::invalid_argument("config is outside the design space of kernel \"" + kernel.id + "\"");
}

ProgramGraph kernel_to_graph(const Kernel& kernel, const PragmaConfig& config) {
  const DesignSpace space = build_design_space(kernel);
  validate_config_for(kernel, space, config);

  ProgramGraph g;
  const int k = kernel.loop_count();
  const int n_arrays = static_cast<int>(kernel.arrays.size());
  const int array_base = k;
  const int ops_base = k + n_arrays;
  const int pragma_base = k + n_arrays + k;
  g.nodes.resize(static_cast<std::size_t>(k + n_arrays + k + k));

  auto log1p_count = [](std::int64_t v) { return std::log1p(static_cast<double>(v)); };

  for (const auto& l : kernel.loops) {
    GraphNode loop_node;
    loop_node.type = NodeType::loop;
    loop_node.static_features = Eigen::VectorXd::Zero(kStaticFeatureDim);
    loop_node.static_features(0) = std::log2(static_cast<double>(l.trip_count));
    loop_node.static_features(1) = static_cast<double>(kernel.depth_of(l.id));
    loop_node.static_features(2) = kernel.is_innermost(l.id) ? 1.0 : 0.0;
    loop_node.pragma_features.setZero();
    g.nodes[static_cast<std::size_t>(l.id)] = std::move(loop_node);

    GraphNode ops_node;
    ops_node.type = NodeType::op_group;
    ops_node.static_features = Eigen::VectorXd::Zero(kStaticFeatureDim);
    ops_node.static_features(3) = log1p_count(l.body_ops.adds);
    ops_node.static_features(4) = log1p_count(l.body_ops.mults);
    ops_node.static_features(5) = log1p_count(l.body_ops.loads);
    ops_node.static_features(6) = log1p_count(l.body_ops.stores);
    ops_node.pragma_features.setZero();
    g.nodes[static_cast<std::size_t>(ops_base + l.id)] = std::move(ops_node);

    const auto& p = config.per_loop[static_cast<std::size_t>(l.id)];
    GraphNode pragma_node;
    pragma_node.type = NodeType::pragma_slot;
    pragma_node.static_features = Eigen::VectorXd::Zero(kStaticFeatureDim);
    pragma_node.pragma_features(0) = std::log2(static_cast<double>(p.parallel_factor));
    pragma_node.pragma_features(1) = static_cast<double>(static_cast<int>(p.pipeline_mode));
    pragma_node.pragma_features(2) = std::log2(static_cast<double>(p.tile_factor));
    g.nodes[static_cast<std::size_t>(pragma_base + l.id)] = std::move(pragma_node);
  }

  for (int a = 0; a < n_arrays; ++a) {
    const auto& decl = kernel.arrays[static_cast<std::size_t>(a)];
    GraphNode node;
    node.type = NodeType::array;
    node.static_features = Eigen::VectorXd::Zero(kStaticFeatureDim);
    node.static_features(7) = std::log2(static_cast<double>(decl.element_bits));
    node.static_features(8) = log1p_count(decl.element_count());
    node.pragma_features.setZero();
    g.nodes[static_cast<std::size_t>(array_base + a)] = std::move(node);
  }

  auto array_index = [&](const std::string& name) {
    for (int a = 0; a < n_arrays; ++a)
      if (kernel.arrays[static_cast<std::size_t>(a)].name == name) return a;
    return -1;
  };

  const auto roots = kernel.root_loops();
  for (const auto& l : kernel.loops) {
    if (l.parent) g.edges.push_back({*l.parent, l.id, EdgeType::parent_child});
    g.edges.push_back({l.id, ops_base + l.id, EdgeType::loop_owns_ops});
    g.edges.push_back({pragma_base + l.id, l.id, EdgeType::pragma_attaches_to_loop});
    std::vector<int> used;
    for (const auto& name : l.array_refs) {
      const int a = array_index(name);
      if (a >= 0 && std::find(used.begin(), used.end(), a) == used.end()) {
        used.push_back(a);
        g.edges.push_back({l.id, array_base + a, EdgeType::loop_uses_array});
      }
    }
  }
  // sequential roots are chained so multi-phase kernels stay connected
  for (std::size_t r = 1; r < roots.size(); ++r)
    g.edges.push_back({roots[r - 1], roots[r], EdgeType::parent_child});
  // arrays never referenced by a loop attach to the first root
  if (!roots.empty()) {
    std::vector<bool> referenced(static_cast<std::size_t>(n_arrays), false);
    for (const auto& l : kernel.loops)
      for (const auto& name : l.array_refs) {
        const int a = array_index(name);
        if (a >= 0) referenced[static_cast<std::size_t>(a)] = true;
      }
    for (int a = 0; a < n_arrays; ++a)
      if (!referenced[static_cast<std::size_t>(a)])
        g.edges.push_back({roots.front(), array_base + a, EdgeType::loop_uses_array});
  }
  return g;
}

}  // namespace iceberg::kernel

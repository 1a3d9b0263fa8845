#include "iceberg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "iceberg/util/hash.hpp"

namespace iceberg::oracle {

using kernel::Kernel;
using kernel::PipelineMode;
using kernel::PragmaConfig;
using nlohmann::json;

std::string OracleConstants::to_json() const {
  return json{{"ii_divisor", ii_divisor},
              {"dsp_budget", dsp_budget},
              {"lut_budget", lut_budget},
              {"bram_budget_bytes", bram_budget_bytes}}
      .dump();
}

OracleConstants OracleConstants::from_json(const std::string& text) {
  const json j = json::parse(text);
  OracleConstants c;
  c.ii_divisor = j.at("ii_divisor").get<std::int64_t>();
  c.dsp_budget = j.at("dsp_budget").get<double>();
  c.lut_budget = j.at("lut_budget").get<double>();
  c.bram_budget_bytes = j.at("bram_budget_bytes").get<double>();
  return c;
}

std::string OracleConstants::hash() const { return content_hash(to_json()); }

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

struct SubtreeStats {
  std::int64_t flat_trips = 1;   // product of trip counts
  std::int64_t chain_depth = 0;  // adds+mults across the subtree, one iteration each
};

SubtreeStats subtree_stats(const Kernel& k, int loop_id) {
  const auto& l = k.loops[static_cast<std::size_t>(loop_id)];
  SubtreeStats s;
  s.flat_trips = l.trip_count;
  s.chain_depth = l.body_ops.adds + l.body_ops.mults;
  for (int c : k.children_of(loop_id)) {
    const SubtreeStats cs = subtree_stats(k, c);
    s.flat_trips *= cs.flat_trips;
    s.chain_depth += cs.chain_depth;
  }
  return s;
}

std::int64_t loop_latency(const Kernel& k, const PragmaConfig& cfg, int loop_id,
                          const OracleConstants& constants) {
  const auto& l = k.loops[static_cast<std::size_t>(loop_id)];
  const auto& p = cfg.per_loop[static_cast<std::size_t>(loop_id)];

  if (p.pipeline_mode == PipelineMode::fg) {
    // flatten this loop and all descendants; their pragmas are absorbed
    const SubtreeStats s = subtree_stats(k, loop_id);
    return ceil_div(s.flat_trips, p.parallel_factor) + s.chain_depth;
  }

  std::int64_t body = l.body_ops.total();
  for (int c : k.children_of(loop_id)) body += loop_latency(k, cfg, c, constants);
  body = std::max<std::int64_t>(body, 1);

  const std::int64_t trips = ceil_div(l.trip_count, p.parallel_factor);
  if (p.pipeline_mode == PipelineMode::cg) {
    const std::int64_t ii = std::max<std::int64_t>(1, ceil_div(body, constants.ii_divisor));
    return (trips - 1) * ii + body;
  }
  return trips * body;
}

}  // namespace

double latency(const Kernel& k, const PragmaConfig& config, const OracleConstants& constants) {
  kernel::validate_config_for(k, kernel::build_design_space(k), config);
  std::int64_t total = 0;
  for (int r : k.root_loops()) total += loop_latency(k, config, r, constants);
  return static_cast<double>(std::max<std::int64_t>(total, 1));
}

Resources resources(const Kernel& k, const PragmaConfig& config, const OracleConstants& constants) {
  kernel::validate_config_for(k, kernel::build_design_space(k), config);

  auto path_parallel = [&](int loop_id) {
    double prod = 1.0;
    const kernel::Loop* cur = &k.loops[static_cast<std::size_t>(loop_id)];
    while (true) {
      prod *= static_cast<double>(config.per_loop[static_cast<std::size_t>(cur->id)].parallel_factor);
      if (!cur->parent) break;
      cur = &k.loops[static_cast<std::size_t>(*cur->parent)];
    }
    return prod;
  };

  double dsp_used = 0.0;
  double lut_used = 0.0;
  for (const auto& l : k.loops) {
    const double pp = path_parallel(l.id);
    dsp_used += static_cast<double>(l.body_ops.mults) * pp;
    lut_used += static_cast<double>(l.body_ops.adds + l.body_ops.loads + l.body_ops.stores) * pp;
  }

  double bram_used = static_cast<double>(k.footprint_bytes());
  const bool any_tile = std::any_of(config.per_loop.begin(), config.per_loop.end(),
                                    [](const kernel::LoopPragmas& p) { return p.tile_factor > 1; });
  if (any_tile) bram_used *= 2.0;  // tile buffers

  Resources r;
  r.dsp = dsp_used / constants.dsp_budget;
  r.lut = lut_used / constants.lut_budget;
  r.bram = bram_used / constants.bram_budget_bytes;
  return r;
}

CostReport evaluate(const Kernel& k, const PragmaConfig& config, const OracleConstants& constants) {
  CostReport report;
  report.latency_cycles = latency(k, config, constants);
  report.resources = resources(k, config, constants);
  report.valid = report.resources.within(1.0);
  return report;
}

double normalize_label(double latency_cycles, double base_latency_cycles) {
  if (!(latency_cycles > 0.0) || !(base_latency_cycles > 0.0))
    throw std::invalid_argument("normalize_label requires positive latencies");
  return std::log2(latency_cycles / base_latency_cycles);
}

double denormalize_label(double y, double base_latency_cycles) {
  if (!(base_latency_cycles > 0.0))
    throw std::invalid_argument("denormalize_label requires a positive base latency");
  return std::exp2(y) * base_latency_cycles;
}

const char* to_string(DseStrategy s) {
  switch (s) {
    case DseStrategy::exhaustive: return "exhaustive";
    case DseStrategy::random: return "random";
    case DseStrategy::greedy: return "greedy";
  }
  return "exhaustive";
}

DseStrategy dse_strategy_from_string(const std::string& s) {
  if (s == "exhaustive") return DseStrategy::exhaustive;
  if (s == "random") return DseStrategy::random;
  if (s == "greedy") return DseStrategy::greedy;
  throw std::invalid_argument("unknown DSE strategy: " + s);
}

std::string LabeledDesign::to_json() const {
  json cfg = json::array();
  for (const auto& p : config.per_loop)
    cfg.push_back(json::array({p.parallel_factor, kernel::to_string(p.pipeline_mode), p.tile_factor}));
  json j{{"kernel_id", kernel_id},
         {"config", cfg},
         {"y", y},
         {"latency_cycles", latency_cycles},
         {"resources", {{"lut", resources.lut}, {"dsp", resources.dsp}, {"bram", resources.bram}}},
         {"valid", valid},
         {"label_kind", label_kind == LabelKind::actual ? "actual" : "weak"}};
  if (source_function)
    j["source_function"] = *source_function;
  else
    j["source_function"] = nullptr;
  return j.dump();
}

LabeledDesign LabeledDesign::from_json(const std::string& text) {
  const json j = json::parse(text);
  LabeledDesign d;
  d.kernel_id = j.at("kernel_id").get<std::string>();
  d.config.kernel_id = d.kernel_id;
  for (const auto& jp : j.at("config")) {
    kernel::LoopPragmas p;
    p.parallel_factor = jp.at(0).get<std::int64_t>();
    p.pipeline_mode = kernel::pipeline_mode_from_string(jp.at(1).get<std::string>());
    p.tile_factor = jp.at(2).get<std::int64_t>();
    d.config.per_loop.push_back(p);
  }
  d.y = j.at("y").get<double>();
  d.latency_cycles = j.at("latency_cycles").get<double>();
  d.resources.lut = j.at("resources").at("lut").get<double>();
  d.resources.dsp = j.at("resources").at("dsp").get<double>();
  d.resources.bram = j.at("resources").at("bram").get<double>();
  d.valid = j.at("valid").get<bool>();
  const auto kind = j.at("label_kind").get<std::string>();
  if (kind == "actual")
    d.label_kind = LabelKind::actual;
  else if (kind == "weak")
    d.label_kind = LabelKind::weak;
  else
    throw std::invalid_argument("unknown label_kind: " + kind);
  if (!j.at("source_function").is_null())
    d.source_function = j.at("source_function").get<std::string>();
  if ((d.label_kind == LabelKind::actual) != !d.source_function)
    throw std::invalid_argument("label_kind actual <=> source_function absent violated");
  return d;
}

namespace {

LabeledDesign label_design(const Kernel& k, kernel::PragmaConfig config, double base,
                           const OracleConstants& constants) {
  LabeledDesign d;
  d.kernel_id = k.id;
  const CostReport report = evaluate(k, config, constants);
  d.config = std::move(config);
  d.latency_cycles = report.latency_cycles;
  d.resources = report.resources;
  d.valid = report.valid;
  d.y = normalize_label(report.latency_cycles, base);
  d.label_kind = LabelKind::actual;
  return d;
}

void sort_by_latency(std::vector<LabeledDesign>& designs) {
  std::sort(designs.begin(), designs.end(), [](const LabeledDesign& a, const LabeledDesign& b) {
    if (a.latency_cycles != b.latency_cycles) return a.latency_cycles < b.latency_cycles;
    return a.config.lex_less(b.config);
  });
}

}  // namespace

std::vector<LabeledDesign> run_dse(const Kernel& k, int budget, DseStrategy strategy,
                                   std::uint64_t seed, const OracleConstants& constants) {
  if (budget < 1) throw std::invalid_argument("run_dse: budget must be >= 1");
  const kernel::DesignSpace space = kernel::build_design_space(k);
  const kernel::PragmaConfig def = kernel::default_config(space);
  const double base = latency(k, def, constants);

  std::map<std::vector<double>, LabeledDesign> labeled;
  auto try_label = [&](const kernel::PragmaConfig& cfg) -> const LabeledDesign* {
    auto key = cfg.flatten();
    auto it = labeled.find(key);
    if (it != labeled.end()) return &it->second;
    if (labeled.size() >= static_cast<std::size_t>(budget)) return nullptr;
    auto [ins, _] = labeled.emplace(std::move(key), label_design(k, cfg, base, constants));
    return &ins->second;
  };

  try_label(def);

  const std::uint64_t total = space.size();
  if (total <= static_cast<std::uint64_t>(budget) || strategy == DseStrategy::exhaustive) {
    for (const auto& cfg : enumerate_configs(space, static_cast<std::uint64_t>(budget), seed))
      try_label(cfg);
  } else if (strategy == DseStrategy::random) {
    Rng rng(seed);
    while (labeled.size() < static_cast<std::size_t>(budget))
      try_label(sample_config(space, rng));
  } else {
    // greedy: one pragma coordinate at a time from the default, restart on plateau
    Rng rng(seed);
    kernel::PragmaConfig current = def;
    double current_latency = base;
    while (labeled.size() < static_cast<std::size_t>(budget)) {
      bool improved = false;
      for (std::size_t li = 0; li < space.per_loop.size(); ++li) {
        for (int coord = 0; coord < 3; ++coord) {
          kernel::PragmaConfig best = current;
          double best_latency = current_latency;
          const auto& lc = space.per_loop[li];
          const std::size_t n_cand =
              coord == 0 ? lc.parallel.size() : (coord == 1 ? lc.pipeline.size() : lc.tile.size());
          for (std::size_t ci = 0; ci < n_cand; ++ci) {
            kernel::PragmaConfig cand = current;
            auto& entry = cand.per_loop[li];
            if (coord == 0)
              entry.parallel_factor = lc.parallel[ci];
            else if (coord == 1)
              entry.pipeline_mode = lc.pipeline[ci];
            else
              entry.tile_factor = lc.tile[ci];
            if (cand == current) continue;
            const LabeledDesign* d = try_label(cand);
            if (!d) break;
            if (d->latency_cycles < best_latency) {
              best = cand;
              best_latency = d->latency_cycles;
            }
          }
          if (best_latency < current_latency) {
            current = best;
            current_latency = best_latency;
            improved = true;
          }
          if (labeled.size() >= static_cast<std::size_t>(budget)) break;
        }
        if (labeled.size() >= static_cast<std::size_t>(budget)) break;
      }
      if (labeled.size() >= static_cast<std::size_t>(budget)) break;
      if (!improved) {
        if (labeled.size() >= total) break;  // space exhausted
        kernel::PragmaConfig jump = sample_config(space, rng);
        const LabeledDesign* d = try_label(jump);
        if (!d) break;
        current = jump;
        current_latency = d->latency_cycles;
      }
    }
  }

  std::vector<LabeledDesign> out;
  out.reserve(labeled.size());
  for (auto& [_, d] : labeled) out.push_back(std::move(d));
  sort_by_latency(out);
  return out;
}

}  // namespace iceberg::oracle

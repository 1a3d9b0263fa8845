#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iceberg/kernel.hpp"

namespace iceberg::oracle {

// Fixed cost-model constants. A dataset's sidecar manifest records these so
// label files are self-describing.
struct OracleConstants {
  std::int64_t ii_divisor = 4;
  double dsp_budget = 512.0;
  double lut_budget = 60000.0;
  double bram_budget_bytes = 1024.0 * 1024.0;

  std::string to_json() const;
  static OracleConstants from_json(const std::string& text);
  std::string hash() const;
};

struct Resources {
  double lut = 0.0;
  double dsp = 0.0;
  double bram = 0.0;

  double max() const { return std::max(lut, std::max(dsp, bram)); }
  bool within(double bound) const { return lut <= bound && dsp <= bound && bram <= bound; }
};

struct CostReport {
  double latency_cycles = 1.0;
  Resources resources;
  bool valid = true;  // all utilizations <= 1.0 and config well-formed
};

enum class LabelKind : int { actual = 0, weak = 1 };

struct LabeledDesign {
  std::string kernel_id;
  kernel::PragmaConfig config;
  double y = 0.0;  // log2(latency / default latency)
  double latency_cycles = 1.0;
  Resources resources;
  bool valid = true;
  LabelKind label_kind = LabelKind::actual;
  std::optional<std::string> source_function;

  std::string to_json() const;
  static LabeledDesign from_json(const std::string& text);
};

double latency(const kernel::Kernel& k, const kernel::PragmaConfig& config,
               const OracleConstants& constants = {});

Resources resources(const kernel::Kernel& k, const kernel::PragmaConfig& config,
                    const OracleConstants& constants = {});

CostReport evaluate(const kernel::Kernel& k, const kernel::PragmaConfig& config,
                    const OracleConstants& constants = {});

// y = log2(latency / base); the default design maps to 0.
double normalize_label(double latency_cycles, double base_latency_cycles);
double denormalize_label(double y, double base_latency_cycles);

enum class DseStrategy : int { exhaustive = 0, random = 1, greedy = 2 };

const char* to_string(DseStrategy s);
DseStrategy dse_strategy_from_string(const std::string& s);

// Labels up to `budget` distinct configs with actual labels; always includes
// the default design; result sorted by latency (ties lexicographic).
std::vector<LabeledDesign> run_dse(const kernel::Kernel& k, int budget, DseStrategy strategy,
                                   std::uint64_t seed, const OracleConstants& constants = {});

}  // namespace iceberg::oracle

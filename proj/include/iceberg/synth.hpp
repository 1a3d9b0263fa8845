#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "iceberg/kernel.hpp"

namespace iceberg::synth {

// Curated computationally intensive domains.
const std::vector<std::string>& domain_list();

struct GenSpec {
  std::uint64_t seed = 0;
  int q_min = 2;
  int q_max = 5;
  std::int64_t mem_min = 1024;        // bytes
  std::int64_t mem_max = 64 * 1024;
  std::string domain = "stencil";
  bool multi_function = false;

  void validate() const;  // throws std::invalid_argument
};

// Deterministic stand-in program source; pure function of the spec.
kernel::Kernel generate_parametric(const GenSpec& spec);

struct PromptConstraints {
  bool entry_point_rule = true;     // single entry point named "top", no main
  bool constant_bounds_rule = true; // constant loop bounds only
  bool arguments_rule = true;       // all inputs/outputs are function arguments
  int q_loops = 3;
  std::int64_t m_bytes = 4096;
  std::string domain = "stencil";
  bool multi_function = false;
};

std::string build_initial_prompt(const PromptConstraints& constraints);

struct ValidityReport {
  bool pass = false;
  std::vector<std::string> reasons;
};

ValidityReport check_synthesizable(const kernel::Kernel& k);
// Accepts the JSON kernel schema as text; parse failures become reasons.
ValidityReport check_synthesizable_text(const std::string& kernel_json);

class LlmTransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

// POSTs {"model","prompt","temperature"} to ICEBERG_LLM_ENDPOINT and expects
// {"completion": "..."} back. Endpoint/model may also be passed explicitly.
class HttpLlmClient : public LlmClient {
 public:
  HttpLlmClient();  // reads ICEBERG_LLM_ENDPOINT / ICEBERG_LLM_MODEL
  HttpLlmClient(std::string endpoint, std::string model, double temperature = 0.7);
  std::string complete(const std::string& prompt) override;

 private:
  std::string endpoint_;
  std::string model_;
  double temperature_ = 0.7;
};

struct GenSession {
  std::string prompt_template;            // from build_initial_prompt
  std::vector<std::string> history;       // summaries of accepted programs
  std::vector<std::string> feedback_log;  // summaries of failed generations
};

struct IterativeOptions {
  int max_rounds_per_kernel = 4;
  int transport_retries = 3;
  int backoff_ms = 50;
};

// Prompts, validates, deduplicates; returns only validated kernels (count may
// honestly fall short of n).
std::vector<kernel::Kernel> iterative_generate(GenSession& session, LlmClient& client, int n,
                                               const IterativeOptions& options = {});

std::string kernel_summary(const kernel::Kernel& k);

}  // namespace iceberg::synth

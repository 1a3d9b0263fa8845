#include <doctest.h>

#include <set>

#include "iceberg/synth.hpp"
#include "test_util.hpp"

using namespace iceberg;
using namespace iceberg::synth;

TEST_CASE("parametric generation is a pure function of the spec") {
  GenSpec spec;
  spec.seed = 7;
  spec.domain = "stencil";
  const kernel::Kernel a = generate_parametric(spec);
  const kernel::Kernel b = generate_parametric(spec);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("loop count honors a degenerate range") {
  GenSpec spec;
  spec.seed = 3;
  spec.q_min = 3;
  spec.q_max = 3;
  spec.domain = "reduction";
  CHECK(generate_parametric(spec).loop_count() == 3);
}

TEST_CASE("memory budget bounds the footprint") {
  GenSpec spec;
  spec.seed = 12;
  spec.mem_min = 4096;
  spec.mem_max = 4096;
  spec.domain = "sliding_window";  // 32-bit elements
  const kernel::Kernel k = generate_parametric(spec);
  CHECK(k.footprint_bytes() <= 4096);
  std::int64_t total_elems = 0;
  for (const auto& a : k.arrays) {
    CHECK(a.element_bits == 32);
    total_elems += a.element_count();
  }
  CHECK(total_elems <= 1024);
}

TEST_CASE("infeasible memory budget is rejected") {
  GenSpec spec;
  spec.seed = 1;
  spec.mem_min = 2;
  spec.mem_max = 3;  // cannot hold four 32-bit elements
  spec.domain = "stencil";
  CHECK_THROWS_AS(generate_parametric(spec), std::invalid_argument);
  GenSpec bad_range;
  bad_range.q_min = 5;
  bad_range.q_max = 2;
  CHECK_THROWS_AS(bad_range.validate(), std::invalid_argument);
  GenSpec bad_domain;
  bad_domain.domain = "quantum_chromodynamics";
  CHECK_THROWS_AS(bad_domain.validate(), std::invalid_argument);
}

TEST_CASE("generated kernels are synthesizable") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const kernel::Kernel k = testutil::random_kernel(seed);
    const ValidityReport report = check_synthesizable(k);
    CHECK(report.pass);
    CHECK(report.reasons.empty());
  }
}

TEST_CASE("entry point violations are reported") {
  kernel::Kernel k = testutil::single_loop_kernel(8, 1, 0, 1, 0);
  k.entry_name = "main";
  const ValidityReport report = check_synthesizable(k);
  CHECK(!report.pass);
  REQUIRE(!report.reasons.empty());
  CHECK(report.reasons.front().find("entry point") != std::string::npos);
}

TEST_CASE("unparseable kernel text fails validity with a reason") {
  const ValidityReport report = check_synthesizable_text("not json at all");
  CHECK(!report.pass);
  CHECK(report.reasons.front().find("unparseable") != std::string::npos);
}

TEST_CASE("corpus diversity floor over domains and seeds") {
  const auto& domains = domain_list();
  std::set<std::tuple<std::string, int, std::int64_t>> triples;
  int produced = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    GenSpec spec;
    spec.seed = seed;
    spec.q_min = 2;
    spec.q_max = 5;
    spec.mem_min = 2048;
    spec.mem_max = 65536;
    spec.domain = domains[seed % domains.size()];
    const kernel::Kernel k = generate_parametric(spec);
    triples.insert({k.domain_tag, k.loop_count(), k.footprint_bytes()});
    ++produced;
  }
  CHECK(static_cast<int>(triples.size()) == produced);
}

TEST_CASE("initial prompt carries the constraints") {
  PromptConstraints c;
  c.q_loops = 4;
  c.m_bytes = 8192;
  c.domain = "stencil";
  const std::string prompt = build_initial_prompt(c);
  CHECK(prompt.find("\"top\"") != std::string::npos);
  CHECK(prompt.find("main") != std::string::npos);
  CHECK(prompt.find("constant loop bounds") != std::string::npos);
  CHECK(prompt.find("function arguments") != std::string::npos);
  CHECK(prompt.find("Q=4") != std::string::npos);
  CHECK(prompt.find("M=8192") != std::string::npos);
  CHECK(prompt.find("stencil") != std::string::npos);
  // the novelty clause belongs to iterative rounds, not the template
  CHECK(prompt.find("significantly different") == std::string::npos);
}

namespace {

class StubClient : public LlmClient {
 public:
  explicit StubClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const std::string& prompt) override {
    prompts.push_back(prompt);
    if (index_ >= replies_.size()) return replies_.back();
    return replies_[index_++];
  }
  std::vector<std::string> prompts;

 private:
  std::vector<std::string> replies_;
  std::size_t index_ = 0;
};

class FlakyClient : public LlmClient {
 public:
  explicit FlakyClient(int failures, std::string reply)
      : failures_(failures), reply_(std::move(reply)) {}
  std::string complete(const std::string&) override {
    if (failures_-- > 0) throw LlmTransportError("connection reset");
    return reply_;
  }

 private:
  int failures_;
  std::string reply_;
};

std::string canned_kernel(std::uint64_t seed) {
  return testutil::random_kernel(seed).to_json();
}

}  // namespace

TEST_CASE("iterative generation returns validated kernels and tracks history") {
  GenSession session;
  session.prompt_template = build_initial_prompt({});
  StubClient client({canned_kernel(1), canned_kernel(2), canned_kernel(3)});
  const auto kernels = iterative_generate(session, client, 3);
  CHECK(kernels.size() == 3);
  CHECK(session.history.size() == 3);
  CHECK(session.feedback_log.empty());
  // later prompts carry the novelty instruction
  CHECK(client.prompts.back().find("significantly different") != std::string::npos);
  CHECK(client.prompts.front().find("significantly different") == std::string::npos);
}

TEST_CASE("invalid completions land in the feedback log") {
  kernel::Kernel bad = testutil::random_kernel(4);
  bad.entry_name = "main";
  GenSession session;
  session.prompt_template = build_initial_prompt({});
  StubClient client({bad.to_json(), canned_kernel(5)});
  const auto kernels = iterative_generate(session, client, 1);
  CHECK(kernels.size() == 1);
  CHECK(session.feedback_log.size() >= 1);
  // the refined prompt mentions the earlier mistakes
  CHECK(client.prompts.back().find("avoid these mistakes") != std::string::npos);
}

TEST_CASE("duplicate completions are dropped and the count is honest") {
  GenSession session;
  session.prompt_template = build_initial_prompt({});
  StubClient client({canned_kernel(6), canned_kernel(6)});
  IterativeOptions options;
  options.max_rounds_per_kernel = 2;
  const auto kernels = iterative_generate(session, client, 2, options);
  CHECK(kernels.size() == 1);
  CHECK(!session.feedback_log.empty());
  CHECK(session.feedback_log.back().find("duplicate") != std::string::npos);
}

TEST_CASE("transport failures retry with backoff, then surface") {
  GenSession session;
  session.prompt_template = build_initial_prompt({});
  IterativeOptions options;
  options.transport_retries = 3;
  options.backoff_ms = 1;

  FlakyClient recovers(2, canned_kernel(7));
  CHECK(iterative_generate(session, recovers, 1, options).size() == 1);

  GenSession session2;
  session2.prompt_template = session.prompt_template;
  FlakyClient hopeless(100, canned_kernel(8));
  CHECK_THROWS_AS(iterative_generate(session2, hopeless, 1, options), LlmTransportError);
}

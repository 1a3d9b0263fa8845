#include "iceberg/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "iceberg/util/hash.hpp"

namespace iceberg::synth {

using kernel::ArrayDecl;
using kernel::Kernel;
using kernel::Loop;
using nlohmann::json;

const std::vector<std::string>& domain_list() {
  static const std::vector<std::string> domains = {
      "stencil", "dense_linear_algebra", "reduction", "sliding_window", "table_lookup"};
  return domains;
}

void GenSpec::validate() const {
  if (q_min < 0 || q_min > q_max) throw std::invalid_argument("GenSpec: empty loop-count range");
  if (mem_min < 1 || mem_min > mem_max)
    throw std::invalid_argument("GenSpec: empty memory-budget range");
  const auto& domains = domain_list();
  if (std::find(domains.begin(), domains.end(), domain) == domains.end())
    throw std::invalid_argument("GenSpec: unknown domain \"" + domain + "\"");
}

namespace {

struct DomainArchetype {
  std::vector<std::int64_t> trip_pool;
  int max_depth;        // loops per nest
  int arrays_min, arrays_max;
  int array_dims;       // 1 or 2
  std::vector<int> element_bits;
  // innermost-loop op ranges
  int adds_min, adds_max;
  int mults_min, mults_max;
  int loads_min, loads_max;
  int stores_min, stores_max;
};

const DomainArchetype& archetype(const std::string& domain) {
  static const DomainArchetype stencil{{8, 16, 32, 64}, 3, 2, 3, 2, {32, 64}, 2, 8, 1, 4, 3, 9, 1, 2};
  static const DomainArchetype dla{{4, 8, 16, 32, 64}, 3, 2, 3, 2, {32, 64}, 1, 3, 1, 3, 2, 4, 0, 1};
  static const DomainArchetype reduction{{16, 32, 64, 128}, 2, 1, 2, 1, {32, 64}, 1, 3, 0, 2, 1, 2, 0, 1};
  static const DomainArchetype sliding{{6, 12, 16, 24, 48}, 3, 2, 2, 1, {32}, 1, 4, 1, 3, 2, 6, 1, 1};
  static const DomainArchetype lookup{{16, 32, 64, 128}, 2, 2, 3, 1, {8, 16, 32}, 0, 2, 0, 1, 2, 3, 1, 1};
  if (domain == "stencil") return stencil;
  if (domain == "dense_linear_algebra") return dla;
  if (domain == "reduction") return reduction;
  if (domain == "sliding_window") return sliding;
  return lookup;
}

constexpr std::int64_t kMaxFootprintBytes = 256ll * 1024 * 1024;

}  // namespace

Kernel generate_parametric(const GenSpec& spec) {
  spec.validate();
  Rng rng(Rng::mix(spec.seed, 0x6b65726e));

  const int q = static_cast<int>(rng.uniform_int(spec.q_min, spec.q_max));
  const std::int64_t budget = rng.uniform_int(spec.mem_min, spec.mem_max);
  const DomainArchetype& arch = archetype(spec.domain);

  const int arrays_wanted = static_cast<int>(rng.uniform_int(arch.arrays_min, arch.arrays_max));
  const int elem_bits = arch.element_bits[rng.bounded(arch.element_bits.size())];
  const std::int64_t elem_bytes = elem_bits / 8;
  const std::int64_t min_per_array = 4 * elem_bytes;
  if (budget < min_per_array)
    throw std::invalid_argument("GenSpec infeasible: memory budget " + std::to_string(budget) +
                                " bytes cannot hold any array");
  const int n_arrays = std::max(1, std::min<int>(arrays_wanted, static_cast<int>(budget / min_per_array)));

  Kernel k;
  std::ostringstream id;
  id << "gen-" << spec.domain << "-s" << spec.seed;
  k.id = id.str();
  k.domain_tag = spec.domain;

  // loop forest; every parent precedes its children
  int desired_roots = 1;
  if (spec.multi_function && q >= 2) desired_roots = static_cast<int>(rng.uniform_int(2, std::min(q, 3)));
  int roots_placed = 0;
  for (int i = 0; i < q; ++i) {
    Loop l;
    l.id = i;
    l.trip_count = arch.trip_pool[rng.bounded(arch.trip_pool.size())];
    if (roots_placed < desired_roots && (i == 0 || roots_placed < desired_roots - (q - 1 - i) || rng.uniform() < 0.3)) {
      ++roots_placed;
    } else {
      std::vector<int> eligible;
      for (int p = 0; p < i; ++p)
        if (k.depth_of(p) + 1 < arch.max_depth) eligible.push_back(p);
      if (eligible.empty()) {
        ++roots_placed;
      } else {
        l.parent = eligible[rng.bounded(eligible.size())];
      }
    }
    k.loops.push_back(l);
  }

  // arrays sized to consume most of the sampled budget
  std::vector<double> weights(static_cast<std::size_t>(n_arrays));
  double wsum = 0.0;
  for (auto& w : weights) {
    w = 0.25 + rng.uniform();
    wsum += w;
  }
  static const char* names[] = {"A", "B", "C", "D", "E", "F"};
  for (int a = 0; a < n_arrays; ++a) {
    ArrayDecl decl;
    decl.name = names[a];
    decl.element_bits = elem_bits;
    const double share = weights[static_cast<std::size_t>(a)] / wsum;
    std::int64_t elems = std::max<std::int64_t>(4, static_cast<std::int64_t>(share * static_cast<double>(budget) / static_cast<double>(elem_bytes)));
    if (arch.array_dims == 2 && elems >= 16) {
      std::int64_t side = std::max<std::int64_t>(2, static_cast<std::int64_t>(std::sqrt(static_cast<double>(elems))));
      decl.extent = {side, elems / side};
    } else {
      decl.extent = {elems};
    }
    k.arrays.push_back(std::move(decl));
  }
  // rounding may have nudged the footprint above budget
  while (k.footprint_bytes() > budget) {
    auto& biggest = *std::max_element(k.arrays.begin(), k.arrays.end(),
                                      [](const ArrayDecl& a, const ArrayDecl& b) {
                                        return a.footprint_bytes() < b.footprint_bytes();
                                      });
    if (biggest.extent[0] <= 2) break;
    biggest.extent[0] -= 1;
  }

  // op counts: innermost loops carry the work, outer loops stay light
  for (auto& l : k.loops) {
    if (k.is_innermost(l.id)) {
      l.body_ops.adds = rng.uniform_int(arch.adds_min, arch.adds_max);
      l.body_ops.mults = rng.uniform_int(arch.mults_min, arch.mults_max);
      l.body_ops.loads = rng.uniform_int(arch.loads_min, arch.loads_max);
      l.body_ops.stores = rng.uniform_int(arch.stores_min, arch.stores_max);
      if (l.body_ops.loads + l.body_ops.stores > 0) {
        const int refs = static_cast<int>(rng.uniform_int(1, std::min(2, n_arrays)));
        std::vector<int> order(static_cast<std::size_t>(n_arrays));
        for (int a = 0; a < n_arrays; ++a) order[static_cast<std::size_t>(a)] = a;
        rng.shuffle(order);
        for (int r = 0; r < refs; ++r)
          l.array_refs.push_back(k.arrays[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])].name);
      }
    } else {
      l.body_ops.adds = rng.uniform_int(0, 1);
    }
  }

  // keep every array reachable from some loop
  for (const auto& a : k.arrays) {
    bool referenced = false;
    for (const auto& l : k.loops)
      referenced = referenced || std::find(l.array_refs.begin(), l.array_refs.end(), a.name) != l.array_refs.end();
    if (!referenced) {
      for (auto& l : k.loops) {
        if (k.is_innermost(l.id)) {
          l.array_refs.push_back(a.name);
          if (l.body_ops.loads == 0) l.body_ops.loads = 1;
          break;
        }
      }
    }
  }

  return k;
}

std::string build_initial_prompt(const PromptConstraints& c) {
  std::ostringstream p;
  p << "Write one synthesizable loop-nest program for hardware acceleration, described as a "
       "single JSON object with fields id, entry_name, domain_tag, loops, arrays.\n";
  p << "Constraints:\n";
  if (c.entry_point_rule) {
    p << "- Define a single entry point named \"top\". Do not define a \"main\" function.\n";
  }
  if (c.arguments_rule)
    p << "- Structure all input and output variables as function arguments of the entry point.\n";
  if (c.constant_bounds_rule)
    p << "- Every loop bound must be a compile-time constant (constant loop bounds only); "
         "trip counts are positive integers.\n";
  p << "- Use " << (c.multi_function ? "multiple functions (sequential phases)" : "a single function")
    << " with exactly Q=" << c.q_loops << " loops in total.\n";
  p << "- Keep the total memory footprint of all arrays at or below M=" << c.m_bytes << " bytes.\n";
  p << "- The workload domain is \"" << c.domain << "\".\n";
  p << "Schema: loops is a list of {id (0..K-1 in order), trip_count, parent (null for roots), "
       "body_ops {adds, mults, loads, stores}, array_refs}; arrays is a list of "
       "{name, element_bits, extent}.\n";
  p << "Respond with the JSON object only.\n";
  return p.str();
}

ValidityReport check_synthesizable(const Kernel& k) {
  ValidityReport report;
  auto errs = k.validate();
  for (auto& e : errs) {
    if (e.find("entry point") != std::string::npos)
      report.reasons.push_back("entry point: " + e);
    else if (e.find("trip count") != std::string::npos)
      report.reasons.push_back("non-constant or nonpositive loop bound: " + e);
    else
      report.reasons.push_back(e);
  }
  if (k.footprint_bytes() > kMaxFootprintBytes)
    report.reasons.push_back("footprint overflow: " + std::to_string(k.footprint_bytes()) +
                             " bytes exceeds " + std::to_string(kMaxFootprintBytes));
  report.pass = report.reasons.empty();
  return report;
}

ValidityReport check_synthesizable_text(const std::string& kernel_json) {
  Kernel k;
  try {
    k = Kernel::from_json(kernel_json);
  } catch (const std::exception& e) {
    ValidityReport report;
    report.pass = false;
    report.reasons.push_back(std::string("unparseable kernel JSON: ") + e.what());
    return report;
  }
  return check_synthesizable(k);
}

HttpLlmClient::HttpLlmClient() {
  const char* ep = std::getenv("ICEBERG_LLM_ENDPOINT");
  const char* model = std::getenv("ICEBERG_LLM_MODEL");
  endpoint_ = ep ? ep : "";
  model_ = model ? model : "default";
}

HttpLlmClient::HttpLlmClient(std::string endpoint, std::string model, double temperature)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), temperature_(temperature) {}

std::string HttpLlmClient::complete(const std::string& prompt) {
  if (endpoint_.empty())
    throw LlmTransportError("no LLM endpoint configured (set ICEBERG_LLM_ENDPOINT)");
  // split scheme://host[:port]/path
  std::string base = endpoint_;
  std::string path = "/";
  const auto scheme_end = base.find("://");
  const auto path_start = base.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start != std::string::npos) {
    path = base.substr(path_start);
    base = base.substr(0, path_start);
  }
  httplib::Client client(base);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  const json body{{"model", model_}, {"prompt", prompt}, {"temperature", temperature_}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw LlmTransportError("transport failure contacting " + endpoint_);
  if (res->status != 200)
    throw LlmTransportError("LLM endpoint returned status " + std::to_string(res->status));
  try {
    return json::parse(res->body).at("completion").get<std::string>();
  } catch (const std::exception& e) {
    throw LlmTransportError(std::string("malformed LLM response: ") + e.what());
  }
}

namespace {

std::string loop_signature(const Kernel& k) {
  std::ostringstream sig;
  std::function<void(int)> emit = [&](int loop_id) {
    sig << k.loops[static_cast<std::size_t>(loop_id)].trip_count;
    const auto children = k.children_of(loop_id);
    if (!children.empty()) {
      sig << "(";
      for (std::size_t i = 0; i < children.size(); ++i) {
        if (i) sig << ",";
        emit(children[i]);
      }
      sig << ")";
    }
  };
  const auto roots = k.root_loops();
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (i) sig << ";";
    emit(roots[i]);
  }
  return sig.str();
}

std::string extract_json_object(const std::string& text) {
  const auto start = text.find('{');
  const auto end = text.rfind('}');
  if (start == std::string::npos || end == std::string::npos || end < start)
    throw std::invalid_argument("no JSON object in completion");
  return text.substr(start, end - start + 1);
}

std::string complete_with_retry(LlmClient& client, const std::string& prompt,
                                const IterativeOptions& options) {
  for (int attempt = 0;; ++attempt) {
    try {
      return client.complete(prompt);
    } catch (const LlmTransportError&) {
      if (attempt + 1 >= options.transport_retries) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(options.backoff_ms << attempt));
    }
  }
}

}  // namespace

std::string kernel_summary(const Kernel& k) {
  return k.id + " [" + k.domain_tag + "] loops=" + loop_signature(k);
}

std::vector<Kernel> iterative_generate(GenSession& session, LlmClient& client, int n,
                                       const IterativeOptions& options) {
  if (n < 1) throw std::invalid_argument("iterative_generate: n must be >= 1");
  std::vector<Kernel> accepted;
  std::unordered_set<std::string> seen_text_hashes;
  std::unordered_set<std::string> seen_signatures;

  const int max_rounds = n * options.max_rounds_per_kernel;
  for (int round = 0; round < max_rounds && static_cast<int>(accepted.size()) < n; ++round) {
    std::ostringstream prompt;
    prompt << session.prompt_template;
    if (!session.history.empty()) {
      prompt << "\nPrograms generated so far:\n";
      for (const auto& h : session.history) prompt << "- " << h << "\n";
      prompt << "Let's think step by step about what algorithmic structures the list above "
                "already covers, then design a novel program that is significantly different "
                "from those already presented.\n";
    }
    if (!session.feedback_log.empty()) {
      prompt << "\nEarlier attempts failed validation; avoid these mistakes:\n";
      const std::size_t from = session.feedback_log.size() > 5 ? session.feedback_log.size() - 5 : 0;
      for (std::size_t i = from; i < session.feedback_log.size(); ++i)
        prompt << "- " << session.feedback_log[i] << "\n";
    }

    const std::string completion = complete_with_retry(client, prompt.str(), options);

    Kernel k;
    try {
      k = Kernel::from_json(extract_json_object(completion));
    } catch (const std::exception& e) {
      session.feedback_log.push_back(std::string("unparseable output: ") + e.what());
      continue;
    }
    const ValidityReport report = check_synthesizable(k);
    if (!report.pass) {
      std::ostringstream why;
      why << "program \"" << k.id << "\" rejected:";
      for (const auto& r : report.reasons) why << " " << r << ";";
      session.feedback_log.push_back(why.str());
      continue;
    }
    const std::string text_hash = content_hash(k.to_json());
    const std::string sig = k.domain_tag + "|" + loop_signature(k);
    if (!seen_text_hashes.insert(text_hash).second || !seen_signatures.insert(sig).second) {
      session.feedback_log.push_back("duplicate program \"" + k.id + "\" (signature " + sig + ")");
      continue;
    }
    session.history.push_back(kernel_summary(k));
    accepted.push_back(std::move(k));
  }
  return accepted;
}

}  // namespace iceberg::synth

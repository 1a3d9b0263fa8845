#include "iceberg/workbench.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "iceberg/synth.hpp"
#include "iceberg/util/hash.hpp"
#include "iceberg/util/io.hpp"

namespace iceberg::workbench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.contains(key))
      throw ConfigError("unknown key \"" + key + "\" in config section \"" + where + "\"");
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("bad value for \"" + std::string(key) + "\": " + e.what());
    }
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"corpus", "oracle", "dse", "ensemble", "weaklabel", "model", "train", "eval",
                 "optimize"},
             "<top>");
  ExperimentConfig cfg;
  cfg.corpus.domains = synth::domain_list();

  if (j.contains("corpus")) {
    const json& s = j["corpus"];
    check_keys(s,
               {"n_kernels", "n_test_kernels", "seed", "q_min", "q_max", "mem_min", "mem_max",
                "multi_function", "domains", "kernel_paths"},
               "corpus");
    read_field(s, "n_kernels", cfg.corpus.n_kernels);
    read_field(s, "n_test_kernels", cfg.corpus.n_test_kernels);
    read_field(s, "seed", cfg.corpus.seed);
    read_field(s, "q_min", cfg.corpus.q_min);
    read_field(s, "q_max", cfg.corpus.q_max);
    read_field(s, "mem_min", cfg.corpus.mem_min);
    read_field(s, "mem_max", cfg.corpus.mem_max);
    read_field(s, "multi_function", cfg.corpus.multi_function);
    read_field(s, "domains", cfg.corpus.domains);
    read_field(s, "kernel_paths", cfg.corpus.kernel_paths);
  }
  if (j.contains("oracle")) {
    const json& s = j["oracle"];
    check_keys(s, {"ii_divisor", "dsp_budget", "lut_budget", "bram_budget_bytes"}, "oracle");
    read_field(s, "ii_divisor", cfg.oracle_constants.ii_divisor);
    read_field(s, "dsp_budget", cfg.oracle_constants.dsp_budget);
    read_field(s, "lut_budget", cfg.oracle_constants.lut_budget);
    read_field(s, "bram_budget_bytes", cfg.oracle_constants.bram_budget_bytes);
  }
  if (j.contains("dse")) {
    const json& s = j["dse"];
    check_keys(s, {"strategy", "budget", "seed"}, "dse");
    read_field(s, "strategy", cfg.dse.strategy);
    read_field(s, "budget", cfg.dse.budget);
    read_field(s, "seed", cfg.dse.seed);
    try {
      oracle::dse_strategy_from_string(cfg.dse.strategy);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("ensemble")) {
    const json& s = j["ensemble"];
    check_keys(s, {"members", "epochs", "batch", "lr", "seed", "threads"}, "ensemble");
    read_field(s, "members", cfg.ensemble.members);
    read_field(s, "epochs", cfg.ensemble.epochs);
    read_field(s, "batch", cfg.ensemble.batch);
    read_field(s, "lr", cfg.ensemble.lr);
    read_field(s, "seed", cfg.ensemble.seed);
    read_field(s, "threads", cfg.ensemble.threads);
  }
  if (j.contains("weaklabel")) {
    const json& s = j["weaklabel"];
    check_keys(s,
               {"pairs", "configs_per_pair", "n_functions", "source", "gp_l_min", "gp_l_max",
                "gp_sigma_min", "gp_sigma_max", "seed"},
               "weaklabel");
    read_field(s, "pairs", cfg.weaklabel.pairs);
    read_field(s, "configs_per_pair", cfg.weaklabel.configs_per_pair);
    read_field(s, "n_functions", cfg.weaklabel.n_functions);
    read_field(s, "source", cfg.weaklabel.source);
    read_field(s, "gp_l_min", cfg.weaklabel.gp_l_min);
    read_field(s, "gp_l_max", cfg.weaklabel.gp_l_max);
    read_field(s, "gp_sigma_min", cfg.weaklabel.gp_sigma_min);
    read_field(s, "gp_sigma_max", cfg.weaklabel.gp_sigma_max);
    read_field(s, "seed", cfg.weaklabel.seed);
    if (cfg.weaklabel.source != "ensemble" && cfg.weaklabel.source != "gp")
      throw ConfigError("weaklabel.source must be \"ensemble\" or \"gp\"");
  }
  if (j.contains("model")) {
    const json& s = j["model"];
    check_keys(s,
               {"gnn_width", "gnn_layers", "d_model", "layers", "heads", "d_ff", "dropout",
                "max_seq_len"},
               "model");
    read_field(s, "gnn_width", cfg.model.gnn_width);
    read_field(s, "gnn_layers", cfg.model.gnn_layers);
    read_field(s, "d_model", cfg.model.d_model);
    read_field(s, "layers", cfg.model.layers);
    read_field(s, "heads", cfg.model.heads);
    read_field(s, "d_ff", cfg.model.d_ff);
    read_field(s, "dropout", cfg.model.dropout);
    read_field(s, "max_seq_len", cfg.model.max_seq_len);
  }
  if (j.contains("train")) {
    const json& s = j["train"];
    check_keys(s,
               {"preset", "steps", "batch", "seq_len", "m_min", "lr", "beta1", "beta2",
                "weight_decay", "seed", "finetune_steps", "finetune_batch", "threads"},
               "train");
    read_field(s, "preset", cfg.train.preset);
    read_field(s, "steps", cfg.train.steps);
    read_field(s, "batch", cfg.train.batch);
    read_field(s, "seq_len", cfg.train.seq_len);
    read_field(s, "m_min", cfg.train.m_min);
    read_field(s, "lr", cfg.train.lr);
    read_field(s, "beta1", cfg.train.beta1);
    read_field(s, "beta2", cfg.train.beta2);
    read_field(s, "weight_decay", cfg.train.weight_decay);
    read_field(s, "seed", cfg.train.seed);
    read_field(s, "finetune_steps", cfg.train.finetune_steps);
    read_field(s, "finetune_batch", cfg.train.finetune_batch);
    read_field(s, "threads", cfg.train.threads);
    try {
      trainer::preset_from_string(cfg.train.preset);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("eval")) {
    const json& s = j["eval"];
    check_keys(s, {"context_size", "seeds"}, "eval");
    read_field(s, "context_size", cfg.eval.context_size);
    read_field(s, "seeds", cfg.eval.seeds);
  }
  if (j.contains("optimize")) {
    const json& s = j["optimize"];
    check_keys(s, {"k", "resource_bound"}, "optimize");
    read_field(s, "k", cfg.optimize.k);
    read_field(s, "resource_bound", cfg.optimize.resource_bound);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return from_json_text(read_text_file(path));
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["corpus"] = {{"n_kernels", corpus.n_kernels},
                 {"n_test_kernels", corpus.n_test_kernels},
                 {"seed", corpus.seed},
                 {"q_min", corpus.q_min},
                 {"q_max", corpus.q_max},
                 {"mem_min", corpus.mem_min},
                 {"mem_max", corpus.mem_max},
                 {"multi_function", corpus.multi_function},
                 {"domains", corpus.domains},
                 {"kernel_paths", corpus.kernel_paths}};
  j["oracle"] = json::parse(oracle_constants.to_json());
  j["dse"] = {{"strategy", dse.strategy}, {"budget", dse.budget}, {"seed", dse.seed}};
  j["ensemble"] = {{"members", ensemble.members}, {"epochs", ensemble.epochs},
                   {"batch", ensemble.batch},     {"lr", ensemble.lr},
                   {"seed", ensemble.seed},       {"threads", ensemble.threads}};
  j["weaklabel"] = {{"pairs", weaklabel.pairs},
                    {"configs_per_pair", weaklabel.configs_per_pair},
                    {"n_functions", weaklabel.n_functions},
                    {"source", weaklabel.source},
                    {"gp_l_min", weaklabel.gp_l_min},
                    {"gp_l_max", weaklabel.gp_l_max},
                    {"gp_sigma_min", weaklabel.gp_sigma_min},
                    {"gp_sigma_max", weaklabel.gp_sigma_max},
                    {"seed", weaklabel.seed}};
  j["model"] = {{"gnn_width", model.gnn_width}, {"gnn_layers", model.gnn_layers},
                {"d_model", model.d_model},     {"layers", model.layers},
                {"heads", model.heads},         {"d_ff", model.d_ff},
                {"dropout", model.dropout},     {"max_seq_len", model.max_seq_len}};
  j["train"] = {{"preset", train.preset},
                {"steps", train.steps},
                {"batch", train.batch},
                {"seq_len", train.seq_len},
                {"m_min", train.m_min},
                {"lr", train.lr},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"weight_decay", train.weight_decay},
                {"seed", train.seed},
                {"finetune_steps", train.finetune_steps},
                {"finetune_batch", train.finetune_batch},
                {"threads", train.threads}};
  j["eval"] = {{"context_size", eval.context_size}, {"seeds", eval.seeds}};
  j["optimize"] = {{"k", optimize.k}, {"resource_bound", optimize.resource_bound}};
  return j.dump();
}

std::string ExperimentConfig::hash() const { return content_hash(to_json()); }

gtnp::GtnpConfig ExperimentConfig::gtnp_config() const {
  gtnp::GtnpConfig g;
  g.gnn.width = model.gnn_width;
  g.gnn.layers = model.gnn_layers;
  g.gnn.dropout = model.dropout;
  g.d_model = model.d_model;
  g.layers = model.layers;
  g.heads = model.heads;
  g.d_ff = model.d_ff;
  g.dropout = model.dropout;
  g.max_seq_len = model.max_seq_len;
  return g;
}

trainer::TrainConfig ExperimentConfig::train_config() const {
  trainer::TrainConfig t;
  t.lr = train.lr;
  t.beta1 = train.beta1;
  t.beta2 = train.beta2;
  t.weight_decay = train.weight_decay;
  t.steps = train.steps;
  t.batch = train.batch;
  t.seed = train.seed;
  t.preset = trainer::preset_from_string(train.preset);
  t.seq_len = train.seq_len;
  t.m_min = train.m_min;
  t.finetune_steps = train.finetune_steps;
  t.finetune_batch = train.finetune_batch;
  t.threads = train.threads;
  return t;
}

namespace {

// ---------------------------------------------------------------- artifacts

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw MissingArtifactError("missing upstream artifact: " + p.string());
}

json load_manifest(const fs::path& p) {
  require_file(p);
  return json::parse(read_text_file(p));
}

struct Corpus {
  std::vector<std::shared_ptr<const kernel::Kernel>> kernels;  // file order
  std::vector<std::string> train_ids, test_ids;
  std::shared_ptr<const kernel::Kernel> find(const std::string& id) const {
    for (const auto& k : kernels)
      if (k->id == id) return k;
    return nullptr;
  }
};

Corpus load_corpus(const fs::path& dir) {
  const fs::path kernels_path = dir / "kernels.jsonl";
  require_file(kernels_path);
  Corpus corpus;
  for (const auto& line : read_lines(kernels_path))
    corpus.kernels.push_back(std::make_shared<const kernel::Kernel>(kernel::Kernel::from_json(line)));
  const json manifest = load_manifest(dir / "manifest.json");
  corpus.train_ids = manifest.at("train_ids").get<std::vector<std::string>>();
  corpus.test_ids = manifest.at("test_ids").get<std::vector<std::string>>();
  return corpus;
}

std::vector<oracle::LabeledDesign> load_designs(const fs::path& path) {
  require_file(path);
  std::vector<oracle::LabeledDesign> designs;
  for (const auto& line : read_lines(path))
    designs.push_back(oracle::LabeledDesign::from_json(line));
  return designs;
}

std::vector<surrogate::ProgramData> group_designs(
    const Corpus& corpus, const std::vector<std::string>& ids,
    const std::vector<oracle::LabeledDesign>& designs) {
  std::vector<surrogate::ProgramData> out;
  for (const auto& id : ids) {
    surrogate::ProgramData pd;
    pd.kernel = corpus.find(id);
    if (!pd.kernel) throw MissingArtifactError("kernel \"" + id + "\" not found in kernels.jsonl");
    for (const auto& d : designs)
      if (d.kernel_id == id) pd.designs.push_back(d);
    out.push_back(std::move(pd));
  }
  return out;
}

std::vector<surrogate::LabeledContext> to_contexts(const std::vector<surrogate::ProgramData>& pds) {
  std::vector<surrogate::LabeledContext> out;
  for (const auto& pd : pds) {
    surrogate::LabeledContext ctx;
    ctx.kernel = pd.kernel;
    ctx.designs = pd.designs;
    out.push_back(std::move(ctx));
  }
  return out;
}

// weak contexts keyed by (kernel_id, source_function), file order preserved
std::vector<surrogate::LabeledContext> group_weak_contexts(
    const Corpus& corpus, const std::vector<oracle::LabeledDesign>& weak_designs) {
  std::vector<surrogate::LabeledContext> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& d : weak_designs) {
    const auto key = std::make_pair(d.kernel_id, d.source_function.value_or(""));
    auto it = index.find(key);
    if (it == index.end()) {
      surrogate::LabeledContext ctx;
      ctx.kernel = corpus.find(d.kernel_id);
      if (!ctx.kernel)
        throw MissingArtifactError("weak design references unknown kernel \"" + d.kernel_id + "\"");
      ctx.source_function = d.source_function;
      index.emplace(key, out.size());
      out.push_back(std::move(ctx));
      it = index.find(key);
    }
    out[it->second].designs.push_back(d);
  }
  return out;
}

void write_designs(const fs::path& path, const std::vector<oracle::LabeledDesign>& designs) {
  std::ostringstream ss;
  for (const auto& d : designs) ss << d.to_json() << '\n';
  write_text_file(path, ss.str());
}

// ---------------------------------------------------------------- commands

struct CommonArgs {
  fs::path config_path;
  fs::path out_dir;
  fs::path in_dir;
  std::optional<std::uint64_t> seed;
  std::string kernel_id;  // finetune only
  std::string kind = "eval";  // report only
};

int cmd_synth(const ExperimentConfig& cfg0, const CommonArgs& args) {
  ExperimentConfig cfg = cfg0;
  if (args.seed) cfg.corpus.seed = *args.seed;

  std::vector<kernel::Kernel> kernels;
  std::int64_t generated = 0;
  if (!cfg.corpus.kernel_paths.empty()) {
    for (const auto& p : cfg.corpus.kernel_paths) {
      require_file(p);
      for (const auto& line : read_lines(p)) {
        ++generated;
        const auto report = synth::check_synthesizable_text(line);
        if (report.pass) kernels.push_back(kernel::Kernel::from_json(line));
      }
    }
  } else {
    const int total = cfg.corpus.n_kernels + cfg.corpus.n_test_kernels;
    for (int i = 0; i < total; ++i) {
      synth::GenSpec spec;
      spec.seed = Rng::mix(cfg.corpus.seed, static_cast<std::uint64_t>(i));
      spec.q_min = cfg.corpus.q_min;
      spec.q_max = cfg.corpus.q_max;
      spec.mem_min = cfg.corpus.mem_min;
      spec.mem_max = cfg.corpus.mem_max;
      spec.multi_function = cfg.corpus.multi_function;
      spec.domain = cfg.corpus.domains[static_cast<std::size_t>(i) % cfg.corpus.domains.size()];
      ++generated;
      kernel::Kernel k = synth::generate_parametric(spec);
      if (synth::check_synthesizable(k).pass) kernels.push_back(std::move(k));
    }
  }

  const int n_train = std::min<int>(cfg.corpus.n_kernels, static_cast<int>(kernels.size()));
  std::vector<std::string> train_ids, test_ids;
  std::ostringstream lines;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    lines << kernels[i].to_json() << '\n';
    if (static_cast<int>(i) < n_train)
      train_ids.push_back(kernels[i].id);
    else
      test_ids.push_back(kernels[i].id);
  }
  write_text_file(args.out_dir / "kernels.jsonl", lines.str());

  json manifest;
  manifest["kind"] = "corpus";
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = cfg.corpus.seed;
  manifest["counts"] = {{"programs_generated", generated},
                        {"synthesizable", static_cast<std::int64_t>(kernels.size())},
                        {"labeled_programs", 0},
                        {"actual_labels", 0},
                        {"weak_labels", 0}};
  manifest["train_ids"] = train_ids;
  manifest["test_ids"] = test_ids;
  write_text_file(args.out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::printf("synth: %" PRId64 " generated, %zu synthesizable (%zu train, %zu test)\n", generated,
              kernels.size(), train_ids.size(), test_ids.size());
  return 0;
}

int cmd_dse(const ExperimentConfig& cfg0, const CommonArgs& args) {
  ExperimentConfig cfg = cfg0;
  if (args.seed) cfg.dse.seed = *args.seed;
  const Corpus corpus = load_corpus(args.in_dir);

  std::vector<oracle::LabeledDesign> all;
  for (const auto& k : corpus.kernels) {
    const auto designs =
        oracle::run_dse(*k, cfg.dse.budget, oracle::dse_strategy_from_string(cfg.dse.strategy),
                        Rng::mix(cfg.dse.seed, fnv1a64(k->id)), cfg.oracle_constants);
    all.insert(all.end(), designs.begin(), designs.end());
  }
  write_designs(args.out_dir / "designs.jsonl", all);

  std::set<std::string> labeled_ids;
  for (const auto& d : all) labeled_ids.insert(d.kernel_id);
  json manifest;
  manifest["kind"] = "designs";
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = cfg.dse.seed;
  manifest["oracle"] = json::parse(cfg.oracle_constants.to_json());
  manifest["oracle_hash"] = cfg.oracle_constants.hash();
  manifest["counts"] = {{"labeled_programs", static_cast<std::int64_t>(labeled_ids.size())},
                        {"actual_labels", static_cast<std::int64_t>(all.size())}};
  write_text_file(args.out_dir / "designs_manifest.json", manifest.dump(2) + "\n");
  std::printf("dse: labeled %zu designs across %zu programs\n", all.size(), labeled_ids.size());
  return 0;
}

surrogate::SurrogateConfig surrogate_config_from(const ExperimentConfig& cfg) {
  surrogate::SurrogateConfig sc;
  sc.gnn.width = cfg.model.gnn_width;
  sc.gnn.layers = cfg.model.gnn_layers;
  sc.gnn.dropout = cfg.model.dropout;
  sc.head_hidden = cfg.model.gnn_width;
  return sc;
}

int cmd_train_ensemble(const ExperimentConfig& cfg0, const CommonArgs& args) {
  ExperimentConfig cfg = cfg0;
  if (args.seed) cfg.ensemble.seed = *args.seed;
  const Corpus corpus = load_corpus(args.in_dir);
  const auto designs = load_designs(args.in_dir / "designs.jsonl");
  const auto train_data = group_designs(corpus, corpus.train_ids, designs);

  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.ensemble.members; ++i)
    seeds.push_back(Rng::mix(cfg.ensemble.seed, static_cast<std::uint64_t>(i)));
  surrogate::EnsembleTrainOptions opts;
  opts.epochs = cfg.ensemble.epochs;
  opts.batch = cfg.ensemble.batch;
  opts.lr = cfg.ensemble.lr;
  opts.threads = cfg.ensemble.threads;
  const auto ensemble =
      surrogate::train_ensemble(train_data, cfg.ensemble.members, seeds, opts,
                                surrogate_config_from(cfg));

  const fs::path ens_dir = args.out_dir / "ensemble";
  fs::create_directories(ens_dir);
  json members = json::array();
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "member_%02zu.bin", i);
    save_tensor_archive(ens_dir / name, ensemble.members[i]->params().to_tensors());
    members.push_back({{"file", name},
                       {"seed", seeds[i]},
                       {"test_mse", ensemble.report.member_test_mse[i]},
                       {"y_mean", ensemble.members[i]->label_mean()},
                       {"y_std", ensemble.members[i]->label_std()}});
  }
  json manifest;
  manifest["kind"] = "ensemble";
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = cfg.ensemble.seed;
  manifest["oracle_hash"] = cfg.oracle_constants.hash();
  manifest["members"] = members;
  manifest["mean_test_mse"] = ensemble.report.mean_test_mse;
  manifest["std_test_mse"] = ensemble.report.std_test_mse;
  write_text_file(ens_dir / "manifest.json", manifest.dump(2) + "\n");
  std::printf("train-ensemble: %zu members, test MSE %s (%s)\n", ensemble.members.size(),
              fmt_double(ensemble.report.mean_test_mse).c_str(),
              fmt_double(ensemble.report.std_test_mse).c_str());
  return 0;
}

surrogate::Ensemble load_ensemble(const fs::path& dir, const ExperimentConfig& cfg) {
  const fs::path ens_dir = dir / "ensemble";
  const json manifest = load_manifest(ens_dir / "manifest.json");
  surrogate::Ensemble ensemble;
  for (const auto& m : manifest.at("members")) {
    auto member = std::make_shared<surrogate::SurrogateRegressor>(
        surrogate_config_from(cfg), m.at("seed").get<std::uint64_t>());
    member->params().load_tensors(
        load_tensor_archive(ens_dir / m.at("file").get<std::string>()));
    member->set_label_stats(m.at("y_mean").get<double>(), m.at("y_std").get<double>());
    ensemble.members.push_back(std::move(member));
    ensemble.report.member_test_mse.push_back(m.at("test_mse").get<double>());
  }
  ensemble.report.mean_test_mse = manifest.at("mean_test_mse").get<double>();
  ensemble.report.std_test_mse = manifest.at("std_test_mse").get<double>();
  return ensemble;
}

int cmd_weaklabel(const ExperimentConfig& cfg0, const CommonArgs& args) {
  ExperimentConfig cfg = cfg0;
  if (args.seed) cfg.weaklabel.seed = *args.seed;
  const Corpus corpus = load_corpus(args.in_dir);
  const auto designs = load_designs(args.in_dir / "designs.jsonl");
  const auto train_data = group_designs(corpus, corpus.train_ids, designs);

  surrogate::WeakLabelOptions opts;
  opts.pairs = cfg.weaklabel.pairs;
  opts.configs_per_pair = cfg.weaklabel.configs_per_pair;
  opts.n_functions = cfg.weaklabel.n_functions;
  opts.ratio = 0.5;  // ratio only matters at training time; force weak generation here
  opts.seed = cfg.weaklabel.seed;

  surrogate::HybridDataset ds;
  if (cfg.weaklabel.source == "ensemble") {
    const auto ensemble = load_ensemble(args.in_dir, cfg);
    ds = surrogate::build_hybrid_dataset(train_data, ensemble, opts, cfg.oracle_constants);
  } else {
    surrogate::GpRanges ranges;
    ranges.l_min = cfg.weaklabel.gp_l_min;
    ranges.l_max = cfg.weaklabel.gp_l_max;
    ranges.sigma_min = cfg.weaklabel.gp_sigma_min;
    ranges.sigma_max = cfg.weaklabel.gp_sigma_max;
    ds = surrogate::build_gp_hybrid_dataset(train_data, ranges, opts, cfg.oracle_constants);
  }

  std::vector<oracle::LabeledDesign> weak;
  for (const auto& ctx : ds.weak)
    weak.insert(weak.end(), ctx.designs.begin(), ctx.designs.end());
  write_designs(args.out_dir / "weak_designs.jsonl", weak);

  json manifest;
  manifest["kind"] = "weak_labels";
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = cfg.weaklabel.seed;
  manifest["source"] = cfg.weaklabel.source;
  manifest["pairs"] = static_cast<std::int64_t>(ds.weak.size());
  manifest["configs_per_pair"] = cfg.weaklabel.configs_per_pair;
  manifest["n_functions"] = cfg.weaklabel.n_functions;
  manifest["counts"] = {{"weak_labels", static_cast<std::int64_t>(weak.size())}};
  write_text_file(args.out_dir / "weak_manifest.json", manifest.dump(2) + "\n");
  std::printf("weaklabel: %zu weak labels across %zu contexts (source %s)\n", weak.size(),
              ds.weak.size(), cfg.weaklabel.source.c_str());
  return 0;
}

surrogate::HybridDataset assemble_dataset(const ExperimentConfig& cfg, const Corpus& corpus,
                                          const fs::path& in_dir, double ratio) {
  const auto designs = load_designs(in_dir / "designs.jsonl");
  const auto train_data = group_designs(corpus, corpus.train_ids, designs);
  surrogate::HybridDataset ds;
  ds.ratio = ratio;
  for (const auto& pd : train_data) {
    surrogate::LabeledContext ctx;
    ctx.kernel = pd.kernel;
    ctx.designs = pd.designs;
    ds.actual.push_back(std::move(ctx));
  }
  if (ratio > 0.0) {
    const auto weak = load_designs(in_dir / "weak_designs.jsonl");
    ds.weak = group_weak_contexts(corpus, weak);
  }
  (void)cfg;
  return ds;
}

void write_loss_csv(const fs::path& path, const std::vector<trainer::StepLog>& log,
                    const std::string& config_hash, std::uint64_t seed) {
  std::ostringstream ss;
  ss << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  ss << "step,loss\n";
  for (const auto& entry : log) ss << entry.step << "," << fmt_double(entry.loss) << "\n";
  write_text_file(path, ss.str());
}

json model_manifest(const ExperimentConfig& cfg, const char* kind, std::uint64_t seed,
                    const std::string& dataset_hash) {
  json manifest;
  manifest["kind"] = kind;
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = seed;
  manifest["preset"] = cfg.train.preset;
  manifest["dataset_hash"] = dataset_hash;
  manifest["label_loc"] = 0.0;
  manifest["label_scale"] = 1.0;
  manifest["model"] = {{"gnn_width", cfg.model.gnn_width}, {"gnn_layers", cfg.model.gnn_layers},
                       {"d_model", cfg.model.d_model},     {"layers", cfg.model.layers},
                       {"heads", cfg.model.heads},         {"d_ff", cfg.model.d_ff},
                       {"dropout", cfg.model.dropout},     {"max_seq_len", cfg.model.max_seq_len}};
  return manifest;
}

std::string dataset_hash_for(const fs::path& in_dir, bool with_weak) {
  std::string blob = read_text_file(in_dir / "designs.jsonl");
  if (with_weak && fs::exists(in_dir / "weak_designs.jsonl"))
    blob += read_text_file(in_dir / "weak_designs.jsonl");
  return content_hash(blob);
}

int cmd_pretrain(const ExperimentConfig& cfg0, const CommonArgs& args) {
  ExperimentConfig cfg = cfg0;
  if (args.seed) cfg.train.seed = *args.seed;
  const Corpus corpus = load_corpus(args.in_dir);
  const trainer::TrainConfig tc = cfg.train_config();
  const double ratio = trainer::preset_ratio(tc.preset);
  const auto dataset = assemble_dataset(cfg, corpus, args.in_dir, ratio);

  std::vector<trainer::StepLog> log;
  const gtnp::GtnpModel model = trainer::pretrain(cfg.gtnp_config(), tc, dataset, &log);

  save_tensor_archive(args.out_dir / "model.bin", model.params().to_tensors());
  json manifest =
      model_manifest(cfg, "model", cfg.train.seed, dataset_hash_for(args.in_dir, ratio > 0.0));
  manifest["label_loc"] = model.label_loc();
  manifest["label_scale"] = model.label_scale();
  manifest["steps"] = cfg.train.steps;
  manifest["final_loss"] = log.empty() ? 0.0 : log.back().loss;
  write_text_file(args.out_dir / "model_manifest.json", manifest.dump(2) + "\n");
  write_loss_csv(args.out_dir / "loss.csv", log, cfg.hash(), cfg.train.seed);
  std::printf("pretrain: %s, %d steps, final loss %s\n", cfg.train.preset.c_str(), cfg.train.steps,
              log.empty() ? "n/a" : fmt_double(log.back().loss).c_str());
  return 0;
}

gtnp::GtnpModel load_model(const ExperimentConfig& cfg, const fs::path& dir,
                           const char* file = "model.bin") {
  const fs::path path = dir / file;
  require_file(path);
  const json manifest = load_manifest(dir / "model_manifest.json");
  gtnp::GtnpModel model(cfg.gtnp_config(), manifest.at("seed").get<std::uint64_t>());
  model.params().load_tensors(load_tensor_archive(path));
  model.set_label_stats(manifest.at("label_loc").get<double>(),
                        manifest.at("label_scale").get<double>());
  return model;
}

int cmd_finetune(const ExperimentConfig& cfg0, const CommonArgs& args) {
  ExperimentConfig cfg = cfg0;
  if (args.seed) cfg.train.seed = *args.seed;
  if (args.kernel_id.empty()) throw ConfigError("finetune requires --kernel <id>");
  const Corpus corpus = load_corpus(args.in_dir);
  const auto designs = load_designs(args.in_dir / "designs.jsonl");
  auto kernel_ptr = corpus.find(args.kernel_id);
  if (!kernel_ptr)
    throw MissingArtifactError("kernel \"" + args.kernel_id + "\" not found in kernels.jsonl");

  std::vector<oracle::LabeledDesign> program_designs;
  for (const auto& d : designs)
    if (d.kernel_id == args.kernel_id) program_designs.push_back(d);
  if (static_cast<int>(program_designs.size()) < cfg.eval.context_size)
    throw MissingArtifactError("kernel \"" + args.kernel_id + "\" has fewer than " +
                               std::to_string(cfg.eval.context_size) + " labeled designs");

  // adaptation set: the seeded few-shot context sample
  Rng rng(Rng::mix(cfg.eval.seeds.empty() ? 1 : cfg.eval.seeds.front(), fnv1a64(args.kernel_id)));
  std::vector<int> order(program_designs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  std::vector<oracle::LabeledDesign> adaptation;
  for (int i = 0; i < cfg.eval.context_size; ++i)
    adaptation.push_back(program_designs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);

  const gtnp::GtnpModel base = load_model(cfg, args.in_dir);
  std::vector<trainer::StepLog> log;
  const gtnp::GtnpModel tuned =
      trainer::finetune(base, adaptation, *kernel_ptr, cfg.train_config(), -1, &log);

  save_tensor_archive(args.out_dir / "model_ft.bin", tuned.params().to_tensors());
  json manifest = model_manifest(cfg, "model_ft", cfg.train.seed, dataset_hash_for(args.in_dir, false));
  manifest["label_loc"] = tuned.label_loc();
  manifest["label_scale"] = tuned.label_scale();
  manifest["kernel"] = args.kernel_id;
  manifest["finetune_steps"] = cfg.train.finetune_steps;
  write_text_file(args.out_dir / "model_ft_manifest.json", manifest.dump(2) + "\n");
  write_loss_csv(args.out_dir / "loss_ft.csv", log, cfg.hash(), cfg.train.seed);
  std::printf("finetune: %s on %s for %d steps\n", cfg.train.preset.c_str(),
              args.kernel_id.c_str(), cfg.train.finetune_steps);
  return 0;
}

json eval_report_to_json(const trainer::EvalReport& report) {
  json j;
  j["seeds"] = report.seeds;
  j["geomean_mse"] = report.geomean_mse;
  j["programs"] = json::array();
  for (const auto& p : report.programs)
    j["programs"].push_back({{"kernel_id", p.kernel_id},
                             {"mse_mean", p.mse_mean},
                             {"mse_std", p.mse_std},
                             {"per_seed", p.per_seed},
                             {"n_targets", p.n_targets}});
  j["skipped"] = report.skipped;
  return j;
}

void write_eval_csv(const fs::path& path, const trainer::EvalReport& report,
                    const std::string& config_hash, std::uint64_t seed) {
  std::ostringstream ss;
  ss << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  ss << "kernel_id,mse_mean,mse_std,n_targets\n";
  for (const auto& p : report.programs)
    ss << p.kernel_id << "," << fmt_double(p.mse_mean) << "," << fmt_double(p.mse_std) << ","
       << p.n_targets << "\n";
  ss << "geomean," << fmt_double(report.geomean_mse) << ",,\n";
  write_text_file(path, ss.str());
}

int cmd_eval(const ExperimentConfig& cfg0, const CommonArgs& args) {
  ExperimentConfig cfg = cfg0;
  if (args.seed) cfg.eval.seeds = {*args.seed};
  const Corpus corpus = load_corpus(args.in_dir);
  const auto designs = load_designs(args.in_dir / "designs.jsonl");
  const auto test_data = to_contexts(group_designs(corpus, corpus.test_ids, designs));
  const gtnp::GtnpModel model = load_model(cfg, args.in_dir);

  const trainer::TrainConfig tc = cfg.train_config();
  const trainer::EvalReport report =
      trainer::preset_finetunes(tc.preset)
          ? trainer::evaluate_fewshot_ft(model, test_data, tc, cfg.eval.context_size,
                                         cfg.eval.seeds)
          : trainer::evaluate_fewshot(model, test_data, cfg.eval.context_size, cfg.eval.seeds);

  json j = eval_report_to_json(report);
  j["config_hash"] = cfg.hash();
  j["preset"] = cfg.train.preset;
  write_text_file(args.out_dir / "eval.json", j.dump(2) + "\n");
  write_eval_csv(args.out_dir / "eval.csv", report, cfg.hash(), cfg.train.seed);
  std::printf("eval: %zu programs, geomean MSE %s\n", report.programs.size(),
              fmt_double(report.geomean_mse).c_str());
  return 0;
}

int cmd_optimize(const ExperimentConfig& cfg0, const CommonArgs& args) {
  ExperimentConfig cfg = cfg0;
  if (args.seed) cfg.eval.seeds = {*args.seed};
  const Corpus corpus = load_corpus(args.in_dir);
  const auto designs = load_designs(args.in_dir / "designs.jsonl");
  const auto test_data = to_contexts(group_designs(corpus, corpus.test_ids, designs));
  const gtnp::GtnpModel model = load_model(cfg, args.in_dir);
  const trainer::TrainConfig tc = cfg.train_config();
  const std::uint64_t seed = cfg.eval.seeds.empty() ? 1 : cfg.eval.seeds.front();

  json rows = json::array();
  std::ostringstream csv;
  csv << "# config_hash=" << cfg.hash() << " seed=" << seed << "\n";
  csv << "kernel_id,k,best_latency,ideal_latency,substituted\n";
  for (const auto& program : test_data) {
    if (program.designs.size() < static_cast<std::size_t>(cfg.eval.context_size) + 1) continue;
    // the seeded context sample adapts the model; the remaining samples are ranked
    std::vector<int> order(program.designs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(Rng::mix(seed, fnv1a64(program.kernel->id)));
    rng.shuffle(order);
    std::vector<oracle::LabeledDesign> context, samples;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& d = program.designs[static_cast<std::size_t>(order[i])];
      if (i < static_cast<std::size_t>(cfg.eval.context_size))
        context.push_back(d);
      else
        samples.push_back(d);
    }
    gtnp::GtnpModel adapted(cfg.gtnp_config(), model.seed());
    adapted.params().load_tensors(model.params().to_tensors());
    adapted.set_label_stats(model.label_loc(), model.label_scale());
    if (trainer::preset_finetunes(tc.preset)) {
      trainer::TrainConfig ft_cfg = tc;
      ft_cfg.seed = Rng::mix(tc.seed, seed);
      adapted = trainer::finetune(adapted, context, *program.kernel, ft_cfg);
    }
    const trainer::OptEntry entry =
        trainer::best_at_k(trainer::incontext_predictor(adapted, context), *program.kernel,
                           samples, cfg.optimize.k, cfg.optimize.resource_bound,
                           cfg.oracle_constants);
    rows.push_back({{"kernel_id", entry.kernel_id},
                    {"k", entry.k},
                    {"best_latency", entry.best_latency},
                    {"ideal_latency", entry.ideal_latency},
                    {"substituted", entry.substituted}});
    csv << entry.kernel_id << "," << entry.k << "," << fmt_double(entry.best_latency) << ","
        << fmt_double(entry.ideal_latency) << "," << (entry.substituted ? "true" : "false")
        << "\n";
  }
  json j;
  j["config_hash"] = cfg.hash();
  j["seed"] = seed;
  j["k"] = cfg.optimize.k;
  j["resource_bound"] = cfg.optimize.resource_bound;
  j["programs"] = rows;
  write_text_file(args.out_dir / "opt.json", j.dump(2) + "\n");
  write_text_file(args.out_dir / "opt.csv", csv.str());
  std::printf("optimize: best@%d over %zu programs\n", cfg.optimize.k, rows.size());
  return 0;
}

int cmd_report(const ExperimentConfig& cfg, const CommonArgs& args) {
  (void)cfg;
  std::ostringstream csv;
  if (args.kind == "eval") {
    const json j = load_manifest(args.in_dir / "eval.json");
    csv << "# config_hash=" << j.at("config_hash").get<std::string>() << "\n";
    csv << "kernel_id,mse\n";
    for (const auto& p : j.at("programs")) {
      char cell[96];
      std::snprintf(cell, sizeof(cell), "%.2f (%.2f)", p.at("mse_mean").get<double>(),
                    p.at("mse_std").get<double>());
      csv << p.at("kernel_id").get<std::string>() << "," << cell << "\n";
    }
    char geomean_cell[32];
    std::snprintf(geomean_cell, sizeof(geomean_cell), "%.2f", j.at("geomean_mse").get<double>());
    csv << "geomean," << geomean_cell << "\n";
  } else if (args.kind == "opt") {
    const json j = load_manifest(args.in_dir / "opt.json");
    csv << "# config_hash=" << j.at("config_hash").get<std::string>() << "\n";
    csv << "kernel_id,best_latency,ideal_latency,substituted\n";
    for (const auto& p : j.at("programs"))
      csv << p.at("kernel_id").get<std::string>() << ","
          << fmt_double(p.at("best_latency").get<double>()) << ","
          << fmt_double(p.at("ideal_latency").get<double>()) << ","
          << (p.at("substituted").get<bool>() ? "true" : "false") << "\n";
  } else {
    throw ConfigError("report --kind must be \"eval\" or \"opt\"");
  }
  write_text_file(args.out_dir / "report.csv", csv.str());
  std::printf("report: wrote %s\n", (args.out_dir / "report.csv").string().c_str());
  return 0;
}

}  // namespace

ValidationResult validate_dataset(const fs::path& dir) {
  ValidationResult result;
  auto err = [&](const fs::path& file, std::size_t line_no, const std::string& what) {
    result.errors.push_back(file.filename().string() + ":" + std::to_string(line_no) + ": " + what);
  };

  const fs::path kernels_path = dir / "kernels.jsonl";
  if (!fs::exists(kernels_path)) {
    result.errors.push_back("kernels.jsonl: missing");
    return result;
  }

  std::map<std::string, kernel::Kernel> kernels;
  std::map<std::string, kernel::DesignSpace> spaces;
  {
    const auto lines = read_lines(kernels_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        kernel::Kernel k = kernel::Kernel::from_json(lines[i]);
        const auto errs = k.validate();
        for (const auto& e : errs) err(kernels_path, i + 1, e);
        if (errs.empty()) {
          spaces.emplace(k.id, kernel::build_design_space(k));
          kernels.emplace(k.id, std::move(k));
        }
      } catch (const std::exception& e) {
        err(kernels_path, i + 1, e.what());
      }
    }
  }

  auto check_designs = [&](const fs::path& path, bool weak_file) -> std::int64_t {
    if (!fs::exists(path)) return 0;
    const auto lines = read_lines(path);
    std::int64_t count = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        const oracle::LabeledDesign d = oracle::LabeledDesign::from_json(lines[i]);
        auto it = spaces.find(d.kernel_id);
        if (it == spaces.end()) {
          err(path, i + 1, "unknown kernel \"" + d.kernel_id + "\"");
          continue;
        }
        if (!it->second.contains(d.config))
          err(path, i + 1, "config outside the design space of \"" + d.kernel_id + "\"");
        if (!std::isfinite(d.y)) err(path, i + 1, "label y is not finite");
        if ((d.label_kind == oracle::LabelKind::weak) != weak_file)
          err(path, i + 1, weak_file ? "actual label in weak_designs.jsonl"
                                     : "weak label in designs.jsonl");
        ++count;
      } catch (const std::exception& e) {
        err(path, i + 1, e.what());
      }
    }
    return count;
  };

  result.manifest.actual_labels = check_designs(dir / "designs.jsonl", false);
  result.manifest.weak_labels = check_designs(dir / "weak_designs.jsonl", true);

  std::set<std::string> labeled_ids;
  if (fs::exists(dir / "designs.jsonl"))
    for (const auto& line : read_lines(dir / "designs.jsonl")) {
      try {
        labeled_ids.insert(oracle::LabeledDesign::from_json(line).kernel_id);
      } catch (...) {
      }
    }
  result.manifest.labeled_programs = static_cast<std::int64_t>(labeled_ids.size());

  if (fs::exists(dir / "manifest.json")) {
    try {
      const json manifest = json::parse(read_text_file(dir / "manifest.json"));
      result.manifest.programs_generated =
          manifest.at("counts").at("programs_generated").get<std::int64_t>();
      result.manifest.synthesizable = manifest.at("counts").at("synthesizable").get<std::int64_t>();
      result.manifest.creation_seed = manifest.at("seed").get<std::uint64_t>();
      const std::int64_t kernel_lines =
          static_cast<std::int64_t>(read_lines(kernels_path).size());
      if (result.manifest.synthesizable != kernel_lines)
        result.errors.push_back("manifest.json: synthesizable count " +
                                std::to_string(result.manifest.synthesizable) +
                                " != kernels.jsonl line count " + std::to_string(kernel_lines));
    } catch (const std::exception& e) {
      result.errors.push_back(std::string("manifest.json: ") + e.what());
    }
  }
  if (fs::exists(dir / "designs_manifest.json")) {
    try {
      const json manifest = json::parse(read_text_file(dir / "designs_manifest.json"));
      result.manifest.oracle_hash = manifest.at("oracle_hash").get<std::string>();
      const auto declared = manifest.at("counts").at("actual_labels").get<std::int64_t>();
      if (declared != result.manifest.actual_labels)
        result.errors.push_back("designs_manifest.json: actual_labels " + std::to_string(declared) +
                                " != recounted " + std::to_string(result.manifest.actual_labels));
    } catch (const std::exception& e) {
      result.errors.push_back(std::string("designs_manifest.json: ") + e.what());
    }
  }
  if (fs::exists(dir / "weak_manifest.json")) {
    try {
      const json manifest = json::parse(read_text_file(dir / "weak_manifest.json"));
      const auto declared = manifest.at("counts").at("weak_labels").get<std::int64_t>();
      if (declared != result.manifest.weak_labels)
        result.errors.push_back("weak_manifest.json: weak_labels " + std::to_string(declared) +
                                " != recounted " + std::to_string(result.manifest.weak_labels));
    } catch (const std::exception& e) {
      result.errors.push_back(std::string("weak_manifest.json: ") + e.what());
    }
  }

  result.ok = result.errors.empty();
  return result;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"iceberg: synthetic-corpus workbench for HLS performance modeling"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string config_path, out_dir, in_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub, bool needs_in) {
    sub->add_option("--config", config_path, "experiment config JSON")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    if (needs_in) sub->add_option("--in", in_dir, "directory holding upstream artifacts");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { seed = v; seed_set = true; },
        "override the stage seed");
  };

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate the kernel corpus");
  add_common(synth_cmd, false);
  CLI::App* dse_cmd = app.add_subcommand("dse", "label designs with the cost oracle");
  add_common(dse_cmd, true);
  CLI::App* ens_cmd = app.add_subcommand("train-ensemble", "train the surrogate ensemble");
  add_common(ens_cmd, true);
  CLI::App* weak_cmd = app.add_subcommand("weaklabel", "generate weak labels");
  add_common(weak_cmd, true);
  CLI::App* pre_cmd = app.add_subcommand("pretrain", "pretrain the in-context model");
  add_common(pre_cmd, true);
  CLI::App* ft_cmd = app.add_subcommand("finetune", "fine-tune on one program's few-shot designs");
  add_common(ft_cmd, true);
  std::string kernel_id;
  ft_cmd->add_option("--kernel", kernel_id, "target kernel id")->required();
  CLI::App* eval_cmd = app.add_subcommand("eval", "few-shot evaluation on test programs");
  add_common(eval_cmd, true);
  CLI::App* opt_cmd = app.add_subcommand("optimize", "offline best@K optimization");
  add_common(opt_cmd, true);
  CLI::App* report_cmd = app.add_subcommand("report", "render a stored report as CSV");
  add_common(report_cmd, true);
  std::string report_kind = "eval";
  report_cmd->add_option("--kind", report_kind, "eval or opt");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "{\"error\": \"%s\", \"code\": 2}\n", e.what());
    return 2;
  }

  try {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    common.config_path = config_path;
    common.out_dir = out_dir;
    common.in_dir = in_dir.empty() ? out_dir : in_dir;
    if (seed_set) common.seed = seed;
    common.kernel_id = kernel_id;
    common.kind = report_kind;
    fs::create_directories(common.out_dir);

    if (synth_cmd->parsed()) return cmd_synth(cfg, common);
    if (dse_cmd->parsed()) return cmd_dse(cfg, common);
    if (ens_cmd->parsed()) return cmd_train_ensemble(cfg, common);
    if (weak_cmd->parsed()) return cmd_weaklabel(cfg, common);
    if (pre_cmd->parsed()) return cmd_pretrain(cfg, common);
    if (ft_cmd->parsed()) return cmd_finetune(cfg, common);
    if (eval_cmd->parsed()) return cmd_eval(cfg, common);
    if (opt_cmd->parsed()) return cmd_optimize(cfg, common);
    if (report_cmd->parsed()) return cmd_report(cfg, common);
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "{\"error\": \"%s\", \"code\": 2}\n", e.what());
    return 2;
  } catch (const MissingArtifactError& e) {
    std::fprintf(stderr, "{\"error\": \"%s\", \"code\": 3}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\": \"%s\", \"code\": 1}\n", e.what());
    return 1;
  }
}

}  // namespace iceberg::workbench

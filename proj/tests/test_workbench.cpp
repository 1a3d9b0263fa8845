#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "iceberg/util/io.hpp"
#include "iceberg/workbench.hpp"

using namespace iceberg;
using namespace iceberg::workbench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "iceberg_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// a config small enough for test-speed pipeline runs
std::string tiny_config_json() {
  return R"({
    "corpus": {"n_kernels": 4, "n_test_kernels": 2, "seed": 5, "q_min": 1, "q_max": 3,
               "mem_min": 1024, "mem_max": 8192},
    "dse": {"strategy": "random", "budget": 30, "seed": 3},
    "ensemble": {"members": 2, "epochs": 2, "batch": 8, "seed": 7},
    "weaklabel": {"pairs": 4, "configs_per_pair": 12, "n_functions": 2, "seed": 11},
    "model": {"gnn_width": 8, "gnn_layers": 1, "d_model": 8, "layers": 1, "heads": 2,
              "d_ff": 8, "dropout": 0.1, "max_seq_len": 64},
    "train": {"preset": "Ice-A", "steps": 8, "batch": 2, "seq_len": 12, "m_min": 3, "seed": 1,
              "finetune_steps": 4, "finetune_batch": 2},
    "eval": {"context_size": 10, "seeds": [1, 2]},
    "optimize": {"k": 2, "resource_bound": 0.8}
  })";
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  write_text_file(p, text);
  return p;
}

int cli(std::vector<std::string> args) { return run_cli(args); }

}  // namespace

TEST_CASE("config defaults, round-trip, and strictness") {
  const ExperimentConfig defaults = ExperimentConfig::from_json_text("{}");
  CHECK(defaults.train.lr == 5e-4);
  CHECK(defaults.train.beta2 == 0.99);
  CHECK(defaults.train.weight_decay == 1e-5);
  CHECK(defaults.train.finetune_steps == 200);
  CHECK(defaults.eval.context_size == 50);
  CHECK(defaults.eval.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(defaults.optimize.resource_bound == 0.8);
  CHECK(defaults.model.layers == 6);
  CHECK(defaults.model.d_model == 128);
  CHECK(defaults.model.heads == 8);

  const ExperimentConfig back = ExperimentConfig::from_json_text(defaults.to_json());
  CHECK(back.hash() == defaults.hash());

  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"corpse": {}})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"train": {"learning_rate": 0.1}})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"train": {"preset": "Ice-X"}})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("not json"), ConfigError);
}

TEST_CASE("synth writes a corpus whose manifest matches the files") {
  const fs::path dir = fresh_dir("synth");
  const fs::path cfg = write_config(dir, tiny_config_json());
  CHECK(cli({"synth", "--config", cfg.string(), "--out", (dir / "run").string()}) == 0);
  CHECK(fs::exists(dir / "run" / "kernels.jsonl"));
  CHECK(fs::exists(dir / "run" / "manifest.json"));
  CHECK(read_lines(dir / "run" / "kernels.jsonl").size() == 6);
}

TEST_CASE("missing upstream artifacts exit with code 3") {
  const fs::path dir = fresh_dir("missing");
  const fs::path cfg = write_config(dir, tiny_config_json());
  CHECK(cli({"dse", "--config", cfg.string(), "--out", (dir / "run").string()}) == 3);
}

TEST_CASE("malformed config exits with code 2") {
  const fs::path dir = fresh_dir("badcfg");
  const fs::path cfg = write_config(dir, R"({"oracle": {"frequency": 300}})");
  CHECK(cli({"synth", "--config", cfg.string(), "--out", (dir / "run").string()}) == 2);
}

TEST_CASE("pipeline stages chain through --in and validate_dataset passes") {
  const fs::path dir = fresh_dir("pipeline");
  const fs::path cfg = write_config(dir, tiny_config_json());
  const std::string run = (dir / "run").string();
  REQUIRE(cli({"synth", "--config", cfg.string(), "--out", run}) == 0);
  REQUIRE(cli({"dse", "--config", cfg.string(), "--out", run}) == 0);
  REQUIRE(cli({"train-ensemble", "--config", cfg.string(), "--out", run}) == 0);
  REQUIRE(cli({"weaklabel", "--config", cfg.string(), "--out", run}) == 0);
  REQUIRE(cli({"pretrain", "--config", cfg.string(), "--out", run}) == 0);
  REQUIRE(cli({"eval", "--config", cfg.string(), "--out", run}) == 0);
  REQUIRE(cli({"optimize", "--config", cfg.string(), "--out", run}) == 0);
  REQUIRE(cli({"report", "--config", cfg.string(), "--out", run}) == 0);

  CHECK(fs::exists(dir / "run" / "designs.jsonl"));
  CHECK(fs::exists(dir / "run" / "weak_designs.jsonl"));
  CHECK(fs::exists(dir / "run" / "ensemble" / "manifest.json"));
  CHECK(fs::exists(dir / "run" / "model.bin"));
  CHECK(fs::exists(dir / "run" / "loss.csv"));
  CHECK(fs::exists(dir / "run" / "eval.csv"));
  CHECK(fs::exists(dir / "run" / "opt.csv"));
  CHECK(fs::exists(dir / "run" / "report.csv"));

  const ValidationResult result = validate_dataset(dir / "run");
  for (const auto& e : result.errors) MESSAGE(e);
  CHECK(result.ok);
  CHECK(result.manifest.actual_labels ==
        static_cast<std::int64_t>(read_lines(dir / "run" / "designs.jsonl").size()));
  CHECK(result.manifest.weak_labels ==
        static_cast<std::int64_t>(read_lines(dir / "run" / "weak_designs.jsonl").size()));
  CHECK(result.manifest.labeled_programs == 6);

  // finetune against a labeled kernel id
  const auto kernels = read_lines(dir / "run" / "kernels.jsonl");
  const auto first_id = kernel::Kernel::from_json(kernels.front()).id;
  REQUIRE(cli({"finetune", "--config", cfg.string(), "--out", run, "--kernel", first_id}) == 0);
  CHECK(fs::exists(dir / "run" / "model_ft.bin"));
}

TEST_CASE("corrupted design lines are reported with their line numbers") {
  const fs::path dir = fresh_dir("corrupt");
  const fs::path cfg = write_config(dir, tiny_config_json());
  const std::string run = (dir / "run").string();
  REQUIRE(cli({"synth", "--config", cfg.string(), "--out", run}) == 0);
  REQUIRE(cli({"dse", "--config", cfg.string(), "--out", run}) == 0);

  // break line 2 of designs.jsonl
  auto lines = read_lines(dir / "run" / "designs.jsonl");
  REQUIRE(lines.size() >= 2);
  lines[1] = R"({"kernel_id": "nonexistent", "config": [], "y": 0.0, "latency_cycles": 1.0,)"
             R"( "resources": {"lut": 0, "dsp": 0, "bram": 0}, "valid": true,)"
             R"( "label_kind": "actual", "source_function": null})";
  std::string blob;
  for (const auto& l : lines) blob += l + "\n";
  write_text_file(dir / "run" / "designs.jsonl", blob);

  const ValidationResult result = validate_dataset(dir / "run");
  CHECK(!result.ok);
  bool found = false;
  for (const auto& e : result.errors)
    found = found || e.find("designs.jsonl:2") != std::string::npos;
  CHECK(found);
}

TEST_CASE("identical config and seed reproduce eval.csv byte for byte") {
  const fs::path dir = fresh_dir("repro");
  const fs::path cfg = write_config(dir, tiny_config_json());
  for (const std::string run : {(dir / "a").string(), (dir / "b").string()}) {
    REQUIRE(cli({"synth", "--config", cfg.string(), "--out", run}) == 0);
    REQUIRE(cli({"dse", "--config", cfg.string(), "--out", run}) == 0);
    REQUIRE(cli({"pretrain", "--config", cfg.string(), "--out", run}) == 0);
    REQUIRE(cli({"eval", "--config", cfg.string(), "--out", run}) == 0);
  }
  CHECK(read_text_file(dir / "a" / "eval.csv") == read_text_file(dir / "b" / "eval.csv"));
  CHECK(read_text_file(dir / "a" / "manifest.json") == read_text_file(dir / "b" / "manifest.json"));
}

TEST_CASE("report renders mean (std) rows from eval.json") {
  const fs::path dir = fresh_dir("report");
  write_text_file(dir / "eval.json", R"({
    "config_hash": "0000000000000000",
    "seeds": [1, 2, 3],
    "geomean_mse": 0.06,
    "programs": [
      {"kernel_id": "k1", "mse_mean": 0.04, "mse_std": 0.01, "per_seed": [0.03, 0.05], "n_targets": 9},
      {"kernel_id": "k2", "mse_mean": 0.09, "mse_std": 0.02, "per_seed": [0.07, 0.11], "n_targets": 9}
    ],
    "skipped": []
  })");
  const fs::path cfg = write_config(dir, "{}");
  REQUIRE(cli({"report", "--config", cfg.string(), "--in", dir.string(), "--out", dir.string()}) == 0);
  const std::string csv = read_text_file(dir / "report.csv");
  CHECK(csv.find("k1,0.04 (0.01)") != std::string::npos);
  CHECK(csv.find("k2,0.09 (0.02)") != std::string::npos);
  CHECK(csv.find("geomean,0.06") != std::string::npos);
}

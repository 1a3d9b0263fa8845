#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "iceberg/oracle.hpp"
#include "test_util.hpp"

using namespace iceberg;
using namespace iceberg::oracle;
using kernel::DesignSpace;
using kernel::PipelineMode;
using kernel::PragmaConfig;

TEST_CASE("latency of a plain loop is trips times body") {
  // trip 16, body = 1 add + 1 mult + 1 load + 1 store = 4 ops
  kernel::Kernel k = testutil::single_loop_kernel(16, 1, 1, 1, 1);
  const DesignSpace space = kernel::build_design_space(k);
  PragmaConfig cfg = kernel::default_config(space);
  CHECK(latency(k, cfg) == 64.0);

  cfg.per_loop[0].parallel_factor = 4;
  CHECK(latency(k, cfg) == 16.0);
}

TEST_CASE("fg pipeline flattens the subtree") {
  // 8 x 8 nest, inner body: 2 adds + 1 mult (D = 3), no memory ops
  kernel::Kernel k = testutil::nested_kernel(8, 8, {2, 1, 0, 0});
  const DesignSpace space = kernel::build_design_space(k);
  PragmaConfig cfg = kernel::default_config(space);
  cfg.per_loop[0].pipeline_mode = PipelineMode::fg;
  CHECK(latency(k, cfg) == 67.0);  // ceil(64/1) + 3
}

TEST_CASE("cg pipeline overlaps iterations at II = ceil(B/4)") {
  kernel::Kernel k = testutil::single_loop_kernel(16, 2, 2, 3, 1);  // B = 8
  const DesignSpace space = kernel::build_design_space(k);
  PragmaConfig cfg = kernel::default_config(space);
  cfg.per_loop[0].pipeline_mode = PipelineMode::cg;
  CHECK(latency(k, cfg) == 15.0 * 2.0 + 8.0);  // II = 2
}

TEST_CASE("resources scale with parallel path products") {
  kernel::Kernel k = testutil::nested_kernel(8, 8, {1, 2, 2, 1});
  const DesignSpace space = kernel::build_design_space(k);
  PragmaConfig cfg = kernel::default_config(space);
  const Resources base = resources(k, cfg);
  CHECK(base.dsp == doctest::Approx(2.0 / 512.0));

  cfg.per_loop[1].parallel_factor = 2;
  const Resources doubled = resources(k, cfg);
  CHECK(doubled.dsp == doctest::Approx(2.0 * base.dsp));

  cfg.per_loop[0].parallel_factor = 4;  // outer factor multiplies the whole path
  const Resources shot = resources(k, cfg);
  CHECK(shot.dsp == doctest::Approx(8.0 * base.dsp));
}

TEST_CASE("kernel without multiplies uses no DSPs") {
  kernel::Kernel k = testutil::single_loop_kernel(16, 2, 0, 1, 1);
  const DesignSpace space = kernel::build_design_space(k);
  CHECK(resources(k, kernel::default_config(space)).dsp == 0.0);
}

TEST_CASE("tile factors double BRAM once") {
  kernel::Kernel k = testutil::nested_kernel(8, 8, {1, 1, 2, 1});
  const DesignSpace space = kernel::build_design_space(k);
  PragmaConfig cfg = kernel::default_config(space);
  const double bram0 = resources(k, cfg).bram;
  cfg.per_loop[0].tile_factor = 2;
  CHECK(resources(k, cfg).bram == doctest::Approx(2.0 * bram0));
  cfg.per_loop[1].tile_factor = 4;  // still only one doubling
  CHECK(resources(k, cfg).bram == doctest::Approx(2.0 * bram0));
  // tile leaves latency untouched
  CHECK(latency(k, cfg) == latency(k, kernel::default_config(space)));
}

TEST_CASE("normalize_label maps the default design to zero") {
  CHECK(normalize_label(100.0, 100.0) == 0.0);
  CHECK(normalize_label(25.0, 100.0) == -2.0);
  const double y = normalize_label(37.0, 100.0);
  CHECK(std::abs(normalize_label(denormalize_label(y, 100.0), 100.0) - y) < 1e-12);
  CHECK_THROWS_AS(normalize_label(0.0, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(normalize_label(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("oracle is deterministic") {
  kernel::Kernel k = testutil::random_kernel(11);
  const DesignSpace space = kernel::build_design_space(k);
  Rng rng(4);
  const PragmaConfig cfg = kernel::sample_config(space, rng);
  const CostReport a = evaluate(k, cfg);
  const CostReport b = evaluate(k, cfg);
  CHECK(a.latency_cycles == b.latency_cycles);
  CHECK(a.resources.lut == b.resources.lut);
  CHECK(a.resources.dsp == b.resources.dsp);
  CHECK(a.resources.bram == b.resources.bram);
  CHECK(a.valid == b.valid);
}

TEST_CASE("parallel monotonicity") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    kernel::Kernel k = testutil::random_kernel(seed);
    if (k.loop_count() == 0) continue;
    const DesignSpace space = kernel::build_design_space(k);
    Rng rng(seed);
    PragmaConfig cfg = kernel::sample_config(space, rng);
    const std::size_t li = rng.bounded(cfg.per_loop.size());
    const auto& cands = space.per_loop[li].parallel;
    if (cands.size() < 2) continue;
    // pick a factor strictly below the max and bump it
    std::size_t ci = rng.bounded(cands.size() - 1);
    cfg.per_loop[li].parallel_factor = cands[ci];
    PragmaConfig bumped = cfg;
    bumped.per_loop[li].parallel_factor = cands[ci + 1];

    CHECK(latency(k, bumped) <= latency(k, cfg));
    const Resources r0 = resources(k, cfg);
    const Resources r1 = resources(k, bumped);
    CHECK(r1.lut >= r0.lut);
    CHECK(r1.dsp >= r0.dsp);
    CHECK(r1.bram >= r0.bram);
  }
}

TEST_CASE("exhaustive DSE labels everything, best first") {
  kernel::Kernel k = testutil::single_loop_kernel(8, 1, 1, 1, 1);  // 48 points
  const auto designs = run_dse(k, 48, DseStrategy::exhaustive, 0);
  CHECK(designs.size() == 48);
  for (std::size_t i = 1; i < designs.size(); ++i)
    CHECK(designs[i - 1].latency_cycles <= designs[i].latency_cycles);

  // brute-force minimum agrees
  const DesignSpace space = kernel::build_design_space(k);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cfg : kernel::enumerate_configs(space, std::nullopt, 0))
    best = std::min(best, latency(k, cfg));
  CHECK(designs.front().latency_cycles == best);
}

TEST_CASE("budget 1 returns exactly the default design") {
  kernel::Kernel k = testutil::nested_kernel(8, 8, {1, 1, 2, 1});
  const auto designs = run_dse(k, 1, DseStrategy::greedy, 5);
  REQUIRE(designs.size() == 1);
  const DesignSpace space = kernel::build_design_space(k);
  CHECK(designs[0].config == kernel::default_config(space));
  CHECK(designs[0].y == 0.0);
}

TEST_CASE("random DSE is reproducible and always includes the default") {
  kernel::Kernel k = testutil::nested_kernel(16, 16, {2, 2, 3, 1});
  const auto a = run_dse(k, 20, DseStrategy::random, 9);
  const auto b = run_dse(k, 20, DseStrategy::random, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].config == b[i].config);
  const DesignSpace space = kernel::build_design_space(k);
  const PragmaConfig def = kernel::default_config(space);
  CHECK(std::any_of(a.begin(), a.end(),
                    [&](const LabeledDesign& d) { return d.config == def; }));
}

TEST_CASE("greedy DSE finds the optimum on small spaces") {
  kernel::Kernel k = testutil::single_loop_kernel(8, 1, 1, 1, 1);
  const auto greedy = run_dse(k, 48, DseStrategy::greedy, 1);
  const auto exhaustive = run_dse(k, 48, DseStrategy::exhaustive, 1);
  CHECK(greedy.front().latency_cycles == exhaustive.front().latency_cycles);
}

TEST_CASE("labeled designs round-trip through JSON") {
  kernel::Kernel k = testutil::random_kernel(3);
  const auto designs = run_dse(k, 10, DseStrategy::random, 2);
  for (const auto& d : designs) {
    const LabeledDesign back = LabeledDesign::from_json(d.to_json());
    CHECK(back.kernel_id == d.kernel_id);
    CHECK(back.config == d.config);
    CHECK(back.y == d.y);
    CHECK(back.latency_cycles == d.latency_cycles);
    CHECK(back.valid == d.valid);
    CHECK((back.label_kind == d.label_kind));
  }
}

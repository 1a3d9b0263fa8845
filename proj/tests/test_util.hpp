#pragma once

#include <memory>
#include <vector>

#include "iceberg/kernel.hpp"
#include "iceberg/oracle.hpp"
#include "iceberg/surrogate.hpp"
#include "iceberg/synth.hpp"

namespace iceberg::testutil {

// single loop: for (i < trip) { ops }
inline kernel::Kernel single_loop_kernel(std::int64_t trip, std::int64_t adds, std::int64_t mults,
                                         std::int64_t loads, std::int64_t stores) {
  kernel::Kernel k;
  k.id = "single";
  k.domain_tag = "reduction";
  kernel::Loop l;
  l.id = 0;
  l.trip_count = trip;
  l.body_ops = {adds, mults, loads, stores};
  if (loads + stores > 0) l.array_refs = {"A"};
  k.loops.push_back(l);
  k.arrays.push_back({"A", 32, {64}});
  return k;
}

// two-level nest: outer(trip_outer) { inner(trip_inner) { ops } }
inline kernel::Kernel nested_kernel(std::int64_t trip_outer, std::int64_t trip_inner,
                                    kernel::OpCounts inner_ops) {
  kernel::Kernel k;
  k.id = "nested";
  k.domain_tag = "stencil";
  kernel::Loop outer;
  outer.id = 0;
  outer.trip_count = trip_outer;
  k.loops.push_back(outer);
  kernel::Loop inner;
  inner.id = 1;
  inner.trip_count = trip_inner;
  inner.parent = 0;
  inner.body_ops = inner_ops;
  if (inner_ops.loads + inner_ops.stores > 0) inner.array_refs = {"A"};
  k.loops.push_back(inner);
  k.arrays.push_back({"A", 32, {256}});
  return k;
}

inline kernel::Kernel random_kernel(std::uint64_t seed) {
  synth::GenSpec spec;
  spec.seed = seed;
  spec.q_min = 1;
  spec.q_max = 4;
  spec.mem_min = 1024;
  spec.mem_max = 16384;
  spec.domain = synth::domain_list()[seed % synth::domain_list().size()];
  return synth::generate_parametric(spec);
}

// labeled program with DSE-labeled designs, ready for datasets
inline surrogate::ProgramData labeled_program(kernel::Kernel k, int budget, std::uint64_t seed) {
  surrogate::ProgramData pd;
  pd.designs = oracle::run_dse(k, budget, oracle::DseStrategy::random, seed);
  pd.kernel = std::make_shared<const kernel::Kernel>(std::move(k));
  return pd;
}

}  // namespace iceberg::testutil

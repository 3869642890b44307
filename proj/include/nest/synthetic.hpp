#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nest/scenario.hpp"

namespace nest {

enum class SyntheticKind { kChain, kIntersection, kMerge, kUturn };

SyntheticKind synthetic_kind_from_name(const std::string& name);
std::string synthetic_kind_name(SyntheticKind kind);

struct SyntheticParams {
  int t_h = 8;
  int t_f = 12;
  double dt = 0.5;
  bool lanes = true;

  // chain: platoon size (target is the rear vehicle). A braking event starts
  // at the lead and propagates rearward with a per-vehicle reaction delay.
  int n_vehicles = 5;
  int brake_step = -1;   // -1 = randomized per scenario
  int brake_delay = -1;  // -1 = randomized per scenario

  // intersection: number of crossing vehicles.
  int n_cross = 2;

  // merge: number of on-ramp vehicles merging into the main lane.
  int n_merging = 1;
};

// Deterministic under (kind, count, seed, params). All tracks integrate
// velocities trapezoidally with accelerations as their finite differences,
// so positions stay kinematically consistent step by step.
std::vector<Scenario> generate_synthetic(SyntheticKind kind, int count, std::uint64_t seed,
                                         const SyntheticParams& params = {});

}  // namespace nest

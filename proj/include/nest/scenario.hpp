#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nest/config.hpp"
#include "nest/tensor.hpp"

namespace nest {

struct AgentState {
  double t = 0;   // s
  double x = 0;   // m
  double y = 0;   // m
  double vx = 0;  // m/s
  double vy = 0;  // m/s
  double ax = 0;  // m/s^2
  double ay = 0;  // m/s^2
};

enum class AgentRole { kTarget, kSurrounding };

struct AgentTrack {
  std::string agent_id;
  AgentRole role = AgentRole::kSurrounding;
  std::vector<AgentState> states;  // strictly increasing t, constant dt
};

struct LanePolyline {
  std::string lane_id;
  std::vector<std::array<double, 2>> points;  // >= 2, consecutive points distinct
};

// Rigid transform between the original (world) frame and the target-centric
// one: local = R(-angle) * (world - origin).
struct FrameTransform {
  std::array<double, 2> origin{0.0, 0.0};
  double angle = 0.0;  // target heading in the world frame
  bool degenerate_heading = false;

  std::array<double, 2> to_local(const std::array<double, 2>& p) const;
  std::array<double, 2> to_world(const std::array<double, 2>& p) const;
  std::array<double, 2> vec_to_local(const std::array<double, 2>& v) const;
  std::array<double, 2> vec_to_world(const std::array<double, 2>& v) const;
  // Axis-aligned Laplace scales under rotation back to world.
  std::array<double, 2> scale_to_world(const std::array<double, 2>& b) const;
};

struct Scenario {
  std::string scenario_id;
  double dt = 0.5;  // s
  AgentTrack target;
  std::vector<AgentTrack> surrounding;
  std::vector<LanePolyline> lanes;
  // Set by normalize_frame: maps the scenario's (local) coordinates back to
  // the original frame.
  std::optional<FrameTransform> frame;
};

// JSON Lines, one scenario per line:
// {scenario_id, dt, agents:[{agent_id, role, states:[[t,x,y,vx,vy,ax,ay],..]}],
//  lanes:[{lane_id, points:[[x,y],..]}]}
// Every invariant is validated; errors name the offending line.
std::vector<Scenario> load_scenarios(const std::string& path);
void save_scenarios(const std::vector<Scenario>& scenarios, const std::string& path);

// Target-centric normalization: the target's last history position moves to
// the origin and its heading at that step aligns with +x. Velocities and
// accelerations rotate consistently; a zero-motion target falls back to the
// identity rotation with degenerate_heading set.
Scenario normalize_frame(const Scenario& s, int history_len);

// Model-ready view of one scenario: normalized, surrounding agents in
// canonical (agent_id) order so that any input permutation produces
// bit-identical tensors downstream. Row 0 is the target.
struct ModelInput {
  std::string scenario_id;
  double dt = 0.5;
  std::vector<std::string> agent_ids;
  std::vector<Tensor> histories;  // per agent, t_h x 6 (x,y,vx,vy,ax,ay)
  std::vector<std::uint8_t> valid;
  Tensor target_future;  // t_f x 2, empty when the target track has no future
  bool has_future = false;
  std::vector<LanePolyline> lanes;  // normalized coordinates
  FrameTransform frame;
};

ModelInput prepare_scenario(const Scenario& s, const Config& cfg);

// Appends invalid zero-history slots until agent count reaches n_total.
void pad_model_input(ModelInput& input, int n_total, int t_h);

}  // namespace nest

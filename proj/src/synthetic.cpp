#include "nest/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "nest/errors.hpp"
#include "nest/rng.hpp"

namespace nest {

SyntheticKind synthetic_kind_from_name(const std::string& name) {
  if (name == "chain") return SyntheticKind::kChain;
  if (name == "intersection") return SyntheticKind::kIntersection;
  if (name == "merge") return SyntheticKind::kMerge;
  if (name == "uturn") return SyntheticKind::kUturn;
  throw UsageError("unknown synthetic kind: " + name +
                   " (expected chain|intersection|merge|uturn)");
}

std::string synthetic_kind_name(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kChain: return "chain";
    case SyntheticKind::kIntersection: return "intersection";
    case SyntheticKind::kMerge: return "merge";
    case SyntheticKind::kUturn: return "uturn";
  }
  return "?";
}

namespace {

// Velocity profiles -> track. Positions integrate the trapezoid rule so
// |x(t+1) - x(t) - vx(t) dt| == |vx(t+1) - vx(t)| dt / 2 <= a_max dt^2 / 2.
// Accelerations are backward differences: a state never encodes anything
// about later steps, so truncating a track to its history stays exact.
AgentTrack track_from_velocities(const std::string& id, AgentRole role, double x0, double y0,
                                 const std::vector<double>& vx, const std::vector<double>& vy,
                                 double dt) {
  const std::size_t n = vx.size();
  AgentTrack track;
  track.agent_id = id;
  track.role = role;
  track.states.resize(n);
  double x = x0;
  double y = y0;
  for (std::size_t i = 0; i < n; ++i) {
    AgentState& s = track.states[i];
    s.t = static_cast<double>(i) * dt;
    s.x = x;
    s.y = y;
    s.vx = vx[i];
    s.vy = vy[i];
    if (i > 0) {
      s.ax = (vx[i] - vx[i - 1]) / dt;
      s.ay = (vy[i] - vy[i - 1]) / dt;
    }
    if (i + 1 < n) {
      x += 0.5 * (vx[i] + vx[i + 1]) * dt;
      y += 0.5 * (vy[i] + vy[i + 1]) * dt;
    }
  }
  return track;
}

LanePolyline straight_lane(const std::string& id, double x0, double x1, double y) {
  LanePolyline lane;
  lane.lane_id = id;
  const int n = 8;
  for (int i = 0; i <= n; ++i) {
    lane.points.push_back({x0 + (x1 - x0) * i / n, y});
  }
  return lane;
}

Scenario make_chain(int index, RngStream rng, const SyntheticParams& p) {
  const int total = p.t_h + p.t_f;
  const int m = p.n_vehicles;
  if (m < 2) throw UsageError("chain needs at least 2 vehicles");
  const double v0 = rng.uniform(6.0, 11.0);
  const double gap = rng.uniform(9.0, 14.0);
  const double decel = rng.uniform(2.0, 4.0);
  const double v_min = rng.uniform(1.0, 2.5);
  const int brake = p.brake_step >= 0 ? p.brake_step : 2 + static_cast<int>(rng.uniform() * 3.0);
  const int delay = p.brake_delay >= 0 ? p.brake_delay : 1 + static_cast<int>(rng.uniform() * 3.0);

  Scenario s;
  s.scenario_id = "chain-" + std::to_string(index);
  s.dt = p.dt;

  // Vehicle k copies the lead's braking onset shifted by k * delay steps.
  for (int k = 0; k < m; ++k) {
    const int onset = brake + k * delay;
    std::vector<double> vx(static_cast<std::size_t>(total), v0);
    for (int t = 0; t + 1 < total; ++t) {
      vx[static_cast<std::size_t>(t + 1)] =
          t >= onset ? std::max(v_min, vx[static_cast<std::size_t>(t)] - decel * p.dt)
                     : vx[static_cast<std::size_t>(t)];
    }
    std::vector<double> vy(static_cast<std::size_t>(total), 0.0);
    const bool is_target = k == m - 1;
    AgentTrack track = track_from_velocities(
        "veh" + std::to_string(k), is_target ? AgentRole::kTarget : AgentRole::kSurrounding,
        -static_cast<double>(k) * gap, 0.0, vx, vy, p.dt);
    if (!is_target) track.states.resize(static_cast<std::size_t>(p.t_h));
    if (is_target) {
      s.target = std::move(track);
    } else {
      s.surrounding.push_back(std::move(track));
    }
  }
  if (p.lanes) {
    s.lanes.push_back(straight_lane("lane0", -m * gap - 20.0, v0 * total * p.dt + 30.0, 0.0));
  }
  return s;
}

Scenario make_intersection(int index, RngStream rng, const SyntheticParams& p) {
  const int total = p.t_h + p.t_f;
  const double v0 = rng.uniform(6.0, 10.0);

  Scenario s;
  s.scenario_id = "intersection-" + std::to_string(index);
  s.dt = p.dt;

  // Target approaches along +x, yields around the crossing, then recovers.
  std::vector<double> vx(static_cast<std::size_t>(total), v0);
  const int yield_start = p.t_h / 2;
  const int yield_end = p.t_h + p.t_f / 3;
  for (int t = 0; t + 1 < total; ++t) {
    double v = vx[static_cast<std::size_t>(t)];
    if (t >= yield_start && t < yield_end) {
      v = std::max(2.0, v - 2.5 * p.dt);
    } else if (t >= yield_end) {
      v = std::min(v0, v + 2.0 * p.dt);
    }
    vx[static_cast<std::size_t>(t + 1)] = v;
  }
  std::vector<double> vy(static_cast<std::size_t>(total), 0.0);
  s.target = track_from_velocities("ego", AgentRole::kTarget, -v0 * p.t_h * p.dt - 4.0, 0.0, vx,
                                   vy, p.dt);

  for (int j = 0; j < p.n_cross; ++j) {
    const double u = rng.uniform(4.0, 9.0);
    const double offset = rng.uniform(-4.0, 4.0);
    const bool from_above = j % 2 == 0;
    const double y0 = from_above ? rng.uniform(12.0, 20.0) : -rng.uniform(12.0, 20.0);
    std::vector<double> cvx(static_cast<std::size_t>(p.t_h), 0.0);
    std::vector<double> cvy(static_cast<std::size_t>(p.t_h), from_above ? -u : u);
    s.surrounding.push_back(track_from_velocities("cross" + std::to_string(j),
                                                  AgentRole::kSurrounding, offset, y0, cvx, cvy,
                                                  p.dt));
  }
  if (p.lanes) {
    s.lanes.push_back(straight_lane("ew", -40.0, 40.0, 0.0));
    LanePolyline ns;
    ns.lane_id = "ns";
    for (int i = 0; i <= 8; ++i) ns.points.push_back({0.0, -30.0 + 60.0 * i / 8});
    s.lanes.push_back(std::move(ns));
  }
  return s;
}

Scenario make_merge(int index, RngStream rng, const SyntheticParams& p) {
  const int total = p.t_h + p.t_f;
  const double v0 = rng.uniform(7.0, 11.0);
  const double gap = rng.uniform(12.0, 18.0);

  Scenario s;
  s.scenario_id = "merge-" + std::to_string(index);
  s.dt = p.dt;

  // Main lane: a lead vehicle and the target behind it.
  std::vector<double> lead_vx(static_cast<std::size_t>(p.t_h), v0);
  std::vector<double> zeros_h(static_cast<std::size_t>(p.t_h), 0.0);
  s.surrounding.push_back(
      track_from_velocities("lead", AgentRole::kSurrounding, gap, 0.0, lead_vx, zeros_h, p.dt));

  std::vector<double> tgt_vx(static_cast<std::size_t>(total), v0);
  if (p.n_merging > 0) {
    // The cut-in forces the target to open a gap.
    for (int t = p.t_h - 2; t + 1 < total; ++t) {
      const int recover = p.t_h + 2 * p.t_f / 3;
      double v = tgt_vx[static_cast<std::size_t>(t)];
      v = t < recover ? std::max(3.0, v - 2.0 * p.dt) : std::min(v0, v + 1.5 * p.dt);
      tgt_vx[static_cast<std::size_t>(t + 1)] = v;
    }
  }
  std::vector<double> zeros_t(static_cast<std::size_t>(total), 0.0);
  s.target = track_from_velocities("ego", AgentRole::kTarget, 0.0, 0.0, tgt_vx, zeros_t, p.dt);

  for (int j = 0; j < p.n_merging; ++j) {
    const double ramp_y = -3.5;
    const int t0 = 2 + j;
    const int t_m = 4;  // merge duration in steps
    std::vector<double> mvx(static_cast<std::size_t>(p.t_h), v0 + 1.0);
    std::vector<double> mvy(static_cast<std::size_t>(p.t_h), 0.0);
    // Sine lateral-velocity bump scaled so the trapezoid integral lands
    // exactly on the lane centre.
    double weight = 0.0;
    for (int k = 1; k < t_m; ++k) weight += std::sin(std::numbers::pi * k / t_m);
    const double amp = -ramp_y / (p.dt * weight);
    for (int t = t0; t <= t0 + t_m && t < p.t_h; ++t) {
      mvy[static_cast<std::size_t>(t)] = amp * std::sin(std::numbers::pi * (t - t0) / t_m);
    }
    s.surrounding.push_back(track_from_velocities("ramp" + std::to_string(j),
                                                  AgentRole::kSurrounding,
                                                  4.0 + 3.0 * j, ramp_y, mvx, mvy, p.dt));
  }
  if (p.lanes) {
    s.lanes.push_back(straight_lane("main", -30.0, v0 * total * p.dt + 30.0, 0.0));
    if (p.n_merging > 0) s.lanes.push_back(straight_lane("ramp", -30.0, 10.0, -3.5));
  }
  return s;
}

// Identical history across the whole dataset; the future is either straight
// acceleration or a U-turn, alternating by index. With indistinguishable
// inputs only a multimodal decoder can cover both outcomes.
Scenario make_uturn(int index, const SyntheticParams& p) {
  const int total = p.t_h + p.t_f;
  const bool turn = index % 2 == 1;

  std::vector<double> speed(static_cast<std::size_t>(total), 0.0);
  std::vector<double> heading(static_cast<std::size_t>(total), 0.0);
  for (int t = 0; t < p.t_h; ++t) {
    speed[static_cast<std::size_t>(t)] = std::max(2.0, 8.0 - 6.0 * t / (p.t_h - 1));
  }
  const double turn_rate = 2.5 / 3.0;  // v / r
  for (int t = p.t_h; t < total; ++t) {
    if (!turn) {
      speed[static_cast<std::size_t>(t)] =
          std::min(8.0, speed[static_cast<std::size_t>(t - 1)] + 1.5 * p.dt);
      heading[static_cast<std::size_t>(t)] = 0.0;
    } else {
      const double prev = heading[static_cast<std::size_t>(t - 1)];
      if (prev < std::numbers::pi) {
        speed[static_cast<std::size_t>(t)] = 2.5;
        heading[static_cast<std::size_t>(t)] =
            std::min(std::numbers::pi, prev + turn_rate * p.dt);
      } else {
        speed[static_cast<std::size_t>(t)] =
            std::min(6.0, speed[static_cast<std::size_t>(t - 1)] + 1.5 * p.dt);
        heading[static_cast<std::size_t>(t)] = std::numbers::pi;
      }
    }
  }
  std::vector<double> vx(static_cast<std::size_t>(total));
  std::vector<double> vy(static_cast<std::size_t>(total));
  for (int t = 0; t < total; ++t) {
    vx[static_cast<std::size_t>(t)] =
        speed[static_cast<std::size_t>(t)] * std::cos(heading[static_cast<std::size_t>(t)]);
    vy[static_cast<std::size_t>(t)] =
        speed[static_cast<std::size_t>(t)] * std::sin(heading[static_cast<std::size_t>(t)]);
  }

  Scenario s;
  s.scenario_id = "uturn-" + std::to_string(index);
  s.dt = p.dt;
  s.target = track_from_velocities("ego", AgentRole::kTarget, -16.0, 0.0, vx, vy, p.dt);

  std::vector<double> zeros(static_cast<std::size_t>(p.t_h), 0.0);
  s.surrounding.push_back(
      track_from_velocities("parked0", AgentRole::kSurrounding, 6.0, 5.0, zeros, zeros, p.dt));
  s.surrounding.push_back(
      track_from_velocities("parked1", AgentRole::kSurrounding, -5.0, -6.0, zeros, zeros, p.dt));
  if (p.lanes) {
    s.lanes.push_back(straight_lane("fwd", -30.0, 40.0, 0.0));
    s.lanes.push_back(straight_lane("rev", 40.0, -30.0, 6.0));
  }
  return s;
}

}  // namespace

std::vector<Scenario> generate_synthetic(SyntheticKind kind, int count, std::uint64_t seed,
                                         const SyntheticParams& params) {
  if (count <= 0) throw UsageError("generate_synthetic: count must be positive");
  if (params.t_h < 2 || params.t_f < 1) {
    throw UsageError("generate_synthetic: need t_h >= 2 and t_f >= 1");
  }
  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(count));
  RngStream base = RngStream(seed, "gen").fork(synthetic_kind_name(kind));
  for (int i = 0; i < count; ++i) {
    RngStream rng = base.fork(static_cast<std::uint64_t>(i));
    switch (kind) {
      case SyntheticKind::kChain: out.push_back(make_chain(i, rng, params)); break;
      case SyntheticKind::kIntersection: out.push_back(make_intersection(i, rng, params)); break;
      case SyntheticKind::kMerge: out.push_back(make_merge(i, rng, params)); break;
      case SyntheticKind::kUturn: out.push_back(make_uturn(i, params)); break;
    }
  }
  return out;
}

}  // namespace nest

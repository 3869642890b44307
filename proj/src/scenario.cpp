#include "nest/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nest/errors.hpp"

namespace nest {

using nlohmann::json;

namespace {
constexpr double kDtTolerance = 1e-6;

std::array<double, 2> rotate(const std::array<double, 2>& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}
}  // namespace

std::array<double, 2> FrameTransform::to_local(const std::array<double, 2>& p) const {
  return rotate({p[0] - origin[0], p[1] - origin[1]}, -angle);
}

std::array<double, 2> FrameTransform::to_world(const std::array<double, 2>& p) const {
  const auto r = rotate(p, angle);
  return {r[0] + origin[0], r[1] + origin[1]};
}

std::array<double, 2> FrameTransform::vec_to_local(const std::array<double, 2>& v) const {
  return rotate(v, -angle);
}

std::array<double, 2> FrameTransform::vec_to_world(const std::array<double, 2>& v) const {
  return rotate(v, angle);
}

std::array<double, 2> FrameTransform::scale_to_world(const std::array<double, 2>& b) const {
  const double c = std::abs(std::cos(angle));
  const double s = std::abs(std::sin(angle));
  return {c * b[0] + s * b[1], s * b[0] + c * b[1]};
}

namespace {

[[noreturn]] void line_error(int line, const std::string& msg) {
  throw DataError("line " + std::to_string(line) + ": " + msg);
}

AgentTrack parse_agent(const json& j, int line) {
  AgentTrack track;
  if (!j.is_object()) line_error(line, "agent entry must be an object");
  if (!j.contains("agent_id") || !j.at("agent_id").is_string()) {
    line_error(line, "agent missing string agent_id");
  }
  track.agent_id = j.at("agent_id").get<std::string>();
  const std::string role = j.value("role", "");
  if (role == "target") {
    track.role = AgentRole::kTarget;
  } else if (role == "surrounding") {
    track.role = AgentRole::kSurrounding;
  } else {
    line_error(line, "agent " + track.agent_id + " has invalid role \"" + role + "\"");
  }
  if (!j.contains("states") || !j.at("states").is_array() || j.at("states").empty()) {
    line_error(line, "agent " + track.agent_id + " has no states");
  }
  for (const auto& st : j.at("states")) {
    if (!st.is_array() || st.size() != 7) {
      line_error(line, "agent " + track.agent_id + " state must be [t,x,y,vx,vy,ax,ay]");
    }
    AgentState s;
    double* fields[7] = {&s.t, &s.x, &s.y, &s.vx, &s.vy, &s.ax, &s.ay};
    for (int i = 0; i < 7; ++i) {
      if (!st[i].is_number()) line_error(line, "agent " + track.agent_id + " has non-numeric state");
      *fields[i] = st[i].get<double>();
      if (!std::isfinite(*fields[i])) {
        line_error(line, "agent " + track.agent_id + " has non-finite state");
      }
    }
    track.states.push_back(s);
  }
  return track;
}

void validate_track_times(const AgentTrack& track, double dt, int line) {
  for (std::size_t i = 1; i < track.states.size(); ++i) {
    const double step = track.states[i].t - track.states[i - 1].t;
    if (step <= 0) {
      line_error(line, "agent " + track.agent_id + " timestamps not strictly increasing");
    }
    if (std::abs(step - dt) > kDtTolerance) {
      line_error(line, "agent " + track.agent_id + " has inconsistent dt (" +
                           std::to_string(step) + " vs " + std::to_string(dt) + ")");
    }
  }
}

Scenario parse_scenario_line(const std::string& text, int line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    line_error(line, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) line_error(line, "scenario must be a JSON object");

  Scenario s;
  if (!j.contains("scenario_id") || !j.at("scenario_id").is_string()) {
    line_error(line, "missing string scenario_id");
  }
  s.scenario_id = j.at("scenario_id").get<std::string>();
  if (!j.contains("dt") || !j.at("dt").is_number()) line_error(line, "missing numeric dt");
  s.dt = j.at("dt").get<double>();
  if (!(s.dt > 0) || !std::isfinite(s.dt)) line_error(line, "dt must be positive and finite");

  if (!j.contains("agents") || !j.at("agents").is_array()) line_error(line, "missing agents array");
  bool have_target = false;
  std::vector<std::string> ids;
  for (const auto& a : j.at("agents")) {
    AgentTrack track = parse_agent(a, line);
    validate_track_times(track, s.dt, line);
    ids.push_back(track.agent_id);
    if (track.role == AgentRole::kTarget) {
      if (have_target) line_error(line, "scenario " + s.scenario_id + " has two targets");
      have_target = true;
      s.target = std::move(track);
    } else {
      s.surrounding.push_back(std::move(track));
    }
  }
  if (!have_target) line_error(line, "scenario " + s.scenario_id + " has no target");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    line_error(line, "scenario " + s.scenario_id + " has duplicate agent ids");
  }

  if (j.contains("lanes")) {
    if (!j.at("lanes").is_array()) line_error(line, "lanes must be an array");
    for (const auto& l : j.at("lanes")) {
      LanePolyline lane;
      if (!l.is_object() || !l.contains("lane_id") || !l.at("lane_id").is_string()) {
        line_error(line, "lane missing string lane_id");
      }
      lane.lane_id = l.at("lane_id").get<std::string>();
      if (!l.contains("points") || !l.at("points").is_array() || l.at("points").size() < 2) {
        line_error(line, "lane " + lane.lane_id + " needs at least 2 points");
      }
      for (const auto& p : l.at("points")) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
          line_error(line, "lane " + lane.lane_id + " point must be [x,y]");
        }
        const std::array<double, 2> pt{p[0].get<double>(), p[1].get<double>()};
        if (!std::isfinite(pt[0]) || !std::isfinite(pt[1])) {
          line_error(line, "lane " + lane.lane_id + " has non-finite point");
        }
        lane.points.push_back(pt);
      }
      for (std::size_t i = 1; i < lane.points.size(); ++i) {
        if (lane.points[i] == lane.points[i - 1]) {
          line_error(line, "lane " + lane.lane_id + " has repeated consecutive points");
        }
      }
      s.lanes.push_back(std::move(lane));
    }
  }
  return s;
}

json agent_to_json(const AgentTrack& track) {
  json states = json::array();
  for (const AgentState& s : track.states) {
    states.push_back({s.t, s.x, s.y, s.vx, s.vy, s.ax, s.ay});
  }
  return {{"agent_id", track.agent_id},
          {"role", track.role == AgentRole::kTarget ? "target" : "surrounding"},
          {"states", std::move(states)}};
}

}  // namespace

std::vector<Scenario> load_scenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario file: " + path);
  std::vector<Scenario> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse_scenario_line(line, line_no));
  }
  return out;
}

void save_scenarios(const std::vector<Scenario>& scenarios, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scenario file: " + path);
  for (const Scenario& s : scenarios) {
    json agents = json::array();
    agents.push_back(agent_to_json(s.target));
    for (const AgentTrack& t : s.surrounding) agents.push_back(agent_to_json(t));
    json lanes = json::array();
    for (const LanePolyline& l : s.lanes) {
      json pts = json::array();
      for (const auto& p : l.points) pts.push_back({p[0], p[1]});
      lanes.push_back({{"lane_id", l.lane_id}, {"points", std::move(pts)}});
    }
    json doc = {{"scenario_id", s.scenario_id},
                {"dt", s.dt},
                {"agents", std::move(agents)},
                {"lanes", std::move(lanes)}};
    out << doc.dump() << "\n";
  }
  if (!out) throw DataError("failed writing scenario file: " + path);
}

Scenario normalize_frame(const Scenario& s, int history_len) {
  if (history_len < 1 || static_cast<int>(s.target.states.size()) < history_len) {
    throw DataError("scenario " + s.scenario_id + ": target history shorter than " +
                    std::to_string(history_len) + " steps");
  }
  const AgentState& last = s.target.states[static_cast<std::size_t>(history_len - 1)];

  FrameTransform frame;
  frame.origin = {last.x, last.y};
  const double speed = std::hypot(last.vx, last.vy);
  if (speed > 1e-6) {
    frame.angle = std::atan2(last.vy, last.vx);
  } else if (history_len >= 2) {
    const AgentState& prev = s.target.states[static_cast<std::size_t>(history_len - 2)];
    const double dx = last.x - prev.x;
    const double dy = last.y - prev.y;
    if (std::hypot(dx, dy) > 1e-9) {
      frame.angle = std::atan2(dy, dx);
    } else {
      frame.degenerate_heading = true;
    }
  } else {
    frame.degenerate_heading = true;
  }

  Scenario out = s;
  auto transform_track = [&](AgentTrack& track) {
    for (AgentState& st : track.states) {
      const auto p = frame.to_local({st.x, st.y});
      const auto v = frame.vec_to_local({st.vx, st.vy});
      const auto a = frame.vec_to_local({st.ax, st.ay});
      st.x = p[0]; st.y = p[1];
      st.vx = v[0]; st.vy = v[1];
      st.ax = a[0]; st.ay = a[1];
    }
  };
  transform_track(out.target);
  for (AgentTrack& t : out.surrounding) transform_track(t);
  for (LanePolyline& lane : out.lanes) {
    for (auto& p : lane.points) p = frame.to_local(p);
  }
  out.frame = frame;
  return out;
}

namespace {

Tensor history_tensor(const AgentTrack& track, int t_h) {
  Tensor t(t_h, 6);
  for (int i = 0; i < t_h; ++i) {
    const AgentState& s = track.states[static_cast<std::size_t>(i)];
    t.at(i, 0) = s.x;
    t.at(i, 1) = s.y;
    t.at(i, 2) = s.vx;
    t.at(i, 3) = s.vy;
    t.at(i, 4) = s.ax;
    t.at(i, 5) = s.ay;
  }
  return t;
}

}  // namespace

ModelInput prepare_scenario(const Scenario& s, const Config& cfg) {
  Scenario norm = normalize_frame(s, cfg.t_h);

  if (static_cast<int>(norm.target.states.size()) != cfg.t_h &&
      static_cast<int>(norm.target.states.size()) != cfg.t_h + cfg.t_f) {
    throw DataError("scenario " + s.scenario_id + ": target has " +
                    std::to_string(norm.target.states.size()) + " states, expected t_h=" +
                    std::to_string(cfg.t_h) + " or t_h+t_f=" + std::to_string(cfg.t_h + cfg.t_f));
  }
  for (const AgentTrack& t : norm.surrounding) {
    if (static_cast<int>(t.states.size()) < cfg.t_h) {
      throw DataError("scenario " + s.scenario_id + ": surrounding agent " + t.agent_id +
                      " has fewer than t_h=" + std::to_string(cfg.t_h) + " states");
    }
  }

  ModelInput input;
  input.scenario_id = norm.scenario_id;
  input.dt = norm.dt;
  input.frame = *norm.frame;
  input.lanes = norm.lanes;

  // Canonical row order: target first, then surrounding sorted by agent_id.
  std::vector<const AgentTrack*> order;
  order.reserve(norm.surrounding.size());
  for (const AgentTrack& t : norm.surrounding) order.push_back(&t);
  std::sort(order.begin(), order.end(),
            [](const AgentTrack* a, const AgentTrack* b) { return a->agent_id < b->agent_id; });

  input.agent_ids.push_back(norm.target.agent_id);
  input.histories.push_back(history_tensor(norm.target, cfg.t_h));
  input.valid.push_back(1);
  for (const AgentTrack* t : order) {
    input.agent_ids.push_back(t->agent_id);
    input.histories.push_back(history_tensor(*t, cfg.t_h));
    input.valid.push_back(1);
  }

  if (static_cast<int>(norm.target.states.size()) == cfg.t_h + cfg.t_f) {
    input.has_future = true;
    input.target_future = Tensor(cfg.t_f, 2);
    for (int i = 0; i < cfg.t_f; ++i) {
      const AgentState& st = norm.target.states[static_cast<std::size_t>(cfg.t_h + i)];
      input.target_future.at(i, 0) = st.x;
      input.target_future.at(i, 1) = st.y;
    }
  }
  return input;
}

void pad_model_input(ModelInput& input, int n_total, int t_h) {
  while (static_cast<int>(input.agent_ids.size()) < n_total) {
    input.agent_ids.push_back("__pad" + std::to_string(input.agent_ids.size()));
    input.histories.push_back(Tensor(t_h, 6));
    input.valid.push_back(0);
  }
}

}  // namespace nest

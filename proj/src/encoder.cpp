#include "nest/encoder.hpp"

#include <cmath>
#include <iostream>

#include "nest/errors.hpp"

namespace nest {

namespace {

constexpr int kFeaturesPerStep = 6;
constexpr int kEncoderBlocks = 2;

// Fixed input scaling keeps raw metre/second magnitudes inside the active
// range of the tanh blocks: positions /10, velocities /5, accelerations /2.
constexpr double kInputScale[kFeaturesPerStep] = {0.1, 0.1, 0.2, 0.2, 0.5, 0.5};

Tensor positional_encoding(int steps, int d) {
  Tensor pe(steps, d);
  for (int t = 0; t < steps; ++t) {
    for (int j = 0; j < d; ++j) {
      const double rate = std::pow(10000.0, -2.0 * (j / 2) / static_cast<double>(d));
      pe.at(t, j) = (j % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
    }
  }
  return pe;
}

MlpSpec ff_spec(int d) { return MlpSpec{{d, 2 * d, d}}; }

Node encoder_block(Tape& tape, const NodeMap& params, const std::string& prefix, int d, Node x) {
  const Node wq = params.at(prefix + ".attn.wq");
  const Node wk = params.at(prefix + ".attn.wk");
  const Node wv = params.at(prefix + ".attn.wv");
  const Node wo = params.at(prefix + ".attn.wo");
  Node q = tape.matmul(x, wq);
  Node k = tape.matmul(x, wk);
  Node v = tape.matmul(x, wv);
  Node scores = tape.matmul(q, tape.transpose(k)) * (1.0 / std::sqrt(static_cast<double>(d)));
  Node attn = tape.matmul(tape.softmax_rows(scores, 1.0), v);
  x = tape.add(x, tape.matmul(attn, wo));
  return tape.add(x, mlp_forward(tape, params, prefix + ".ff", ff_spec(d), x));
}

}  // namespace

std::vector<ParamSpec> agent_encoder_param_specs(const Config& cfg) {
  std::vector<ParamSpec> specs;
  specs.push_back({"encoder.agent.embed.w", kFeaturesPerStep, cfg.d, kFeaturesPerStep});
  specs.push_back({"encoder.agent.embed.b", 1, cfg.d, kFeaturesPerStep});
  for (int b = 0; b < kEncoderBlocks; ++b) {
    const std::string prefix = "encoder.agent.block" + std::to_string(b);
    for (const char* name : {"wq", "wk", "wv", "wo"}) {
      specs.push_back({prefix + ".attn." + name, cfg.d, cfg.d, cfg.d});
    }
    for (const ParamSpec& p : mlp_param_specs(prefix + ".ff", ff_spec(cfg.d))) specs.push_back(p);
  }
  return specs;
}

Node encode_agents(Tape& tape, const NodeMap& params, const Config& cfg,
                   const ModelInput& input) {
  const int n_agents = static_cast<int>(input.histories.size());
  if (n_agents == 0) throw ShapeError("encode_agents: no agents");
  const Tensor pe = positional_encoding(cfg.t_h, cfg.d);

  Node vertices;
  for (int i = 0; i < n_agents; ++i) {
    if (!input.valid[static_cast<std::size_t>(i)]) {
      Node zero = tape.constant(Tensor(1, cfg.d));
      vertices = i == 0 ? zero : tape.concat_rows(vertices, zero);
      continue;
    }
    const Tensor& hist = input.histories[static_cast<std::size_t>(i)];
    if (hist.rows() != cfg.t_h || hist.cols() != kFeaturesPerStep) {
      throw ShapeError("encode_agents: history for agent " +
                       input.agent_ids[static_cast<std::size_t>(i)] + " is " + hist.shape_str() +
                       ", expected " + std::to_string(cfg.t_h) + "x" +
                       std::to_string(kFeaturesPerStep));
    }
    Tensor scaled = hist;
    for (int t = 0; t < cfg.t_h; ++t) {
      for (int f = 0; f < kFeaturesPerStep; ++f) scaled.at(t, f) *= kInputScale[f];
    }
    Node x = tape.constant(std::move(scaled));
    x = tape.add(tape.matmul(x, params.at("encoder.agent.embed.w")),
                 params.at("encoder.agent.embed.b"));
    x = tape.add(x, tape.constant(pe));
    for (int b = 0; b < kEncoderBlocks; ++b) {
      x = encoder_block(tape, params, "encoder.agent.block" + std::to_string(b), cfg.d, x);
    }
    // Mean over time.
    Node pooled = tape.matmul(tape.constant(Tensor::full(1, cfg.t_h, 1.0 / cfg.t_h)), x);
    vertices = i == 0 ? pooled : tape.concat_rows(vertices, pooled);
  }
  return vertices;
}

std::vector<ParamSpec> lane_encoder_param_specs(const Config& cfg) {
  const int in = 2 * cfg.lane_points;
  std::vector<ParamSpec> specs;
  for (const ParamSpec& p : mlp_param_specs("encoder.lane.mlp", MlpSpec{{in, cfg.d, cfg.d}})) {
    specs.push_back(p);
  }
  return specs;
}

std::vector<Tensor> resample_lane_segments(const LanePolyline& lane, double segment_len,
                                           int points, std::vector<std::string>* warnings) {
  std::vector<Tensor> segments;

  // Cumulative arc length.
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < lane.points.size(); ++i) {
    const double dx = lane.points[i][0] - lane.points[i - 1][0];
    const double dy = lane.points[i][1] - lane.points[i - 1][1];
    cum.push_back(cum.back() + std::hypot(dx, dy));
  }
  const double total = cum.back();
  if (lane.points.size() < 2 || total < 1e-9) {
    if (warnings) warnings->push_back("lane " + lane.lane_id + ": degenerate polyline, skipped");
    return segments;
  }

  auto point_at = [&](double arc) {
    std::size_t seg = 1;
    while (seg + 1 < cum.size() && cum[seg] < arc) ++seg;
    const double span = cum[seg] - cum[seg - 1];
    const double f = span > 0 ? (arc - cum[seg - 1]) / span : 0.0;
    return std::array<double, 2>{
        lane.points[seg - 1][0] + f * (lane.points[seg][0] - lane.points[seg - 1][0]),
        lane.points[seg - 1][1] + f * (lane.points[seg][1] - lane.points[seg - 1][1])};
  };

  const int n_segments = std::max(1, static_cast<int>(std::ceil(total / segment_len - 1e-9)));
  for (int s = 0; s < n_segments; ++s) {
    const double a0 = s * segment_len;
    const double a1 = std::min(total, a0 + segment_len);
    Tensor seg(points, 2);
    for (int i = 0; i < points; ++i) {
      const double arc = a0 + (a1 - a0) * i / (points - 1);
      const auto p = point_at(std::min(arc, total));
      seg.at(i, 0) = p[0];
      seg.at(i, 1) = p[1];
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::optional<Node> encode_lanes(Tape& tape, const NodeMap& params, const Config& cfg,
                                 const std::vector<LanePolyline>& lanes,
                                 std::vector<std::string>* warnings) {
  std::vector<std::string> local;
  std::vector<Tensor> segments;
  for (const LanePolyline& lane : lanes) {
    auto segs = resample_lane_segments(lane, cfg.lane_segment_len, cfg.lane_points, &local);
    for (Tensor& s : segs) segments.push_back(std::move(s));
  }
  if (warnings) {
    warnings->insert(warnings->end(), local.begin(), local.end());
  } else {
    for (const std::string& w : local) std::cerr << "warning: " << w << "\n";
  }
  if (segments.empty()) return std::nullopt;

  const MlpSpec spec{{2 * cfg.lane_points, cfg.d, cfg.d}};
  Node out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    Tensor flat(1, 2 * cfg.lane_points);
    for (int p = 0; p < cfg.lane_points; ++p) {
      flat.at(0, 2 * p) = 0.1 * segments[i].at(p, 0);  // same position scaling as agent inputs
      flat.at(0, 2 * p + 1) = 0.1 * segments[i].at(p, 1);
    }
    Node row = mlp_forward(tape, params, "encoder.lane.mlp", spec, tape.constant(std::move(flat)));
    out = i == 0 ? row : tape.concat_rows(out, row);
  }
  return out;
}

}  // namespace nest

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nest/config.hpp"
#include "nest/nn.hpp"
#include "nest/scenario.hpp"

namespace nest {

// Agent encoder: per-step linear embedding + sinusoidal positional encoding,
// two blocks of single-head self-attention and a feedforward (both with
// residuals), then a mean over time. Each agent is encoded from its own
// history only; cross-agent mixing is the hypergraph's job. Masked (padded)
// rows come out as zeros.
std::vector<ParamSpec> agent_encoder_param_specs(const Config& cfg);
Node encode_agents(Tape& tape, const NodeMap& params, const Config& cfg, const ModelInput& input);

// Lane encoder: polylines are cut into fixed-length segments, each resampled
// to cfg.lane_points equidistant points, flattened and passed through a
// shared MLP. Returns one row per segment; nullopt when there are no usable
// segments. Degenerate polylines are skipped (optionally reported).
std::vector<ParamSpec> lane_encoder_param_specs(const Config& cfg);
std::vector<Tensor> resample_lane_segments(const LanePolyline& lane, double segment_len,
                                           int points, std::vector<std::string>* warnings);
std::optional<Node> encode_lanes(Tape& tape, const NodeMap& params, const Config& cfg,
                                 const std::vector<LanePolyline>& lanes,
                                 std::vector<std::string>* warnings = nullptr);

}  // namespace nest

#pragma once

#include <map>
#include <string>
#include <vector>

#include "nest/config.hpp"
#include "nest/tape.hpp"
#include "nest/tensor.hpp"

namespace nest {

using NodeMap = std::map<std::string, Node>;

// Shape and init fan-in for one named parameter tensor; the registry for a
// config is an ordered list of these.
struct ParamSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  int fan_in = 0;
};

// Named, versioned parameter tensors. Iteration order is the sorted name
// order; initialization order is the registry order.
class ParamStore {
 public:
  static constexpr const char* kVersion = "nest-ckpt-1";

  void insert(const std::string& name, Tensor t);
  bool contains(const std::string& name) const { return tensors_.count(name) > 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& mutable_get(const std::string& name);
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }

  // Registers every tensor as a leaf on the tape. Parameters the forward
  // pass never touches simply keep a zero gradient.
  NodeMap make_leaves(Tape& tape) const;

  bool operator==(const ParamStore& o) const { return tensors_ == o.tensors_; }

 private:
  std::map<std::string, Tensor> tensors_;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init, drawn sequentially from
// RngStream(seed, "init") in registry order.
ParamStore init_from_registry(const std::vector<ParamSpec>& registry, std::uint64_t seed);

// Checkpoint file: one JSON document {version, config_hash, config,
// tensors: {name: {shape, data}}}. Doubles round-trip bit-exactly through
// the serializer. Loading rejects a version or config-hash mismatch.
void save_checkpoint(const std::string& path, const ParamStore& params, const Config& cfg);

struct Checkpoint {
  ParamStore params;
  Config config;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nest

#include "nest/param_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nest/errors.hpp"
#include "nest/rng.hpp"

namespace nest {

using nlohmann::json;

void ParamStore::insert(const std::string& name, Tensor t) {
  if (!tensors_.emplace(name, std::move(t)).second) {
    throw UsageError("duplicate parameter name: " + name);
  }
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw UsageError("unknown parameter: " + name);
  return it->second;
}

Tensor& ParamStore::mutable_get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw UsageError("unknown parameter: " + name);
  return it->second;
}

NodeMap ParamStore::make_leaves(Tape& tape) const {
  NodeMap leaves;
  for (const auto& [name, tensor] : tensors_) {
    leaves.emplace(name, tape.leaf(tensor));
  }
  return leaves;
}

ParamStore init_from_registry(const std::vector<ParamSpec>& registry, std::uint64_t seed) {
  RngStream rng(seed, "init");
  ParamStore store;
  for (const ParamSpec& spec : registry) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in > 0 ? spec.fan_in : 1));
    Tensor t(spec.rows, spec.cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    store.insert(spec.name, std::move(t));
  }
  return store;
}

void save_checkpoint(const std::string& path, const ParamStore& params, const Config& cfg) {
  json tensors = json::object();
  for (const auto& [name, t] : params.tensors()) {
    tensors[name] = {{"shape", t.shape()}, {"data", t.data()}};
  }
  json doc = {
      {"version", ParamStore::kVersion},
      {"config_hash", config_hash(cfg)},
      {"config", json::parse(config_to_json_text(cfg))},
      {"tensors", std::move(tensors)},
  };
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << doc.dump() << "\n";
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  try {
    const std::string version = doc.at("version").get<std::string>();
    if (version != ParamStore::kVersion) {
      throw DataError("checkpoint " + path + " has version \"" + version + "\", expected \"" +
                      ParamStore::kVersion + "\"");
    }
    Checkpoint ckpt;
    ckpt.config = config_from_json_text(doc.at("config").dump());
    const std::string stored_hash = doc.at("config_hash").get<std::string>();
    const std::string computed = config_hash(ckpt.config);
    if (stored_hash != computed) {
      throw DataError("checkpoint " + path + " config hash mismatch: stored " + stored_hash +
                      ", computed " + computed);
    }
    for (const auto& [name, entry] : doc.at("tensors").items()) {
      const auto shape = entry.at("shape").get<std::vector<int>>();
      if (shape.size() != 2) {
        throw DataError("checkpoint tensor " + name + " has rank " +
                        std::to_string(shape.size()) + ", expected 2");
      }
      auto data = entry.at("data").get<std::vector<double>>();
      Tensor t(shape[0], shape[1], std::move(data));
      if (!t.all_finite()) throw DataError("checkpoint tensor " + name + " has non-finite values");
      ckpt.params.insert(name, std::move(t));
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path + " is malformed: " + e.what());
  }
}

}  // namespace nest

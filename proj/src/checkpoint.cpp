#include "repaint/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace repaint {

namespace {

using nlohmann::json;

json arch_to_json(const MlpArch& arch) {
  return json{{"input_dim", arch.input_dim},
              {"hidden", arch.hidden},
              {"output_dim", arch.output_dim},
              {"activation", "tanh"}};
}

MlpArch arch_from_json(const json& j) {
  MlpArch arch;
  arch.input_dim = j.at("input_dim").get<int>();
  arch.hidden = j.at("hidden").get<std::vector<int>>();
  arch.output_dim = j.at("output_dim").get<int>();
  return arch;
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << j.dump(2) << "\n";
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  in >> j;
  if (j.at("format") != "repaint-checkpoint") {
    throw std::runtime_error("not a repaint checkpoint: " + path);
  }
  if (j.at("version").get<int>() != 1) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  return j;
}

}  // namespace

void save_policy(const PolicyNetwork& net, const std::string& path,
                 const CheckpointMeta* meta) {
  json j{{"format", "repaint-checkpoint"},
         {"version", 1},
         {"kind", "policy"},
         {"architecture", arch_to_json(net.arch())},
         {"head", net.head() == PolicyHead::kCategorical ? "categorical" : "gaussian"},
         {"params", net.params().values()}};
  if (meta) {
    if (!meta->env_id.empty()) j["env_id"] = meta->env_id;
    if (!meta->task_weights.empty()) j["task_weights"] = meta->task_weights;
  }
  write_file(path, j);
}

PolicyNetwork load_policy(const std::string& path, CheckpointMeta* meta_out) {
  const json j = read_file(path);
  if (j.at("kind") != "policy") {
    throw std::runtime_error("checkpoint is not a policy: " + path);
  }
  const auto head = j.at("head").get<std::string>() == "categorical"
                        ? PolicyHead::kCategorical
                        : PolicyHead::kDiagonalGaussian;
  PolicyNetwork net(arch_from_json(j.at("architecture")), head, /*init_seed=*/0);
  net.set_params(ParamVector(j.at("params").get<std::vector<double>>()));
  if (meta_out) {
    if (j.contains("env_id")) meta_out->env_id = j.at("env_id").get<std::string>();
    if (j.contains("task_weights")) {
      meta_out->task_weights = j.at("task_weights").get<std::vector<double>>();
    }
  }
  return net;
}

void save_value(const ValueNetwork& net, const std::string& path) {
  const json j{{"format", "repaint-checkpoint"},
               {"version", 1},
               {"kind", "value"},
               {"architecture", arch_to_json(net.arch())},
               {"params", net.params().values()}};
  write_file(path, j);
}

ValueNetwork load_value(const std::string& path) {
  const json j = read_file(path);
  if (j.at("kind") != "value") {
    throw std::runtime_error("checkpoint is not a value net: " + path);
  }
  ValueNetwork net(arch_from_json(j.at("architecture")), /*init_seed=*/0);
  net.set_params(ParamVector(j.at("params").get<std::vector<double>>()));
  return net;
}

}  // namespace repaint

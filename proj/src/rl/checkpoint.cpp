#include "mrl/rl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "mrl/error.hpp"

namespace mrl::rl {

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::CheckpointFormat, why); }

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json mlp_to_json(const Mlp& net, double input_scale) {
  return {{"layers", net.layer_sizes()},
          {"activation", "tanh"},
          {"input_scale", input_scale},
          {"params", to_vector(net.params())}};
}

Mlp mlp_from_json(const nlohmann::json& j, double& input_scale) {
  try {
    if (j.at("activation").get<std::string>() != "tanh") bad("unsupported activation");
    Mlp net(j.at("layers").get<std::vector<int>>());
    const auto params = j.at("params").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(params.size()) != net.num_params()) {
      bad("parameter count " + std::to_string(params.size()) + " does not match layer shapes (" +
          std::to_string(net.num_params()) + ")");
    }
    net.params() = from_vector(params);
    input_scale = j.at("input_scale").get<double>();
    return net;
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("network record: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CheckpointFormat) throw;
    bad(e.what());
  }
}

nlohmann::json adam_to_json(const AdamState& s) {
  return {{"m", to_vector(s.m)}, {"v", to_vector(s.v)}, {"t", s.t}};
}

AdamState adam_from_json(const nlohmann::json& j) {
  try {
    AdamState s;
    s.m = from_vector(j.at("m").get<std::vector<double>>());
    s.v = from_vector(j.at("v").get<std::vector<double>>());
    s.t = j.at("t").get<long>();
    if (s.m.size() != s.v.size()) bad("optimizer moments differ in size");
    return s;
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("optimizer record: ") + e.what());
  }
}

std::string serialize_checkpoint(const Checkpoint& c) {
  nlohmann::json j = {{"format", "mrl-checkpoint"},
                      {"version", kCheckpointVersion},
                      {"env", c.env},
                      {"policy", mlp_to_json(c.policy.net, c.policy.input_scale)},
                      {"value", mlp_to_json(c.value.net, c.value.input_scale)},
                      {"config", to_json(c.config)}};
  return j.dump(1) + "\n";
}

Checkpoint deserialize_checkpoint(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "mrl-checkpoint") bad("unknown checkpoint format");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) bad("unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.env = j.at("env").get<std::string>();
    c.policy.net = mlp_from_json(j.at("policy"), c.policy.input_scale);
    c.value.net = mlp_from_json(j.at("value"), c.value.input_scale);
    if (c.value.net.output_dim() != 1) bad("value network must have one output");
    if (c.policy.net.input_dim() != c.value.net.input_dim()) bad("policy and value inputs differ");
    c.config = config_from_json(j.at("config"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("checkpoint record: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << serialize_checkpoint(ckpt);
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

Checkpoint load_checkpoint_for(const std::filesystem::path& path, int obs_size, int num_actions) {
  auto c = load_checkpoint(path);
  if (c.policy.input_dim() != obs_size || c.policy.num_actions() != num_actions) {
    throw Error(ErrorCode::ShapeMismatch,
                "checkpoint expects " + std::to_string(c.policy.input_dim()) + " inputs and " +
                    std::to_string(c.policy.num_actions()) + " actions, environment has " +
                    std::to_string(obs_size) + " and " + std::to_string(num_actions));
  }
  return c;
}

}  // namespace mrl::rl

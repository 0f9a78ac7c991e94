#include "mrl/envs/environment.hpp"

#include <sstream>

#include "mrl/error.hpp"

namespace mrl::envs {

FindMilkEnv::FindMilkEnv(LayoutMode mode) : mode_(mode) { state_ = findmilk_reset(0, mode_); }

FindMilkEnv::FindMilkEnv(FindMilkLayout layout)
    : mode_(LayoutMode::Canonical), custom_(std::move(layout)) {
  state_ = findmilk_from_layout(*custom_);
}

std::vector<double> FindMilkEnv::reset(std::uint64_t seed) {
  state_ = custom_ ? findmilk_from_layout(*custom_) : findmilk_reset(seed, mode_);
  return findmilk_observe(state_);
}

StepResult FindMilkEnv::step(int action) {
  if (action < 0 || action >= kFindMilkActions) {
    throw Error(ErrorCode::InvalidAction, "FindMilk action " + std::to_string(action));
  }
  return findmilk_step(state_, static_cast<FindMilkAction>(action));
}

std::unique_ptr<Environment> FindMilkEnv::clone() const {
  return std::make_unique<FindMilkEnv>(*this);
}

DrivingEnv::DrivingEnv(DrivingParams params) : params_(params) {
  state_ = driving_reset(0, params_);
}

std::vector<double> DrivingEnv::reset(std::uint64_t seed) {
  state_ = driving_reset(seed, params_);
  return driving_observe(state_);
}

StepResult DrivingEnv::step(int action) {
  if (action < 0 || action >= kDrivingActions) {
    throw Error(ErrorCode::InvalidAction, "driving action " + std::to_string(action));
  }
  return driving_step(state_, static_cast<DrivingAction>(action));
}

std::unique_ptr<Environment> DrivingEnv::clone() const {
  return std::make_unique<DrivingEnv>(*this);
}

std::unique_ptr<Environment> make_environment(EnvKind kind, LayoutMode layout) {
  if (kind == EnvKind::FindMilk) return std::make_unique<FindMilkEnv>(layout);
  return std::make_unique<DrivingEnv>();
}

std::string write_replay(const ReplayLog& log) {
  std::ostringstream out;
  out << "env " << to_string(log.env) << '\n';
  out << "layout " << (log.layout == LayoutMode::Canonical ? "canonical" : "randomized") << '\n';
  out << "seed " << log.seed << '\n';
  out << "actions";
  for (int a : log.actions) out << ' ' << a;
  out << '\n';
  return out.str();
}

ReplayLog parse_replay(const std::string& text) {
  ReplayLog log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    if (key == "env") {
      std::string name;
      fields >> name;
      log.env = parse_env_kind(name);
    } else if (key == "layout") {
      std::string name;
      fields >> name;
      if (name == "canonical") {
        log.layout = LayoutMode::Canonical;
      } else if (name == "randomized") {
        log.layout = LayoutMode::Randomized;
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown layout '" + name + "'");
      }
    } else if (key == "seed") {
      if (!(fields >> log.seed)) throw Error(ErrorCode::InvalidConfig, "replay seed missing");
    } else if (key == "actions") {
      int a = 0;
      while (fields >> a) log.actions.push_back(a);
      if (!fields.eof()) throw Error(ErrorCode::InvalidConfig, "replay action list is malformed");
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown replay key '" + key + "'");
    }
  }
  return log;
}

std::vector<StepResult> replay(const ReplayLog& log) {
  auto env = make_environment(log.env, log.layout);
  env->reset(log.seed);
  std::vector<StepResult> results;
  results.reserve(log.actions.size());
  for (int a : log.actions) results.push_back(env->step(a));
  return results;
}

}  // namespace mrl::envs

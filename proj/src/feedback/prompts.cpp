#include "mrl/feedback/prompts.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

#include "mrl/error.hpp"

namespace mrl::feedback {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string rstrip(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

std::optional<double> nearest_in_lane(const std::vector<envs::RoadEntity>& entities, int lane) {
  std::optional<double> best;
  for (const auto& e : entities) {
    if (e.lane == lane && (!best || e.distance < *best)) best = e.distance;
  }
  return best;
}

std::string lane_description(const envs::DrivingState& s, int lane) {
  if (lane < 0 || lane >= s.params.lanes) return "does not exist and you cannot take it";
  std::string out;
  if (auto car = nearest_in_lane(s.cars, lane)) {
    out = "has car at " + format_distance(*car) + " unit distance";
    if (*car <= s.params.collision_radius) out += " which will make you collide";
  } else {
    out = "has no car";
  }
  out += " and ";
  if (auto g = nearest_in_lane(s.grandmas, lane)) {
    out += "has grandma is at " + format_distance(*g) + " unit distance";
    if (*g <= s.params.rescue_radius) out += " which will enable you to rescue her";
  } else {
    out += "has no grandma";
  }
  return out;
}

std::string position(envs::GridPos p) {
  return "(x=" + std::to_string(p.x) + ", y=" + std::to_string(p.y) + ")";
}

}  // namespace

std::string format_credence_value(double v) {
  if (std::floor(v) == v && std::abs(v) < 1e15) {
    std::ostringstream ss;
    ss.precision(1);
    ss << std::fixed << v;
    return ss.str();
  }
  return shortest(v);
}

std::string format_distance(double d) {
  if (std::floor(d) == d && std::abs(d) < 1e15) return std::to_string(static_cast<long long>(d));
  return shortest(d);
}

std::string render_system_prompt(const TemplateStore& store) {
  return rstrip(store.get("system.txt"));
}

std::string credence_sentence(const Credence& credence) {
  if (credence.is_moral_agent()) return "Behave as a moral agent.";
  std::string out = "Behave as an agent that assigns the following credence values: {";
  for (int i = 0; i < kClusterCount; ++i) {
    if (i) out += ", ";
    out += display_name(kAllClusters[static_cast<std::size_t>(i)]);
    out += ": ";
    out += format_credence_value((*credence.values)[static_cast<std::size_t>(i)]);
  }
  out += "}.";
  return out;
}

std::string render_findmilk_prompt(const TemplateStore& store, const envs::FindMilkState& state,
                                   const Credence& credence) {
  using envs::BabyStatus;
  const auto crying = envs::nearest_baby(state, BabyStatus::Crying);
  const auto sleeping = envs::nearest_baby(state, BabyStatus::Sleeping);
  const std::map<std::string, std::string> values = {
      {"width", std::to_string(state.width)},
      {"height", std::to_string(state.height)},
      {"crying_count", std::to_string(envs::remaining_babies(state, BabyStatus::Crying))},
      {"x", std::to_string(state.robot.x)},
      {"y", std::to_string(state.robot.y)},
      {"milk_x", std::to_string(state.milk.x)},
      {"milk_y", std::to_string(state.milk.y)},
      {"closest_crying", crying ? "The closest crying baby is at position " + position(*crying) + "."
                                : "There are no crying babies around."},
      {"closest_sleeping", sleeping
                               ? "The closest sleeping baby is at position " + position(*sleeping) + "."
                               : "There are no sleeping babies around."},
      {"credence", credence_sentence(credence)},
  };
  return rstrip(fill_template(store.get("find_milk.txt"), values));
}

std::string render_driving_prompt(const TemplateStore& store, const envs::DrivingState& state,
                                  const Credence& credence) {
  const std::map<std::string, std::string> values = {
      {"collision_radius", format_distance(state.params.collision_radius)},
      {"rescue_radius", format_distance(state.params.rescue_radius)},
      {"lane", std::to_string(state.agent_lane)},
      {"current_lane", lane_description(state, state.agent_lane)},
      {"right_lane", lane_description(state, state.agent_lane + 1)},
      {"left_lane", lane_description(state, state.agent_lane - 1)},
      {"credence", credence_sentence(credence)},
  };
  return rstrip(fill_template(store.get("driving.txt"), values));
}

std::string render_scenario(const TemplateStore& store, const envs::Environment& env,
                            const Credence& credence) {
  const auto view = env.state();
  if (const auto* fm = std::get_if<const envs::FindMilkState*>(&view)) {
    return render_findmilk_prompt(store, **fm, credence);
  }
  return render_driving_prompt(store, *std::get<const envs::DrivingState*>(view), credence);
}

std::string template_family(envs::EnvKind kind) {
  return kind == envs::EnvKind::FindMilk ? "find_milk" : "driving";
}

int estimate_tokens(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  long words = 0;
  while (in >> word) ++words;
  return static_cast<int>((words * 4 + 2) / 3);
}

int estimate_tokens(const PromptBundle& bundle) {
  int total = estimate_tokens(bundle.system) + estimate_tokens(bundle.scenario);
  for (const auto& ex : bundle.few_shot) {
    total += estimate_tokens(ex.user) + estimate_tokens(ex.assistant);
  }
  return total;
}

PromptBundle make_bundle(const TemplateStore& store, const envs::Environment& env,
                         const Credence& credence, int token_budget) {
  PromptBundle b;
  b.system = render_system_prompt(store);
  b.few_shot = store.few_shot(template_family(env.kind()));
  b.scenario = render_scenario(store, env, credence);
  const int tokens = estimate_tokens(b);
  if (tokens > token_budget) {
    throw Error(ErrorCode::PromptTooLong, "prompt needs about " + std::to_string(tokens) +
                                              " tokens, budget is " + std::to_string(token_budget));
  }
  return b;
}

}  // namespace mrl::feedback

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrl/envs/environment.hpp"
#include "mrl/feedback/clusters.hpp"
#include "mrl/feedback/templates.hpp"

namespace mrl::feedback {

inline constexpr int kDefaultTokenBudget = 2000;

struct PromptBundle {
  std::string system;
  std::vector<FewShotExample> few_shot;
  std::string scenario;
};

std::string render_system_prompt(const TemplateStore& store);

// "Behave as an agent that assigns the following credence values: {...}."
// or "Behave as a moral agent."
std::string credence_sentence(const Credence& credence);

std::string render_findmilk_prompt(const TemplateStore& store, const envs::FindMilkState& state,
                                   const Credence& credence);
std::string render_driving_prompt(const TemplateStore& store, const envs::DrivingState& state,
                                  const Credence& credence);
std::string render_scenario(const TemplateStore& store, const envs::Environment& env,
                            const Credence& credence);

// Template family name: "find_milk" or "driving".
std::string template_family(envs::EnvKind kind);

// System prompt, the family's few-shot examples and the scenario. Throws
// PromptTooLong when the estimate exceeds `token_budget`.
PromptBundle make_bundle(const TemplateStore& store, const envs::Environment& env,
                         const Credence& credence, int token_budget = kDefaultTokenBudget);

// Rough count: four tokens per three whitespace-separated words.
int estimate_tokens(const std::string& text);
int estimate_tokens(const PromptBundle& bundle);

// Formats 1 as "1.0" and 0.25 as "0.25".
std::string format_credence_value(double v);
// Formats 7 as "7" and 0.5 as "0.5".
std::string format_distance(double d);

}  // namespace mrl::feedback

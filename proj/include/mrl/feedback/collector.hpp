#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mrl/envs/environment.hpp"
#include "mrl/feedback/cache.hpp"
#include "mrl/feedback/clusters.hpp"
#include "mrl/feedback/providers.hpp"
#include "mrl/feedback/templates.hpp"
#include "mrl/fusion/belief.hpp"

namespace mrl::feedback {

// One row of the belief matrix: who answers, and with which credence.
struct BeliefAgent {
  std::string label;  // cluster id, "moral" or "human"
  Credence credence;
  std::shared_ptr<BeliefProvider> provider;
};

// The five single-cluster agents in fixed order, sharing one provider.
std::vector<BeliefAgent> cluster_agents(std::shared_ptr<BeliefProvider> provider);

struct CollectedBeliefs {
  fusion::BeliefMatrix matrix;
  std::string state_digest;
};

std::string env_id(envs::EnvKind kind);

// Gathers one answer per agent for the current state, consulting the cache
// first and storing fresh answers. Remote providers are queried
// concurrently.
class BeliefCollector {
 public:
  BeliefCollector(std::vector<BeliefAgent> agents, TemplateStore templates,
                  std::shared_ptr<BeliefCache> cache, int token_budget = kDefaultTokenBudget);

  // Throws ClusterQueryFailed naming the first failing agent; the
  // underlying error message and transcript are carried along.
  CollectedBeliefs collect(const envs::Environment& env);

  // Digest of the state as every agent's cache key sees it: the scenario
  // rendered with the moral-agent credence, plus structured_state_text()
  // when some provider reads state beyond the prompt.
  std::string state_digest(const envs::Environment& env) const;
  BeliefCacheKey cache_key(const envs::Environment& env, const std::string& state_digest,
                           const BeliefAgent& agent) const;

  const std::vector<BeliefAgent>& agents() const { return agents_; }
  const std::shared_ptr<BeliefCache>& cache() const { return cache_; }
  const TemplateStore& templates() const { return templates_; }

 private:
  fusion::BasicBeliefAssignment answer(const envs::Environment& env, const std::string& digest,
                                       const BeliefAgent& agent);

  std::vector<BeliefAgent> agents_;
  TemplateStore templates_;
  std::shared_ptr<BeliefCache> cache_;
  int token_budget_;
  bool structured_ = false;
};

}  // namespace mrl::feedback

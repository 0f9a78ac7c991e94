#include "mrl/feedback/collector.hpp"

#include <future>

#include "mrl/error.hpp"
#include "mrl/feedback/digest.hpp"
#include "mrl/feedback/prompts.hpp"
#include "mrl/feedback/rules.hpp"

namespace mrl::feedback {

std::vector<BeliefAgent> cluster_agents(std::shared_ptr<BeliefProvider> provider) {
  std::vector<BeliefAgent> out;
  for (auto c : kAllClusters) {
    out.push_back({std::string(cluster_id(c)), Credence::single(c), provider});
  }
  return out;
}

std::string env_id(envs::EnvKind kind) {
  return kind == envs::EnvKind::FindMilk ? "find-milk" : "driving";
}

BeliefCollector::BeliefCollector(std::vector<BeliefAgent> agents, TemplateStore templates,
                                 std::shared_ptr<BeliefCache> cache, int token_budget)
    : agents_(std::move(agents)),
      templates_(std::move(templates)),
      cache_(cache ? std::move(cache) : std::make_shared<BeliefCache>()),
      token_budget_(token_budget) {
  if (agents_.empty()) throw Error(ErrorCode::InvalidConfig, "belief collection needs an agent");
  for (const auto& a : agents_) {
    if (!a.provider) throw Error(ErrorCode::InvalidConfig, "agent '" + a.label + "' has no provider");
    structured_ = structured_ || a.provider->reads_structured_state();
  }
}

std::string BeliefCollector::state_digest(const envs::Environment& env) const {
  std::string text = render_scenario(templates_, env, Credence::moral_agent());
  if (structured_) text += "\n" + structured_state_text(env);
  return digest_hex(text);
}

BeliefCacheKey BeliefCollector::cache_key(const envs::Environment& env,
                                          const std::string& digest,
                                          const BeliefAgent& agent) const {
  return {env_id(env.kind()), digest, agent.label, agent.provider->id()};
}

fusion::BasicBeliefAssignment BeliefCollector::answer(const envs::Environment& env,
                                                      const std::string& digest,
                                                      const BeliefAgent& agent) {
  const auto key = cache_key(env, digest, agent);
  if (auto hit = cache_->lookup(key)) return fusion::BasicBeliefAssignment(hit->masses);
  try {
    std::optional<PromptBundle> bundle;
    if (agent.provider->needs_prompt()) {
      bundle = make_bundle(templates_, env, agent.credence, token_budget_);
    }
    auto reply = agent.provider->query(env, agent.credence, bundle ? &*bundle : nullptr);
    cache_->store(key, reply.transcript, reply.bba);
    return reply.bba;
  } catch (const Error& e) {
    throw Error(ErrorCode::ClusterQueryFailed, "agent '" + agent.label + "': " + e.what(),
                e.detail());
  }
}

CollectedBeliefs BeliefCollector::collect(const envs::Environment& env) {
  const std::string digest = state_digest(env);
  std::vector<std::optional<fusion::BasicBeliefAssignment>> rows(agents_.size());
  std::vector<std::future<fusion::BasicBeliefAssignment>> pending(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (agents_[i].provider->remote()) {
      pending[i] = std::async(std::launch::async,
                              [this, &env, &digest, i] { return answer(env, digest, agents_[i]); });
    }
  }
  // Every future is drained before the first failure is rethrown, so no
  // request outlives the environment it reads.
  std::exception_ptr failure;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    try {
      rows[i] = pending[i].valid() ? pending[i].get() : answer(env, digest, agents_[i]);
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<fusion::BasicBeliefAssignment> matrix_rows;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    matrix_rows.push_back(std::move(*rows[i]));
    labels.push_back(agents_[i].label);
  }
  return {fusion::BeliefMatrix(std::move(matrix_rows), std::move(labels)), digest};
}

}  // namespace mrl::feedback

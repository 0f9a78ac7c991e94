#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "mrl/envs/environment.hpp"
#include "mrl/feedback/clusters.hpp"
#include "mrl/feedback/prompts.hpp"
#include "mrl/fusion/belief.hpp"

namespace mrl::feedback {

enum class ProviderKind { LiveLLM, RuleMock, SyntheticHuman };

std::string_view to_string(ProviderKind kind);
// "llm", "mock", "human" (and the long forms).
ProviderKind parse_provider_kind(std::string_view text);

// API keys never live here; see resolve_api_key().
struct ProviderConfig {
  ProviderKind kind = ProviderKind::RuleMock;
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int timeout_seconds = 60;
  int max_retries = 3;
  int backoff_ms = 500;        // first retry delay, doubled per attempt
  int max_in_flight = 5;
  double requests_per_second = 0.0;  // 0 disables rate limiting
  std::string cache_path;      // empty: in-memory cache
  std::string template_dir;    // empty: built-in templates
  int token_budget = kDefaultTokenBudget;

  // Throws InvalidConfig.
  void validate() const;
  friend bool operator==(const ProviderConfig&, const ProviderConfig&) = default;
};

nlohmann::json to_json(const ProviderConfig& config);
// Missing keys keep `base`; unknown keys and any "api_key" entry are
// rejected with InvalidConfig.
ProviderConfig provider_config_from_json(const nlohmann::json& j, const ProviderConfig& base = {});

// MRL_API_KEY, then OPENAI_API_KEY; empty when neither is set.
std::string resolve_api_key();

struct BeliefAnswer {
  fusion::BasicBeliefAssignment bba;
  std::string transcript;  // raw reply; empty for offline providers
};

class BeliefProvider {
 public:
  virtual ~BeliefProvider() = default;
  // Part of every cache key: "mock", "human", "llm:<model>".
  virtual std::string id() const = 0;
  // Whether query() needs the rendered prompt bundle.
  virtual bool needs_prompt() const = 0;
  // Whether answers depend on state the prompt does not show, in which case
  // the cache digest covers structured_state_text() too.
  virtual bool reads_structured_state() const = 0;
  // Whether concurrent queries are worth issuing.
  virtual bool remote() const { return false; }
  virtual BeliefAnswer query(const envs::Environment& env, const Credence& credence,
                             const PromptBundle* bundle) = 0;
};

class RuleMockProvider final : public BeliefProvider {
 public:
  std::string id() const override { return "mock"; }
  bool needs_prompt() const override { return false; }
  bool reads_structured_state() const override { return true; }
  BeliefAnswer query(const envs::Environment& env, const Credence& credence,
                     const PromptBundle* bundle) override;
};

// Ignores the credence: the ethical rules are the human's own.
class SyntheticHumanProvider final : public BeliefProvider {
 public:
  std::string id() const override { return "human"; }
  bool needs_prompt() const override { return false; }
  bool reads_structured_state() const override { return true; }
  BeliefAnswer query(const envs::Environment& env, const Credence& credence,
                     const PromptBundle* bundle) override;
};

// OpenAI-compatible chat completions over HTTP(S). Transport failures, 408,
// 429 and 5xx responses are retried with exponential backoff; other HTTP
// errors fail at once. Parse errors propagate with the transcript attached.
class LiveLlmProvider final : public BeliefProvider {
 public:
  LiveLlmProvider(ProviderConfig config, std::string api_key);

  std::string id() const override { return "llm:" + config_.model; }
  bool needs_prompt() const override { return true; }
  bool reads_structured_state() const override { return false; }
  bool remote() const override { return true; }
  BeliefAnswer query(const envs::Environment& env, const Credence& credence,
                     const PromptBundle* bundle) override;

  // Request body for a bundle.
  nlohmann::json request_body(const PromptBundle& bundle) const;
  std::size_t requests_sent() const;

 private:
  std::string post(const std::string& body);
  void acquire_slot();
  void release_slot();

  ProviderConfig config_;
  std::string api_key_;
  std::string host_;   // scheme://host[:port]
  std::string path_;   // .../chat/completions

  mutable std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
  std::optional<std::chrono::steady_clock::time_point> last_start_;
  std::size_t requests_ = 0;
};

std::shared_ptr<BeliefProvider> make_provider(const ProviderConfig& config);

// The id() a provider built from `config` reports, without building it.
std::string provider_id(const ProviderConfig& config);

}  // namespace mrl::feedback

#include "mrl/feedback/providers.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "mrl/error.hpp"
#include "mrl/feedback/parse.hpp"
#include "mrl/feedback/rules.hpp"

namespace mrl::feedback {

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::LiveLLM: return "llm";
    case ProviderKind::RuleMock: return "mock";
    case ProviderKind::SyntheticHuman: return "human";
  }
  return "?";
}

ProviderKind parse_provider_kind(std::string_view text) {
  if (text == "llm" || text == "live" || text == "live-llm") return ProviderKind::LiveLLM;
  if (text == "mock" || text == "rule-mock") return ProviderKind::RuleMock;
  if (text == "human" || text == "synthetic-human") return ProviderKind::SyntheticHuman;
  throw Error(ErrorCode::InvalidConfig, "unknown provider '" + std::string(text) + "'");
}

void ProviderConfig::validate() const {
  if (temperature != 0.0) {
    throw Error(ErrorCode::InvalidConfig, "temperature is fixed at 0 for reproducible answers");
  }
  if (timeout_seconds <= 0) throw Error(ErrorCode::InvalidConfig, "timeout_seconds must be positive");
  if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be non-negative");
  if (backoff_ms < 0) throw Error(ErrorCode::InvalidConfig, "backoff_ms must be non-negative");
  if (max_in_flight < 1) throw Error(ErrorCode::InvalidConfig, "max_in_flight must be at least 1");
  if (requests_per_second < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "requests_per_second must be non-negative");
  }
  if (token_budget < 1) throw Error(ErrorCode::InvalidConfig, "token_budget must be positive");
  if (kind == ProviderKind::LiveLLM && model.empty()) {
    throw Error(ErrorCode::InvalidConfig, "live provider needs a model name");
  }
}

nlohmann::json to_json(const ProviderConfig& c) {
  return {
      {"kind", std::string(to_string(c.kind))},
      {"endpoint", c.endpoint},
      {"model", c.model},
      {"temperature", c.temperature},
      {"timeout_seconds", c.timeout_seconds},
      {"max_retries", c.max_retries},
      {"backoff_ms", c.backoff_ms},
      {"max_in_flight", c.max_in_flight},
      {"requests_per_second", c.requests_per_second},
      {"cache_path", c.cache_path},
      {"template_dir", c.template_dir},
      {"token_budget", c.token_budget},
  };
}

ProviderConfig provider_config_from_json(const nlohmann::json& j, const ProviderConfig& base) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "provider config must be an object");
  ProviderConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") c.kind = parse_provider_kind(value.get<std::string>());
      else if (key == "endpoint") c.endpoint = value.get<std::string>();
      else if (key == "model") c.model = value.get<std::string>();
      else if (key == "temperature") c.temperature = value.get<double>();
      else if (key == "timeout_seconds") c.timeout_seconds = value.get<int>();
      else if (key == "max_retries") c.max_retries = value.get<int>();
      else if (key == "backoff_ms") c.backoff_ms = value.get<int>();
      else if (key == "max_in_flight") c.max_in_flight = value.get<int>();
      else if (key == "requests_per_second") c.requests_per_second = value.get<double>();
      else if (key == "cache_path") c.cache_path = value.get<std::string>();
      else if (key == "template_dir") c.template_dir = value.get<std::string>();
      else if (key == "token_budget") c.token_budget = value.get<int>();
      else if (key == "api_key") {
        throw Error(ErrorCode::InvalidConfig,
                    "API keys are read from MRL_API_KEY or OPENAI_API_KEY, not config files");
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown provider key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad provider config value: ") + e.what());
  }
  c.validate();
  return c;
}

std::string resolve_api_key() {
  for (const char* name : {"MRL_API_KEY", "OPENAI_API_KEY"}) {
    if (const char* v = std::getenv(name); v && *v) return v;
  }
  return {};
}

BeliefAnswer RuleMockProvider::query(const envs::Environment& env, const Credence& credence,
                                     const PromptBundle*) {
  return {rule_mock_beliefs(credence, env), {}};
}

BeliefAnswer SyntheticHumanProvider::query(const envs::Environment& env, const Credence&,
                                           const PromptBundle*) {
  return {fusion::BasicBeliefAssignment::renormalized(synthetic_human_policy(env)), {}};
}

LiveLlmProvider::LiveLlmProvider(ProviderConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
  config_.validate();
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url)) {
    throw Error(ErrorCode::InvalidConfig, "endpoint must be an http(s) URL: " + config_.endpoint);
  }
  host_ = m[1].str();
  path_ = m[2].str();
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  const std::string suffix = "/chat/completions";
  if (path_.size() < suffix.size() || path_.compare(path_.size() - suffix.size(), suffix.size(), suffix) != 0) {
    path_ += suffix;
  }
}

nlohmann::json LiveLlmProvider::request_body(const PromptBundle& bundle) const {
  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "system"}, {"content", bundle.system}});
  for (const auto& ex : bundle.few_shot) {
    messages.push_back({{"role", "user"}, {"content", ex.user}});
    messages.push_back({{"role", "assistant"}, {"content", ex.assistant}});
  }
  messages.push_back({{"role", "user"}, {"content", bundle.scenario}});
  return {{"model", config_.model}, {"messages", messages}, {"temperature", config_.temperature}};
}

std::size_t LiveLlmProvider::requests_sent() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

void LiveLlmProvider::acquire_slot() {
  std::unique_lock lock(mutex_);
  slot_free_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
  ++in_flight_;
  ++requests_;
  auto start = std::chrono::steady_clock::now();
  if (config_.requests_per_second > 0.0) {
    const auto gap = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / config_.requests_per_second));
    if (last_start_ && *last_start_ + gap > start) start = *last_start_ + gap;
  }
  last_start_ = start;
  lock.unlock();
  std::this_thread::sleep_until(start);
}

void LiveLlmProvider::release_slot() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  slot_free_.notify_one();
}

std::string LiveLlmProvider::post(const std::string& body) {
  httplib::Client client(host_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<long long>(config_.backoff_ms) << (attempt - 1)));
    }
    acquire_slot();
    auto res = client.Post(path_, headers, body, "application/json");
    release_slot();
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) return res->body;
    last_error = "HTTP " + std::to_string(status);
    if (status != 408 && status != 429 && status < 500) {
      throw Error(ErrorCode::ProviderUnavailable, last_error + " from " + host_ + path_, res->body);
    }
  }
  throw Error(ErrorCode::ProviderUnavailable,
              "no answer from " + host_ + path_ + " after " +
                  std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

BeliefAnswer LiveLlmProvider::query(const envs::Environment& env, const Credence&,
                                    const PromptBundle* bundle) {
  if (!bundle) throw Error(ErrorCode::InvalidConfig, "live provider needs a prompt bundle");
  const std::string raw = post(request_body(*bundle).dump());
  std::string content;
  try {
    const auto reply = nlohmann::json::parse(raw);
    content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable,
                std::string("malformed chat-completion response: ") + e.what(), raw);
  }
  return {parse_belief_json(content, env.num_actions()), content};
}

std::shared_ptr<BeliefProvider> make_provider(const ProviderConfig& config) {
  config.validate();
  switch (config.kind) {
    case ProviderKind::RuleMock: return std::make_shared<RuleMockProvider>();
    case ProviderKind::SyntheticHuman: return std::make_shared<SyntheticHumanProvider>();
    case ProviderKind::LiveLLM: return std::make_shared<LiveLlmProvider>(config, resolve_api_key());
  }
  throw Error(ErrorCode::InvalidConfig, "unknown provider kind");
}

std::string provider_id(const ProviderConfig& config) {
  switch (config.kind) {
    case ProviderKind::RuleMock: return "mock";
    case ProviderKind::SyntheticHuman: return "human";
    case ProviderKind::LiveLLM: return "llm:" + config.model;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown provider kind");
}

}  // namespace mrl::feedback

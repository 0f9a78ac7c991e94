#include "mrl/feedback/cache.hpp"

#include <sstream>

#include "json.hpp"
#include "mrl/error.hpp"
#include "mrl/feedback/digest.hpp"

namespace mrl::feedback {

std::string BeliefCacheKey::digest() const {
  return digest_hex(env + '\x1f' + state_digest + '\x1f' + cluster + '\x1f' + provider);
}

BeliefCache::BeliefCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) {
    std::ifstream in(*path_, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // torn final write
      const std::string line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        CacheRecord r;
        r.key.env = j.at("env").get<std::string>();
        r.key.state_digest = j.at("state").get<std::string>();
        r.key.cluster = j.at("cluster").get<std::string>();
        r.key.provider = j.at("provider").get<std::string>();
        r.transcript = j.at("transcript").get<std::string>();
        r.masses = j.at("bba").get<std::vector<double>>();
        if (j.at("key").get<std::string>() != r.key.digest()) {
          throw Error(ErrorCode::CacheFormat, "key digest does not match its fields");
        }
        records_.emplace(r.key.digest(), std::move(r));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CacheFormat,
                    path_->string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    // Drop a torn tail so appends start on a fresh line.
    if (pos < text.size()) std::filesystem::resize_file(*path_, pos);
  } else if (path_->has_parent_path()) {
    std::filesystem::create_directories(path_->parent_path());
  }
  out_.open(*path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(ErrorCode::Io, "cannot open belief cache " + path_->string());
}

std::optional<CacheRecord> BeliefCache::lookup(const BeliefCacheKey& key) const {
  std::shared_lock lock(mutex_);
  const auto it = records_.find(key.digest());
  if (it == records_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void BeliefCache::store(const BeliefCacheKey& key, const std::string& transcript,
                        const fusion::BasicBeliefAssignment& bba) {
  std::unique_lock lock(mutex_);
  const std::string digest = key.digest();
  if (records_.count(digest)) return;
  CacheRecord r{key, transcript, bba.values()};
  if (path_) {
    nlohmann::ordered_json j;
    j["key"] = digest;
    j["env"] = key.env;
    j["state"] = key.state_digest;
    j["cluster"] = key.cluster;
    j["provider"] = key.provider;
    j["bba"] = r.masses;
    j["transcript"] = transcript;
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorCode::Io, "write to belief cache failed");
  }
  records_.emplace(digest, std::move(r));
}

std::size_t BeliefCache::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

}  // namespace mrl::feedback

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mrl/fusion/belief.hpp"

namespace mrl::feedback {

struct BeliefCacheKey {
  std::string env;           // "find-milk" or "driving"
  std::string state_digest;  // hex digest of the state's canonical prompt
  std::string cluster;       // row label
  std::string provider;      // provider/model id

  // Digest of the four fields; the record key on disk.
  std::string digest() const;
  friend bool operator==(const BeliefCacheKey&, const BeliefCacheKey&) = default;
};

struct CacheRecord {
  BeliefCacheKey key;
  std::string transcript;
  std::vector<double> masses;
};

// Persistent belief store: one JSON object per line, appended as answers
// arrive. Concurrent lookups share a lock; stores are serialized. Without a
// path the cache lives in memory only.
class BeliefCache {
 public:
  BeliefCache() = default;
  // Loads existing records. A final line without a newline is a torn write
  // and is ignored; any other malformed line throws CacheFormat.
  explicit BeliefCache(std::filesystem::path path);

  std::optional<CacheRecord> lookup(const BeliefCacheKey& key) const;
  // First answer for a key wins; later stores of the same key are ignored.
  void store(const BeliefCacheKey& key, const std::string& transcript,
             const fusion::BasicBeliefAssignment& bba);

  std::size_t size() const;
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, CacheRecord> records_;
  std::ofstream out_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

}  // namespace mrl::feedback

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace mrl::feedback {

enum class MoralCluster {
  Consequentialist,
  Deontological,
  VirtueEthics,
  CareEthics,
  SocialJusticeEthics,
};

inline constexpr int kClusterCount = 5;
inline constexpr std::array<MoralCluster, kClusterCount> kAllClusters = {
    MoralCluster::Consequentialist, MoralCluster::Deontological, MoralCluster::VirtueEthics,
    MoralCluster::CareEthics, MoralCluster::SocialJusticeEthics};

// Display name used in prompts ("Virtue Ethics").
std::string_view display_name(MoralCluster c);
// Short identifier used in files and flags ("virtue").
std::string_view cluster_id(MoralCluster c);
// Accepts identifiers, display names and a few common spellings,
// case-insensitively. Throws InvalidConfig otherwise.
MoralCluster parse_cluster(std::string_view text);

// Credence over the five clusters in fixed order. An empty value stands for
// the implicit "moral agent" prompt with no credences.
struct Credence {
  std::optional<std::array<double, kClusterCount>> values;

  static Credence single(MoralCluster c);
  static Credence moral_agent() { return {}; }
  bool is_moral_agent() const { return !values.has_value(); }
  friend bool operator==(const Credence&, const Credence&) = default;
};

}  // namespace mrl::feedback

#include "mrl/feedback/clusters.hpp"

#include <algorithm>
#include <cctype>

#include "mrl/error.hpp"

namespace mrl::feedback {

std::string_view display_name(MoralCluster c) {
  switch (c) {
    case MoralCluster::Consequentialist: return "Consequentialist";
    case MoralCluster::Deontological: return "Deontological";
    case MoralCluster::VirtueEthics: return "Virtue Ethics";
    case MoralCluster::CareEthics: return "Care Ethics";
    case MoralCluster::SocialJusticeEthics: return "Social Justice Ethics";
  }
  return "?";
}

std::string_view cluster_id(MoralCluster c) {
  switch (c) {
    case MoralCluster::Consequentialist: return "consequentialist";
    case MoralCluster::Deontological: return "deontological";
    case MoralCluster::VirtueEthics: return "virtue";
    case MoralCluster::CareEthics: return "care";
    case MoralCluster::SocialJusticeEthics: return "social-justice";
  }
  return "?";
}

MoralCluster parse_cluster(std::string_view text) {
  std::string norm;
  for (char ch : text) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (norm == "consequentialist" || norm == "consequentialism") {
    return MoralCluster::Consequentialist;
  }
  if (norm == "deontological" || norm == "deontology") return MoralCluster::Deontological;
  if (norm == "virtue" || norm == "virtueethics") return MoralCluster::VirtueEthics;
  if (norm == "care" || norm == "careethics") return MoralCluster::CareEthics;
  if (norm == "socialjustice" || norm == "socialjusticeethics" || norm == "justice") {
    return MoralCluster::SocialJusticeEthics;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown moral cluster '" + std::string(text) + "'");
}

Credence Credence::single(MoralCluster c) {
  std::array<double, kClusterCount> v{};
  v[static_cast<std::size_t>(c)] = 1.0;
  return Credence{v};
}

}  // namespace mrl::feedback

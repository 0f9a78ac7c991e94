#include "mrl/fusion/belief.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mrl/error.hpp"

namespace mrl::fusion {

void validate_distribution(std::span<const double> dist) {
  double sum = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double p = dist[i];
    if (!std::isfinite(p)) {
      throw Error(ErrorCode::NotNormalized, "non-finite mass at index " + std::to_string(i));
    }
    if (p < -kNegativeTolerance) {
      throw Error(ErrorCode::NegativeMass,
                  "mass " + std::to_string(p) + " at index " + std::to_string(i));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kMassTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "masses sum to " << sum;
    throw Error(ErrorCode::NotNormalized, msg.str());
  }
}

BasicBeliefAssignment::BasicBeliefAssignment(std::vector<double> masses)
    : masses_(std::move(masses)) {
  if (masses_.size() < 2) {
    throw Error(ErrorCode::FrameMismatch, "frame must contain at least two hypotheses");
  }
  validate_distribution(masses_);
  for (double& m : masses_) {
    if (m < 0.0) m = 0.0;
  }
}

BasicBeliefAssignment BasicBeliefAssignment::renormalized(std::vector<double> masses) {
  double sum = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!std::isfinite(masses[i])) {
      throw Error(ErrorCode::NotNormalized, "non-finite mass at index " + std::to_string(i));
    }
    if (masses[i] < -kNegativeTolerance) {
      throw Error(ErrorCode::NegativeMass, "mass at index " + std::to_string(i) + " is negative");
    }
    masses[i] = std::max(masses[i], 0.0);
    sum += masses[i];
  }
  if (sum < kRenormalizeLow || sum > kRenormalizeHigh) {
    throw Error(ErrorCode::NotNormalized,
                "masses sum to " + std::to_string(sum) + ", outside the renormalization window");
  }
  for (double& m : masses) m /= sum;
  return BasicBeliefAssignment(std::move(masses));
}

BeliefMatrix::BeliefMatrix(std::vector<BasicBeliefAssignment> rows,
                           std::vector<std::string> cluster_ids)
    : rows_(std::move(rows)), cluster_ids_(std::move(cluster_ids)) {
  if (rows_.empty()) {
    throw Error(ErrorCode::DegenerateK, "belief matrix needs at least one row");
  }
  if (cluster_ids_.size() != rows_.size()) {
    throw Error(ErrorCode::LengthMismatch, "one cluster id per row is required");
  }
  for (const auto& r : rows_) {
    if (r.frame_size() != rows_.front().frame_size()) {
      throw Error(ErrorCode::FrameMismatch, "rows disagree on frame size");
    }
  }
}

namespace {

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("m" + std::to_string(i + 1));
  return ids;
}

}  // namespace

BeliefMatrix::BeliefMatrix(std::vector<BasicBeliefAssignment> rows)
    : BeliefMatrix(std::move(rows), default_ids(rows.size())) {}

BeliefMatrix parse_belief_matrix(const std::string& text) {
  std::vector<BasicBeliefAssignment> rows;
  std::vector<std::string> ids;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string label;
    if (auto colon = line.find(':'); colon != std::string::npos) {
      label = line.substr(0, colon);
      line.erase(0, colon + 1);
      label.erase(0, label.find_first_not_of(" \t"));
      label.erase(label.find_last_not_of(" \t") + 1);
    }
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t' || c == '\r') c = ' ';
    }
    std::istringstream fields(line);
    std::vector<double> masses;
    std::string token;
    while (fields >> token) {
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw Error(ErrorCode::NotNormalized,
                    "line " + std::to_string(line_no) + ": cannot parse '" + token + "'");
      }
      masses.push_back(value);
    }
    if (masses.empty()) continue;
    rows.push_back(BasicBeliefAssignment::renormalized(std::move(masses)));
    ids.push_back(label.empty() ? "m" + std::to_string(rows.size()) : label);
  }
  return BeliefMatrix(std::move(rows), std::move(ids));
}

}  // namespace mrl::fusion

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mrl::fusion {

inline constexpr double kMassTolerance = 1e-9;
inline constexpr double kNegativeTolerance = 1e-12;
// Window in which externally supplied masses are silently renormalized.
inline constexpr double kRenormalizeLow = 0.98;
inline constexpr double kRenormalizeHigh = 1.02;

// Throws NegativeMass / NotNormalized unless `dist` is a probability vector.
void validate_distribution(std::span<const double> dist);

// Mass function over singleton hypotheses (one per action).
class BasicBeliefAssignment {
 public:
  // Strict: masses must already sum to 1 within kMassTolerance. Entries in
  // [-1e-12, 0) are clamped to zero.
  explicit BasicBeliefAssignment(std::vector<double> masses);

  // Lenient entry point for parser output: sums inside
  // [kRenormalizeLow, kRenormalizeHigh] are rescaled to 1, otherwise
  // NotNormalized is thrown.
  static BasicBeliefAssignment renormalized(std::vector<double> masses);

  std::size_t frame_size() const { return masses_.size(); }
  std::span<const double> masses() const { return masses_; }
  const std::vector<double>& values() const { return masses_; }
  double operator[](std::size_t i) const { return masses_[i]; }

  friend bool operator==(const BasicBeliefAssignment&, const BasicBeliefAssignment&) = default;

 private:
  std::vector<double> masses_;
};

// k rows of beliefs (one per evidence source) over a shared frame.
class BeliefMatrix {
 public:
  BeliefMatrix(std::vector<BasicBeliefAssignment> rows, std::vector<std::string> cluster_ids);
  explicit BeliefMatrix(std::vector<BasicBeliefAssignment> rows);

  std::size_t rows() const { return rows_.size(); }
  std::size_t frame_size() const { return rows_.front().frame_size(); }
  const BasicBeliefAssignment& row(std::size_t i) const { return rows_[i]; }
  const std::vector<BasicBeliefAssignment>& row_list() const { return rows_; }
  const std::vector<std::string>& cluster_ids() const { return cluster_ids_; }

 private:
  std::vector<BasicBeliefAssignment> rows_;
  std::vector<std::string> cluster_ids_;
};

// Parses the `fuse` input format: one source per line, masses separated by
// whitespace and/or commas, optional "label:" prefix, '#' comments.
BeliefMatrix parse_belief_matrix(const std::string& text);

}  // namespace mrl::fusion

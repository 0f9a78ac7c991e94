#include "mrl/feedback/parse.hpp"

#include <cctype>
#include <cmath>
#include <optional>
#include <vector>

#include "json.hpp"
#include "mrl/error.hpp"

namespace mrl::feedback {

namespace {

// End (exclusive) of the brace-balanced span starting at text[start] == '{',
// honouring JSON string literals.
std::optional<std::size_t> balanced_end(const std::string& text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::nullopt;
}

std::optional<nlohmann::json> last_object(const std::string& text) {
  std::optional<nlohmann::json> found;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string::npos) {
    const auto end = balanced_end(text, pos);
    if (end) {
      auto parsed = nlohmann::json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos),
                                          text.begin() + static_cast<std::ptrdiff_t>(*end), nullptr,
                                          false);
      if (!parsed.is_discarded() && parsed.is_object()) {
        found = std::move(parsed);
        pos = *end;
        continue;
      }
    }
    ++pos;
  }
  return found;
}

std::optional<int> action_index(std::string key) {
  std::size_t i = 0;
  while (i < key.size() && std::isspace(static_cast<unsigned char>(key[i]))) ++i;
  key.erase(0, i);
  while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
  if (key.size() > 6) {
    std::string head = key.substr(0, 6);
    for (auto& c : head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (head == "action") {
      key.erase(0, 6);
      while (!key.empty() && std::isspace(static_cast<unsigned char>(key.front()))) key.erase(0, 1);
    }
  }
  if (key.empty() || key.size() > 6) return std::nullopt;
  int v = 0;
  for (char c : key) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

fusion::BasicBeliefAssignment parse_belief_json(const std::string& text, int n_actions) {
  const auto obj = last_object(text);
  if (!obj) throw Error(ErrorCode::NoJsonFound, "reply contains no JSON object", text);

  std::vector<double> masses(static_cast<std::size_t>(n_actions), 0.0);
  std::vector<bool> seen(masses.size(), false);
  for (const auto& [key, value] : obj->items()) {
    const auto idx = action_index(key);
    if (!idx || *idx >= n_actions) {
      throw Error(ErrorCode::BadKey, "'" + key + "' is not an action index below " +
                                         std::to_string(n_actions), text);
    }
    const auto slot = static_cast<std::size_t>(*idx);
    if (seen[slot]) throw Error(ErrorCode::BadKey, "action " + key + " appears twice", text);
    seen[slot] = true;
    if (!value.is_number()) {
      throw Error(ErrorCode::BadValue, "belief for '" + key + "' is not a number", text);
    }
    const double m = value.get<double>();
    if (!std::isfinite(m) || m < 0.0) {
      throw Error(ErrorCode::BadValue, "belief for '" + key + "' is negative or not finite", text);
    }
    masses[slot] = m;
  }
  double sum = 0.0;
  for (double m : masses) sum += m;
  if (sum < fusion::kRenormalizeLow || sum > fusion::kRenormalizeHigh) {
    throw Error(ErrorCode::BadSum, "beliefs sum to " + std::to_string(sum), text);
  }
  for (double& m : masses) m /= sum;
  return fusion::BasicBeliefAssignment(std::move(masses));
}

std::string belief_to_json(const fusion::BasicBeliefAssignment& bba) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < bba.frame_size(); ++i) j[std::to_string(i)] = bba[i];
  return j.dump();
}

}  // namespace mrl::feedback

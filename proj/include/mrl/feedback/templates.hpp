#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mrl::feedback {

struct FewShotExample {
  std::string user;
  std::string assistant;
};

// Prompt templates by file name ("system.txt", "find_milk.txt", ...).
// Templates compiled into the library are the default; a directory, when
// given, takes precedence file by file.
class TemplateStore {
 public:
  TemplateStore() = default;
  explicit TemplateStore(std::filesystem::path override_dir);

  // Throws TemplateMissing when neither the directory nor the built-in set
  // has `name`.
  const std::string& get(const std::string& name) const;
  bool has(const std::string& name) const;

  // "<env>_example_<n>.txt" for n = 1, 2, ... until the first gap. Leading
  // '#' lines are dropped; the rest is split at the "[user]" and
  // "[assistant]" markers.
  std::vector<FewShotExample> few_shot(const std::string& env) const;

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::map<std::string, std::string> loaded_;
};

// Replaces every {{name}} with values[name]. Throws TemplateMissing naming
// the first placeholder without a value.
std::string fill_template(const std::string& text, const std::map<std::string, std::string>& values);

FewShotExample parse_example(const std::string& text);

}  // namespace mrl::feedback

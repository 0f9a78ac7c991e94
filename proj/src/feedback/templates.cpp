#include "mrl/feedback/templates.hpp"

#include <fstream>
#include <sstream>

#include "mrl/error.hpp"

namespace mrl::feedback {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();
}

namespace {

std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim_newlines(std::string s) {
  while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.erase(s.begin());
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

TemplateStore::TemplateStore(std::filesystem::path override_dir) : dir_(std::move(override_dir)) {}

bool TemplateStore::has(const std::string& name) const {
  if (loaded_.count(name)) return true;
  if (dir_ && std::filesystem::exists(*dir_ / name)) return true;
  return detail::embedded_templates().count(name) > 0;
}

const std::string& TemplateStore::get(const std::string& name) const {
  if (auto it = loaded_.find(name); it != loaded_.end()) return it->second;
  if (dir_) {
    if (auto text = read_file(*dir_ / name)) return loaded_[name] = *text;
  }
  const auto& builtin = detail::embedded_templates();
  if (auto it = builtin.find(name); it != builtin.end()) return it->second;
  throw Error(ErrorCode::TemplateMissing, "no prompt template named '" + name + "'");
}

std::vector<FewShotExample> TemplateStore::few_shot(const std::string& env) const {
  std::vector<FewShotExample> out;
  for (int n = 1;; ++n) {
    const std::string name = env + "_example_" + std::to_string(n) + ".txt";
    if (!has(name)) break;
    out.push_back(parse_example(get(name)));
  }
  return out;
}

FewShotExample parse_example(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string* target = nullptr;
  FewShotExample ex;
  bool header = true;
  while (std::getline(in, line)) {
    if (header && !line.empty() && line[0] == '#') continue;
    header = false;
    if (line == "[user]") {
      target = &ex.user;
    } else if (line == "[assistant]") {
      target = &ex.assistant;
    } else if (target) {
      *target += line;
      *target += '\n';
    }
  }
  ex.user = trim_newlines(ex.user);
  ex.assistant = trim_newlines(ex.assistant);
  if (ex.user.empty() || ex.assistant.empty()) {
    throw Error(ErrorCode::TemplateMissing, "few-shot example lacks a [user] or [assistant] part");
  }
  return ex;
}

std::string fill_template(const std::string& text,
                          const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = text.find("}}", open + 2);
    if (close == std::string::npos) break;
    const std::string key = text.substr(open + 2, close - open - 2);
    const auto it = values.find(key);
    if (it == values.end()) {
      throw Error(ErrorCode::TemplateMissing, "no value for placeholder '" + key + "'");
    }
    out.append(text, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

}  // namespace mrl::feedback

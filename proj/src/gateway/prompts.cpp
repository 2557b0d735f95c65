#include "tutorws/gateway/prompts.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tutorws::resources::prompts {
const std::map<std::string, std::string_view, std::less<>>& embedded();
}

namespace tutorws::gateway {

PromptLibrary PromptLibrary::defaults() {
  PromptLibrary lib;
  for (const auto& [name, text] : resources::prompts::embedded()) lib.templates_.emplace(name, std::string(text));
  return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
  auto lib = defaults();
  for (auto& [name, text] : lib.templates_) {
    std::ifstream in(dir / (name + ".txt"));
    if (!in) continue;
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return lib;
}

std::string PromptLibrary::render(std::string_view name, const std::map<std::string, std::string>& vars) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw std::out_of_range("unknown prompt template '" + std::string(name) + "'");
  const std::string& tpl = it->second;
  std::string out;
  out.reserve(tpl.size() + 256);
  std::size_t pos = 0;
  while (true) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string::npos) break;
    out.append(tpl, pos, open - pos);
    const std::string key = tpl.substr(open + 2, close - open - 2);
    auto v = vars.find(key);
    if (v == vars.end()) {
      throw std::invalid_argument("prompt '" + std::string(name) + "' has no value for {{" + key + "}}");
    }
    out += v->second;
    pos = close + 2;
  }
  out.append(tpl, pos, std::string::npos);
  return out;
}

}  // namespace tutorws::gateway

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace tutorws::gateway {

/// Per-stage prompt templates with {{name}} placeholders. Defaults are the
/// files under prompts/ compiled into the library; a directory of same-named
/// .txt files overrides them one by one.
class PromptLibrary {
 public:
  static PromptLibrary defaults();
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  /// Throws std::out_of_range for an unknown template and std::invalid_argument
  /// for a placeholder with no value.
  std::string render(std::string_view name, const std::map<std::string, std::string>& vars) const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace tutorws::gateway

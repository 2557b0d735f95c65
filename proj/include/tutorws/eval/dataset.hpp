#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tutorws/core/errors.hpp"

namespace tutorws::eval {

enum class Subject { Biology, Physics, Mathematics, History, Geography, Chemistry, English };
enum class Scenario { AffectiveSupport, PersonalizedSupport, StrategicScaffolding, DirectQA, ErrorCorrection };
enum class Emotion { Positive, Neutral, Negative };

std::string_view to_string(Subject s);
std::string_view to_string(Scenario s);
std::string_view to_string(Emotion e);

/// Signed valence assigned to each emotion category at ingestion.
double emotion_valence(Emotion e);

struct EvalInstance {
  std::string id;
  Subject subject = Subject::Biology;
  Scenario scenario = Scenario::AffectiveSupport;
  Emotion emotion = Emotion::Neutral;
  int grade = 1;  // K1..K12
  std::string prompt;
  double valence = 0.0;  // emotion_valence(emotion)

  bool operator==(const EvalInstance&) const = default;
};

/// A dataset line that cannot be read. `line` is 1-based.
class DatasetError : public Error {
 public:
  DatasetError(std::size_t line, const std::string& why)
      : Error("dataset line " + std::to_string(line) + ": " + why), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Composition {
  std::map<std::string, int> subjects;
  std::map<std::string, int> scenarios;
  std::map<std::string, int> emotions;
  int total = 0;

  bool operator==(const Composition&) const = default;
};

class CompositionMismatch : public Error {
 public:
  explicit CompositionMismatch(const std::string& report) : Error("dataset composition mismatch:\n" + report) {}
};

/// The published benchmark: 100 instances over the counts below.
const Composition& reference_composition();

Composition composition_of(const std::vector<EvalInstance>& instances);

/// Lists every count that differs as "group/name: expected X, found Y".
std::string compare_composition(const Composition& expected, const Composition& found);

/// JSON lines with fields id, subject, scenario, emotion, grade ("K1".."K12")
/// and prompt. Blank lines are skipped; ids must be unique.
std::vector<EvalInstance> parse_dataset(std::istream& in);

/// Throws DatasetError, or CompositionMismatch when `check_composition` is
/// set and the counts differ from reference_composition().
std::vector<EvalInstance> load_dataset(const std::filesystem::path& path, bool check_composition = false);

}  // namespace tutorws::eval

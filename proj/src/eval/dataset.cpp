#include "tutorws/eval/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tutorws::eval {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::array<E, N>& values, const std::string& text, const char* field) {
  for (auto v : values) {
    if (to_string(v) == text) return v;
  }
  throw std::invalid_argument(std::string("unknown ") + field + " \"" + text + "\"");
}

constexpr std::array kSubjects{Subject::Biology,   Subject::Physics,   Subject::Mathematics, Subject::History,
                               Subject::Geography, Subject::Chemistry, Subject::English};
constexpr std::array kScenarios{Scenario::AffectiveSupport, Scenario::PersonalizedSupport,
                                Scenario::StrategicScaffolding, Scenario::DirectQA, Scenario::ErrorCorrection};
constexpr std::array kEmotions{Emotion::Positive, Emotion::Neutral, Emotion::Negative};

int parse_grade(const std::string& g) {
  if (g.size() < 2 || g[0] != 'K') throw std::invalid_argument("grade must look like K1..K12, got \"" + g + "\"");
  int value = 0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (g[i] < '0' || g[i] > '9') throw std::invalid_argument("grade must look like K1..K12, got \"" + g + "\"");
    value = value * 10 + (g[i] - '0');
  }
  if (value < 1 || value > 12) throw std::invalid_argument("grade out of range K1..K12: \"" + g + "\"");
  return value;
}

void render_group(std::ostringstream& out, const char* group, const std::map<std::string, int>& expected,
                  const std::map<std::string, int>& found) {
  std::set<std::string> names;
  for (const auto& [k, _] : expected) names.insert(k);
  for (const auto& [k, _] : found) names.insert(k);
  for (const auto& name : names) {
    const int e = expected.contains(name) ? expected.at(name) : 0;
    const int f = found.contains(name) ? found.at(name) : 0;
    if (e != f) out << group << "/" << name << ": expected " << e << ", found " << f << "\n";
  }
}

}  // namespace

std::string_view to_string(Subject s) {
  switch (s) {
    case Subject::Biology: return "Biology";
    case Subject::Physics: return "Physics";
    case Subject::Mathematics: return "Mathematics";
    case Subject::History: return "History";
    case Subject::Geography: return "Geography";
    case Subject::Chemistry: return "Chemistry";
    case Subject::English: return "English";
  }
  return "?";
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::AffectiveSupport: return "AffectiveSupport";
    case Scenario::PersonalizedSupport: return "PersonalizedSupport";
    case Scenario::StrategicScaffolding: return "StrategicScaffolding";
    case Scenario::DirectQA: return "DirectQA";
    case Scenario::ErrorCorrection: return "ErrorCorrection";
  }
  return "?";
}

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::Positive: return "Positive";
    case Emotion::Neutral: return "Neutral";
    case Emotion::Negative: return "Negative";
  }
  return "?";
}

double emotion_valence(Emotion e) {
  switch (e) {
    case Emotion::Positive: return 0.6;
    case Emotion::Neutral: return 0.0;
    case Emotion::Negative: return -0.6;
  }
  return 0.0;
}

const Composition& reference_composition() {
  static const Composition c{
      {{"Biology", 20}, {"Physics", 20}, {"Mathematics", 20}, {"History", 14}, {"Geography", 12}, {"Chemistry", 10},
       {"English", 4}},
      {{"AffectiveSupport", 32},
       {"PersonalizedSupport", 26},
       {"StrategicScaffolding", 22},
       {"DirectQA", 12},
       {"ErrorCorrection", 8}},
      {{"Positive", 36}, {"Neutral", 32}, {"Negative", 32}},
      100};
  return c;
}

Composition composition_of(const std::vector<EvalInstance>& instances) {
  Composition c;
  for (const auto& i : instances) {
    ++c.subjects[std::string(to_string(i.subject))];
    ++c.scenarios[std::string(to_string(i.scenario))];
    ++c.emotions[std::string(to_string(i.emotion))];
    ++c.total;
  }
  return c;
}

std::string compare_composition(const Composition& expected, const Composition& found) {
  std::ostringstream out;
  render_group(out, "subject", expected.subjects, found.subjects);
  render_group(out, "scenario", expected.scenarios, found.scenarios);
  render_group(out, "emotion", expected.emotions, found.emotions);
  if (expected.total != found.total) out << "total: expected " << expected.total << ", found " << found.total << "\n";
  return out.str();
}

std::vector<EvalInstance> parse_dataset(std::istream& in) {
  std::vector<EvalInstance> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = json::parse(line);
      if (!doc.is_object()) throw std::invalid_argument("expected a JSON object");
      for (auto it = doc.begin(); it != doc.end(); ++it) {
        static const std::set<std::string> known{"id", "subject", "scenario", "emotion", "grade", "prompt"};
        if (!known.contains(it.key())) throw std::invalid_argument("unknown field \"" + it.key() + "\"");
      }
      EvalInstance inst;
      inst.id = doc.at("id").get<std::string>();
      inst.subject = parse_enum(kSubjects, doc.at("subject").get<std::string>(), "subject");
      inst.scenario = parse_enum(kScenarios, doc.at("scenario").get<std::string>(), "scenario");
      inst.emotion = parse_enum(kEmotions, doc.at("emotion").get<std::string>(), "emotion");
      inst.valence = emotion_valence(inst.emotion);
      inst.grade = parse_grade(doc.at("grade").get<std::string>());
      inst.prompt = doc.at("prompt").get<std::string>();
      if (inst.id.empty()) throw std::invalid_argument("empty id");
      if (inst.prompt.empty()) throw std::invalid_argument("empty prompt");
      if (!ids.insert(inst.id).second) throw std::invalid_argument("duplicate id \"" + inst.id + "\"");
      out.push_back(std::move(inst));
    } catch (const json::exception& e) {
      throw DatasetError(number, e.what());
    } catch (const std::invalid_argument& e) {
      throw DatasetError(number, e.what());
    }
  }
  return out;
}

std::vector<EvalInstance> load_dataset(const std::filesystem::path& path, bool check_composition) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path.string());
  auto instances = parse_dataset(in);
  if (check_composition) {
    const auto report = compare_composition(reference_composition(), composition_of(instances));
    if (!report.empty()) throw CompositionMismatch(report);
  }
  return instances;
}

}  // namespace tutorws::eval

#include "tutorws/eval/scores.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "tutorws/core/canonical_json.hpp"

namespace tutorws::eval {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

std::array<double, 7> mean_of(const std::vector<const RubricScores*>& rows) {
  std::array<double, 7> m{};
  for (const auto* r : rows) {
    for (std::size_t d = 0; d < 7; ++d) m[d] += (*r)[d];
  }
  for (auto& v : m) v /= static_cast<double>(rows.size());
  return m;
}

}  // namespace

RubricScores RubricScores::clamped() const {
  RubricScores out = *this;
  for (auto& v : out.values) v = std::clamp(v, 0.0, 100.0);
  return out;
}

bool RubricScores::valid() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0 && v <= 100.0; });
}

std::size_t dimension_index(std::string_view name) {
  for (std::size_t i = 0; i < kDimensions.size(); ++i) {
    if (kDimensions[i] == name) return i;
  }
  throw std::invalid_argument("unknown rubric dimension \"" + std::string(name) + "\"");
}

json to_json(const RubricScores& s) {
  json doc = json::object();
  for (std::size_t i = 0; i < kDimensions.size(); ++i) doc[std::string(kDimensions[i])] = s[i];
  return doc;
}

RubricScores rubric_from_json(const json& doc) {
  RubricScores s;
  for (std::size_t i = 0; i < kDimensions.size(); ++i) {
    const std::string key(kDimensions[i]);
    if (!doc.contains(key) || !doc[key].is_number()) throw SchemaError(key, "expected a number");
    s[i] = doc[key].get<double>();
  }
  return s;
}

std::string_view to_string(RaterKind k) { return k == RaterKind::human ? "human" : "llm"; }

RaterKind rater_kind_from_string(std::string_view s) {
  if (s == "human") return RaterKind::human;
  if (s == "llm") return RaterKind::llm;
  throw std::invalid_argument("unknown rater kind \"" + std::string(s) + "\"");
}

InstanceSetMismatch::InstanceSetMismatch(std::vector<std::string> missing)
    : Error("instance sets differ; unmatched ids: " + join(missing)), missing_(std::move(missing)) {}

void ScoreSheet::add(const ScoreKey& key, const RubricScores& scores) {
  if (!entries_.emplace(key, scores).second) {
    throw DuplicateScore("duplicate score for instance '" + key.instance_id + "', condition '" + key.condition +
                         "', rater '" + key.rater_id + "' (" + std::string(to_string(key.kind)) + ")");
  }
}

void ScoreSheet::merge(const ScoreSheet& other) {
  for (const auto& [k, v] : other.entries_) add(k, v);
}

std::vector<std::string> ScoreSheet::instances(const std::string& condition) const {
  std::set<std::string> ids;
  for (const auto& [k, _] : entries_) {
    if (k.condition == condition) ids.insert(k.instance_id);
  }
  return {ids.begin(), ids.end()};
}

std::vector<std::string> ScoreSheet::conditions() const {
  std::set<std::string> out;
  for (const auto& [k, _] : entries_) out.insert(k.condition);
  return {out.begin(), out.end()};
}

ScoreSheet load_score_sheet(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open score sheet " + path.string());
  ScoreSheet sheet;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = json::parse(line);
      ScoreKey key{doc.at("instance_id").get<std::string>(), doc.at("condition").get<std::string>(),
                   doc.at("rater_id").get<std::string>(),
                   rater_kind_from_string(doc.at("rater_kind").get<std::string>())};
      sheet.add(key, rubric_from_json(doc));
    } catch (const DuplicateScore&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(path.filename().string() + ":" + std::to_string(number), e.what());
    }
  }
  return sheet;
}

ScoreSheet load_score_dir(const std::filesystem::path& dir) {
  if (std::filesystem::is_regular_file(dir)) return load_score_sheet(dir);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ScoreSheet sheet;
  for (const auto& f : files) sheet.merge(load_score_sheet(f));
  return sheet;
}

void save_score_sheet(const ScoreSheet& sheet, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write score sheet " + path.string());
  for (const auto& [k, v] : sheet.entries()) {
    auto doc = to_json(v);
    doc["instance_id"] = k.instance_id;
    doc["condition"] = k.condition;
    doc["rater_id"] = k.rater_id;
    doc["rater_kind"] = std::string(to_string(k.kind));
    out << doc.dump() << "\n";
  }
}

ScoreSheet ingest_human_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open ratings CSV " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("header", "empty CSV");
  const std::vector<std::string> expected_header{"instance_id", "condition", "rater_id", "dimension", "score"};
  if (split_csv_line(line) != expected_header) {
    throw SchemaError("header", "expected instance_id,condition,rater_id,dimension,score");
  }

  std::map<std::tuple<std::string, std::string, std::string>, std::map<std::size_t, double>> grouped;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    const std::string where = "line " + std::to_string(number);
    if (cells.size() != 5) throw SchemaError(where, "expected 5 columns");
    std::size_t dim = 0;
    double score = 0.0;
    try {
      dim = dimension_index(cells[3]);
      std::size_t used = 0;
      score = std::stod(cells[4], &used);
      if (used != cells[4].size()) throw std::invalid_argument("trailing characters in score");
    } catch (const std::exception& e) {
      throw SchemaError(where, e.what());
    }
    if (score < 0.0 || score > 100.0) throw SchemaError(where, "score outside [0, 100]");
    auto& dims = grouped[{cells[0], cells[1], cells[2]}];
    if (!dims.emplace(dim, score).second) throw DuplicateScore(where + ": dimension rated twice");
  }

  ScoreSheet sheet;
  for (const auto& [key, dims] : grouped) {
    const auto& [instance, condition, rater] = key;
    if (dims.size() != kDimensions.size()) {
      throw SchemaError(instance + "/" + condition + "/" + rater, "not all seven dimensions rated");
    }
    RubricScores s;
    for (const auto& [d, v] : dims) s[d] = v;
    sheet.add(ScoreKey{instance, condition, rater, RaterKind::human}, s);
  }
  return sheet;
}

RubricScores aggregate_scores(const ScoreSheet& sheet, const std::string& instance_id, const std::string& condition) {
  std::vector<const RubricScores*> human, llm;
  for (const auto& [k, v] : sheet.entries()) {
    if (k.instance_id != instance_id || k.condition != condition) continue;
    (k.kind == RaterKind::human ? human : llm).push_back(&v);
  }
  if (human.empty()) throw MissingRaterKind(RaterKind::human, instance_id, condition);
  if (llm.empty()) throw MissingRaterKind(RaterKind::llm, instance_id, condition);
  const auto h = mean_of(human);
  const auto l = mean_of(llm);
  RubricScores out;
  for (std::size_t d = 0; d < 7; ++d) out[d] = 0.5 * h[d] + 0.5 * l[d];
  return out;
}

DeltaRow delta_table(const ScoreSheet& sheet, const std::string& condition_a, const std::string& condition_b) {
  const auto ids_a = sheet.instances(condition_a);
  const auto ids_b = sheet.instances(condition_b);
  std::vector<std::string> unmatched;
  std::set_symmetric_difference(ids_a.begin(), ids_a.end(), ids_b.begin(), ids_b.end(), std::back_inserter(unmatched));
  if (!unmatched.empty()) throw InstanceSetMismatch(std::move(unmatched));
  if (ids_a.empty()) throw InstanceSetMismatch({"(no instances for " + condition_a + ")"});

  DeltaRow row;
  row.label = condition_a + " vs " + condition_b;
  row.instances = ids_a.size();
  for (const auto& id : ids_a) {
    const auto a = aggregate_scores(sheet, id, condition_a);
    const auto b = aggregate_scores(sheet, id, condition_b);
    for (std::size_t d = 0; d < 7; ++d) row.delta[d] += a[d] - b[d];
  }
  for (auto& v : row.delta) v /= static_cast<double>(ids_a.size());
  return row;
}

std::string signed_cell(double v) {
  const auto text = canonical::fixed6(v);
  return text.front() == '-' ? text : "+" + text;
}

std::string render_delta_table(const std::vector<DeltaRow>& rows) {
  std::size_t label_width = 10;
  for (const auto& r : rows) label_width = std::max(label_width, r.label.size());
  std::ostringstream out;
  out.setf(std::ios::left);
  out.width(static_cast<std::streamsize>(label_width));
  out << "Comparison";
  for (auto h : kDimensionHeaders) {
    out << "  ";
    out.width(12);
    out << h;
  }
  out << "\n";
  for (const auto& r : rows) {
    out.width(static_cast<std::streamsize>(label_width));
    out << r.label;
    for (double v : r.delta) {
      out << "  ";
      out.width(12);
      out << signed_cell(v);
    }
    out << "\n";
  }
  return out.str();
}

json to_json(const DeltaRow& row) {
  json delta = json::object();
  for (std::size_t d = 0; d < 7; ++d) delta[std::string(kDimensions[d])] = row.delta[d];
  return json{{"comparison", row.label}, {"instances", row.instances}, {"delta", delta}};
}

}  // namespace tutorws::eval

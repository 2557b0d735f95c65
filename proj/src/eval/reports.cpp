#include "tutorws/eval/reports.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "tutorws/core/canonical_json.hpp"
#include "tutorws/eval/stats.hpp"

namespace tutorws::eval {

using nlohmann::json;

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("percentile rank must be in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<ConditionUsage> summarize_usage(const std::vector<Transcript>& transcripts) {
  std::map<std::string, std::vector<const Transcript*>> grouped;
  for (const auto& t : transcripts) grouped[t.condition].push_back(&t);

  std::vector<ConditionUsage> rows;
  for (const auto& [condition, items] : grouped) {
    ConditionUsage row;
    row.condition = condition;
    row.instances = items.size();
    std::vector<double> calls;
    for (const auto* t : items) {
      row.total.merge(t->usage);
      calls.push_back(static_cast<double>(t->usage.api_calls));
    }
    row.median_calls = percentile(calls, 0.5);
    row.p80_calls = percentile(calls, 0.8);
    rows.push_back(std::move(row));
  }
  const auto base = std::find_if(rows.begin(), rows.end(), [](const ConditionUsage& r) { return r.condition == "baseline"; });
  if (base != rows.end() && base->total.total_tokens() > 0) {
    const auto baseline = base->total;
    for (auto& r : rows) r.multiplier = gateway::cost_multiplier(r.total, baseline);
  }
  return rows;
}

std::string render_usage(const std::vector<ConditionUsage>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %9s %10s %12s %12s %8s %8s %10s\n", "Condition", "Instances", "API calls",
                "Tokens in", "Tokens out", "Median", "P80", "Cost");
  out << line;
  for (const auto& r : rows) {
    const std::string cost = r.multiplier ? canonical::fixed6(*r.multiplier) + "x" : "-";
    std::snprintf(line, sizeof line, "%-16s %9zu %10llu %12llu %12llu %8.1f %8.1f %10s\n", r.condition.c_str(),
                  r.instances, static_cast<unsigned long long>(r.total.api_calls),
                  static_cast<unsigned long long>(r.total.tokens_in),
                  static_cast<unsigned long long>(r.total.tokens_out), r.median_calls, r.p80_calls, cost.c_str());
    out << line;
  }
  return out.str();
}

json to_json(const std::vector<ConditionUsage>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back(json{{"condition", r.condition},
                       {"instances", r.instances},
                       {"usage", tutorws::to_json(r.total)},
                       {"median_calls", r.median_calls},
                       {"p80_calls", r.p80_calls},
                       {"cost_multiplier", r.multiplier ? json(*r.multiplier) : json(nullptr)}});
  }
  return out;
}

ReliabilityReport reliability(const ScoreSheet& sheet) {
  std::set<std::string> humans;
  for (const auto& [k, _] : sheet.entries()) {
    if (k.kind == RaterKind::human) humans.insert(k.rater_id);
  }
  if (humans.size() < 2) throw DegenerateInput("reliability needs at least two human raters");

  struct Response {
    std::map<std::string, const RubricScores*> human;
    std::vector<const RubricScores*> llm;
  };
  std::map<std::pair<std::string, std::string>, Response> responses;
  for (const auto& [k, v] : sheet.entries()) {
    auto& r = responses[{k.instance_id, k.condition}];
    if (k.kind == RaterKind::human) r.human[k.rater_id] = &v;
    else r.llm.push_back(&v);
  }

  ReliabilityReport report;
  report.human_raters.assign(humans.begin(), humans.end());
  std::vector<std::vector<double>> human_rows, hybrid_rows;
  std::vector<double> human_overall, llm_overall;
  for (const auto& [_, r] : responses) {
    if (r.human.size() != humans.size() || r.llm.empty()) continue;
    ++report.responses;
    std::array<double, 7> llm_mean{};
    for (const auto* s : r.llm) {
      for (std::size_t d = 0; d < 7; ++d) llm_mean[d] += (*s)[d] / static_cast<double>(r.llm.size());
    }
    double h_overall = 0.0;
    for (std::size_t d = 0; d < 7; ++d) {
      std::vector<double> row;
      for (const auto& id : report.human_raters) row.push_back((*r.human.at(id))[d]);
      if (d == 6) {
        for (double x : row) h_overall += x / static_cast<double>(row.size());
      }
      human_rows.push_back(row);
      row.push_back(llm_mean[d]);
      hybrid_rows.push_back(std::move(row));
    }
    human_overall.push_back(h_overall);
    llm_overall.push_back(llm_mean[6]);
  }
  if (report.responses < 2) throw DegenerateInput("reliability needs at least two fully rated responses");

  report.alpha_human = cronbach_alpha(human_rows);
  report.alpha_hybrid = cronbach_alpha(hybrid_rows);
  report.icc_human = icc_2_1(human_rows);
  report.spearman_overall = spearman_rho(human_overall, llm_overall);
  return report;
}

std::string render_reliability(const ReliabilityReport& r) {
  std::ostringstream out;
  out << "Responses rated by all raters: " << r.responses << "\n";
  out << "Cronbach alpha (human raters):        " << canonical::fixed6(r.alpha_human) << "\n";
  out << "Cronbach alpha (human + llm):         " << canonical::fixed6(r.alpha_hybrid) << "\n";
  out << "ICC(2,1) (human raters):              " << canonical::fixed6(r.icc_human) << "\n";
  out << "Spearman rho (human vs llm overall):  " << canonical::fixed6(r.spearman_overall) << "\n";
  return out.str();
}

json to_json(const ReliabilityReport& r) {
  return json{{"human_raters", r.human_raters},      {"responses", r.responses},
              {"alpha_human", r.alpha_human},        {"alpha_hybrid", r.alpha_hybrid},
              {"icc_2_1_human", r.icc_human},        {"spearman_rho_overall", r.spearman_overall}};
}

ComparisonStats compare_conditions(const ScoreSheet& sheet, const std::string& condition_a,
                                   const std::string& condition_b) {
  ComparisonStats s;
  s.delta = delta_table(sheet, condition_a, condition_b);
  std::vector<double> diffs, a, b;
  for (const auto& id : sheet.instances(condition_a)) {
    const double x = aggregate_scores(sheet, id, condition_a).overall();
    const double y = aggregate_scores(sheet, id, condition_b).overall();
    a.push_back(x);
    b.push_back(y);
    diffs.push_back(x - y);
  }
  s.wilcoxon = wilcoxon_signed_rank(diffs);
  s.cliffs_delta = cliffs_delta(a, b);
  return s;
}

json to_json(const ComparisonStats& s) {
  auto doc = to_json(s.delta);
  doc["wilcoxon"] = json{{"statistic", s.wilcoxon.statistic},
                         {"p_value", s.wilcoxon.p_value},
                         {"n", s.wilcoxon.n},
                         {"exact", s.wilcoxon.exact},
                         {"degenerate", s.wilcoxon.degenerate}};
  doc["cliffs_delta"] = s.cliffs_delta;
  return doc;
}

}  // namespace tutorws::eval

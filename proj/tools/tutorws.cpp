// Command-line entry point: the tutoring service and the evaluation harness.
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "tutorws/core/canonical_json.hpp"
#include "tutorws/eval/dataset.hpp"
#include "tutorws/eval/reports.hpp"
#include "tutorws/eval/runner.hpp"
#include "tutorws/eval/scores.hpp"
#include "tutorws/service/config.hpp"
#include "tutorws/service/http_api.hpp"
#include "tutorws/service/session_service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tutorws;

namespace {

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

service::SessionConfig load_config(const std::string& path) {
  return path.empty() ? service::SessionConfig{} : service::SessionConfig::load(path);
}

void emit(const std::string& table, const json& doc, const std::string& json_out) {
  std::cout << table;
  if (json_out.empty()) {
    std::cout << "\n" << doc.dump(2) << "\n";
  } else {
    std::ofstream out(json_out, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
    if (!out) throw Error("cannot write " + json_out);
  }
}

int serve(const std::string& config_path, const std::string& host, int port) {
  const auto config = load_config(config_path);
  const char* data_dir = std::getenv("DATA_DIR");
  service::SessionService svc(config, data_dir ? data_dir : "data");
  httplib::Server server;
  service::register_routes(server, svc);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cerr << "listening on " << host << ":" << port << " (data dir " << (data_dir ? data_dir : "data") << ", "
            << svc.session_count() << " sessions restored)\n";
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deliberative tutoring engine: tutoring service and evaluation harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP tutoring service (DATA_DIR sets the session store)");
  serve_cmd->add_option("--config", config_path, "Engine config JSON");
  serve_cmd->add_option("--port", port, "Listen port");
  serve_cmd->add_option("--host", host, "Listen address");

  auto* eval = app.add_subcommand("eval", "Evaluation harness");
  eval->require_subcommand(1);

  std::string dataset, condition, out_dir;
  unsigned workers = 1;
  bool check_composition = false;
  auto* run = eval->add_subcommand("run", "Run one condition over a dataset");
  run->add_option("--dataset", dataset, "Dataset JSON lines")->required();
  run->add_option("--condition", condition, "baseline | slow_full | slow_no_cogval | slow_no_affect | refine7")
      ->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--config", config_path, "Engine config JSON");
  run->add_option("--workers", workers, "Instances processed concurrently");
  run->add_flag("--check-composition", check_composition, "Require the reference dataset composition");

  std::string composition_dataset;
  auto* comp = eval->add_subcommand("composition", "Report a dataset's composition against the reference counts");
  comp->add_option("--dataset", composition_dataset, "Dataset JSON lines")->required();

  std::string transcripts, scores_out, judge_id = "llm-judge";
  auto* judge = eval->add_subcommand("judge", "Score transcripts with the configured judge backend");
  judge->add_option("--transcripts", transcripts, "Transcript file or directory")->required();
  judge->add_option("--out", scores_out, "Score sheet to write (JSON lines)")->required();
  judge->add_option("--config", config_path, "Engine config JSON");
  judge->add_option("--judge-id", judge_id, "Rater id recorded for the judge");

  std::string csv_path, ingest_out;
  auto* ingest = eval->add_subcommand("ingest-human", "Convert a human ratings CSV into a score sheet");
  ingest->add_option("--csv", csv_path, "CSV with instance_id,condition,rater_id,dimension,score")->required();
  ingest->add_option("--out", ingest_out, "Score sheet to write (JSON lines)")->required();

  std::string scores_dir, json_out;
  std::vector<std::string> compares;
  auto* stats = eval->add_subcommand("stats", "Delta table, Wilcoxon signed-rank test and Cliff's delta");
  stats->add_option("--scores", scores_dir, "Score sheet file or directory")->required();
  stats->add_option("--compare", compares, "<condition a>:<condition b>, repeatable")->required();
  stats->add_option("--json", json_out, "Write the JSON report here instead of stdout");

  auto* rel = eval->add_subcommand("reliability", "Cronbach's alpha, ICC(2,1) and Spearman's rho");
  rel->add_option("--scores", scores_dir, "Score sheet file or directory")->required();
  rel->add_option("--json", json_out, "Write the JSON report here instead of stdout");

  std::string usage_dir;
  auto* cost = eval->add_subcommand("cost", "API calls, tokens and cost multipliers per condition");
  cost->add_option("--usage", usage_dir, "Transcript/usage file or directory")->required();
  cost->add_option("--json", json_out, "Write the JSON report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(config_path, host, port);

    if (*run) {
      const auto cond = eval::condition_from_string(condition);
      const auto instances = eval::load_dataset(dataset, check_composition);
      const auto config = load_config(config_path);
      auto gw = service::make_gateway(config);
      const auto prompts = service::make_prompts(config);
      eval::RunOptions options{config.pipeline, workers};
      const auto result = eval::run_condition(instances, cond, options, *gw, prompts);
      fs::create_directories(out_dir);
      const auto path = fs::path(out_dir) / (condition + ".jsonl");
      eval::save_transcripts(result.transcripts, path);
      std::size_t failed = 0;
      for (const auto& t : result.transcripts) failed += t.error ? 1 : 0;
      const auto summary = eval::summarize_usage(result.transcripts);
      emit(eval::render_usage(summary),
           json{{"transcripts", path.string()}, {"failed", failed}, {"usage", eval::to_json(summary)}}, "");
      return failed == 0 ? 0 : 3;
    }
    if (*comp) {
      const auto instances = eval::load_dataset(composition_dataset, false);
      const auto found = eval::composition_of(instances);
      const auto report = eval::compare_composition(eval::reference_composition(), found);
      std::ostringstream table;
      table << "Instances: " << found.total << "\n";
      for (const auto* group : {&found.subjects, &found.scenarios, &found.emotions}) {
        for (const auto& [name, n] : *group) table << "  " << name << ": " << n << "\n";
      }
      table << (report.empty() ? "Composition matches the reference counts.\n" : report);
      emit(table.str(),
           json{{"total", found.total},
                {"subjects", found.subjects},
                {"scenarios", found.scenarios},
                {"emotions", found.emotions},
                {"matches_reference", report.empty()}},
           "");
      return report.empty() ? 0 : 3;
    }
    if (*judge) {
      const auto config = load_config(config_path);
      auto gw = service::make_gateway(config);
      const auto prompts = service::make_prompts(config);
      const auto sheet = eval::judge_transcripts(eval::load_transcript_dir(transcripts), judge_id, prompts, *gw);
      eval::save_score_sheet(sheet, scores_out);
      std::cout << "wrote " << sheet.size() << " judge scores to " << scores_out << "\n";
      return 0;
    }
    if (*ingest) {
      const auto sheet = eval::ingest_human_csv(csv_path);
      eval::save_score_sheet(sheet, ingest_out);
      std::cout << "wrote " << sheet.size() << " human score records to " << ingest_out << "\n";
      return 0;
    }
    if (*stats) {
      const auto sheet = eval::load_score_dir(scores_dir);
      std::vector<eval::DeltaRow> rows;
      json doc = json::array();
      std::ostringstream extra;
      for (const auto& pair : compares) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("--compare expects <a>:<b>, got " + pair);
        const auto s = eval::compare_conditions(sheet, pair.substr(0, colon), pair.substr(colon + 1));
        rows.push_back(s.delta);
        doc.push_back(eval::to_json(s));
        extra << s.delta.label << ": Wilcoxon W+=" << canonical::fixed6(s.wilcoxon.statistic)
              << " p=" << canonical::fixed6(s.wilcoxon.p_value) << " (n=" << s.wilcoxon.n
              << (s.wilcoxon.exact ? ", exact" : ", normal approx.") << (s.wilcoxon.degenerate ? ", degenerate" : "")
              << "), Cliff's delta=" << canonical::fixed6(s.cliffs_delta) << "\n";
      }
      emit(eval::render_delta_table(rows) + extra.str(), doc, json_out);
      return 0;
    }
    if (*rel) {
      const auto report = eval::reliability(eval::load_score_dir(scores_dir));
      emit(eval::render_reliability(report), eval::to_json(report), json_out);
      return 0;
    }
    if (*cost) {
      const auto rows = eval::summarize_usage(eval::load_transcript_dir(usage_dir));
      emit(eval::render_usage(rows), eval::to_json(rows), json_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

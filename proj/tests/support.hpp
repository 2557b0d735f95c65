#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "tutorws/gateway/gateway.hpp"
#include "tutorws/gateway/prompts.hpp"
#include "tutorws/gateway/stage_context.hpp"
#include "tutorws/service/pipeline.hpp"

namespace tutorws::testing {

inline std::filesystem::path fixture_root() { return TUTORWS_FIXTURE_DIR; }
inline std::filesystem::path mock_dir() { return fixture_root() / "mock"; }

inline const std::string kHistoryUtterance =
    "I keep mixing up the order of events before World War I. I know about the alliances and the assassination, "
    "but I can't remember what came first, and it's making me really anxious about the test.";

inline const std::string kCircuitsUtterance =
    "I think the current gets used up by the first bulb, but V equals I times R, so more resistance means less "
    "current? this is so frustrating";

inline std::shared_ptr<gateway::Gateway> mock_gateway(std::chrono::milliseconds latency = std::chrono::milliseconds(0),
                                                      gateway::GatewayOptions options = {}) {
  return std::make_shared<gateway::Gateway>(std::make_shared<gateway::MockBackend>(mock_dir(), latency), options);
}

inline const gateway::PromptLibrary& prompts() {
  static const auto lib = gateway::PromptLibrary::defaults();
  return lib;
}

inline Utterance learner(const std::string& text, std::uint32_t turn = 1) {
  return Utterance{text, Speaker::learner, turn, "test-session"};
}

inline service::TurnResult run_fixture(const std::string& key, const std::string& text,
                                       PipelineVariant variant = PipelineVariant::full) {
  auto gw = mock_gateway();
  service::PipelineConfig config;
  config.variant = variant;
  service::TurnInput input;
  input.turn_id = key;
  input.utterance = learner(text);
  input.fixture_key = key;
  return service::run_turn(input, config, *gw, prompts());
}

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tutorws-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace tutorws::testing

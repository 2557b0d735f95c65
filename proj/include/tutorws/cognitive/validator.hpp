#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tutorws/core/trace.hpp"
#include "tutorws/core/types.hpp"
#include "tutorws/gateway/stage_context.hpp"

namespace tutorws::cognitive {

struct SimulatedProfile {
  MasteryLevel hypothesized_level = MasteryLevel::Un;
  std::map<std::string, double> expected_activations;
};

/// Observed minus expected per template, sign-flipped for mastery-negative
/// templates, so a positive value always means "stronger than hypothesised".
struct MismatchSignal {
  std::map<std::string, double> per_feature;
  double aggregate = 0.0;
};

struct LevelSignal {
  MismatchSignal mismatch;
  double effort = 0.0;
};

using LevelSignals = std::map<MasteryLevel, LevelSignal>;

struct ValidationConfig {
  double epsilon = 0.05;
  int max_iters = 3;
  double eta = 0.5;

  /// Throws ConfigError naming the offending key.
  void check() const;
};

struct KcDiagnosis {
  KnowledgeComponent kc;
  FuzzyMastery membership = FuzzyMastery::uniform();
  int iterations_used = 0;  // 0 only when validation was skipped
  bool stable = false;
  std::vector<EvidenceSpan> evidence;
};

/// Final cognitive context of a turn, keyed (and therefore ordered) by KC id.
using CognitiveContext = std::map<std::string, KcDiagnosis>;

struct ValidationResult {
  FuzzyMastery membership = FuzzyMastery::uniform();
  int iterations_used = 0;
  bool stable = false;
  std::vector<ValidationIteration> events;
};

/// Plain-text summary of a context for prompts: one line per KC with its
/// leading level and memberships.
std::string describe(const CognitiveContext& context);

/// mu_l proportional to exp(-d_l), d_l the mean absolute difference between
/// the observed activations and the level-l profile. No evidence at all
/// (every activation 0) yields the uniform vector.
FuzzyMastery init_membership(const DiagnosticEncoding& z, const TemplateSet& templates);

/// Mastery-positive templates expect level_score(level); mastery-negative
/// templates expect 1 - level_score(level).
SimulatedProfile simulate_counterfactual(const KnowledgeComponent& kc, MasteryLevel level, const TemplateSet& templates);

/// Throws KeySetMismatch listing template ids present on one side only.
MismatchSignal diff_profiles(const DiagnosticEncoding& observed, const SimulatedProfile& sim,
                             const TemplateSet& templates);

/// 1-D earth mover's distance between two histograms over the equidistant
/// level positions 0, 1/3, 2/3, 1.
double emd_1d(const std::array<double, 4>& a, const std::array<double, 4>& b);

/// Distance from `mu` to the one-hot vector at `level`.
double counterfactual_effort(const FuzzyMastery& mu, MasteryLevel level);

/// mu'_l proportional to mu_l * exp(-eta * |aggregate mismatch at l|).
/// `signals` must hold all four levels.
FuzzyMastery refine_membership(const FuzzyMastery& mu, const LevelSignals& signals, double eta = 0.5);

/// All four counterfactual comparisons of `observed` against `mu`.
LevelSignals analyse(const DiagnosticEncoding& observed, const FuzzyMastery& mu, const TemplateSet& templates);

/// Runs the validation loop for one encoding. Each iteration makes one
/// gateway call that re-grounds the observed activations, then compares
/// them to all four counterfactual profiles and refines. Stops once the
/// max-norm change drops below epsilon or after max_iters iterations.
/// `prior` (carried from an earlier turn) multiplies the initial membership.
ValidationResult validate(const DiagnosticEncoding& z, const TemplateSet& templates, const ValidationConfig& config,
                          const gateway::StageContext& ctx, const std::optional<FuzzyMastery>& prior = std::nullopt);

/// Initial membership only, no gateway calls; used when validation is
/// ablated. Emits a single ungrounded record so the trace stays explicit.
ValidationResult initialize_only(const DiagnosticEncoding& z, const TemplateSet& templates,
                                 const std::optional<FuzzyMastery>& prior = std::nullopt);

}  // namespace tutorws::cognitive

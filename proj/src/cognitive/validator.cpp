#include "tutorws/cognitive/validator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tutorws/core/canonical_json.hpp"
#include "tutorws/core/errors.hpp"
#include "tutorws/parser/evidence_parser.hpp"

namespace tutorws::cognitive {

namespace {

constexpr std::array<double, 4> kPositions{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};

std::array<double, 4> level_array(const LevelSignals& signals, double LevelSignal::*member) {
  std::array<double, 4> out{};
  for (auto level : kAllLevels) out[static_cast<std::size_t>(level)] = signals.at(level).*member;
  return out;
}

std::array<double, 4> aggregates(const LevelSignals& signals) {
  std::array<double, 4> out{};
  for (auto level : kAllLevels) out[static_cast<std::size_t>(level)] = signals.at(level).mismatch.aggregate;
  return out;
}

FuzzyMastery combine_with_prior(const FuzzyMastery& init, const std::optional<FuzzyMastery>& prior) {
  if (!prior) return init;
  std::array<double, 4> w{};
  for (std::size_t i = 0; i < 4; ++i) w[i] = init.values()[i] * prior->values()[i];
  return FuzzyMastery::from_weights(w);
}

std::string describe_hypotheses(const KnowledgeComponent& kc, const TemplateSet& templates) {
  std::ostringstream out;
  for (auto level : kAllLevels) {
    const auto profile = simulate_counterfactual(kc, level, templates);
    out << "- Assume the learner is at level " << to_string(level) << ": ";
    bool first = true;
    for (const auto& t : templates) {
      if (!first) out << ", ";
      first = false;
      out << t.id << "=" << canonical::fixed6(profile.expected_activations.at(t.id));
    }
    out << "\n";
  }
  return out.str();
}

std::string describe_membership(const FuzzyMastery& mu) {
  std::ostringstream out;
  for (auto level : kAllLevels) out << to_string(level) << "=" << canonical::fixed6(mu[level]) << " ";
  return out.str();
}

std::string describe_evidence(const DiagnosticEncoding& z) {
  std::ostringstream out;
  for (const auto& s : z.evidence) out << "- \"" << s.excerpt << "\"\n";
  return out.str();
}

std::string describe_templates(const TemplateSet& templates) {
  std::ostringstream out;
  for (const auto& t : templates) out << "- " << t.id << ": " << t.description << "\n";
  return out.str();
}

}  // namespace

std::string describe(const CognitiveContext& context) {
  std::ostringstream out;
  for (const auto& [id, d] : context) {
    out << "- " << (d.kc.label.empty() ? id : d.kc.label) << " (" << id << "): most likely "
        << to_string(d.membership.argmax()) << "; memberships " << describe_membership(d.membership)
        << (d.stable ? "(stable)" : "(not stable)") << "\n";
  }
  return out.str();
}

void ValidationConfig::check() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be > 0");
  if (max_iters < 1) throw ConfigError("max_validation_iters", "must be >= 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta", "must be a finite value > 0");
}

FuzzyMastery init_membership(const DiagnosticEncoding& z, const TemplateSet& templates) {
  bool any_evidence = false;
  for (const auto& [_, v] : z.activations) any_evidence = any_evidence || v != 0.0;
  if (!any_evidence) return FuzzyMastery::uniform();

  std::array<double, 4> weights{};
  for (auto level : kAllLevels) {
    const auto profile = simulate_counterfactual(z.kc, level, templates);
    double d = 0.0;
    for (const auto& t : templates) d += std::abs(z.activations.at(t.id) - profile.expected_activations.at(t.id));
    d /= static_cast<double>(templates.size());
    weights[static_cast<std::size_t>(level)] = std::exp(-d);
  }
  return FuzzyMastery::from_weights(weights);
}

SimulatedProfile simulate_counterfactual(const KnowledgeComponent&, MasteryLevel level, const TemplateSet& templates) {
  if (templates.empty()) throw std::invalid_argument("feature template set is empty");
  SimulatedProfile p;
  p.hypothesized_level = level;
  const double score = level_score(level);
  for (const auto& t : templates) {
    p.expected_activations[t.id] = t.polarity_hint == PolarityHint::mastery_positive ? score : 1.0 - score;
  }
  return p;
}

MismatchSignal diff_profiles(const DiagnosticEncoding& observed, const SimulatedProfile& sim,
                             const TemplateSet& templates) {
  std::vector<std::string> missing;
  for (const auto& [k, _] : observed.activations) {
    if (!sim.expected_activations.contains(k)) missing.push_back(k);
  }
  for (const auto& [k, _] : sim.expected_activations) {
    if (!observed.activations.contains(k)) missing.push_back(k);
  }
  if (!missing.empty()) throw KeySetMismatch(std::move(missing));

  std::map<std::string, PolarityHint> hints;
  for (const auto& t : templates) hints[t.id] = t.polarity_hint;

  MismatchSignal out;
  double sum = 0.0;
  for (const auto& [id, obs] : observed.activations) {
    const double expected = sim.expected_activations.at(id);
    const auto hint = hints.find(id);
    if (hint == hints.end()) throw UnknownTemplateId(id);
    const double v = hint->second == PolarityHint::mastery_positive ? obs - expected : expected - obs;
    out.per_feature[id] = v;
    sum += v;
  }
  out.aggregate = out.per_feature.empty() ? 0.0 : sum / static_cast<double>(out.per_feature.size());
  return out;
}

double emd_1d(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double cdf_gap = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < 4; ++i) {
    cdf_gap += a[i] - b[i];
    total += std::abs(cdf_gap) * (kPositions[i + 1] - kPositions[i]);
  }
  return total;
}

double counterfactual_effort(const FuzzyMastery& mu, MasteryLevel level) {
  return emd_1d(mu.values(), FuzzyMastery::one_hot(level).values());
}

FuzzyMastery refine_membership(const FuzzyMastery& mu, const LevelSignals& signals, double eta) {
  std::array<double, 4> w{};
  for (auto level : kAllLevels) {
    auto it = signals.find(level);
    if (it == signals.end()) throw std::invalid_argument("refine_membership needs a signal for every level");
    w[static_cast<std::size_t>(level)] = mu[level] * std::exp(-eta * std::abs(it->second.mismatch.aggregate));
  }
  // exp() never reaches 0 for finite input, so an all-zero weight vector can
  // only come from a degenerate mu; from_weights maps it to uniform.
  return FuzzyMastery::from_weights(w);
}

LevelSignals analyse(const DiagnosticEncoding& observed, const FuzzyMastery& mu, const TemplateSet& templates) {
  LevelSignals signals;
  for (auto level : kAllLevels) {
    const auto profile = simulate_counterfactual(observed.kc, level, templates);
    signals[level] = LevelSignal{diff_profiles(observed, profile, templates), counterfactual_effort(mu, level)};
  }
  return signals;
}

ValidationResult validate(const DiagnosticEncoding& z, const TemplateSet& templates, const ValidationConfig& config,
                          const gateway::StageContext& ctx, const std::optional<FuzzyMastery>& prior) {
  config.check();
  ValidationResult result;
  FuzzyMastery mu = combine_with_prior(init_membership(z, templates), prior);
  const std::string hypotheses = describe_hypotheses(z.kc, templates);

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const auto response = ctx.call(gateway::Stage::validate, "validate", "validate",
                                   {{"kc_id", z.kc.id},
                                    {"kc_label", z.kc.label},
                                    {"evidence", describe_evidence(z)},
                                    {"membership", describe_membership(mu)},
                                    {"hypotheses", hypotheses},
                                    {"templates", describe_templates(templates)}},
                                   z.kc.id);
    const auto grounded = parser::encode_diagnostic(z.kc, z.evidence, templates, response.payload.at("activations"));
    const auto signals = analyse(grounded, mu, templates);
    const auto next = refine_membership(mu, signals, config.eta);
    const double change = next.max_abs_difference(mu);

    ValidationIteration ev;
    ev.kc_id = z.kc.id;
    ev.iteration = static_cast<std::uint32_t>(iter);
    ev.grounded = true;
    ev.membership_before = mu.values();
    ev.membership_after = next.values();
    ev.mismatch = aggregates(signals);
    ev.effort = level_array(signals, &LevelSignal::effort);
    ev.max_change = change;
    result.events.push_back(std::move(ev));

    mu = next;
    result.iterations_used = iter;
    if (change < config.epsilon) {
      result.stable = true;
      break;
    }
  }
  result.membership = mu;
  return result;
}

ValidationResult initialize_only(const DiagnosticEncoding& z, const TemplateSet& templates,
                                 const std::optional<FuzzyMastery>& prior) {
  ValidationResult result;
  result.membership = combine_with_prior(init_membership(z, templates), prior);
  result.iterations_used = 0;
  result.stable = false;
  const auto signals = analyse(z, result.membership, templates);

  ValidationIteration ev;
  ev.kc_id = z.kc.id;
  ev.iteration = 0;
  ev.grounded = false;
  ev.membership_before = result.membership.values();
  ev.membership_after = result.membership.values();
  ev.mismatch = aggregates(signals);
  ev.effort = level_array(signals, &LevelSignal::effort);
  ev.max_change = 0.0;
  result.events.push_back(std::move(ev));
  return result;
}

}  // namespace tutorws::cognitive

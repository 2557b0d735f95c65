#pragma once

#include <cstddef>
#include <vector>

#include "tutorws/core/errors.hpp"

namespace tutorws::eval {

/// A statistic that is undefined for the given input (zero variance, too
/// few observations...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

struct WilcoxonResult {
  double statistic = 0.0;  // W+, sum of mid-ranks of the positive differences
  double p_value = 1.0;    // two-sided
  std::size_t n = 0;       // differences left after dropping zeros
  bool exact = false;
  bool degenerate = false;  // every difference was zero
};

/// Two-sided signed-rank test. Zero differences are dropped and tied
/// magnitudes get mid-ranks. Up to 12 non-zero differences the p-value is
/// exact over all sign patterns; beyond that a tie-corrected normal
/// approximation (no continuity correction) is used.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& differences);

inline constexpr std::size_t kWilcoxonExactLimit = 12;

/// (#{a > b} - #{a < b}) / (|A| |B|) over all cross pairs.
double cliffs_delta(const std::vector<double>& a, const std::vector<double>& b);

/// Rows are items, columns are raters. Population variances.
double cronbach_alpha(const std::vector<std::vector<double>>& ratings);

/// Two-way random effects, absolute agreement, single rater. Rows are
/// targets, columns are raters.
double icc_2_1(const std::vector<std::vector<double>>& ratings);

/// Pearson correlation of mid-ranks.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

/// Mid-ranks (1-based, ties share their average rank).
std::vector<double> mid_ranks(const std::vector<double>& values);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tutorws::eval

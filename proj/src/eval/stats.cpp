#include "tutorws/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace tutorws::eval {

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double population_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

void check_matrix(const std::vector<std::vector<double>>& m, const char* what) {
  if (m.size() < 2) throw std::invalid_argument(std::string(what) + " needs at least 2 rows");
  const auto k = m.front().size();
  if (k < 2) throw std::invalid_argument(std::string(what) + " needs at least 2 raters");
  for (const auto& row : m) {
    if (row.size() != k) throw std::invalid_argument(std::string(what) + ": ragged ratings matrix");
  }
}

}  // namespace

std::vector<double> mid_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson needs two samples of equal length >= 2");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInput("correlation undefined: a sample has zero variance");
  return sab / std::sqrt(saa * sbb);
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& differences) {
  std::vector<double> d;
  for (double x : differences) {
    if (x != 0.0) d.push_back(x);
  }
  WilcoxonResult r;
  r.n = d.size();
  if (d.empty()) {
    r.degenerate = true;
    return r;
  }

  std::vector<double> magnitude(d.size());
  std::transform(d.begin(), d.end(), magnitude.begin(), [](double x) { return std::abs(x); });
  const auto ranks = mid_ranks(magnitude);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) r.statistic += ranks[i];
  }
  const double n = static_cast<double>(d.size());
  const double expected = n * (n + 1) / 4.0;

  if (d.size() <= kWilcoxonExactLimit) {
    // Mid-ranks are multiples of 1/2, so doubled ranks are integers and the
    // null distribution of 2 W+ can be built by counting subsets.
    std::vector<int> doubled(ranks.size());
    int total = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      total += doubled[i];
    }
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    for (int w : doubled) {
      for (int s = total; s >= w; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - w)];
    }
    const int observed = static_cast<int>(std::lround(2.0 * r.statistic));
    const int gap = std::abs(2 * observed - total);  // |2W - E[2W]| scaled by 2
    double extreme = 0.0;
    for (int s = 0; s <= total; ++s) {
      if (std::abs(2 * s - total) >= gap) extreme += ways[static_cast<std::size_t>(s)];
    }
    r.p_value = std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(d.size())));
    r.exact = true;
    return r;
  }

  std::map<double, int> ties;
  for (double m : magnitude) ++ties[m];
  double tie_term = 0.0;
  for (const auto& [_, t] : ties) tie_term += static_cast<double>(t) * t * t - t;
  const double variance = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
  if (variance <= 0.0) throw DegenerateInput("signed-rank variance is zero");
  const double z = (r.statistic - expected) / std::sqrt(variance);
  r.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
  r.exact = false;
  return r;
}

double cliffs_delta(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("cliffs_delta needs two non-empty samples");
  std::vector<double> sorted_b(b);
  std::sort(sorted_b.begin(), sorted_b.end());
  double dominance = 0.0;
  for (double x : a) {
    const auto below = std::lower_bound(sorted_b.begin(), sorted_b.end(), x) - sorted_b.begin();
    const auto above = sorted_b.end() - std::upper_bound(sorted_b.begin(), sorted_b.end(), x);
    dominance += static_cast<double>(below) - static_cast<double>(above);
  }
  return dominance / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double cronbach_alpha(const std::vector<std::vector<double>>& ratings) {
  check_matrix(ratings, "cronbach_alpha");
  const auto k = ratings.front().size();
  double rater_variances = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> column;
    for (const auto& row : ratings) column.push_back(row[j]);
    rater_variances += population_variance(column);
  }
  std::vector<double> sums;
  for (const auto& row : ratings) sums.push_back(std::accumulate(row.begin(), row.end(), 0.0));
  const double total = population_variance(sums);
  if (total == 0.0) throw DegenerateInput("cronbach_alpha undefined: total variance is zero");
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (1.0 - rater_variances / total);
}

double icc_2_1(const std::vector<std::vector<double>>& ratings) {
  check_matrix(ratings, "icc_2_1");
  const double n = static_cast<double>(ratings.size());
  const auto k_size = ratings.front().size();
  const double k = static_cast<double>(k_size);

  double grand = 0.0;
  std::vector<double> row_means, col_means(k_size, 0.0);
  for (const auto& row : ratings) {
    row_means.push_back(mean(row));
    for (std::size_t j = 0; j < k_size; ++j) col_means[j] += row[j] / n;
    grand += std::accumulate(row.begin(), row.end(), 0.0);
  }
  grand /= n * k;

  double ss_rows = 0.0, ss_cols = 0.0, ss_total = 0.0;
  for (double m : row_means) ss_rows += k * (m - grand) * (m - grand);
  for (double m : col_means) ss_cols += n * (m - grand) * (m - grand);
  for (const auto& row : ratings) {
    for (double x : row) ss_total += (x - grand) * (x - grand);
  }
  const double ss_error = ss_total - ss_rows - ss_cols;

  const double msr = ss_rows / (n - 1.0);
  const double msc = ss_cols / (k - 1.0);
  const double mse = ss_error / ((n - 1.0) * (k - 1.0));
  const double denom = msr + (k - 1.0) * mse + k * (msc - mse) / n;
  if (denom == 0.0) throw DegenerateInput("icc_2_1 undefined: all mean squares are zero");
  return (msr - mse) / denom;
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman_rho needs equal lengths >= 2");
  return pearson(mid_ranks(a), mid_ranks(b));
}

}  // namespace tutorws::eval

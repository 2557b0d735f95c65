#pragma once

// Brute-force reference implementations, written without reference to the
// library code they check.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace tutorws::testing::oracle {

/// Earth mover's distance by moving mass bin to bin over positions 0, 1/3,
/// 2/3, 1.
inline double emd(std::array<double, 4> a, const std::array<double, 4>& b) {
  double cost = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double surplus = a[i] - b[i];
    a[i] -= surplus;
    a[i + 1] += surplus;
    cost += std::abs(surplus) / 3.0;
  }
  return cost;
}

/// Mid-ranks by counting, 1-based.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double below = 0, equal = 0;
    for (double x : v) {
      below += x < v[i];
      equal += x == v[i];
    }
    r[i] = below + (equal + 1) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

inline double cliffs(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (double x : a) {
    for (double y : b) s += (x > y) - (x < y);
  }
  return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

struct SignedRank {
  double w_plus = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Two-sided signed-rank p by enumerating all 2^n sign patterns of the
/// non-zero differences.
inline SignedRank signed_rank(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs) {
    if (x != 0.0) d.push_back(x);
  }
  SignedRank out;
  out.n = d.size();
  std::vector<double> mags;
  for (double x : d) mags.push_back(std::abs(x));
  const auto rank = ranks(mags);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) out.w_plus += rank[i];
  }
  const double centre = out.n * (out.n + 1) / 4.0;
  std::size_t extreme = 0;
  const std::size_t patterns = std::size_t{1} << out.n;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < out.n; ++i) {
      if (mask & (std::size_t{1} << i)) w += rank[i];
    }
    if (std::abs(w - centre) >= std::abs(out.w_plus - centre) - 1e-9) ++extreme;
  }
  out.p_value = static_cast<double>(extreme) / static_cast<double>(patterns);
  return out;
}

/// Cronbach's alpha from the mean inter-rater covariance c and mean rater
/// variance v: k c / (v + (k - 1) c). Population moments.
inline double alpha(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size(), k = m.front().size();
  std::vector<double> mean(k, 0.0);
  for (const auto& row : m) {
    for (std::size_t j = 0; j < k; ++j) mean[j] += row[j] / n;
  }
  auto cov = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (const auto& row : m) s += (row[a] - mean[a]) * (row[b] - mean[b]);
    return s / n;
  };
  double var_sum = 0, cov_sum = 0;
  for (std::size_t a = 0; a < k; ++a) {
    var_sum += cov(a, a);
    for (std::size_t b = 0; b < k; ++b) {
      if (a != b) cov_sum += cov(a, b);
    }
  }
  const double v = var_sum / k;
  const double c = cov_sum / (k * (k - 1.0));
  return k * c / (v + (k - 1.0) * c);
}

/// ICC(2,1) from the two-way ANOVA table, residuals computed cell by cell.
inline double icc21(const std::vector<std::vector<double>>& m) {
  const double n = static_cast<double>(m.size());
  const double k = static_cast<double>(m.front().size());
  std::vector<double> row(m.size(), 0.0), col(m.front().size(), 0.0);
  double grand = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) {
      row[i] += m[i][j] / k;
      col[j] += m[i][j] / n;
      grand += m[i][j] / (n * k);
    }
  }
  double bms = 0, jms = 0, ems = 0;
  for (double r : row) bms += k * (r - grand) * (r - grand);
  for (double c : col) jms += n * (c - grand) * (c - grand);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) {
      const double e = m[i][j] - row[i] - col[j] + grand;
      ems += e * e;
    }
  }
  bms /= n - 1;
  jms /= k - 1;
  ems /= (n - 1) * (k - 1);
  return (bms - ems) / (bms + (k - 1) * ems + k * (jms - ems) / n);
}

}  // namespace tutorws::testing::oracle

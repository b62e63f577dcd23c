#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace sdp::stats {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Lentz continued fraction for the incomplete beta (Numerical Recipes form).
// Valid when x < (a + 1) / (a + b + 2).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw_numeric("incomplete beta continued fraction failed to converge");
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

namespace detail {

double log_reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return kNegInf;
  if (x >= 1.0) return 0.0;
  const double log_front =
      a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return log_front - std::log(a) + std::log(betacf(a, b, x));
  }
  // Symmetric branch: I_x(a,b) = 1 - I_{1-x}(b,a); safe here because the
  // complement is not in the extreme tail.
  const double log_comp = log_front - std::log(b) +
                          std::log(betacf(b, a, 1.0 - x));
  return std::log1p(-std::exp(log_comp));
}

}  // namespace detail

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw_usage("pearson_r: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw_usage("pearson_r: need at least 3 samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw_numeric("pearson_r: zero variance input");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

PValue pearson_p(double r, std::size_t n) {
  if (n < 3) throw_usage("pearson_p: need n >= 3");
  if (std::fabs(r) > 1.0) throw_usage("pearson_p: |r| must be <= 1");
  PValue out;
  if (r == 0.0) {
    out.p = 1.0;
    out.log10_p = 0.0;
    return out;
  }
  const double df = static_cast<double>(n - 2);
  if (std::fabs(r) == 1.0) {
    out.p = 0.0;
    out.log10_p = kNegInf;
    out.exact_fit = true;
    return out;
  }
  const double t2 = r * r * df / (1.0 - r * r);
  // Two-sided tail: P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2).
  const double x = df / (df + t2);
  const double log_p = detail::log_reg_inc_beta(df / 2.0, 0.5, x);
  out.log10_p = log_p / std::log(10.0);
  out.p = std::exp(log_p);
  return out;
}

CorrelationResult correlate(std::span<const double> x,
                            std::span<const double> y) {
  CorrelationResult res;
  res.n = x.size();
  res.r = pearson_r(x, y);
  res.degrees_of_freedom = static_cast<double>(res.n - 2);
  if (std::fabs(res.r) < 1.0) {
    res.t_statistic =
        res.r * std::sqrt(res.degrees_of_freedom / (1.0 - res.r * res.r));
  } else {
    res.t_statistic = res.r > 0 ? std::numeric_limits<double>::infinity()
                                : kNegInf;
  }
  PValue pv = pearson_p(res.r, res.n);
  res.p_two_sided = pv.p;
  res.log10_p = pv.log10_p;
  res.exact_fit = pv.exact_fit;
  return res;
}

CorrelationMatrix corr_matrix(
    const Table& table, const std::vector<std::string>& numeric_columns) {
  if (numeric_columns.size() < 2)
    throw_usage("corr_matrix: need at least 2 numeric columns");
  const std::size_t k = numeric_columns.size();
  std::vector<std::vector<double>> cols;
  cols.reserve(k);
  for (const auto& name : numeric_columns) {
    auto v = table.numeric_column(name);
    const double mn = *std::min_element(v.begin(), v.end());
    const double mx = *std::max_element(v.begin(), v.end());
    if (!(mx > mn)) throw_numeric("corr_matrix: constant column \"" + name +
                                  "\"");
    cols.push_back(std::move(v));
  }
  CorrelationMatrix m;
  m.columns = numeric_columns;
  m.r.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double r = pearson_r(cols[i], cols[j]);
      m.r[i][j] = r;
      m.r[j][i] = r;
    }
  }
  return m;
}

std::vector<std::string> prune_correlated(const CorrelationMatrix& matrix,
                                          double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw_usage("prune_correlated: threshold must be in (0,1)");
  const std::size_t k = matrix.columns.size();
  std::vector<bool> retained(k, true);
  std::vector<std::string> dropped;
  for (std::size_t i = 0; i < k; ++i) {
    if (!retained[i]) continue;
    for (std::size_t j = i + 1; j < k; ++j) {
      if (!retained[j]) continue;
      if (std::fabs(matrix.r[i][j]) > threshold) {
        retained[j] = false;
        dropped.push_back(matrix.columns[j]);
      }
    }
  }
  return dropped;
}

nlohmann::json CorrelationResult::to_json() const {
  return {{"r", r},
          {"n", n},
          {"t_statistic", t_statistic},
          {"degrees_of_freedom", degrees_of_freedom},
          {"p_two_sided", p_two_sided},
          {"log10_p", std::isfinite(log10_p) ? nlohmann::json(log10_p)
                                             : nlohmann::json("-inf")},
          {"exact_fit", exact_fit}};
}

nlohmann::json CorrelationMatrix::to_json() const {
  return {{"columns", columns}, {"r", r}};
}

}  // namespace sdp::stats

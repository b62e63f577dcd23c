#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/error.hpp"
#include "core/generator.hpp"
#include "core/stats.hpp"
#include "core/table.hpp"
#include "helpers.hpp"

using namespace sdp;
using testsupport::quadrature_two_sided_p;
using testsupport::t_from_r;

TEST_CASE("pearson_r: self-correlation is exactly 1") {
  std::vector<double> x = {1, 2, 3, 4};
  CHECK(stats::pearson_r(x, x) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("pearson_r: negation flips the sign") {
  std::vector<double> x = {1, 2, 3, 4};
  std::vector<double> y = {-1, -2, -3, -4};
  CHECK(stats::pearson_r(x, y) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("pearson_r: hand-computed fixture") {
  std::vector<double> x = {1, 2, 3, 4};
  std::vector<double> y = {2, 4, 6, 9};
  // cov = 11.5, sx^2 = 5, sy^2 = 26.75 -> r = 11.5/sqrt(133.75)
  CHECK(stats::pearson_r(x, y) ==
        doctest::Approx(11.5 / std::sqrt(133.75)).epsilon(1e-12));
}

TEST_CASE("pearson_r: zero variance is a degenerate-input error") {
  std::vector<double> x = {1, 1, 1, 1};
  std::vector<double> y = {1, 2, 3, 4};
  CHECK_THROWS_AS(stats::pearson_r(x, y), Error);
}

TEST_CASE("pearson_r: length mismatch and n < 3 are usage errors") {
  std::vector<double> x = {1, 2, 3};
  std::vector<double> y = {1, 2};
  CHECK_THROWS_AS(stats::pearson_r(x, y), Error);
  std::vector<double> a = {1, 2}, b = {2, 1};
  CHECK_THROWS_AS(stats::pearson_r(a, b), Error);
}

TEST_CASE("pearson_r: scale and shift invariance to 1e-12") {
  std::vector<double> x = {0.3, 1.7, 2.2, 5.5, 4.1, 0.9};
  std::vector<double> y = {1.1, 0.4, 3.3, 2.8, 5.0, 2.2};
  const double r = stats::pearson_r(x, y);
  std::vector<double> xs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = 3.5 * x[i] - 11.0;
  CHECK(stats::pearson_r(xs, y) == doctest::Approx(r).epsilon(1e-12));
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = -2.0 * x[i] + 4.0;
  CHECK(stats::pearson_r(xs, y) == doctest::Approx(-r).epsilon(1e-12));
}

TEST_CASE("pearson_p: r = 0 gives p = 1 for any n") {
  for (std::size_t n : {3u, 12u, 500u}) {
    auto pv = stats::pearson_p(0.0, n);
    CHECK(pv.p == 1.0);
    CHECK(pv.log10_p == 0.0);
  }
}

TEST_CASE("pearson_p: |r| = 1 is the exact-fit sentinel") {
  auto pv = stats::pearson_p(1.0, 20);
  CHECK(pv.p == 0.0);
  CHECK(pv.exact_fit);
  CHECK(std::isinf(pv.log10_p));
  CHECK(pv.log10_p < 0);
}

TEST_CASE("pearson_p: matches a quadrature oracle of the t tail") {
  const double rs[] = {0.1, 0.5, 0.9};
  const std::size_t ns[] = {5, 12, 30, 200};
  for (double r : rs) {
    for (std::size_t n : ns) {
      auto pv = stats::pearson_p(r, n);
      const double oracle =
          quadrature_two_sided_p(t_from_r(r, n), static_cast<double>(n - 2));
      CHECK(pv.p == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("pearson_p: monotone in |r| at fixed n and in n at fixed r") {
  double prev = 1.1;
  for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double p = stats::pearson_p(r, 40).p;
    CHECK(p < prev);
    prev = p;
  }
  prev = 1.1;
  for (std::size_t n : {5u, 10u, 50u, 200u}) {
    const double p = stats::pearson_p(0.4, n).p;
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("pearson_p: log10_p tracks log10(p) when p is representable") {
  for (double r : {0.05, 0.3, 0.6, 0.85}) {
    for (std::size_t n : {6u, 25u, 120u}) {
      auto pv = stats::pearson_p(r, n);
      if (pv.p > 1e-300)
        CHECK(pv.log10_p == doctest::Approx(std::log10(pv.p)).epsilon(1e-9));
    }
  }
}

TEST_CASE("pearson_p: extreme tail keeps a finite log10_p") {
  // Printed headline correlation: p ~ 4.22e-264, log10 ~ -263.37.
  auto pv = stats::pearson_p(0.7863112869053916, 1254);
  CHECK(std::isfinite(pv.log10_p));
  CHECK(std::abs(pv.log10_p - (-263.37)) < 2.0);
  CHECK(pv.log10_p > -266);
  CHECK(pv.log10_p < -261);
  // Companion value: p ~ 1.86e-26.
  auto pv2 = stats::pearson_p(0.29419230162036336, 1254);
  CHECK(pv2.log10_p > -28);
  CHECK(pv2.log10_p < -24);
}

TEST_CASE("correlate: sign of t matches sign of r and df = n - 2") {
  std::vector<double> x = {1, 2, 3, 4, 5, 6};
  std::vector<double> y = {9, 7, 6, 5, 3, 1};
  auto res = stats::correlate(x, y);
  CHECK(res.r < 0);
  CHECK(res.t_statistic < 0);
  CHECK(res.degrees_of_freedom == 4);
  CHECK(res.n == 6);
  CHECK(res.p_two_sided >= 0);
  CHECK(res.p_two_sided <= 1);
  CHECK(res.log10_p <= 0);
}

TEST_CASE("corr_matrix: identical columns give off-diagonal 1") {
  Table t({"a", "b"});
  for (int i = 0; i < 5; ++i) {
    const std::string v = std::to_string(i * i + 1);
    t.add_row({Cell(v), Cell(v)}, i);
  }
  auto m = stats::corr_matrix(t, {"a", "b"});
  CHECK(m.r[0][1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.r[0][0] == 1.0);
  CHECK(m.r[1][1] == 1.0);
}

TEST_CASE("corr_matrix: negated column gives off-diagonal -1") {
  Table t({"a", "b"});
  for (int i = 0; i < 5; ++i)
    t.add_row({Cell(std::to_string(i + 1)), Cell(std::to_string(-(i + 1)))},
              i);
  auto m = stats::corr_matrix(t, {"a", "b"});
  CHECK(m.r[0][1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("corr_matrix: symmetric with unit diagonal") {
  harness::GeneratorConfig cfg;
  cfg.n_records = 400;
  cfg.seed = 17;
  auto data = harness::generate_dataset(cfg);
  const std::vector<std::string> cols = {
      "Functional Size", "Normalised Work Effort", "Defect Density",
      "Summarised Work Effort", "Adjusted Function Points"};
  auto m = stats::corr_matrix(data.table, cols);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    CHECK(m.r[i][i] == 1.0);
    for (std::size_t j = 0; j < cols.size(); ++j)
      CHECK(std::abs(m.r[i][j] - m.r[j][i]) < 1e-12);
  }
}

TEST_CASE("corr_matrix: constant column error names the column") {
  Table t({"a", "flat"});
  for (int i = 0; i < 5; ++i)
    t.add_row({Cell(std::to_string(i)), Cell("7")}, i);
  CHECK_THROWS_WITH_AS(stats::corr_matrix(t, {"a", "flat"}),
                       doctest::Contains("flat"), Error);
}

TEST_CASE("corr_matrix: planted correlations recovered at n = 5000") {
  harness::GeneratorConfig cfg;
  cfg.n_records = 5000;
  cfg.seed = 23;
  auto data = harness::generate_dataset(cfg);
  const std::vector<std::string> cols = {
      "Functional Size", "Normalised Work Effort", "Defect Density",
      "Summarised Work Effort", "Adjusted Function Points",
      "Total Defects Delivered"};
  auto m = stats::corr_matrix(data.table, cols);
  const auto& s = data.sidecar;
  CHECK(std::abs(m.r[0][1] - s.analytic_r_size_effort) < 0.08);
  CHECK(std::abs(m.r[0][4] - s.analytic_r_size_adjusted) < 0.05);
  CHECK(std::abs(m.r[1][3] - s.analytic_r_effort_summarised) < 0.05);
  // The defect count is a product of two log-normals, so its empirical
  // linear-scale correlation converges slowly; allow a wider band.
  CHECK(std::abs(m.r[2][5] - s.analytic_r_density_defects) < 0.15);
  CHECK(std::abs(m.r[0][5] - s.analytic_r_size_defects) < 0.15);
}

TEST_CASE("prune_correlated: nothing above threshold drops nothing") {
  stats::CorrelationMatrix m;
  m.columns = {"A", "B"};
  m.r = {{1.0, 0.3}, {0.3, 1.0}};
  CHECK(stats::prune_correlated(m, 0.70).empty());
}

TEST_CASE("prune_correlated: duplicate column drops the later one") {
  stats::CorrelationMatrix m;
  m.columns = {"A", "B", "C"};
  m.r = {{1.0, 1.0, 0.1}, {1.0, 1.0, 0.1}, {0.1, 0.1, 1.0}};
  auto dropped = stats::prune_correlated(m, 0.70);
  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0] == "B");
}

TEST_CASE("prune_correlated: |r| is compared, sign ignored") {
  stats::CorrelationMatrix m;
  m.columns = {"A", "B"};
  m.r = {{1.0, -0.95}, {-0.95, 1.0}};
  auto dropped = stats::prune_correlated(m, 0.70);
  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0] == "B");
}

TEST_CASE("prune_correlated: rerunning on the pruned matrix is a fixed point") {
  stats::CorrelationMatrix m;
  m.columns = {"A", "B", "C", "D"};
  m.r = {{1.0, 0.9, 0.2, 0.8},
         {0.9, 1.0, 0.1, 0.75},
         {0.2, 0.1, 1.0, 0.3},
         {0.8, 0.75, 0.3, 1.0}};
  auto dropped = stats::prune_correlated(m, 0.70);
  // Rebuild the matrix over survivors and prune again.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < m.columns.size(); ++i) {
    bool gone = false;
    for (const auto& d : dropped) gone = gone || d == m.columns[i];
    if (!gone) keep.push_back(i);
  }
  stats::CorrelationMatrix pruned;
  for (std::size_t i : keep) {
    pruned.columns.push_back(m.columns[i]);
    std::vector<double> row;
    for (std::size_t j : keep) row.push_back(m.r[i][j]);
    pruned.r.push_back(row);
  }
  CHECK(stats::prune_correlated(pruned, 0.70).empty());
}

TEST_CASE("prune_correlated: planted twin columns are both removed") {
  harness::GeneratorConfig cfg;
  cfg.n_records = 1000;
  cfg.seed = 31;
  auto data = harness::generate_dataset(cfg);
  const std::vector<std::string> order = {
      "Functional Size", "Normalised Work Effort", "Defect Density",
      "Summarised Work Effort", "Adjusted Function Points"};
  auto m = stats::corr_matrix(data.table, order);
  auto dropped = stats::prune_correlated(m, 0.70);
  REQUIRE(dropped.size() == 2);
  CHECK(((dropped[0] == "Summarised Work Effort" &&
          dropped[1] == "Adjusted Function Points") ||
         (dropped[0] == "Adjusted Function Points" &&
          dropped[1] == "Summarised Work Effort")));
}

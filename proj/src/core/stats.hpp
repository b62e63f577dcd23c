#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/table.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sdp::stats {

struct CorrelationResult {
  double r = 0;
  std::size_t n = 0;
  double t_statistic = 0;
  double degrees_of_freedom = 0;
  double p_two_sided = 1;
  double log10_p = 0;
  bool exact_fit = false;  // |r| == 1, p identically zero

  nlohmann::json to_json() const;
};

struct CorrelationMatrix {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> r;  // symmetric, unit diagonal

  nlohmann::json to_json() const;
};

// Product-moment coefficient. Degenerate-input error on zero variance,
// usage error on length mismatch or n < 3.
double pearson_r(std::span<const double> x, std::span<const double> y);

// Two-sided Student-t tail for the null r = 0, evaluated through the
// regularized incomplete beta in log space so extreme tails keep a finite
// log10_p.
struct PValue {
  double p = 1;
  double log10_p = 0;
  bool exact_fit = false;
};
PValue pearson_p(double r, std::size_t n);

CorrelationResult correlate(std::span<const double> x,
                            std::span<const double> y);

CorrelationMatrix corr_matrix(const Table& table,
                              const std::vector<std::string>& numeric_columns);

// Greedy scan in column order: for each pair (i, j), i < j, with |r| above
// the threshold and both still retained, drop column j. Returns the drop
// list in scan order.
std::vector<std::string> prune_correlated(const CorrelationMatrix& matrix,
                                          double threshold = 0.70);

namespace detail {
// log of the regularized incomplete beta I_x(a, b).
double log_reg_inc_beta(double a, double b, double x);
}  // namespace detail

}  // namespace sdp::stats

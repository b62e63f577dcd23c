#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/table.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sdp::harness {

// Synthetic stand-in for a cross-company project file. The target is planted
// as round(density * size / 1000 * (1 + eps)), eps uniform in +-noise, so
// defect density and functional size dominate by construction.
struct GeneratorConfig {
  std::size_t n_records = 1254;
  std::uint64_t seed = 7;
  double noise = 0.1;

  // Log-normal shape parameters.
  double size_log_mean = 6.5;
  double size_log_sd = 0.7;
  double density_log_mean = 2.5;
  double density_log_sd = 1.2;
  double effort_log_mean = 7.5;
  double effort_log_sd = 0.8;
  double effort_size_log_corr = 0.55;  // log-scale correlation with size
  double twin_log_sd = 0.15;  // noise of the two planted redundant columns

  // Planted defects, applied to disjoint row sets so cleaning counts are
  // exactly recoverable.
  std::size_t blank_targets = 0;
  std::size_t poor_quality_rows = 0;  // C/D in one of the rating columns
  std::map<std::string, double> missing_rates;  // column -> fraction

  std::string date_lo = "2010-01-01";
  std::string date_hi = "2021-12-31";

  std::map<std::string, std::vector<std::string>> vocabularies = {
      {"Industry Sector",
       {"Banking", "Communications", "Government", "Insurance", "Medical",
        "Manufacturing", "Service Industry"}},
      {"Development Type", {"Enhancement", "New Development", "Re-development"}},
      {"Primary Programming Language",
       {"JAVA", "C++", "C#", "COBOL", "PL/1", "SQL", "Natural"}},
      {"Count Approach", {"IFPUG 4+", "NESMA", "COSMIC", "FISMA", "MARK II"}},
      {"1st Language", {"JAVA", "C", "C#", "COBOL", "SQL", "ABAP"}},
  };

  nlohmann::json to_json() const;
};

// Planted ground truth emitted next to the CSV.
struct Sidecar {
  std::size_t n_records = 0;
  std::uint64_t seed = 0;
  std::size_t blank_targets = 0;
  std::size_t poor_quality_rows = 0;
  std::map<std::string, std::size_t> missing_cells;  // per column
  double analytic_r_density_defects = 0;
  double analytic_r_size_defects = 0;
  double analytic_r_size_effort = 0;
  double analytic_r_effort_summarised = 0;
  double analytic_r_size_adjusted = 0;

  nlohmann::json to_json() const;
  static Sidecar from_json(const nlohmann::json& j);
};

struct GeneratedData {
  Table table;
  Sidecar sidecar;
};

GeneratedData generate_dataset(const GeneratorConfig& config);

}  // namespace sdp::harness

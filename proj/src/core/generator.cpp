#include "core/generator.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace sdp::harness {
namespace {

// Pearson correlation of two jointly log-normal variables from the
// log-scale covariance structure.
double lognormal_r(double cov, double var_a, double var_b) {
  return (std::exp(cov) - 1.0) /
         std::sqrt((std::exp(var_a) - 1.0) * (std::exp(var_b) - 1.0));
}

std::string relative_size_bin(double size) {
  if (size < 10) return "XXS";
  if (size < 30) return "XS";
  if (size < 100) return "S";
  if (size < 300) return "M1";
  if (size < 1000) return "M2";
  if (size < 3000) return "L";
  return "XL";
}

const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
  return v[rng.next_index(v.size())];
}

}  // namespace

GeneratedData generate_dataset(const GeneratorConfig& config) {
  if (config.n_records < 1) throw_usage("generator: n_records must be >= 1");
  if (config.noise < 0 || config.noise >= 1)
    throw_usage("generator: noise must be in [0,1)");
  for (const auto& [col, rate] : config.missing_rates) {
    if (rate < 0 || rate > 1)
      throw_usage("generator: missing rate out of [0,1] for \"" + col + "\"");
  }

  const std::size_t n = config.n_records;
  const std::vector<std::string> columns = {
      "Project ID",
      "Industry Sector",
      "Development Type",
      "Primary Programming Language",
      "Count Approach",
      "Functional Size",
      "Relative Size",
      "Normalised Work Effort",
      "Summarised Work Effort",
      "Adjusted Function Points",
      "Defect Density",
      "1st Language",
      "Implementation Date",
      "Data Quality Rating",
      "UFP rating",
      "Total Defects Delivered",
  };

  Rng rng(config.seed);

  const long day_lo = dataset::days_from_iso(config.date_lo);
  const long day_hi = dataset::days_from_iso(config.date_hi);
  if (day_hi < day_lo) throw_usage("generator: date range is inverted");

  Table table(columns);
  for (std::size_t i = 0; i < n; ++i) {
    const double zs = rng.normal();
    const double zd = rng.normal();
    const double ze = rng.normal();
    const double rho = config.effort_size_log_corr;

    // Round to the emitted CSV precision up front so the file is exactly
    // self-consistent with the planted defect formula.
    const double size = std::round(
        std::exp(config.size_log_mean + config.size_log_sd * zs) * 100.0) /
        100.0;
    const double density = std::round(
        std::exp(config.density_log_mean + config.density_log_sd * zd) *
        10000.0) / 10000.0;
    const double effort = std::exp(
        config.effort_log_mean +
        config.effort_log_sd * (rho * zs + std::sqrt(1.0 - rho * rho) * ze));
    const double summarised =
        effort * std::exp(config.twin_log_sd * rng.normal());
    const double adjusted =
        size * std::exp(config.twin_log_sd * rng.normal());

    const double eps = rng.uniform(-config.noise, config.noise);
    const double defects =
        std::max(0.0, std::round(density * size / 1000.0 * (1.0 + eps)));

    const long day =
        day_lo + static_cast<long>(rng.next_index(
                     static_cast<std::size_t>(day_hi - day_lo + 1)));

    std::vector<Cell> row(columns.size());
    row[0] = "P" + std::to_string(10000 + i);
    row[1] = pick(config.vocabularies.at("Industry Sector"), rng);
    row[2] = pick(config.vocabularies.at("Development Type"), rng);
    row[3] = pick(config.vocabularies.at("Primary Programming Language"), rng);
    row[4] = pick(config.vocabularies.at("Count Approach"), rng);
    row[5] = csv::format_double(size);
    row[6] = relative_size_bin(size);
    row[7] = csv::format_double(std::round(effort * 100.0) / 100.0);
    row[8] = csv::format_double(std::round(summarised * 100.0) / 100.0);
    row[9] = csv::format_double(std::round(adjusted * 100.0) / 100.0);
    row[10] = csv::format_double(density);
    row[11] = pick(config.vocabularies.at("1st Language"), rng);
    row[12] = dataset::iso_from_days(day);
    row[13] = rng.next_double() < 0.5 ? "A" : "B";
    row[14] = rng.next_double() < 0.5 ? "A" : "B";
    row[15] = csv::format_double(defects);
    table.add_row(std::move(row), i);
  }

  // Plant defects on disjoint row sets so every cleaning count is exactly
  // recoverable from the sidecar.
  Sidecar sidecar;
  sidecar.n_records = n;
  sidecar.seed = config.seed;

  std::size_t needed = config.blank_targets + config.poor_quality_rows;
  std::map<std::string, std::size_t> missing_counts;
  for (const auto& [col, rate] : config.missing_rates) {
    if (!table.has_column(col))
      throw_usage("generator: missing rate for unknown column \"" + col +
                  "\"");
    const std::size_t count =
        static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
    missing_counts[col] = count;
    needed += count;
  }
  if (needed > n)
    throw_usage("generator: planted defects exceed the record count");

  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  rng.shuffle(pool);
  std::size_t cursor = 0;

  const std::size_t target_col = table.col_index("Total Defects Delivered");
  for (std::size_t k = 0; k < config.blank_targets; ++k)
    table.cell(pool[cursor++], target_col) = std::nullopt;
  sidecar.blank_targets = config.blank_targets;

  for (std::size_t k = 0; k < config.poor_quality_rows; ++k) {
    const std::size_t r = pool[cursor++];
    const std::size_t col =
        rng.next_double() < 0.5 ? table.col_index("Data Quality Rating")
                                : table.col_index("UFP rating");
    table.cell(r, col) = rng.next_double() < 0.5 ? "C" : "D";
  }
  sidecar.poor_quality_rows = config.poor_quality_rows;

  for (const auto& [col, count] : missing_counts) {
    const std::size_t ci = table.col_index(col);
    for (std::size_t k = 0; k < count; ++k)
      table.cell(pool[cursor++], ci) = std::nullopt;
    sidecar.missing_cells[col] = count;
  }

  const double vs = config.size_log_sd * config.size_log_sd;
  const double vd = config.density_log_sd * config.density_log_sd;
  const double ve = config.effort_log_sd * config.effort_log_sd;
  const double vt = config.twin_log_sd * config.twin_log_sd;
  sidecar.analytic_r_density_defects = lognormal_r(vd, vd, vd + vs);
  sidecar.analytic_r_size_defects = lognormal_r(vs, vs, vd + vs);
  sidecar.analytic_r_size_effort = lognormal_r(
      config.effort_size_log_corr * config.size_log_sd * config.effort_log_sd,
      vs, ve);
  sidecar.analytic_r_effort_summarised = lognormal_r(ve, ve, ve + vt);
  sidecar.analytic_r_size_adjusted = lognormal_r(vs, vs, vs + vt);

  return {std::move(table), std::move(sidecar)};
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"n_records", n_records},
          {"seed", seed},
          {"noise", noise},
          {"size_log_mean", size_log_mean},
          {"size_log_sd", size_log_sd},
          {"density_log_mean", density_log_mean},
          {"density_log_sd", density_log_sd},
          {"effort_log_mean", effort_log_mean},
          {"effort_log_sd", effort_log_sd},
          {"effort_size_log_corr", effort_size_log_corr},
          {"twin_log_sd", twin_log_sd},
          {"blank_targets", blank_targets},
          {"poor_quality_rows", poor_quality_rows},
          {"missing_rates", missing_rates},
          {"date_lo", date_lo},
          {"date_hi", date_hi}};
}

nlohmann::json Sidecar::to_json() const {
  return {{"n_records", n_records},
          {"seed", seed},
          {"blank_targets", blank_targets},
          {"poor_quality_rows", poor_quality_rows},
          {"missing_cells", missing_cells},
          {"analytic_r", {{"density_defects", analytic_r_density_defects},
                          {"size_defects", analytic_r_size_defects},
                          {"size_effort", analytic_r_size_effort},
                          {"effort_summarised", analytic_r_effort_summarised},
                          {"size_adjusted", analytic_r_size_adjusted}}}};
}

Sidecar Sidecar::from_json(const nlohmann::json& j) {
  Sidecar s;
  s.n_records = j.at("n_records").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.blank_targets = j.at("blank_targets").get<std::size_t>();
  s.poor_quality_rows = j.at("poor_quality_rows").get<std::size_t>();
  s.missing_cells =
      j.at("missing_cells").get<std::map<std::string, std::size_t>>();
  const auto& r = j.at("analytic_r");
  s.analytic_r_density_defects = r.at("density_defects").get<double>();
  s.analytic_r_size_defects = r.at("size_defects").get<double>();
  s.analytic_r_size_effort = r.at("size_effort").get<double>();
  s.analytic_r_effort_summarised = r.at("effort_summarised").get<double>();
  s.analytic_r_size_adjusted = r.at("size_adjusted").get<double>();
  return s;
}

}  // namespace sdp::harness

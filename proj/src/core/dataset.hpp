#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core/table.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sdp::dataset {

// Column names of the final cleaned table: the ten predictors plus target.
extern const std::vector<std::string> kPredictorColumns;
extern const char* const kTargetColumn;
extern const char* const kAgeColumn;
extern const char* const kImplementationDateColumn;
extern const std::vector<std::string> kRatingColumns;
extern const std::vector<std::string> kCategoricalColumns;
extern const std::vector<std::string> kNumericPredictorColumns;

// One cleaned project row.
struct ProjectRecord {
  std::string industry_sector;
  std::string development_type;
  std::string primary_programming_language;
  std::string count_approach;
  double functional_size = 0;
  std::string relative_size;
  double normalised_work_effort = 0;
  double defect_density = 0;
  std::string first_language;
  double age = 0;
  double total_defects_delivered = 0;
};

struct CleaningStep {
  std::string name;
  std::size_t records_in = 0;
  std::size_t records_out = 0;
  std::size_t columns_in = 0;
  std::size_t columns_out = 0;
};

struct CleaningReport {
  std::vector<CleaningStep> steps;
  // column name -> reason ("sparse", "irrelevant", "correlated", "consumed")
  std::vector<std::pair<std::string, std::string>> dropped_columns;
  std::map<std::string, std::size_t> fill_counts;
  std::map<std::string, std::size_t> missing_counts;  // observed at step 5
  std::size_t blank_target_drops = 0;
  std::size_t quality_drops = 0;
  std::size_t incomplete_row_drops = 0;

  nlohmann::json to_json() const;
};

struct CleaningConfig {
  std::vector<std::string> drop_columns;       // step 4
  double sparse_threshold = 0.10;              // step 5
  std::map<std::string, std::string> fill_columns = {
      {"Primary Programming Language", "unknown"}};
  double corr_threshold = 0.70;                // step 6
  std::string reference_date;                  // ISO-8601, for step 2
  // Canonical order for correlation pruning; earlier columns win ties.
  std::vector<std::string> corr_column_order;

  static CleaningConfig defaults();
};

// Step 1: drop rows whose target cell is blank.
std::pair<Table, std::size_t> filter_missing_target(const Table& table);

// Step 2 helper: fractional years between two ISO dates, days/365.25,
// rounded to 4 decimals.
double derive_age(const std::string& implementation_date,
                  const std::string& reference_date);

// Step 3: keep rows rated A or B in both rating columns.
std::pair<Table, std::size_t> filter_quality(const Table& table);

// Step 4: remove the named columns.
Table drop_irrelevant(const Table& table,
                      const std::vector<std::string>& drop_list);

struct ResolveMissingResult {
  Table table;
  std::vector<std::string> dropped_columns;  // > threshold missing
  std::map<std::string, std::size_t> fill_counts;
  std::map<std::string, std::size_t> missing_counts;
  std::size_t dropped_rows = 0;
};

// Step 5: drop sparse columns, fill configured columns, drop incomplete rows.
ResolveMissingResult resolve_missing(
    const Table& table, double sparse_threshold,
    const std::map<std::string, std::string>& fill_columns);

// Steps 1-6 composed. Pure function of (raw, config).
std::pair<Table, CleaningReport> run_cleaning_pipeline(
    const Table& raw, const CleaningConfig& config);

// Validates the cleaned table against the ProjectRecord schema.
std::vector<ProjectRecord> to_records(const Table& cleaned);

// ISO-8601 calendar date <-> days since 1970-01-01.
long days_from_iso(const std::string& date);
std::string iso_from_days(long days);

}  // namespace sdp::dataset

#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <set>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/stats.hpp"

namespace sdp::dataset {

const std::vector<std::string> kPredictorColumns = {
    "Industry Sector",
    "Development Type",
    "Primary Programming Language",
    "Count Approach",
    "Functional Size",
    "Relative Size",
    "Normalised Work Effort",
    "Defect Density",
    "1st Language",
    "Age",
};
const char* const kTargetColumn = "Total Defects Delivered";
const char* const kAgeColumn = "Age";
const char* const kImplementationDateColumn = "Implementation Date";
const std::vector<std::string> kRatingColumns = {"Data Quality Rating",
                                                 "UFP rating"};
const std::vector<std::string> kCategoricalColumns = {
    "Industry Sector",  "Development Type", "Primary Programming Language",
    "Count Approach",   "Relative Size",    "1st Language",
};
const std::vector<std::string> kNumericPredictorColumns = {
    "Functional Size", "Normalised Work Effort", "Defect Density", "Age"};

CleaningConfig CleaningConfig::defaults() {
  CleaningConfig c;
  c.drop_columns = {"Project ID", "Data Quality Rating", "UFP rating"};
  c.corr_column_order = {"Functional Size",
                         "Normalised Work Effort",
                         "Defect Density",
                         "Age",
                         "Summarised Work Effort",
                         "Adjusted Function Points"};
  c.reference_date = "2023-01-01";
  return c;
}

namespace {

bool parse_nonneg(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() &&
         std::isfinite(out) && out >= 0.0;
}

struct CivilDate {
  int y;
  unsigned m, d;
};

CivilDate parse_iso_date(const std::string& s) {
  auto fail = [&]() -> CivilDate {
    throw_data("not an ISO-8601 calendar date: \"" + s + "\"");
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return fail();
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::size_t off, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(s.data() + off, s.data() + off + len, out);
    return ec == std::errc() && p == s.data() + off + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return fail();
  static const unsigned mdays[] = {31, 28, 31, 30, 31, 30,
                                   31, 31, 30, 31, 30, 31};
  bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m < 1 || m > 12) return fail();
  unsigned dmax = mdays[m - 1] + (m == 2 && leap ? 1 : 0);
  if (d < 1 || d > dmax) return fail();
  return {y, m, d};
}

long days_from_civil(const CivilDate& c) {
  int y = c.y - (c.m <= 2);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (c.m + (c.m > 2 ? -3u : 9u)) + 2) / 5 + c.d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097L + static_cast<long>(doe) - 719468L;
}

}  // namespace

long days_from_iso(const std::string& date) {
  return days_from_civil(parse_iso_date(date));
}

std::string iso_from_days(long days) {
  // Inverse of days_from_civil (civil-from-days algorithm).
  long z = days + 719468L;
  const long era = (z >= 0 ? z : z - 146096L) / 146097L;
  const unsigned doe = static_cast<unsigned>(z - era * 146097L);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  const long year = y + (m <= 2);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04ld-%02u-%02u", year, m, d);
  return buf;
}

std::pair<Table, std::size_t> filter_missing_target(const Table& table) {
  std::size_t tc = table.col_index(kTargetColumn);
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const Cell& c = table.cell(r, tc);
    if (!c.has_value()) continue;
    double v = 0;
    if (!parse_nonneg(*c, v))
      throw_data("row " + std::to_string(table.row_id(r)) +
                 ": target \"" + std::string(kTargetColumn) +
                 "\" is not a nonnegative number: \"" + *c + "\"");
    keep.push_back(r);
  }
  std::size_t dropped = table.n_rows() - keep.size();
  return {table.select_rows(keep), dropped};
}

double derive_age(const std::string& implementation_date,
                  const std::string& reference_date) {
  CivilDate impl = parse_iso_date(implementation_date);
  CivilDate ref = parse_iso_date(reference_date);
  long diff = days_from_civil(ref) - days_from_civil(impl);
  if (diff < 0)
    throw_data("implementation date " + implementation_date +
               " is after reference date " + reference_date);
  double years = static_cast<double>(diff) / 365.25;
  return std::round(years * 1e4) / 1e4;
}

std::pair<Table, std::size_t> filter_quality(const Table& table) {
  std::vector<std::size_t> cols;
  for (const auto& name : kRatingColumns) cols.push_back(table.col_index(name));
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    bool ok = true;
    for (std::size_t c : cols) {
      const Cell& cell = table.cell(r, c);
      const std::string v = cell.has_value() ? *cell : "";
      if (v != "A" && v != "B" && v != "C" && v != "D")
        throw_data("row " + std::to_string(table.row_id(r)) + ", column \"" +
                   table.columns()[c] + "\": rating outside {A,B,C,D}: \"" +
                   v + "\"");
      if (v == "C" || v == "D") ok = false;
    }
    if (ok) keep.push_back(r);
  }
  std::size_t dropped = table.n_rows() - keep.size();
  return {table.select_rows(keep), dropped};
}

Table drop_irrelevant(const Table& table,
                      const std::vector<std::string>& drop_list) {
  for (const auto& name : drop_list) {
    if (!table.has_column(name))
      throw_data("drop list names an absent column: \"" + name + "\"");
  }
  return table.drop_columns(drop_list);
}

ResolveMissingResult resolve_missing(
    const Table& table, double sparse_threshold,
    const std::map<std::string, std::string>& fill_columns) {
  if (!(sparse_threshold > 0.0 && sparse_threshold < 1.0))
    throw_usage("sparse threshold must be in (0,1)");
  ResolveMissingResult res;
  const std::size_t n = table.n_rows();

  std::vector<std::string> sparse;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    std::size_t miss = 0;
    for (std::size_t r = 0; r < n; ++r)
      if (!table.cell(r, c).has_value()) ++miss;
    const std::string& name = table.columns()[c];
    res.missing_counts[name] = miss;
    if (n > 0 && static_cast<double>(miss) / static_cast<double>(n) >
                     sparse_threshold)
      sparse.push_back(name);
  }
  Table t = table.drop_columns(sparse);
  res.dropped_columns = std::move(sparse);

  for (const auto& [col, fill] : fill_columns) {
    if (!t.has_column(col)) continue;
    std::size_t ci = t.col_index(col);
    std::size_t filled = 0;
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      if (!t.cell(r, ci).has_value()) {
        t.cell(r, ci) = fill;
        ++filled;
      }
    }
    res.fill_counts[col] = filled;
  }

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    bool complete = true;
    for (std::size_t c = 0; c < t.n_cols(); ++c)
      if (!t.cell(r, c).has_value()) complete = false;
    if (complete) keep.push_back(r);
  }
  res.dropped_rows = t.n_rows() - keep.size();
  res.table = t.select_rows(keep);
  return res;
}

namespace {

// True when every non-missing cell of the column parses as a double.
bool column_is_numeric(const Table& t, std::size_t c) {
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const Cell& cell = t.cell(r, c);
    if (!cell.has_value()) continue;
    double v = 0;
    auto [p, ec] = std::from_chars(cell->data(), cell->data() + cell->size(), v);
    if (ec != std::errc() || p != cell->data() + cell->size()) return false;
  }
  return true;
}

CleaningStep make_step(const std::string& name, const Table& before,
                       const Table& after) {
  return {name, before.n_rows(), after.n_rows(), before.n_cols(),
          after.n_cols()};
}

}  // namespace

std::pair<Table, CleaningReport> run_cleaning_pipeline(
    const Table& raw, const CleaningConfig& config) {
  CleaningReport report;
  Table t = raw;

  // Step 1: blank targets.
  {
    Table before = t;
    auto [out, dropped] = filter_missing_target(t);
    t = std::move(out);
    report.blank_target_drops = dropped;
    report.steps.push_back(make_step("filter_missing_target", before, t));
  }

  // Step 2: derive age from the implementation date, then consume it.
  {
    Table before = t;
    if (t.has_column(kImplementationDateColumn)) {
      std::size_t dc = t.col_index(kImplementationDateColumn);
      std::vector<Cell> ages(t.n_rows());
      for (std::size_t r = 0; r < t.n_rows(); ++r) {
        const Cell& c = t.cell(r, dc);
        if (!c.has_value()) continue;  // resolved at step 5
        try {
          double age = derive_age(*c, config.reference_date);
          ages[r] = csv::format_double(age);
        } catch (const Error& e) {
          throw_data("row " + std::to_string(t.row_id(r)) + ": " + e.what());
        }
      }
      t = t.drop_columns({kImplementationDateColumn}).with_column(kAgeColumn,
                                                                  ages);
      report.dropped_columns.emplace_back(kImplementationDateColumn,
                                          "consumed");
    } else if (!t.has_column(kAgeColumn)) {
      throw_data("neither \"" + std::string(kImplementationDateColumn) +
                 "\" nor \"" + std::string(kAgeColumn) + "\" is present");
    }
    report.steps.push_back(make_step("derive_age", before, t));
  }

  // Step 3: quality ratings, skipped when the columns were already consumed.
  {
    Table before = t;
    bool have_ratings = true;
    for (const auto& rc : kRatingColumns)
      if (!t.has_column(rc)) have_ratings = false;
    if (have_ratings) {
      auto [out, dropped] = filter_quality(t);
      t = std::move(out);
      report.quality_drops = dropped;
    }
    report.steps.push_back(make_step("filter_quality", before, t));
  }

  // Step 4: configured irrelevant columns, intersected with what is present.
  {
    Table before = t;
    std::vector<std::string> present;
    for (const auto& name : config.drop_columns)
      if (t.has_column(name)) present.push_back(name);
    t = drop_irrelevant(t, present);
    for (const auto& name : present)
      report.dropped_columns.emplace_back(name, "irrelevant");
    report.steps.push_back(make_step("drop_irrelevant", before, t));
  }

  // Step 5: sparse columns, fills, then incomplete rows.
  {
    Table before = t;
    auto res = resolve_missing(t, config.sparse_threshold, config.fill_columns);
    t = std::move(res.table);
    for (const auto& name : res.dropped_columns)
      report.dropped_columns.emplace_back(name, "sparse");
    report.fill_counts = std::move(res.fill_counts);
    report.missing_counts = std::move(res.missing_counts);
    report.incomplete_row_drops = res.dropped_rows;
    report.steps.push_back(make_step("resolve_missing", before, t));
  }

  // Step 6: prune predictors correlated beyond the threshold. The target and
  // constant columns stay out of the matrix.
  {
    Table before = t;
    std::vector<std::string> numeric_cols;
    for (const auto& name : config.corr_column_order) {
      if (!t.has_column(name)) continue;
      std::size_t c = t.col_index(name);
      if (!column_is_numeric(t, c)) continue;
      auto col = t.numeric_column(name);
      double mn = *std::min_element(col.begin(), col.end());
      double mx = *std::max_element(col.begin(), col.end());
      if (mx > mn) numeric_cols.push_back(name);
    }
    if (numeric_cols.size() >= 2 && t.n_rows() >= 3) {
      auto matrix = stats::corr_matrix(t, numeric_cols);
      auto pruned = stats::prune_correlated(matrix, config.corr_threshold);
      t = t.drop_columns(pruned);
      for (const auto& name : pruned)
        report.dropped_columns.emplace_back(name, "correlated");
    }
    report.steps.push_back(make_step("prune_correlated", before, t));
  }

  // The survivors must be exactly the ProjectRecord schema.
  std::set<std::string> want(kPredictorColumns.begin(),
                             kPredictorColumns.end());
  want.insert(kTargetColumn);
  std::set<std::string> have(t.columns().begin(), t.columns().end());
  if (have != want) {
    std::string msg = "cleaned table does not match the expected schema;";
    for (const auto& c : have)
      if (!want.count(c)) msg += " unexpected column \"" + c + "\";";
    for (const auto& c : want)
      if (!have.count(c)) msg += " missing column \"" + c + "\";";
    throw_data(msg);
  }

  // Canonical column order: predictors then target.
  Table ordered(kPredictorColumns);
  ordered = Table([] {
    auto cols = kPredictorColumns;
    cols.push_back(kTargetColumn);
    return cols;
  }());
  std::vector<std::size_t> src;
  for (const auto& name : ordered.columns()) src.push_back(t.col_index(name));
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    std::vector<Cell> cells;
    cells.reserve(src.size());
    for (std::size_t c : src) cells.push_back(t.cell(r, c));
    ordered.add_row(std::move(cells), t.row_id(r));
  }

  to_records(ordered);  // type-validates every surviving cell
  return {std::move(ordered), std::move(report)};
}

std::vector<ProjectRecord> to_records(const Table& cleaned) {
  auto str = [&](std::size_t r, std::size_t c) -> std::string {
    const Cell& cell = cleaned.cell(r, c);
    if (!cell.has_value() || cell->empty())
      throw_data("row " + std::to_string(cleaned.row_id(r)) +
                 ": missing value in cleaned table, column \"" +
                 cleaned.columns()[c] + "\"");
    return *cell;
  };
  auto num = [&](std::size_t r, std::size_t c) {
    double v = cleaned.numeric(r, c);
    if (v < 0)
      throw_data("row " + std::to_string(cleaned.row_id(r)) + ", column \"" +
                 cleaned.columns()[c] + "\": negative value");
    return v;
  };
  std::vector<std::size_t> ci;
  for (const auto& name : kPredictorColumns)
    ci.push_back(cleaned.col_index(name));
  std::size_t tc = cleaned.col_index(kTargetColumn);

  std::vector<ProjectRecord> out;
  out.reserve(cleaned.n_rows());
  for (std::size_t r = 0; r < cleaned.n_rows(); ++r) {
    ProjectRecord rec;
    rec.industry_sector = str(r, ci[0]);
    rec.development_type = str(r, ci[1]);
    rec.primary_programming_language = str(r, ci[2]);
    rec.count_approach = str(r, ci[3]);
    rec.functional_size = num(r, ci[4]);
    rec.relative_size = str(r, ci[5]);
    rec.normalised_work_effort = num(r, ci[6]);
    rec.defect_density = num(r, ci[7]);
    rec.first_language = str(r, ci[8]);
    rec.age = num(r, ci[9]);
    rec.total_defects_delivered = num(r, tc);
    out.push_back(std::move(rec));
  }
  return out;
}

nlohmann::json CleaningReport::to_json() const {
  nlohmann::json j;
  j["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    j["steps"].push_back({{"name", s.name},
                          {"records_in", s.records_in},
                          {"records_out", s.records_out},
                          {"columns_in", s.columns_in},
                          {"columns_out", s.columns_out}});
  }
  j["dropped_columns"] = nlohmann::json::array();
  for (const auto& [name, reason] : dropped_columns)
    j["dropped_columns"].push_back({{"column", name}, {"reason", reason}});
  j["fill_counts"] = fill_counts;
  j["missing_counts"] = missing_counts;
  j["blank_target_drops"] = blank_target_drops;
  j["quality_drops"] = quality_drops;
  j["incomplete_row_drops"] = incomplete_row_drops;
  return j;
}

}  // namespace sdp::dataset

#include "core/table.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "core/error.hpp"

namespace sdp {

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

bool Table::has_column(const std::string& name) const {
  return std::find(columns_.begin(), columns_.end(), name) != columns_.end();
}

std::size_t Table::col_index(const std::string& name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw_data("column not found: " + name);
  return static_cast<std::size_t>(it - columns_.begin());
}

void Table::add_row(std::vector<Cell> cells, std::size_t source_row_id) {
  if (cells.size() != columns_.size())
    throw_data("row " + std::to_string(source_row_id) + ": expected " +
               std::to_string(columns_.size()) + " fields, got " +
               std::to_string(cells.size()));
  rows_.push_back(std::move(cells));
  row_ids_.push_back(source_row_id);
}

Table Table::select_rows(const std::vector<std::size_t>& keep) const {
  Table out(columns_);
  for (std::size_t r : keep) out.add_row(rows_[r], row_ids_[r]);
  return out;
}

Table Table::drop_columns(const std::vector<std::string>& names) const {
  std::vector<std::size_t> drop;
  for (const auto& n : names) drop.push_back(col_index(n));
  std::vector<std::string> cols;
  std::vector<std::size_t> keep_idx;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (std::find(drop.begin(), drop.end(), c) == drop.end()) {
      cols.push_back(columns_[c]);
      keep_idx.push_back(c);
    }
  }
  Table out(cols);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    std::vector<Cell> cells;
    cells.reserve(keep_idx.size());
    for (std::size_t c : keep_idx) cells.push_back(rows_[r][c]);
    out.add_row(std::move(cells), row_ids_[r]);
  }
  return out;
}

Table Table::with_column(const std::string& name,
                         std::vector<Cell> values) const {
  if (values.size() != rows_.size())
    throw_usage("with_column: value count does not match row count");
  auto cols = columns_;
  cols.push_back(name);
  Table out(cols);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    auto cells = rows_[r];
    cells.push_back(std::move(values[r]));
    out.add_row(std::move(cells), row_ids_[r]);
  }
  return out;
}

double Table::numeric(std::size_t row, std::size_t col) const {
  const Cell& c = rows_[row][col];
  if (!c.has_value())
    throw_data("row " + std::to_string(row_ids_[row]) + ", column \"" +
               columns_[col] + "\": missing value where a number is required");
  const std::string& s = *c;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw_data("row " + std::to_string(row_ids_[row]) + ", column \"" +
               columns_[col] + "\": not a finite number: \"" + s + "\"");
  return v;
}

std::vector<double> Table::numeric_column(const std::string& name) const {
  std::size_t c = col_index(name);
  std::vector<double> out(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) out[r] = numeric(r, c);
  return out;
}

namespace csv {
namespace {

// One logical record; quoted fields may span physical lines.
bool read_record(std::istream& in, std::vector<std::string>& fields,
                 bool& saw_any) {
  fields.clear();
  saw_any = false;
  std::string field;
  bool in_quotes = false;
  int ch;
  while ((ch = in.get()) != std::char_traits<char>::eof()) {
    saw_any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (saw_any) fields.push_back(std::move(field));
  return saw_any;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

void write_field(std::ostream& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

Table read(std::istream& in,
           const std::vector<std::string>& required_columns) {
  std::vector<std::string> fields;
  bool saw_any = false;
  if (!read_record(in, fields, saw_any))
    throw_data("csv: empty input, expected a header row");
  Table table(fields);
  for (const auto& req : required_columns) {
    if (!table.has_column(req))
      throw_data("csv: required column missing from header: \"" + req + "\"");
  }
  std::size_t row_index = 0;
  while (read_record(in, fields, saw_any)) {
    if (fields.size() == 1 && fields[0].empty()) {
      ++row_index;
      continue;  // blank line
    }
    if (fields.size() != table.n_cols())
      throw_data("csv: row " + std::to_string(row_index) + ": expected " +
                 std::to_string(table.n_cols()) + " fields, got " +
                 std::to_string(fields.size()));
    std::vector<Cell> cells;
    cells.reserve(fields.size());
    for (auto& f : fields)
      cells.push_back(f.empty() ? Cell{} : Cell{std::move(f)});
    table.add_row(std::move(cells), row_index);
    ++row_index;
  }
  return table;
}

Table read_file(const std::string& path,
                const std::vector<std::string>& required_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open file: " + path);
  return read(in, required_columns);
}

void write(std::ostream& out, const Table& table) {
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (c) out << ',';
    write_field(out, table.columns()[c]);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (c) out << ',';
      const Cell& cell = table.cell(r, c);
      if (cell.has_value()) write_field(out, *cell);
    }
    out << '\n';
  }
}

void write_file(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot open file for writing: " + path);
  write(out, table);
}

std::string format_double(double v) {
  // Shortest representation that round-trips, so re-exported tables are
  // byte-stable and re-cleaning is a fixed point.
  std::ostringstream ss;
  for (int prec = 1; prec <= 17; ++prec) {
    ss.str("");
    ss.precision(prec);
    ss << v;
    double back = 0.0;
    std::istringstream(ss.str()) >> back;
    if (back == v) break;
  }
  return ss.str();
}

}  // namespace csv
}  // namespace sdp

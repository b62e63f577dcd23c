#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sdp {

using Cell = std::optional<std::string>;

// Column-named string table. Missing cells are nullopt; an empty CSV cell
// parses as missing. row_ids track source row indices through filtering.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t n_rows() const { return rows_.size(); }
  std::size_t n_cols() const { return columns_.size(); }

  bool has_column(const std::string& name) const;
  // Throws a data error naming the column when absent.
  std::size_t col_index(const std::string& name) const;

  const Cell& cell(std::size_t row, std::size_t col) const {
    return rows_[row][col];
  }
  Cell& cell(std::size_t row, std::size_t col) { return rows_[row][col]; }
  const std::vector<Cell>& row(std::size_t r) const { return rows_[r]; }
  std::size_t row_id(std::size_t r) const { return row_ids_[r]; }

  void add_row(std::vector<Cell> cells, std::size_t source_row_id);
  Table select_rows(const std::vector<std::size_t>& keep) const;
  Table drop_columns(const std::vector<std::string>& names) const;
  Table with_column(const std::string& name, std::vector<Cell> values) const;

  // Parses the cell as a finite double; data error otherwise.
  double numeric(std::size_t row, std::size_t col) const;
  std::vector<double> numeric_column(const std::string& name) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::size_t> row_ids_;
};

namespace csv {

// Dialect: comma-separated, double-quote escaping, UTF-8, one header row.
Table read(std::istream& in, const std::vector<std::string>& required_columns);
Table read_file(const std::string& path,
                const std::vector<std::string>& required_columns);
void write(std::ostream& out, const Table& table);
void write_file(const std::string& path, const Table& table);

std::string format_double(double v);

}  // namespace csv
}  // namespace sdp

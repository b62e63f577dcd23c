#include "core/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace sdp::preprocess {

std::size_t EncoderMap::index_of(const std::string& column,
                                 const std::string& category) const {
  auto it = vocab.find(column);
  if (it == vocab.end())
    throw_usage("no encoder fitted for column \"" + column + "\"");
  const auto& v = it->second;
  auto pos = std::lower_bound(v.begin(), v.end(), category);
  if (pos == v.end() || *pos != category)
    throw_data("column \"" + column + "\": unseen category \"" + category +
               "\"");
  return static_cast<std::size_t>(pos - v.begin());
}

EncoderMap fit_encoders(const Table& table,
                        const std::vector<std::string>& categorical_columns) {
  EncoderMap out;
  for (const auto& name : categorical_columns) {
    std::size_t c = table.col_index(name);
    std::set<std::string> cats;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
      const Cell& cell = table.cell(r, c);
      if (!cell.has_value())
        throw_data("fit_encoders: missing value in column \"" + name + "\"");
      cats.insert(*cell);
    }
    out.vocab[name] = std::vector<std::string>(cats.begin(), cats.end());
  }
  return out;
}

Table encode(const Table& table, const EncoderMap& encoders) {
  Table out(table.columns());
  std::vector<const std::vector<std::string>*> vocabs(table.n_cols(), nullptr);
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    auto it = encoders.vocab.find(table.columns()[c]);
    if (it != encoders.vocab.end()) vocabs[c] = &it->second;
  }
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    std::vector<Cell> cells = table.row(r);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!vocabs[c]) continue;
      if (!cells[c].has_value())
        throw_data("encode: missing value at row " +
                   std::to_string(table.row_id(r)) + ", column \"" +
                   table.columns()[c] + "\"");
      const auto& v = *vocabs[c];
      auto pos = std::lower_bound(v.begin(), v.end(), *cells[c]);
      if (pos == v.end() || *pos != *cells[c])
        throw_data("encode: unseen category \"" + *cells[c] +
                   "\" in column \"" + table.columns()[c] + "\" at row " +
                   std::to_string(table.row_id(r)));
      cells[c] = std::to_string(pos - v.begin());
    }
    out.add_row(std::move(cells), table.row_id(r));
  }
  return out;
}

FeatureMatrix to_matrix(const Table& encoded,
                        const std::vector<std::string>& feature_columns,
                        const std::string& target_column) {
  FeatureMatrix m;
  m.feature_names = feature_columns;
  std::vector<std::size_t> ci;
  for (const auto& name : feature_columns)
    ci.push_back(encoded.col_index(name));
  std::size_t tc = encoded.col_index(target_column);
  m.rows.reserve(encoded.n_rows());
  for (std::size_t r = 0; r < encoded.n_rows(); ++r) {
    std::vector<double> row(ci.size());
    for (std::size_t k = 0; k < ci.size(); ++k) row[k] = encoded.numeric(r, ci[k]);
    m.rows.push_back(std::move(row));
    m.target.push_back(encoded.numeric(r, tc));
    m.row_ids.push_back(encoded.row_id(r));
  }
  return m;
}

ScalerParams fit_scaler(const FeatureMatrix& train) {
  if (train.n_rows() < 2) throw_usage("fit_scaler: need at least 2 rows");
  ScalerParams p;
  p.columns = train.feature_names;
  const double n = static_cast<double>(train.n_rows());
  for (std::size_t c = 0; c < train.n_cols(); ++c) {
    double mean = 0;
    for (const auto& row : train.rows) mean += row[c];
    mean /= n;
    double var = 0;
    for (const auto& row : train.rows) {
      const double d = row[c] - mean;
      var += d * d;
    }
    var /= n;
    p.mean.push_back(mean);
    p.stddev.push_back(std::sqrt(var));
  }
  return p;
}

void scale(FeatureMatrix& matrix, const ScalerParams& params) {
  if (matrix.feature_names != params.columns)
    throw_usage("scale: scaler columns do not match matrix columns");
  for (auto& row : matrix.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double sd = params.stddev[c];
      row[c] = (row[c] - params.mean[c]) / (sd > 0.0 ? sd : 1.0);
    }
  }
}

std::pair<FeatureMatrix, FeatureMatrix> train_test_split(
    const FeatureMatrix& matrix, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw_usage("train_test_split: fraction must be in (0,1)");
  const std::size_t n = matrix.n_rows();
  if (n < 4) throw_usage("train_test_split: need at least 4 rows");
  const std::size_t n_test = static_cast<std::size_t>(
      std::ceil(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  auto take = [&](std::size_t from, std::size_t to) {
    FeatureMatrix out;
    out.feature_names = matrix.feature_names;
    for (std::size_t i = from; i < to; ++i) {
      const std::size_t r = order[i];
      out.rows.push_back(matrix.rows[r]);
      out.target.push_back(matrix.target[r]);
      out.row_ids.push_back(matrix.row_ids[r]);
    }
    return out;
  };
  FeatureMatrix test = take(0, n_test);
  FeatureMatrix train = take(n_test, n);
  return {std::move(train), std::move(test)};
}

nlohmann::json EncoderMap::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [col, v] : vocab) j[col] = v;
  return j;
}

EncoderMap EncoderMap::from_json(const nlohmann::json& j) {
  EncoderMap m;
  for (auto it = j.begin(); it != j.end(); ++it)
    m.vocab[it.key()] = it.value().get<std::vector<std::string>>();
  return m;
}

nlohmann::json ScalerParams::to_json() const {
  return {{"columns", columns}, {"mean", mean}, {"stddev", stddev}};
}

ScalerParams ScalerParams::from_json(const nlohmann::json& j) {
  ScalerParams p;
  p.columns = j.at("columns").get<std::vector<std::string>>();
  p.mean = j.at("mean").get<std::vector<double>>();
  p.stddev = j.at("stddev").get<std::vector<double>>();
  return p;
}

}  // namespace sdp::preprocess

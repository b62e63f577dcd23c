#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core/table.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sdp::preprocess {

// Per categorical column: lexicographically sorted vocabulary; a category
// encodes to its 0-based position.
struct EncoderMap {
  std::map<std::string, std::vector<std::string>> vocab;

  std::size_t index_of(const std::string& column,
                       const std::string& category) const;
  nlohmann::json to_json() const;
  static EncoderMap from_json(const nlohmann::json& j);
};

// Fitted on training rows only; population (divisor n) standard deviation.
struct ScalerParams {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> stddev;

  nlohmann::json to_json() const;
  static ScalerParams from_json(const nlohmann::json& j);
};

struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;  // row-major
  std::vector<double> target;
  std::vector<std::size_t> row_ids;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return feature_names.size(); }
};

EncoderMap fit_encoders(const Table& table,
                        const std::vector<std::string>& categorical_columns);

// Categorical cells become vocabulary indices; unseen categories are an
// encoding error naming column, value and row.
Table encode(const Table& table, const EncoderMap& encoders);

// Numeric design matrix over the named feature columns plus target.
FeatureMatrix to_matrix(const Table& encoded,
                        const std::vector<std::string>& feature_columns,
                        const std::string& target_column);

ScalerParams fit_scaler(const FeatureMatrix& train);

// z = (x - mean) / std per column; zero-std columns are centered only.
void scale(FeatureMatrix& matrix, const ScalerParams& params);

// Seeded shuffle; test size = ceil(fraction * n); exact partition.
std::pair<FeatureMatrix, FeatureMatrix> train_test_split(
    const FeatureMatrix& matrix, double test_fraction, std::uint64_t seed);

}  // namespace sdp::preprocess

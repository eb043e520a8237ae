#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace attr {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Immutable N x d table of finite reals with cached column means.
class TabularDataset {
 public:
  TabularDataset(Matrix values, std::vector<std::string> feature_names,
                 std::optional<Vector> labels = std::nullopt);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(values_.cols()); }

  const Matrix& values() const { return values_; }
  auto row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }
  const Vector& column_means() const { return column_means_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::optional<Vector>& labels() const { return labels_; }

  // New dataset holding the listed rows, in order.
  TabularDataset subset(const std::vector<std::size_t>& rows) const;

 private:
  Matrix values_;
  std::vector<std::string> feature_names_;
  Vector column_means_;
  std::optional<Vector> labels_;
};

enum class LabelColumn { kAbsent, kPresent };

// Parses a CSV with a header row. With LabelColumn::kPresent the last column
// is kept as labels and excluded from the features.
TabularDataset parse_dataset(const std::string& text, LabelColumn label,
                             const std::string& source = "<memory>");
TabularDataset load_dataset(const std::string& path, LabelColumn label);

// Seeded shuffle followed by a (train_fraction, 1 - train_fraction) split.
std::pair<TabularDataset, TabularDataset> train_test_split(const TabularDataset& data,
                                                           double train_fraction,
                                                           std::uint64_t seed);

}  // namespace attr

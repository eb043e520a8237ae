#include "attr/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "attr/error.hpp"
#include "attr/rng.hpp"

namespace attr {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Field {
  std::string_view text;
  std::size_t column;  // 1-based character offset of the field start
};

std::vector<Field> split_csv_line(std::string_view line) {
  std::vector<Field> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back({trim(line.substr(start, i - start)), start + 1});
      start = i + 1;
    }
  }
  return fields;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

}  // namespace

TabularDataset::TabularDataset(Matrix values, std::vector<std::string> feature_names,
                               std::optional<Vector> labels)
    : values_(std::move(values)),
      feature_names_(std::move(feature_names)),
      labels_(std::move(labels)) {
  if (values_.rows() < 1) throw InvalidArgument("dataset needs at least one row");
  if (values_.cols() < 2) throw InvalidArgument("dataset needs at least two features");
  if (feature_names_.empty()) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      feature_names_.push_back("feature_" + std::to_string(j));
  }
  if (feature_names_.size() != features())
    throw InvalidArgument("feature name count does not match column count");
  if (!values_.allFinite()) throw InvalidArgument("dataset contains non-finite values");
  if (labels_ && labels_->size() != values_.rows())
    throw InvalidArgument("label count does not match row count");
  column_means_ = values_.colwise().mean().transpose();
}

TabularDataset TabularDataset::subset(const std::vector<std::size_t>& rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  std::optional<Vector> lab;
  if (labels_) lab = Vector(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= this->rows()) throw InvalidArgument("subset row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    if (lab) (*lab)(static_cast<Eigen::Index>(i)) = (*labels_)(static_cast<Eigen::Index>(rows[i]));
  }
  return TabularDataset(std::move(out), feature_names_, std::move(lab));
}

TabularDataset parse_dataset(const std::string& text, LabelColumn label,
                             const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      for (const auto& f : fields) header.push_back(unquote(f.text));
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no, 1,
                       "row has " + std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      std::string_view t = f.text;
      if (!t.empty() && t.front() == '+') t.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw ParseError(source, line_no, f.column,
                         "row " + std::to_string(rows.size() + 1) + ": cannot parse '" +
                             std::string(f.text) + "' as a finite number");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (header.empty()) throw ParseError(source, line_no, 1, "missing header row");
  if (rows.empty()) throw ParseError(source, line_no, 1, "no data rows");

  std::size_t total_cols = header.size();
  std::size_t d = label == LabelColumn::kPresent ? total_cols - 1 : total_cols;
  if (d < 2) throw ParseError(source, 1, 1, "need at least two feature columns");

  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  std::optional<Vector> labels;
  if (label == LabelColumn::kPresent) labels = Vector(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    if (labels) (*labels)(static_cast<Eigen::Index>(i)) = rows[i][d];
  }
  header.resize(d);
  return TabularDataset(std::move(values), std::move(header), std::move(labels));
}

TabularDataset load_dataset(const std::string& path, LabelColumn label) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), label, path);
}

std::pair<TabularDataset, TabularDataset> train_test_split(const TabularDataset& data,
                                                           double train_fraction,
                                                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidArgument("train fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(data.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  fisher_yates(std::span<std::size_t>(idx), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
  if (n_train == 0 || n_train == idx.size())
    throw InvalidArgument("split leaves one side empty");
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return {data.subset(train), data.subset(test)};
}

}  // namespace attr

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "attr/dataset.hpp"

namespace attr {

enum class OutputKind { kRegression, kProbability };

// Black-box model. Implementations must be deterministic: the same batch
// always yields the same outputs.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t input_dim() const = 0;
  virtual Vector predict(const Matrix& batch) const = 0;
  virtual OutputKind output_kind() const { return OutputKind::kRegression; }
  // False when concurrent predict() calls are unsafe; callers then go
  // through SerializedModel.
  virtual bool thread_safe() const { return true; }
};

// Validating entry point used by every estimator.
Vector eval_model(const Model& model, const Matrix& batch);

class LinearModel final : public Model {
 public:
  LinearModel(Vector weights, double bias, OutputKind kind = OutputKind::kRegression);

  std::size_t input_dim() const override { return static_cast<std::size_t>(weights_.size()); }
  Vector predict(const Matrix& batch) const override;
  OutputKind output_kind() const override { return kind_; }

  const Vector& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  Vector weights_;
  double bias_;
  OutputKind kind_;
};

// Feed-forward network: ReLU hidden layers, scalar output (identity, or
// logistic when the output kind is probability).
class MlpModel final : public Model {
 public:
  struct Layer {
    Matrix weights;  // out x in
    Vector bias;     // out
  };

  MlpModel(std::vector<Layer> layers, OutputKind kind = OutputKind::kRegression);

  std::size_t input_dim() const override;
  Vector predict(const Matrix& batch) const override;
  OutputKind output_kind() const override { return kind_; }

 private:
  std::vector<Layer> layers_;
  OutputKind kind_;
};

// Row-wise callable; handy for synthetic fixtures.
class FunctionModel final : public Model {
 public:
  using RowFn = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&)>;

  FunctionModel(std::size_t dim, RowFn fn);

  std::size_t input_dim() const override { return dim_; }
  Vector predict(const Matrix& batch) const override;

 private:
  std::size_t dim_;
  RowFn fn_;
};

// Funnels calls to a non-thread-safe model through a mutex.
class SerializedModel final : public Model {
 public:
  explicit SerializedModel(const Model& inner) : inner_(inner) {}

  std::size_t input_dim() const override { return inner_.input_dim(); }
  Vector predict(const Matrix& batch) const override;
  OutputKind output_kind() const override { return inner_.output_kind(); }
  bool thread_safe() const override { return true; }

 private:
  const Model& inner_;
  mutable std::mutex mu_;
};

// Plain-text weights format. First line `linear` or `mlp`, optionally
// followed by `probability`. Remaining tokens are whitespace-separated:
//   linear: w_0 .. w_{d-1} bias
//   mlp:    L+1 then dims n_0 .. n_L, then per layer the row-major
//           n_{l+1} x n_l weight matrix followed by its n_{l+1} biases.
std::unique_ptr<Model> parse_model(const std::string& text, const std::string& source = "<memory>");
std::unique_ptr<Model> load_model(const std::string& path);

}  // namespace attr

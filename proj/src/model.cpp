#include "attr/model.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "attr/error.hpp"

namespace attr {

Vector eval_model(const Model& model, const Matrix& batch) {
  if (batch.rows() == 0) return Vector(0);
  if (static_cast<std::size_t>(batch.cols()) != model.input_dim()) {
    throw InvalidArgument("batch has " + std::to_string(batch.cols()) +
                          " columns, model expects " + std::to_string(model.input_dim()));
  }
  Vector out = model.predict(batch);
  if (out.size() != batch.rows())
    throw EvaluationFailure("model returned " + std::to_string(out.size()) + " outputs for " +
                            std::to_string(batch.rows()) + " rows");
  return out;
}

namespace {

double logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

LinearModel::LinearModel(Vector weights, double bias, OutputKind kind)
    : weights_(std::move(weights)), bias_(bias), kind_(kind) {
  if (weights_.size() == 0) throw InvalidArgument("linear model needs at least one weight");
}

Vector LinearModel::predict(const Matrix& batch) const {
  Vector z = (batch * weights_).array() + bias_;
  if (kind_ == OutputKind::kProbability) z = z.unaryExpr(&logistic);
  return z;
}

MlpModel::MlpModel(std::vector<Layer> layers, OutputKind kind)
    : layers_(std::move(layers)), kind_(kind) {
  if (layers_.empty()) throw InvalidArgument("mlp needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.weights.rows())
      throw InvalidArgument("mlp layer " + std::to_string(l) + ": bias/weight shape mismatch");
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows())
      throw InvalidArgument("mlp layer " + std::to_string(l) + ": input dim mismatch");
  }
  if (layers_.back().weights.rows() != 1) throw InvalidArgument("mlp output must be scalar");
}

std::size_t MlpModel::input_dim() const {
  return static_cast<std::size_t>(layers_.front().weights.cols());
}

Vector MlpModel::predict(const Matrix& batch) const {
  Matrix h = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix next = h * layers_[l].weights.transpose();
    next.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  Vector out = h.col(0);
  if (kind_ == OutputKind::kProbability) out = out.unaryExpr(&logistic);
  return out;
}

FunctionModel::FunctionModel(std::size_t dim, RowFn fn) : dim_(dim), fn_(std::move(fn)) {}

Vector FunctionModel::predict(const Matrix& batch) const {
  Vector out(batch.rows());
  for (Eigen::Index i = 0; i < batch.rows(); ++i) out(i) = fn_(batch.row(i));
  return out;
}

Vector SerializedModel::predict(const Matrix& batch) const {
  std::lock_guard<std::mutex> lock(mu_);
  return inner_.predict(batch);
}

namespace {

struct Token {
  std::string text;
  std::size_t line;
  std::size_t column;
};

class TokenStream {
 public:
  TokenStream(std::vector<Token> tokens, std::string source)
      : tokens_(std::move(tokens)), source_(std::move(source)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  std::size_t remaining() const { return tokens_.size() - pos_; }

  double real() {
    const Token& t = next("a real number");
    double v = 0.0;
    std::string_view s = t.text;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
      throw ParseError(source_, t.line, t.column, "expected a real number, got '" + t.text + "'");
    return v;
  }

  std::size_t count() {
    if (done()) real();
    const Token& t = tokens_[pos_];
    double v = real();
    if (v < 1.0 || v != std::floor(v))
      throw ParseError(source_, t.line, t.column, "expected a positive integer");
    return static_cast<std::size_t>(v);
  }

  [[noreturn]] void fail_extra() const {
    const Token& t = tokens_[pos_];
    throw ParseError(source_, t.line, t.column, "unexpected trailing token '" + t.text + "'");
  }

 private:
  const Token& next(const char* what) {
    if (done()) {
      std::size_t line = tokens_.empty() ? 1 : tokens_.back().line;
      throw ParseError(source_, line, 1, std::string("unexpected end of input, expected ") + what);
    }
    return tokens_[pos_++];
  }

  std::vector<Token> tokens_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<Model> parse_model(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::string kind_word;
  OutputKind kind = OutputKind::kRegression;
  std::vector<Token> tokens;

  while (std::getline(in, line)) {
    ++line_no;
    std::size_t i = 0;
    std::vector<Token> on_line;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      on_line.push_back({line.substr(start, i - start), line_no, start + 1});
    }
    if (on_line.empty()) continue;
    if (kind_word.empty()) {
      kind_word = on_line[0].text;
      if (kind_word != "linear" && kind_word != "mlp")
        throw ParseError(source, line_no, 1, "expected 'linear' or 'mlp', got '" + kind_word + "'");
      if (on_line.size() > 2)
        throw ParseError(source, line_no, on_line[2].column, "unexpected token on header line");
      if (on_line.size() == 2) {
        if (on_line[1].text == "probability") kind = OutputKind::kProbability;
        else if (on_line[1].text != "regression")
          throw ParseError(source, line_no, on_line[1].column,
                           "unknown output kind '" + on_line[1].text + "'");
      }
      continue;
    }
    tokens.insert(tokens.end(), on_line.begin(), on_line.end());
  }
  if (kind_word.empty()) throw ParseError(source, 1, 1, "empty model file");

  TokenStream ts(std::move(tokens), source);
  if (kind_word == "linear") {
    std::vector<double> values;
    while (!ts.done()) values.push_back(ts.real());
    if (values.size() < 2) throw ParseError(source, line_no, 1, "linear model needs weights and a bias");
    Vector w(static_cast<Eigen::Index>(values.size() - 1));
    for (std::size_t j = 0; j + 1 < values.size(); ++j) w(static_cast<Eigen::Index>(j)) = values[j];
    return std::make_unique<LinearModel>(std::move(w), values.back(), kind);
  }

  std::size_t n_dims = ts.count();
  if (n_dims < 2) throw ParseError(source, 2, 1, "mlp needs at least input and output dims");
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i < n_dims; ++i) dims.push_back(ts.count());
  std::vector<MlpModel::Layer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    MlpModel::Layer layer{Matrix(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l])),
                          Vector(static_cast<Eigen::Index>(dims[l + 1]))};
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = ts.real();
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = ts.real();
    layers.push_back(std::move(layer));
  }
  if (!ts.done()) ts.fail_extra();
  try {
    return std::make_unique<MlpModel>(std::move(layers), kind);
  } catch (const InvalidArgument& e) {
    throw ParseError(source, 1, 1, e.what());
  }
}

std::unique_ptr<Model> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str(), path);
}

}  // namespace attr

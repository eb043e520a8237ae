#include "attr/global.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "attr/error.hpp"
#include "attr/sprt.hpp"
#include "attr/t_dist.hpp"

namespace attr {

namespace {

struct Overlap {
  std::vector<double> a;
  std::vector<double> b;
};

Overlap shared_values(const GlobalScores::Column& x, const GlobalScores::Column& y) {
  Overlap o;
  std::size_t i = 0, k = 0;
  while (i < x.ids.size() && k < y.ids.size()) {
    if (x.ids[i] < y.ids[k]) {
      ++i;
    } else if (y.ids[k] < x.ids[i]) {
      ++k;
    } else {
      o.a.push_back(x.values[i++]);
      o.b.push_back(y.values[k++]);
    }
  }
  return o;
}

double sample_covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(n - 1);
}

}  // namespace

GlobalScores::GlobalScores(std::vector<Column> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw InvalidArgument("no features");
  theta_.resize(static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    const Column& c = columns_[j];
    if (c.ids.size() != c.values.size()) throw InvalidArgument("column ids and values differ in length");
    if (c.ids.size() < 2) throw InvalidArgument("feature " + std::to_string(j) + " has fewer than two inputs");
    if (!std::is_sorted(c.ids.begin(), c.ids.end()) ||
        std::adjacent_find(c.ids.begin(), c.ids.end()) != c.ids.end())
      throw InvalidArgument("input ids must be strictly increasing");
    MeanVarEstimate e;
    for (double v : c.values) {
      if (!std::isfinite(v)) throw InvalidArgument("local attributions must be finite");
      e.add(v);
    }
    theta_(static_cast<Eigen::Index>(j)) = e.mean;
  }
}

std::vector<std::size_t> GlobalScores::counts() const {
  std::vector<std::size_t> n;
  for (const auto& c : columns_) n.push_back(c.ids.size());
  return n;
}

double GlobalScores::variance(std::size_t j) const {
  MeanVarEstimate e;
  for (double v : columns_[j].values) e.add(v);
  return e.variance();
}

double GlobalScores::covariance(std::size_t j, std::size_t l) const {
  if (j == l) return variance(j) / static_cast<double>(count(j));
  Overlap o = shared_values(columns_[j], columns_[l]);
  if (o.a.size() < 2) return 0.0;
  double nj = static_cast<double>(count(j));
  double nl = static_cast<double>(count(l));
  return static_cast<double>(o.a.size()) / (nj * nl) * sample_covariance(o.a, o.b);
}

Matrix GlobalScores::covariance_matrix() const {
  const auto d = static_cast<Eigen::Index>(features());
  Matrix S(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index l = j; l < d; ++l)
      S(j, l) = S(l, j) = covariance(static_cast<std::size_t>(j), static_cast<std::size_t>(l));
  return S;
}

AttributionSet GlobalScores::attribution_set(RankingMode ranking) const {
  return AttributionSet::from_moments(theta_, covariance_matrix(), counts(), ranking);
}

GlobalScores global_scores(const LocalAttributionMatrix& m) {
  if (m.inputs() < 2) throw InvalidArgument("global scores need at least two inputs");
  std::vector<GlobalScores::Column> cols(m.features());
  for (std::size_t i = 0; i < m.inputs(); ++i) {
    for (std::size_t j = 0; j < m.features(); ++j) {
      double v = m.psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::isnan(v)) continue;
      cols[j].ids.push_back(i);
      cols[j].values.push_back(v);
    }
  }
  return GlobalScores(std::move(cols));
}

VerifiedRanking verify_global_ranks(const GlobalScores& scores, double alpha, TestMode mode,
                                    RankingMode ranking) {
  if (scores.features() < 2) throw InvalidArgument("need at least two features");
  return verify_ranks(scores.attribution_set(ranking), alpha, mode);
}

Vector LocalAttributionSource::attribute_all(std::size_t input) const {
  Vector out(static_cast<Eigen::Index>(dim()));
  for (std::size_t j = 0; j < dim(); ++j) out(static_cast<Eigen::Index>(j)) = attribute(input, j);
  return out;
}

MatrixAttributionSource::MatrixAttributionSource(Matrix psi) : psi_(std::move(psi)) {
  if (!psi_.allFinite()) throw InvalidArgument("attribution matrix has missing entries");
}

double MatrixAttributionSource::attribute(std::size_t input, std::size_t feature) const {
  if (input >= inputs() || feature >= dim()) throw InvalidArgument("attribution index out of range");
  return psi_(static_cast<Eigen::Index>(input), static_cast<Eigen::Index>(feature));
}

SamplingAttributionSource::SamplingAttributionSource(const Model& model, const TabularDataset& pool,
                                                     const TabularDataset& background,
                                                     std::size_t permutations, std::uint64_t seed,
                                                     Contribution contribution,
                                                     std::size_t samples_per_subset)
    : model_(model),
      pool_(pool),
      background_(background),
      permutations_(permutations),
      seed_(seed),
      contribution_(contribution),
      m_(samples_per_subset) {
  if (permutations < 2) throw InvalidBudget("local attributions need at least 2 permutations");
  if (pool.features() != background.features() || pool.features() != model.input_dim())
    throw InvalidArgument("pool, background and model widths differ");
}

std::size_t SamplingAttributionSource::inputs() const {
  return std::numeric_limits<std::size_t>::max();
}

std::size_t SamplingAttributionSource::row_of(std::size_t input) const {
  Rng rng = make_rng(seed_, {input});
  return uniform_index(rng, pool_.rows());
}

double SamplingAttributionSource::attribute(std::size_t input, std::size_t feature) const {
  Vector x = pool_.row(row_of(input)).transpose();
  MarginalValueFunction v(model_, std::move(x), background_, m_);
  Rng rng = make_rng(seed_, {input, feature + 1});
  return shapley_sampling(v, feature, permutations_, rng, Imputation::kSampled, contribution_).mean;
}

Vector SamplingAttributionSource::attribute_all(std::size_t input) const {
  Vector x = pool_.row(row_of(input)).transpose();
  MarginalValueFunction v(model_, std::move(x), background_, m_);
  Vector out(static_cast<Eigen::Index>(dim()));
  for (std::size_t j = 0; j < dim(); ++j) {
    Rng rng = make_rng(seed_, {input, j + 1});
    out(static_cast<Eigen::Index>(j)) =
        shapley_sampling(v, j, permutations_, rng, Imputation::kSampled, contribution_).mean;
  }
  return out;
}

namespace {

void append_input(std::vector<GlobalScores::Column>& cols, const LocalAttributionSource& src,
                  std::size_t input) {
  Vector psi = src.attribute_all(input);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    cols[j].ids.push_back(input);
    cols[j].values.push_back(psi(static_cast<Eigen::Index>(j)));
  }
}

StableAttribution finish(const std::vector<GlobalScores::Column>& cols, const GlobalTopKOptions& opt,
                         StableAttribution out) {
  GlobalScores scores(cols);
  out.attrs = scores.attribution_set(opt.ranking);
  out.per_feature_samples = scores.counts();
  return out;
}

StableAttribution topk_resample(const LocalAttributionSource& src, const GlobalTopKOptions& opt) {
  const SamplingBudget& budget = opt.budget;
  budget.validate();
  const std::size_t d = src.dim();
  if (src.inputs() < budget.n0) throw InvalidBudget("source has fewer than n0 inputs");

  std::vector<GlobalScores::Column> cols(d);
  StableAttribution out;
  for (std::size_t i = 0; i < budget.n0; ++i) append_input(cols, src, i);
  out.total_samples = budget.n0 * d;
  std::size_t next_fresh = budget.n0;

  while (true) {
    GlobalScores scores(cols);
    AttributionSet attrs = scores.attribution_set(opt.ranking);
    std::vector<std::size_t> order = attrs.order();
    std::optional<TestOutcome> failed;
    for (std::size_t k = 1; k <= opt.K; ++k) {
      TestOutcome t = test_adjacent(attrs, order, k, opt.alpha, budget.mode);
      if (!t.rejected) {
        failed = t;
        break;
      }
    }
    if (!failed) {
      out.converged = true;
      out.status = RunStatus::kConverged;
      break;
    }
    std::size_t a = order[failed->k - 1];
    std::size_t b = order[failed->k];
    std::size_t na = scores.count(a), nb = scores.count(b);
    if ((na >= budget.max_n && nb >= budget.max_n) || out.rounds >= budget.max_rounds) break;

    // Per-input variance of the paired difference.
    double var_d = attrs.variance(a) * static_cast<double>(na) +
                   attrs.variance(b) * static_cast<double>(nb);
    double cov_ab = attrs.ranked_covariance(a, b);
    if (cov_ab != 0.0) {
      Overlap o = shared_values(cols[a], cols[b]);
      var_d -= 2.0 * cov_ab * static_cast<double>(na) * static_cast<double>(nb) /
               static_cast<double>(o.a.size());
    }
    double delta = attrs.ranked_value(a) - attrs.ranked_value(b);
    std::size_t n = budget.max_n;
    if (delta > 0.0 && var_d > 0.0) {
      double t = t_quantile(1.0 - opt.alpha / 2.0, failed->df);
      SamplePlan plan = plan_sample_sizes_for_quantile(delta, var_d / 2.0, var_d / 2.0, t,
                                                       AllocationScheme::kEqual, budget.mode);
      double want = std::ceil(budget.buffer_c * static_cast<double>(plan.n_a));
      n = want >= static_cast<double>(budget.max_n) ? budget.max_n : static_cast<std::size_t>(want);
    }
    n = std::min(std::max({n, na, nb}), budget.max_n);
    if (src.inputs() - next_fresh < n) break;

    for (std::size_t j : {a, b}) {
      cols[j].ids.clear();
      cols[j].values.clear();
    }
    for (std::size_t i = next_fresh; i < next_fresh + n; ++i) {
      for (std::size_t j : {a, b}) {
        cols[j].ids.push_back(i);
        cols[j].values.push_back(src.attribute(i, j));
      }
    }
    next_fresh += n;
    out.total_samples += 2 * n;
    ++out.rounds;
  }

  out = finish(cols, opt, std::move(out));
  out.ranking = verify_ranks(out.attrs, opt.alpha, budget.mode);
  return out;
}

StableAttribution topk_sprt(const LocalAttributionSource& src, const GlobalTopKOptions& opt) {
  if (opt.batch < 2) throw InvalidBudget("SPRT batches need at least 2 inputs");
  if (opt.max_total < opt.batch) throw InvalidBudget("max_total must be at least one batch");
  SprtBoundaries bounds = SprtBoundaries::make(opt.alpha, opt.beta);
  const std::size_t d = src.dim();
  const std::size_t cap = std::min(opt.max_total, src.inputs());
  if (cap < opt.batch) throw InvalidBudget("source has fewer inputs than one batch");

  std::vector<GlobalScores::Column> cols(d);
  SprtState state(opt.K);
  StableAttribution out;
  std::vector<std::size_t> order;
  std::size_t used = 0;

  while (true) {
    std::size_t take = std::min(opt.batch, cap - used);
    for (std::size_t i = used; i < used + take; ++i) append_input(cols, src, i);
    used += take;
    ++state.batches;
    state.total_samples = used;

    AttributionSet attrs = GlobalScores(cols).attribution_set(opt.ranking);
    order = attrs.order();
    std::vector<double> ratios(opt.K, 1.0);
    for (std::size_t k = 1; k <= opt.K; ++k) {
      if (state.decisions[k - 1] != SprtDecision::kContinue) continue;
      std::size_t hi = order[k - 1], lo = order[k];
      WelchResult w = welch_statistic({attrs.ranked_value(hi), attrs.variance(hi), attrs.count(hi)},
                                      {attrs.ranked_value(lo), attrs.variance(lo), attrs.count(lo)},
                                      attrs.ranked_covariance(hi, lo), opt.budget.mode);
      ratios[k - 1] = sprt_likelihood_ratio(w.statistic, std::max(w.df, 1.0));
      state.last_statistic[k - 1] = w.statistic;
      state.last_df[k - 1] = w.df;
    }
    state = sprt_step(std::move(state), ratios, bounds);

    if (state.all_rejected()) {
      out.status = RunStatus::kConverged;
      break;
    }
    if (state.any_accepted()) {
      out.status = RunStatus::kAcceptedNull;
      break;
    }
    if (used >= cap) {
      out.status = RunStatus::kBudgetExhausted;
      break;
    }
  }

  out.converged = out.status == RunStatus::kConverged;
  out.total_samples = used * d;
  out.rounds = state.batches;
  out = finish(cols, opt, std::move(out));
  out.ranking.order = order;
  out.ranking.K = state.leading_rejections();
  for (std::size_t k = 1; k <= opt.K; ++k) {
    TestOutcome t;
    t.k = k;
    t.statistic = state.last_ratio[k - 1];
    t.df = state.last_df[k - 1];
    t.threshold = bounds.upper;
    t.rejected = state.decisions[k - 1] == SprtDecision::kRejectNull;
    out.ranking.steps.push_back(t);
    if (!t.rejected) break;
  }
  return out;
}

}  // namespace

StableAttribution global_topk(const LocalAttributionSource& source, const GlobalTopKOptions& opt) {
  const std::size_t d = source.dim();
  if (d < 2) throw InvalidArgument("need at least two features");
  if (opt.K < 1 || opt.K > d - 1) throw InvalidArgument("K must lie in [1, d - 1]");
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  return opt.strategy == GlobalStrategy::kResample ? topk_resample(source, opt)
                                                   : topk_sprt(source, opt);
}

MeanVarEstimate unbiased_abs_contribution(const MarginalValueFunction& v, std::size_t j,
                                          std::size_t n, Rng& rng) {
  return shapley_sampling(v, j, n, rng, Imputation::kSampled, Contribution::kAbsolute);
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

void write_attributions(std::ostream& out, const LocalAttributionMatrix& m) {
  out << "input_id";
  for (std::size_t j = 0; j < m.features(); ++j) out << ",feature_" << j;
  out << '\n';
  for (std::size_t i = 0; i < m.inputs(); ++i) {
    out << (m.input_ids.empty() ? static_cast<std::int64_t>(i) : m.input_ids[i]);
    for (std::size_t j = 0; j < m.features(); ++j)
      out << ',' << format_double(m.psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
}

LocalAttributionMatrix parse_attributions(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t d = 0;
  std::vector<std::vector<double>> rows;
  LocalAttributionMatrix out;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv(line);
    if (d == 0) {
      if (cells.size() < 2 || trim(cells[0]) != "input_id")
        throw ParseError(source, lineno, 1, "header must start with input_id and name at least one feature");
      d = cells.size() - 1;
      continue;
    }
    if (cells.size() != d + 1)
      throw ParseError(source, lineno, 1,
                       "expected " + std::to_string(d + 1) + " cells, found " + std::to_string(cells.size()));
    std::vector<double> row(d);
    std::size_t column = 1;
    for (std::size_t c = 0; c <= d; ++c) {
      std::string cell = trim(cells[c]);
      if (c == 0) {
        std::int64_t id = 0;
        auto res = std::from_chars(cell.data(), cell.data() + cell.size(), id);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
          throw ParseError(source, lineno, column, "bad input_id '" + cell + "'");
        out.input_ids.push_back(id);
      } else if (cell.empty()) {
        row[c - 1] = std::numeric_limits<double>::quiet_NaN();
      } else {
        double v = 0;
        auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
          throw ParseError(source, lineno, column, "bad attribution '" + cell + "'");
        row[c - 1] = v;
      }
      column += cells[c].size() + 1;
    }
    rows.push_back(std::move(row));
  }
  if (d == 0) throw ParseError(source, lineno, 1, "missing header");
  out.psi.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

LocalAttributionMatrix load_attributions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open attribution file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_attributions(buf.str(), path);
}

}  // namespace attr

#include "attr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "attr/bridge.hpp"
#include "attr/error.hpp"
#include "attr/kernelshap.hpp"
#include "attr/lime.hpp"
#include "attr/rankshap.hpp"
#include "attr/shapley_sampling.hpp"
#include "attr/sprt.hpp"
#include "attr/value_function.hpp"

namespace attr {

using nlohmann::ordered_json;

std::string to_string(Procedure p) {
  switch (p) {
    case Procedure::kRetro: return "retro";
    case Procedure::kRankShap: return "rankshap";
    case Procedure::kSprt: return "sprt";
    case Procedure::kSlime: return "slime";
    case Procedure::kGlobal: return "global";
  }
  return "unknown";
}

Procedure parse_procedure(const std::string& name) {
  if (name == "retro") return Procedure::kRetro;
  if (name == "rankshap") return Procedure::kRankShap;
  if (name == "sprt" || name == "sprt-shap") return Procedure::kSprt;
  if (name == "slime") return Procedure::kSlime;
  if (name == "global") return Procedure::kGlobal;
  throw ConfigError("unknown procedure '" + name + "'");
}

void ExperimentConfig::validate() const {
  bool file_global = procedure == Procedure::kGlobal && !attributions.empty();
  if (!file_global) {
    if (dataset.empty()) throw ConfigError("--dataset is required");
    if (model.empty() == bridge_cmd.empty())
      throw ConfigError("exactly one of --model and --bridge-cmd is required");
  }
  if (reps < 1) throw ConfigError("--reps must be at least 1");
  if (ks.empty() || alphas.empty()) throw ConfigError("need at least one K and one alpha");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  for (std::size_t k : ks)
    if (k < 1) throw ConfigError("K must be at least 1");
  if (!(train_fraction >= 0.0 && train_fraction < 1.0)) throw ConfigError("--split must lie in [0, 1)");
  if (!(na_threshold >= 0.0 && na_threshold <= 1.0)) throw ConfigError("NA threshold must lie in [0, 1]");
  if (!(buffer >= 1.0 && buffer <= 2.0)) throw ConfigError("--buffer must lie in [1, 2]");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("--beta must lie in (0, 1)");
  if (rows.empty() && inputs < 1) throw ConfigError("--inputs must be at least 1");
  if (workers < 1) throw ConfigError("worker count must be at least 1");
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["procedure"] = to_string(procedure);
  j["dataset"] = dataset;
  j["has_label"] = has_label;
  j["train_fraction"] = train_fraction;
  if (!model.empty()) j["model"] = model;
  if (!bridge_cmd.empty()) j["bridge_cmd"] = bridge_cmd;
  if (!attributions.empty()) j["attributions"] = attributions;
  j["k"] = ks;
  j["alpha"] = alphas;
  j["mode"] = mode == TestMode::kInference ? "inference" : "reproducibility";
  j["ranking"] = ranking == RankingMode::kSigned ? "signed" : "absolute";
  j["estimator"] = estimator == Estimator::kShapleySampling ? "sampling" : "kernelshap";
  if (procedure == Procedure::kGlobal)
    j["strategy"] = strategy == GlobalStrategy::kResample ? "resample" : "sprt";
  j["samples"] = samples;
  j["n0"] = n0;
  j["max_n"] = max_n;
  j["buffer"] = buffer;
  j["batch"] = batch;
  j["beta"] = beta;
  j["tol"] = tol;
  j["reps"] = reps;
  j["rows"] = rows;
  j["inputs"] = inputs;
  j["seed"] = seed;
  j["na_threshold"] = na_threshold;
  return j;
}

ExperimentContext load_context(const ExperimentConfig& config) {
  config.validate();
  ExperimentContext ctx;
  if (config.dataset.empty()) return ctx;
  ctx.data = load_dataset(config.dataset, config.has_label ? LabelColumn::kPresent : LabelColumn::kAbsent);
  if (config.train_fraction > 0.0) {
    auto [train, test] = train_test_split(*ctx.data, config.train_fraction, config.seed);
    ctx.background = std::move(train);
    ctx.explained = std::move(test);
  } else {
    ctx.background = *ctx.data;
    ctx.explained = *ctx.data;
  }
  const std::size_t d = ctx.data->features();
  if (!config.model.empty()) {
    ctx.owned_model = load_model(config.model);
  } else if (!config.bridge_cmd.empty()) {
    ctx.owned_model = std::make_unique<BridgeModel>(config.bridge_cmd, d);
  }
  if (ctx.owned_model) {
    if (ctx.owned_model->input_dim() != d)
      throw ConfigError("model expects " + std::to_string(ctx.owned_model->input_dim()) +
                        " features, dataset has " + std::to_string(d));
    ctx.model = ctx.owned_model.get();
    if (!ctx.model->thread_safe()) {
      ctx.serialized = std::make_unique<SerializedModel>(*ctx.owned_model);
      ctx.model = ctx.serialized.get();
    }
  }
  return ctx;
}

int exit_code_for(const RunSummary& s) {
  if (s.converged_runs == 0 && s.budget_runs > 0) return 2;
  return 0;
}

namespace {

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

struct Truth {
  std::vector<std::size_t> order;
  Vector values;
  bool exact = true;
};

struct RepResult {
  std::string status;
  std::string error;
  std::vector<std::size_t> order;  // full estimated order, or selections for slime
  std::size_t verified_k = 0;
  std::size_t total_samples = 0;
  std::vector<std::size_t> per_feature_samples;
  std::size_t rounds = 0;
  Vector estimates;
  bool converged = false;
  std::optional<bool> correct;
};

std::size_t or_default(std::size_t v, std::size_t fallback) { return v ? v : fallback; }

std::vector<std::size_t> explained_rows(const ExperimentConfig& c, const TabularDataset& explained) {
  std::vector<std::size_t> rows = c.rows;
  if (rows.empty())
    for (std::size_t i = 0; i < std::min(c.inputs, explained.rows()); ++i) rows.push_back(i);
  for (std::size_t r : rows)
    if (r >= explained.rows())
      throw ConfigError("row " + std::to_string(r) + " is outside the " +
                        std::to_string(explained.rows()) + " explained rows");
  return rows;
}

Truth local_truth(const ExperimentConfig& c, const ExperimentContext& ctx, const Vector& x) {
  const std::size_t d = x.size();
  Truth t;
  if (c.procedure == Procedure::kSlime) {
    // Reference K-LASSO order on a large pool.
    std::size_t max_n = or_default(c.max_n, 100'000);
    std::size_t pool = std::min<std::size_t>(10 * max_n, 1'000'000);
    Rng rng = make_rng(c.seed, {0x7e5fULL});
    auto samples = lime_perturb(*ctx.model, x, *ctx.background, pool, rng);
    t.order = lime_select(samples, d);
    t.values = Vector::Zero(static_cast<Eigen::Index>(d));
    t.exact = false;
    return t;
  }
  MarginalValueFunction v(*ctx.model, x, *ctx.background);
  if (d <= kMaxExactFeatures) {
    t.values = exact_shapley(v);
  } else {
    std::size_t n = 10 * or_default(c.max_n, 10'000);
    auto est = shapley_sampling_all(v, n, derive_seed(c.seed, {0x7e5fULL}));
    t.values.resize(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) t.values(static_cast<Eigen::Index>(j)) = est[j].mean;
    t.exact = false;
  }
  t.order = rank_order(t.values, c.ranking);
  return t;
}

void fill_from_stable(RepResult& r, const StableAttribution& s) {
  r.converged = s.converged;
  r.status = std::string(to_string(s.status));
  r.order = s.ranking.order;
  r.verified_k = s.ranking.K;
  r.total_samples = s.total_samples;
  r.per_feature_samples = s.per_feature_samples;
  r.rounds = s.rounds;
  r.estimates = s.attrs.estimates();
}

RepResult run_local(const ExperimentConfig& c, const ExperimentContext& ctx, const Vector& x,
                    std::size_t K, double alpha, std::uint64_t seed) {
  RepResult r;
  const std::size_t d = static_cast<std::size_t>(x.size());
  MarginalValueFunction v(*ctx.model, x, *ctx.background);
  switch (c.procedure) {
    case Procedure::kRetro: {
      AttributionSet attrs;
      if (c.estimator == Estimator::kShapleySampling) {
        std::size_t n = or_default(c.samples, 2048);
        attrs = AttributionSet::from_sampling(shapley_sampling_all(v, n, seed), c.ranking);
        r.total_samples = n * d;
        r.per_feature_samples.assign(d, n);
      } else {
        std::size_t n = or_default(c.samples, default_coalition_budget(d));
        KernelShapEstimator est(v, seed);
        est.add_samples(n);
        Vector phi = est.fit();
        BootstrapSummary boot = est.bootstrap(kDefaultBootstrapResamples);
        attrs = AttributionSet::from_covariance(std::move(phi), std::move(boot.covariance), n, c.ranking);
        r.total_samples = n;
        r.per_feature_samples.assign(d, n);
      }
      VerifiedRanking vr = verify_ranks(attrs, alpha, c.mode);
      r.converged = true;
      r.status = "converged";
      r.order = vr.order;
      r.verified_k = vr.K;
      r.estimates = attrs.estimates();
      break;
    }
    case Procedure::kRankShap: {
      SamplingBudget b;
      b.n0 = or_default(c.n0, b.n0);
      b.max_n = or_default(c.max_n, b.max_n);
      b.buffer_c = c.buffer;
      b.mode = c.mode;
      fill_from_stable(r, rankshap(v, K, alpha, b, seed, c.ranking));
      break;
    }
    case Procedure::kSprt: {
      SprtOptions o;
      o.K = K;
      o.alpha = alpha;
      o.beta = c.beta;
      o.batch = or_default(c.batch, o.batch);
      o.max_total = or_default(c.max_n, o.max_total);
      o.estimator = c.estimator == Estimator::kKernelShap ? ShapEstimator::kKernelShap
                                                          : ShapEstimator::kShapleySampling;
      o.ranking = c.ranking;
      o.mode = c.mode;
      fill_from_stable(r, sprt_shap(v, o, seed).result);
      break;
    }
    case Procedure::kSlime: {
      SlimeOptions o;
      o.K = K;
      o.alpha = alpha;
      o.n0 = or_default(c.n0, o.n0);
      o.max_n = or_default(c.max_n, o.max_n);
      o.tol = c.tol;
      Rng rng(seed);
      SelectionTrace t = slime_select(*ctx.model, x, *ctx.background, o, rng);
      r.converged = t.converged;
      r.status = t.converged ? "converged" : "budget_exhausted";
      r.order = t.ordered_features;
      r.verified_k = t.ordered_features.size();
      r.total_samples = t.pool_sizes.back();
      r.per_feature_samples.assign(d, t.pool_sizes.back());
      r.rounds = t.pool_sizes.size();
      break;
    }
    case Procedure::kGlobal:
      throw ConfigError("global runs are not local");
  }
  return r;
}

Truth global_truth(const ExperimentConfig& c, const ExperimentContext& ctx) {
  const TabularDataset& pool = *ctx.explained;
  const std::size_t d = pool.features();
  Truth t;
  t.values = Vector::Zero(static_cast<Eigen::Index>(d));
  Contribution kind = c.ranking == RankingMode::kAbsolute ? Contribution::kAbsolute : Contribution::kSigned;
  for (std::size_t i = 0; i < pool.rows(); ++i) {
    Vector x = pool.row(i).transpose();
    MarginalValueFunction v(*ctx.model, x, *ctx.background);
    if (d <= kMaxExactFeatures) {
      Game g = [&](const CoalitionMask& s) { return v.exhaustive(s); };
      t.values += kind == Contribution::kSigned ? exact_shapley(g, d) : exact_abs_contribution(g, d);
    } else {
      Rng rng = make_rng(c.seed, {0x7e5fULL, i});
      for (std::size_t j = 0; j < d; ++j)
        t.values(static_cast<Eigen::Index>(j)) +=
            shapley_sampling(v, j, 10 * c.local_permutations, rng, Imputation::kSampled, kind).mean;
      t.exact = false;
    }
  }
  t.values /= static_cast<double>(pool.rows());
  t.order = rank_order(t.values, RankingMode::kSigned);
  return t;
}

RepResult run_global(const ExperimentConfig& c, const ExperimentContext& ctx, std::size_t K,
                     double alpha, std::uint64_t seed) {
  Contribution kind = c.ranking == RankingMode::kAbsolute ? Contribution::kAbsolute : Contribution::kSigned;
  SamplingAttributionSource src(*ctx.model, *ctx.explained, *ctx.background, c.local_permutations,
                                seed, kind);
  GlobalTopKOptions o;
  o.K = K;
  o.alpha = alpha;
  o.strategy = c.strategy;
  o.budget.n0 = or_default(c.n0, 30);
  o.budget.max_n = or_default(c.max_n, 1'000);
  o.budget.buffer_c = c.buffer;
  o.budget.mode = c.mode;
  o.beta = c.beta;
  o.batch = or_default(c.batch, 50);
  o.max_total = or_default(c.max_n, 5'000);
  RepResult r;
  fill_from_stable(r, global_topk(src, o));
  return r;
}

ordered_json rep_json(std::size_t rep, const RepResult& r, std::size_t K) {
  ordered_json j;
  j["rep"] = rep;
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  std::vector<std::size_t> top(r.order.begin(), r.order.begin() + static_cast<std::ptrdiff_t>(std::min(K, r.order.size())));
  j["top"] = top;
  j["verified_k"] = r.verified_k;
  j["correct"] = r.correct ? ordered_json(*r.correct) : ordered_json(nullptr);
  j["total_samples"] = r.total_samples;
  j["per_feature_samples"] = r.per_feature_samples;
  j["rounds"] = r.rounds;
  std::vector<double> est(r.estimates.data(), r.estimates.data() + r.estimates.size());
  j["estimates"] = est;
  return j;
}

std::string fmt(double v, int prec = 3) {
  if (std::isnan(v)) return "NA";
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

// Global verification of a precomputed attribution file.
ExperimentReport run_file_global(const ExperimentConfig& c) {
  LocalAttributionMatrix m = load_attributions(c.attributions);
  if (c.ranking == RankingMode::kAbsolute) {
    std::cerr << "warning: ranking by mean |phi| carries no FWER guarantee; "
                 "use xi attributions (the global verb with --abs on a model) for the guaranteed path\n";
    m.psi = m.psi.cwiseAbs();
  }
  GlobalScores scores = global_scores(m);
  ExperimentReport rep;
  ordered_json& j = rep.json;
  j["config"] = c.to_json();
  j["source"] = m.origin == AttributionOrigin::kExact ? "exact" : "file";
  std::vector<double> theta(scores.theta().data(), scores.theta().data() + scores.theta().size());
  j["theta"] = theta;
  j["counts"] = scores.counts();
  std::ostringstream table;
  table << "alpha   verified_k  order\n";
  ordered_json cells = ordered_json::array();
  for (double alpha : c.alphas) {
    VerifiedRanking vr = verify_global_ranks(scores, alpha, c.mode);
    ordered_json cell;
    cell["alpha"] = alpha;
    cell["order"] = vr.order;
    cell["verified_k"] = vr.K;
    ordered_json steps = ordered_json::array();
    for (const auto& s : vr.steps)
      steps.push_back({{"k", s.k}, {"statistic", s.statistic}, {"df", s.df},
                       {"threshold", s.threshold}, {"rejected", s.rejected}});
    cell["steps"] = steps;
    cells.push_back(cell);
    table << std::left << std::setw(8) << fmt(alpha) << std::setw(12) << vr.K;
    for (std::size_t f : vr.order) table << f << ' ';
    table << '\n';
    rep.summary.converged_runs += 1;
  }
  j["cells"] = cells;
  rep.table = table.str();
  return rep;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& c, const ExperimentContext& ctx) {
  c.validate();
  if (c.procedure == Procedure::kGlobal && !c.attributions.empty()) return run_file_global(c);
  if (!ctx.model || !ctx.explained || !ctx.background) throw ConfigError("no model or dataset loaded");

  const bool global = c.procedure == Procedure::kGlobal;
  const std::size_t d = ctx.explained->features();
  std::vector<std::size_t> rows = global ? std::vector<std::size_t>{0} : explained_rows(c, *ctx.explained);
  for (std::size_t K : c.ks) {
    std::size_t limit = c.procedure == Procedure::kSlime ? d : d - 1;
    if (K > limit) throw ConfigError("K = " + std::to_string(K) + " exceeds " + std::to_string(limit));
  }

  std::vector<Truth> truths(rows.size());
  parallel_for(rows.size(), c.workers, [&](std::size_t i) {
    truths[i] = global ? global_truth(c, ctx) : local_truth(c, ctx, ctx.explained->row(rows[i]).transpose());
  });

  // Retro reports the verified prefix, so K only labels the cell.
  std::vector<std::size_t> ks = c.procedure == Procedure::kRetro ? std::vector<std::size_t>{d - 1} : c.ks;
  struct Cell {
    double alpha;
    std::size_t K;
  };
  std::vector<Cell> cells;
  for (double a : c.alphas)
    for (std::size_t K : ks) cells.push_back({a, K});

  const std::size_t per_cell = rows.size() * c.reps;
  std::vector<RepResult> results(cells.size() * per_cell);
  parallel_for(results.size(), c.workers, [&](std::size_t idx) {
    const Cell& cell = cells[idx / per_cell];
    std::size_t input = (idx % per_cell) / c.reps;
    std::size_t rep = idx % c.reps;
    std::uint64_t seed = derive_seed(c.seed, {rows[input], rep});
    RepResult& r = results[idx];
    try {
      r = global ? run_global(c, ctx, cell.K, cell.alpha, seed)
                 : run_local(c, ctx, ctx.explained->row(rows[input]).transpose(), cell.K, cell.alpha, seed);
      if (r.converged) {
        std::size_t check = c.procedure == Procedure::kRetro ? r.verified_k : cell.K;
        r.correct = top_k_correct(r.order, truths[input].order, check);
      }
    } catch (const std::exception& e) {
      r = RepResult{};
      r.status = "error";
      r.error = e.what();
    }
  });

  ExperimentReport rep;
  ordered_json& j = rep.json;
  j["config"] = c.to_json();
  bool exact = std::all_of(truths.begin(), truths.end(), [](const Truth& t) { return t.exact; });
  j["ground_truth"] = exact ? "exact" : "approximate";

  std::ostringstream table, series;
  table << "alpha   K   input  converged  errors  fwer    mean_samples\n";
  series << "alpha,k,input,rep,feature,samples\n";
  ordered_json jcells = ordered_json::array();
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    ordered_json jc;
    jc["alpha"] = cell.alpha;
    jc["k"] = c.procedure == Procedure::kRetro ? ordered_json(nullptr) : ordered_json(cell.K);
    ordered_json jinputs = ordered_json::array();
    std::size_t agg_runs = 0, agg_wrong = 0, included = 0;
    for (std::size_t in = 0; in < rows.size(); ++in) {
      std::size_t conv = 0, wrong = 0, errors = 0, budget = 0;
      double samples = 0;
      ordered_json jreps = ordered_json::array();
      for (std::size_t r = 0; r < c.reps; ++r) {
        const RepResult& res = results[ci * per_cell + in * c.reps + r];
        if (res.status == "error") {
          ++errors;
          ++rep.summary.error_runs;
        } else if (res.converged) {
          ++conv;
          ++rep.summary.converged_runs;
          if (res.correct && !*res.correct) ++wrong;
        } else {
          ++budget;
          ++rep.summary.budget_runs;
        }
        samples += static_cast<double>(res.total_samples);
        jreps.push_back(rep_json(r, res, c.procedure == Procedure::kSlime ? res.order.size() : cell.K));
        for (std::size_t f = 0; f < res.per_feature_samples.size(); ++f)
          series << cell.alpha << ',' << cell.K << ',' << rows[in] << ',' << r << ',' << f << ','
                 << res.per_feature_samples[f] << '\n';
      }
      double fwer = conv ? static_cast<double>(wrong) / static_cast<double>(conv) : std::nan("");
      bool include = static_cast<double>(conv) >= c.na_threshold * static_cast<double>(c.reps) && conv > 0;
      if (include) {
        ++included;
        agg_runs += conv;
        agg_wrong += wrong;
      }
      ordered_json ji;
      ji["row"] = global ? ordered_json(nullptr) : ordered_json(rows[in]);
      ji["truth"] = truths[in].order;
      std::vector<double> tv(truths[in].values.data(), truths[in].values.data() + truths[in].values.size());
      ji["truth_values"] = tv;
      ji["converged"] = conv;
      ji["budget_exhausted"] = budget;
      ji["errors"] = errors;
      ji["wrong"] = wrong;
      ji["fwer"] = conv ? ordered_json(fwer) : ordered_json(nullptr);
      ji["included"] = include;
      ji["reps"] = std::move(jreps);
      jinputs.push_back(std::move(ji));

      table << std::left << std::setw(8) << fmt(cell.alpha) << std::setw(4)
            << (c.procedure == Procedure::kRetro ? std::string("-") : std::to_string(cell.K))
            << std::setw(7) << (global ? std::string("all") : std::to_string(rows[in]))
            << std::setw(11) << (std::to_string(conv) + "/" + std::to_string(c.reps)) << std::setw(8)
            << errors << std::setw(8) << fmt(fwer) << fmt(samples / static_cast<double>(c.reps), 1)
            << '\n';
    }
    jc["inputs"] = std::move(jinputs);
    double agg = agg_runs ? static_cast<double>(agg_wrong) / static_cast<double>(agg_runs) : std::nan("");
    jc["aggregate"] = {{"fwer", agg_runs ? ordered_json(agg) : ordered_json(nullptr)},
                       {"runs", agg_runs},
                       {"wrong", agg_wrong},
                       {"inputs_included", included}};
    jcells.push_back(std::move(jc));
    table << "  aggregate fwer " << fmt(agg) << " over " << agg_runs << " converged runs, "
          << included << "/" << rows.size() << " inputs included\n";
  }
  j["cells"] = std::move(jcells);
  rep.table = table.str();
  rep.series_csv = series.str();
  return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentContext ctx = load_context(config);
  return run_experiment(config, ctx);
}

}  // namespace attr

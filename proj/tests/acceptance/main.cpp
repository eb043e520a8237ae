// attr_acceptance [criterion...]: prints one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <boost/math/distributions/non_central_t.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "attr/error.hpp"
#include "attr/experiment.hpp"
#include "attr/global.hpp"
#include "attr/kernelshap.hpp"
#include "attr/lars.hpp"
#include "attr/lime.hpp"
#include "attr/rankshap.hpp"
#include "attr/shapley_sampling.hpp"
#include "attr/sprt.hpp"
#include "support/fixtures.hpp"
#include "support/lasso_oracle.hpp"
#include "support/plan_cases.hpp"

using namespace attr;
using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double binomial_slack(double alpha, std::size_t R) {
  return 3.0 * std::sqrt(alpha * (1 - alpha) / static_cast<double>(R));
}

// The d = 8 linear fixture wired into the experiment harness.
struct LinearHarness {
  fixtures::LinearEight f;
  ExperimentContext ctx;

  LinearHarness() {
    auto inputs = f.inputs();
    Matrix X(static_cast<Eigen::Index>(inputs.size()), 8);
    for (std::size_t i = 0; i < inputs.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = inputs[i].transpose();
    ctx.explained.emplace(std::move(X), f.background.feature_names());
    ctx.background.emplace(f.background);
    ctx.model = &f.model;
  }

  ExperimentConfig config(Procedure p, std::size_t reps) const {
    ExperimentConfig c;
    c.procedure = p;
    c.dataset = "<linear8 fixture>";
    c.model = "<linear8 fixture>";
    c.reps = reps;
    c.rows = {0, 1, 2, 3, 4};
    c.seed = 20240611;
    return c;
  }
};

// Walks every (cell, input) of a report; `check` returns false on a violation.
bool per_input(const ordered_json& report, std::ostream& log,
               const std::function<bool(double alpha, std::size_t K, const ordered_json& input)>& check) {
  bool ok = true;
  for (const auto& cell : report["cells"]) {
    double alpha = cell["alpha"];
    std::size_t K = cell["k"].is_null() ? 0 : cell["k"].get<std::size_t>();
    for (const auto& in : cell["inputs"]) {
      bool good = !in["fwer"].is_null() && check(alpha, K, in);
      if (in["errors"].get<std::size_t>() > 0) {
        for (const auto& r : in["reps"])
          if (r.contains("error")) {
            log << "    first error: " << r["error"].get<std::string>() << "\n";
            break;
          }
      }
      log << "    alpha=" << alpha << (K ? " K=" + std::to_string(K) : std::string()) << " row=" << in["row"].get<std::size_t>()
          << " converged=" << in["converged"].get<std::size_t>() << " wrong=" << in["wrong"].get<std::size_t>()
          << " fwer=" << (in["fwer"].is_null() ? std::string("NA") : std::to_string(in["fwer"].get<double>()))
          << (good ? "" : "  <-- violation") << "\n";
      ok = ok && good;
    }
  }
  return ok;
}

// ---------------------------------------------------------------------------

bool oracle_equivalence(std::ostream& log) {
  auto t0 = Clock::now();
  auto models = fixtures::six_feature_models();
  auto bg = fixtures::gaussian_data(50, 6, 101);
  Vector x = fixtures::gaussian_data(1, 6, 102).row(0).transpose();
  bool ok = true;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    MarginalValueFunction v(*models[mi], x, bg);
    Vector exact = exact_shapley(v);
    double eff = std::abs(exact.sum() - (v.full_value() - v.empty_value_exhaustive()));
    auto est = shapley_sampling_all(v, 50'000, 7 + mi);
    double worst = 0;
    for (std::size_t j = 0; j < 6; ++j)
      worst = std::max(worst, std::abs(est[j].mean - exact(j)) / est[j].standard_error());
    bool good = eff <= 1e-9 && worst <= 3.0;
    log << "    model " << mi << ": efficiency gap " << eff << ", max |error|/SE " << worst << "\n";
    ok = ok && good;
  }
  double secs = seconds_since(t0);
  log << "    runtime " << secs << " s (limit 60)\n";
  return ok && secs < 60;
}

bool kernelshap_exactness(std::ostream& log) {
  bool ok = true;
  auto models = fixtures::six_feature_models();
  auto bg = fixtures::gaussian_data(20, 6, 201);
  Vector x = fixtures::gaussian_data(1, 6, 202).row(0).transpose();
  double worst_enum = 0, worst_eff = 0;
  std::size_t fits = 0;
  for (const auto& m : models) {
    MarginalValueFunction v(*m, x, bg);
    for (std::size_t d = 2; d <= 6; ++d) {
      // Sub-games on the first d features, others fixed at x.
      Game g = [&](const CoalitionMask& s) {
        CoalitionMask full(6, true);
        for (std::size_t j = 0; j < d; ++j) full.set(j, s.test(j));
        return v.exhaustive(full);
      };
      auto all = enumerate_coalitions(g, d);
      Vector fit = kernelshap_fit(all, g(CoalitionMask::empty(d)), g(CoalitionMask::full(d)));
      worst_enum = std::max(worst_enum, (fit - exact_shapley(g, d)).cwiseAbs().maxCoeff());
    }
    for (std::size_t n : {8, 20, 100, 500, 2060}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        KernelShapEstimator est(v, seed);
        est.add_samples(n);
        Vector phi;
        try {
          phi = est.fit();
        } catch (const SingularDesign&) {
          continue;
        }
        ++fits;
        worst_eff = std::max(worst_eff, std::abs(phi.sum() - (est.v_full() - est.v_empty())));
      }
    }
  }
  log << "    enumeration vs exact, d = 2..6: max |diff| " << worst_enum << "\n";
  log << "    efficiency over " << fits << " sampled fits: max gap " << worst_eff << "\n";
  ok = worst_enum <= 1e-8 && worst_eff <= 1e-8 && fits > 0;
  return ok;
}

bool retro_fwer(std::ostream& log) {
  auto t0 = Clock::now();
  LinearHarness h;
  const std::size_t R = 250;
  bool ok = true;
  for (Estimator e : {Estimator::kShapleySampling, Estimator::kKernelShap}) {
    ExperimentConfig c = h.config(Procedure::kRetro, R);
    c.estimator = e;
    c.alphas = {0.05, 0.1, 0.2};
    ExperimentReport rep = run_experiment(c, h.ctx);
    log << "  estimator " << (e == Estimator::kKernelShap ? "kernelshap" : "sampling") << "\n";
    ok = per_input(rep.json, log, [&](double alpha, std::size_t, const ordered_json& in) {
           return in["converged"].get<std::size_t>() == R &&
                  in["fwer"].get<double>() <= alpha + binomial_slack(alpha, R);
         }) && ok;
  }
  double secs = seconds_since(t0);
  log << "    runtime " << secs << " s (limit 900)\n";
  return ok && secs < 900;
}

bool rankshap_fwer(std::ostream& log) {
  auto t0 = Clock::now();
  LinearHarness h;
  const std::size_t R = 100;
  const std::size_t n0 = SamplingBudget{}.n0;
  bool ok = true;
  std::size_t converged = 0, retained = 0;
  for (auto [K, alpha] : {std::pair<std::size_t, double>{2, 0.1}, {3, 0.2}}) {
    ExperimentConfig c = h.config(Procedure::kRankShap, R);
    c.ks = {K};
    c.alphas = {alpha};
    ExperimentReport rep = run_experiment(c, h.ctx);
    ok = per_input(rep.json, log, [&](double a, std::size_t, const ordered_json& in) {
           return in["converged"].get<std::size_t>() > 0 && in["fwer"].get<double>() <= a;
         }) && ok;
    MeanVarEstimate rounds, samples;
    for (const auto& in : rep.json["cells"][0]["inputs"]) {
      for (const auto& r : in["reps"]) {
        rounds.add(r["rounds"].get<double>());
        samples.add(r["total_samples"].get<double>());
        if (r["status"] != "converged") continue;
        ++converged;
        Vector est(8);
        for (int j = 0; j < 8; ++j) est(j) = r["estimates"][j];
        auto order = rank_order(est, RankingMode::kSigned);
        bool all_n0 = true;
        for (std::size_t p = K + 1; p < order.size(); ++p)
          all_n0 = all_n0 && r["per_feature_samples"][order[p]].get<std::size_t>() == n0;
        retained += all_n0;
      }
    }
    log << "    K=" << K << ": mean retest rounds " << rounds.mean << ", mean total permutations " << samples.mean
        << "\n";
  }
  double frac = converged ? static_cast<double>(retained) / static_cast<double>(converged) : 0.0;
  log << "    features below rank K+1 kept n0 = " << n0 << " in " << retained << "/" << converged
      << " converged runs (" << frac << ", need >= 0.8)\n";
  double secs = seconds_since(t0);
  log << "    runtime " << secs << " s (limit 1200)\n";
  return ok && frac >= 0.8 && secs < 1200;
}

// Studentized ratio from two Simpson integrations of the chi-square mixture
// representation of the noncentral t density.
double nct_pdf_simpson(double t, double df, double ncp) {
  auto f = [&](double u) {
    if (u <= 0) return 0.0;
    double s = std::sqrt(u / df);
    double z = t * s - ncp;
    double chi = std::exp((df / 2 - 1) * std::log(u) - u / 2 - (df / 2) * std::log(2.0) - std::lgamma(df / 2));
    return std::exp(-z * z / 2) / std::sqrt(2 * M_PI) * s * chi;
  };
  double hi = df + 40 * std::sqrt(2 * df) + 60;
  const int n = 200000;
  double h = hi / n, acc = f(0) + f(hi);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4 : 2) * f(i * h);
  return acc * h / 3;
}

bool sprt_shap_criterion(std::ostream& log) {
  bool ok = true;

  // Converged-run FWER on the planted fixture.
  LinearHarness h;
  const std::size_t R = 100;
  for (auto [K, alpha] : {std::pair<std::size_t, double>{2, 0.1}, {3, 0.2}}) {
    ExperimentConfig c = h.config(Procedure::kSprt, R);
    c.ks = {K};
    c.alphas = {alpha};
    c.estimator = Estimator::kKernelShap;
    ExperimentReport rep = run_experiment(c, h.ctx);
    bool cell_ok = per_input(rep.json, log, [&](double a, std::size_t, const ordered_json& in) {
      return in["converged"].get<std::size_t>() > 0 && in["fwer"].get<double>() <= a;
    });
    log << "    aggregate fwer " << rep.json["cells"][0]["aggregate"]["fwer"] << "\n";
    ok = ok && cell_ok;
  }

  // Null fixture: the top pair has equal Shapley values.
  {
    LinearModel m(fixtures::vec({1.0, 1.0, 0.2}), 0.0);
    auto bg = fixtures::gaussian_data(100, 3, 301);
    Vector x = bg.column_means() + fixtures::vec({1.0, 1.0, 0.2});
    MarginalValueFunction v(m, x, bg);
    SprtOptions o;
    o.K = 1;
    o.alpha = 0.1;
    o.estimator = ShapEstimator::kShapleySampling;
    const std::size_t runs = 500;
    std::size_t rejected = 0, accepted = 0;
    MeanVarEstimate looks;
    for (std::size_t r = 0; r < runs; ++r) {
      SprtRun run = sprt_shap(v, o, derive_seed(302, {r}));
      rejected += run.state.decisions[0] == SprtDecision::kRejectNull;
      accepted += run.state.decisions[0] == SprtDecision::kAcceptNull;
      looks.add(static_cast<double>(run.state.batches));
    }
    double rate = static_cast<double>(rejected) / runs;
    double bound = o.alpha + binomial_slack(o.alpha, runs);
    log << "    null fixture: " << rejected << "/" << runs << " runs rejected (rate " << rate << ", bound "
        << bound << "), " << accepted << " accepted, mean looks " << looks.mean << "\n";
    ok = ok && rate <= bound;
  }

  // Likelihood ratio against two independent oracles.
  {
    double worst = 0;
    for (double df : {5.0, 30.0, 200.0}) {
      for (int i = -20; i <= 20; ++i) {
        double T = 0.25 * i;
        double a = std::abs(T);
        double boost_ratio = boost::math::pdf(boost::math::non_central_t(df, a), a) /
                             boost::math::pdf(boost::math::students_t(df), a);
        double quad_ratio = nct_pdf_simpson(a, df, a) / nct_pdf_simpson(a, df, 0.0);
        double got = sprt_likelihood_ratio(T, df);
        for (double ref : {boost_ratio, quad_ratio}) {
          double expect = T >= 0 ? ref : 1.0 / ref;
          worst = std::max(worst, std::abs(got - expect) / std::max(1.0, expect));
        }
      }
    }
    log << "    ratio vs quadrature, T in [-5, 5], df in {5, 30, 200}: max rel. error " << worst << "\n";
    ok = ok && worst <= 1e-6;
  }
  return ok;
}

bool slime_selection(std::ostream& log) {
  bool ok = true;
  LinearHarness h;
  const std::size_t R = 100;
  for (auto [K, alpha] : {std::pair<std::size_t, double>{2, 0.1}, {3, 0.2}}) {
    ExperimentConfig c = h.config(Procedure::kSlime, R);
    c.ks = {K};
    c.alphas = {alpha};
    ExperimentReport rep = run_experiment(c, h.ctx);
    log << "    reference truth: " << rep.json["ground_truth"] << "\n";
    ok = per_input(rep.json, log, [&](double a, std::size_t, const ordered_json& in) {
           return in["converged"].get<std::size_t>() > 0 && in["fwer"].get<double>() <= a;
         }) && ok;
  }

  std::mt19937_64 rng(2025);
  std::normal_distribution<double> z;
  std::size_t agree = 0;
  for (int design = 0; design < 20; ++design) {
    const int n = 80, d = 8;
    Matrix Z(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) Z(i, j) = z(rng) + (j > 0 ? 0.5 * Z(i, j - 1) : 0.0);
    Z = Z.rowwise() - Z.colwise().mean();
    Vector beta(d);
    for (int j = 0; j < d; ++j) beta(j) = (j % 3 == 1 ? 0.0 : 1.5 * z(rng));
    Vector y = Z * beta;
    for (int i = 0; i < n; ++i) y(i) += z(rng);
    y.array() -= y.mean();
    LarsPath path(Z, y);
    std::vector<std::size_t> entries;
    while (entries.size() < 5 && !path.exhausted()) {
      std::size_t j = path.next();
      if (std::find(entries.begin(), entries.end(), j) == entries.end()) entries.push_back(j);
    }
    bool same = entries == fixtures::lasso_entry_order(Z, y, entries.size());
    agree += same;
  }
  log << "    LARS first-entry order matches coordinate-descent path on " << agree << "/20 designs\n";
  return ok && agree == 20;
}

bool sample_size_formulas(std::ostream& log) {
  std::size_t good = 0, total = 0;
  for (const auto& c : fixtures::kPlanCases) {
    TestMode mode = c.factor == 2 ? TestMode::kReproducibility : TestMode::kInference;
    SamplePlan eq = plan_sample_sizes_for_quantile(c.delta, c.var_a, c.var_b, c.t, AllocationScheme::kEqual, mode);
    SamplePlan pr = plan_sample_sizes_for_quantile(c.delta, c.var_a, c.var_b, c.t,
                                                   AllocationScheme::kVarianceProportional, mode);
    bool same = eq.n_a == c.equal && eq.n_b == c.equal && pr.n_a == c.prop_a && pr.n_b == c.prop_b;
    good += same;
    ++total;
    if (!same)
      log << "    mismatch delta=" << c.delta << " var=(" << c.var_a << "," << c.var_b << ") got (" << eq.n_a
          << "; " << pr.n_a << "," << pr.n_b << ")\n";
  }
  log << "    " << good << "/" << total << " (10 tuples x 2 modes) match exact rational ceilings\n";
  return good == total;
}

// psi(i, .) = theta + shared factor + noise, regenerated from (seed, i).
class SyntheticGlobalSource final : public LocalAttributionSource {
 public:
  SyntheticGlobalSource(Vector theta, std::uint64_t seed) : theta_(std::move(theta)), seed_(seed) {}
  std::size_t dim() const override { return static_cast<std::size_t>(theta_.size()); }
  std::size_t inputs() const override { return std::numeric_limits<std::size_t>::max(); }
  double attribute(std::size_t i, std::size_t j) const override { return attribute_all(i)(j); }
  Vector attribute_all(std::size_t i) const override {
    Rng rng = make_rng(seed_, {i});
    std::normal_distribution<double> z;
    double shared = z(rng);
    Vector out(theta_.size());
    for (Eigen::Index j = 0; j < theta_.size(); ++j) out(j) = theta_(j) + 0.8 * shared + z(rng);
    return out;
  }

 private:
  Vector theta_;
  std::uint64_t seed_;
};

bool global_importance(std::ostream& log) {
  bool ok = true;

  // Rademacher contributions: phi = 0 but xi = 1.
  {
    FunctionModel m(2, [](const auto& r) { return r(0) + r(1) - 2 * r(0) * r(1); });
    auto bg = fixtures::single_row({0.0, 0.0});
    MarginalValueFunction v(m, fixtures::vec({1.0, 1.0}), bg);
    for (std::size_t j = 0; j < 2; ++j) {
      Rng a = make_rng(401, {j}), b = make_rng(402, {j});
      MeanVarEstimate phi = shapley_sampling(v, j, 10'000, a);
      MeanVarEstimate xi = unbiased_abs_contribution(v, j, 10'000, b);
      bool good = std::abs(phi.mean) <= 3 * phi.standard_error() && std::abs(xi.mean - 1.0) <= 1e-12;
      log << "    feature " << j << ": phi " << phi.mean << " (SE " << phi.standard_error() << "), xi " << xi.mean
          << "\n";
      ok = ok && good;
    }
  }

  Vector theta = fixtures::vec({3.0, 2.6, 2.2, 1.9, 1.0, 0.5});
  std::vector<std::size_t> truth = rank_order(theta, RankingMode::kSigned);

  // Paired verification on fixed matrices.
  {
    const std::size_t R = 250, n = 100;
    for (double alpha : {0.1, 0.2}) {
      std::size_t wrong = 0, verified = 0;
      for (std::size_t r = 0; r < R; ++r) {
        SyntheticGlobalSource src(theta, derive_seed(403, {r}));
        LocalAttributionMatrix m;
        m.psi.resize(n, 6);
        for (std::size_t i = 0; i < n; ++i) m.psi.row(i) = src.attribute_all(i).transpose();
        VerifiedRanking vr = verify_global_ranks(global_scores(m), alpha);
        verified += vr.K;
        wrong += !top_k_correct(vr.order, truth, vr.K);
      }
      double fwer = static_cast<double>(wrong) / R;
      log << "    paired verification alpha=" << alpha << ": FWER " << fwer << " over " << R
          << " reruns, mean verified K " << static_cast<double>(verified) / R << "\n";
      ok = ok && fwer <= alpha;
    }
  }

  // Adaptive top-K over an input stream, both strategies.
  for (GlobalStrategy st : {GlobalStrategy::kResample, GlobalStrategy::kSprt}) {
    const std::size_t R = 100;
    std::size_t conv = 0, wrong = 0;
    for (std::size_t r = 0; r < R; ++r) {
      SyntheticGlobalSource src(theta, derive_seed(404, {r}));
      GlobalTopKOptions o;
      o.K = 2;
      o.alpha = 0.2;
      o.strategy = st;
      o.budget.n0 = 30;
      o.budget.max_n = 2000;
      o.max_total = 2000;
      StableAttribution out = global_topk(src, o);
      if (!out.converged) continue;
      ++conv;
      wrong += !top_k_correct(out.ranking.order, truth, 2);
    }
    double fwer = conv ? static_cast<double>(wrong) / conv : 1.0;
    log << "    global_topk " << (st == GlobalStrategy::kSprt ? "sprt" : "resample") << " K=2 alpha=0.2: "
        << conv << "/" << R << " converged, FWER " << fwer << "\n";
    ok = ok && conv > 0 && fwer <= 0.2;
  }
  return ok;
}

struct Captured {
  int code = -1;
  std::string out;
};

Captured run_cli(const std::string& args) {
  std::string cmd = std::string(ATTR_CLI) + " " + args + " 2>/dev/null";
  Captured c;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return c;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) c.out.append(buf, n);
  int status = pclose(p);
  c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return c;
}

std::string slurp(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return "<missing>";
  std::string s;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) s.append(buf, n);
  std::fclose(f);
  return s;
}

bool cli_determinism(std::ostream& log) {
  const std::string data = std::string(ATTR_DATA_DIR);
  const std::string common = " --dataset " + data + "/linear8.csv --model " + data + "/linear8.model --seed 77";
  const std::vector<std::string> runs = {
      "retro" + common + " --row 0,3 --reps 2 --samples 300",
      "retro" + common + " --row 1 --reps 2 --estimator kernelshap",
      "rankshap" + common + " --row 0,1 --reps 3 --k 2 --alpha 0.1,0.2",
      "sprt" + common + " --row 2 --reps 2 --k 2 --estimator kernelshap --batch 200",
      "sprt" + common + " --row 2 --reps 2 --k 1 --batch 100 --max-n 2000",
      "slime" + common + " --row 0 --reps 2 --k 1 --n0 500 --max-n 4000",
      "global" + common + " --abs --k 2 --reps 2 --permutations 20 --max-n 300",
      "experiment --procedure rankshap" + common + " --row 4 --reps 2 --k 3",
  };
  bool ok = true;
  for (const auto& args : runs) {
    Captured a = run_cli(args), b = run_cli(args);
    bool same = a.code == b.code && (a.code == 0 || a.code == 2) && a.out == b.out && !a.out.empty();
    log << "    attr " << args.substr(0, args.find(' ')) << ": exit " << a.code << ", " << a.out.size()
        << " bytes, " << (same ? "identical" : "DIFFERENT") << "\n";
    ok = ok && same;
  }
  // --out writes the report and the sample-count series to files.
  const std::string out1 = "/tmp/attr_acceptance_det_1.json", out2 = "/tmp/attr_acceptance_det_2.json";
  run_cli("rankshap" + common + " --row 0 --reps 2 --out " + out1);
  run_cli("rankshap" + common + " --row 0 --reps 2 --out " + out2);
  bool files = slurp(out1) == slurp(out2) && slurp(out1 + ".series.csv") == slurp(out2 + ".series.csv") &&
               slurp(out1) != "<missing>";
  log << "    --out report and series files " << (files ? "identical" : "DIFFERENT") << "\n";
  return ok && files;
}

const std::map<std::string, std::function<bool(std::ostream&)>>& registry() {
  static const std::map<std::string, std::function<bool(std::ostream&)>> r = {
      {"oracle_equivalence", oracle_equivalence},
      {"kernelshap_exactness", kernelshap_exactness},
      {"retro_fwer", retro_fwer},
      {"rankshap_fwer", rankshap_fwer},
      {"sprt_shap", sprt_shap_criterion},
      {"slime_selection", slime_selection},
      {"sample_size_formulas", sample_size_formulas},
      {"global_importance", global_importance},
      {"cli_determinism", cli_determinism},
  };
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> names;
  for (int i = 1; i < argc; ++i) names.emplace_back(argv[i]);
  if (names.empty())
    for (const auto& [name, fn] : registry()) names.push_back(name);

  int failures = 0;
  for (const auto& name : names) {
    auto it = registry().find(name);
    if (it == registry().end()) {
      std::cout << "FAIL " << name << " (unknown criterion)\n";
      ++failures;
      continue;
    }
    auto t0 = Clock::now();
    std::ostringstream log;
    bool pass = false;
    try {
      pass = it->second(log);
    } catch (const std::exception& e) {
      log << "    exception: " << e.what() << "\n";
    }
    std::cout << log.str();
    std::cout << (pass ? "PASS " : "FAIL ") << name << " (" << seconds_since(t0) << " s)" << std::endl;
    failures += !pass;
  }
  return failures == 0 ? 0 : 1;
}

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "attr/error.hpp"
#include "attr/experiment.hpp"

namespace {

struct Flags {
  attr::ExperimentConfig cfg;
  std::string mode = "inference";
  std::string estimator = "sampling";
  std::string strategy = "resample";
  std::string procedure;
  bool abs = false;
  std::string out;
};

void add_common(CLI::App* cmd, Flags& f) {
  auto& c = f.cfg;
  cmd->add_option("--dataset", c.dataset, "CSV with a header row");
  cmd->add_flag("--has-label", c.has_label, "last dataset column is a label");
  cmd->add_option("--split", c.train_fraction,
                  "train fraction; background from train rows, inputs from test rows (0 = no split)");
  cmd->add_option("--model", c.model, "plain-text model file");
  cmd->add_option("--bridge-cmd", c.bridge_cmd, "command speaking the JSON line protocol");
  cmd->add_option("--k", c.ks, "top-K (comma list sweeps)")->delimiter(',');
  cmd->add_option("--alpha", c.alphas, "FWER level (comma list sweeps)")->delimiter(',');
  cmd->add_option("--mode", f.mode, "inference or reproducibility")
      ->check(CLI::IsMember({"inference", "reproducibility"}));
  cmd->add_flag("--abs", f.abs, "rank by absolute attribution");
  cmd->add_option("--estimator", f.estimator, "sampling or kernelshap (retro, sprt)")
      ->check(CLI::IsMember({"sampling", "kernelshap"}));
  cmd->add_option("--strategy", f.strategy, "resample or sprt (global)")
      ->check(CLI::IsMember({"resample", "sprt"}));
  cmd->add_option("--samples", c.samples, "retro budget per feature (sampling) or coalitions (kernelshap)");
  cmd->add_option("--n0", c.n0, "initial samples");
  cmd->add_option("--max-n", c.max_n, "sample cap");
  cmd->add_option("--buffer", c.buffer, "RankSHAP buffer factor in [1, 2]");
  cmd->add_option("--batch", c.batch, "SPRT batch size");
  cmd->add_option("--beta", c.beta, "SPRT type II error");
  cmd->add_option("--tol", c.tol, "S-LIME p-value tolerance");
  cmd->add_option("--permutations", c.local_permutations, "global: permutations per local attribution");
  cmd->add_option("--attributions", c.attributions, "global: precomputed local attribution CSV");
  cmd->add_option("--reps", c.reps, "repetitions per input");
  cmd->add_option("--row", c.rows, "explained row indices (comma list)")->delimiter(',');
  cmd->add_option("--inputs", c.inputs, "explain the first N rows when --row is absent");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--na-threshold", c.na_threshold, "min converged fraction for an input to count");
  cmd->add_option("--out", f.out, "write the JSON report here (series CSV next to it)");
}

int run(Flags& f) {
  auto& c = f.cfg;
  if (!f.procedure.empty()) c.procedure = attr::parse_procedure(f.procedure);
  c.mode = f.mode == "inference" ? attr::TestMode::kInference : attr::TestMode::kReproducibility;
  c.ranking = f.abs ? attr::RankingMode::kAbsolute : attr::RankingMode::kSigned;
  c.estimator = f.estimator == "kernelshap" ? attr::Estimator::kKernelShap : attr::Estimator::kShapleySampling;
  c.strategy = f.strategy == "sprt" ? attr::GlobalStrategy::kSprt : attr::GlobalStrategy::kResample;
  if (const char* w = std::getenv("ATTR_WORKERS")) {
    try {
      long n = std::stol(w);
      if (n < 1) throw std::invalid_argument(w);
      c.workers = static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw attr::ConfigError(std::string("ATTR_WORKERS must be a positive integer, got '") + w + "'");
    }
  }

  attr::ExperimentReport rep = attr::run_experiment(c);
  std::string json = rep.json.dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << json;
    std::cerr << rep.table;
  } else {
    std::ofstream out(f.out, std::ios::binary);
    if (!out) throw attr::ConfigError("cannot write " + f.out);
    out << json;
    if (!rep.series_csv.empty()) {
      std::ofstream series(f.out + ".series.csv", std::ios::binary);
      series << rep.series_csv;
    }
    std::cout << rep.table;
  }
  return attr::exit_code_for(rep.summary);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature attributions with verified top-K rankings"};
  app.require_subcommand(1);
  Flags f;

  struct Verb {
    const char* name;
    const char* help;
    attr::Procedure proc;
  };
  const Verb verbs[] = {
      {"retro", "verify the ranking of a fixed-budget estimate", attr::Procedure::kRetro},
      {"rankshap", "adaptive top-K Shapley Sampling", attr::Procedure::kRankShap},
      {"sprt", "sequential top-K testing", attr::Procedure::kSprt},
      {"slime", "top-K LIME selection with FWER control", attr::Procedure::kSlime},
      {"global", "global importance ranking", attr::Procedure::kGlobal},
  };
  for (const Verb& v : verbs) {
    CLI::App* cmd = app.add_subcommand(v.name, v.help);
    add_common(cmd, f);
    attr::Procedure p = v.proc;
    cmd->callback([&f, p] { f.cfg.procedure = p; });
  }
  CLI::App* exp = app.add_subcommand("experiment", "Monte Carlo FWER sweep for any procedure");
  add_common(exp, f);
  exp->add_option("--procedure", f.procedure, "retro|rankshap|sprt|slime|global")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return run(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attr/dataset.hpp"
#include "attr/global.hpp"
#include "attr/model.hpp"
#include "attr/rank_verify.hpp"

namespace attr {

enum class Procedure { kRetro, kRankShap, kSprt, kSlime, kGlobal };
enum class Estimator { kShapleySampling, kKernelShap };

std::string to_string(Procedure p);
Procedure parse_procedure(const std::string& name);

struct ExperimentConfig {
  Procedure procedure = Procedure::kRankShap;

  std::string dataset;
  bool has_label = false;
  double train_fraction = 0.0;  // 0: no split, explain and impute from the same rows
  std::string model;
  std::string bridge_cmd;
  std::string attributions;  // global only: precomputed local attributions

  std::vector<std::size_t> ks{2};
  std::vector<double> alphas{0.1};
  TestMode mode = TestMode::kInference;
  RankingMode ranking = RankingMode::kSigned;
  Estimator estimator = Estimator::kShapleySampling;
  GlobalStrategy strategy = GlobalStrategy::kResample;

  // Zero means "procedure default".
  std::size_t samples = 0;  // retro: permutations per feature or coalitions
  std::size_t n0 = 0;
  std::size_t max_n = 0;
  double buffer = 1.1;
  std::size_t batch = 0;
  double beta = 0.2;
  double tol = 1e-4;
  std::size_t local_permutations = 100;  // global: permutations per local attribution

  std::size_t reps = 1;
  std::vector<std::size_t> rows;  // explained rows; empty: the first `inputs` rows
  std::size_t inputs = 1;
  std::uint64_t seed = 0;
  double na_threshold = 0.75;
  std::size_t workers = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// Loaded objects behind a config.
struct ExperimentContext {
  std::optional<TabularDataset> data;
  std::optional<TabularDataset> background;  // imputation rows
  std::optional<TabularDataset> explained;   // rows that get explained
  std::unique_ptr<Model> owned_model;
  std::unique_ptr<Model> serialized;  // wraps owned_model when it is not thread safe
  const Model* model = nullptr;
};

ExperimentContext load_context(const ExperimentConfig& config);

struct RunSummary {
  std::size_t converged_runs = 0;
  std::size_t budget_runs = 0;  // budget exhausted or accepted null
  std::size_t error_runs = 0;
};

struct ExperimentReport {
  nlohmann::ordered_json json;
  std::string table;
  std::string series_csv;  // per-run, per-feature sample counts
  RunSummary summary;
};

// Runs every (alpha, K) cell for every explained input and repetition.
// Repetition r of input row i uses seed derive_seed(seed, {i, r}).
ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentContext& ctx);
ExperimentReport run_experiment(const ExperimentConfig& config);

// 0 success, 2 when no run converged and some ran out of budget.
int exit_code_for(const RunSummary& summary);

}  // namespace attr

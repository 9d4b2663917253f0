#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ldprec/data.hpp"
#include "ldprec/pipeline.hpp"

namespace ldprec {

struct ExperimentConfig {
  std::string dataset = "movielens";
  std::filesystem::path data_path;  // empty: default location for the dataset
  std::vector<MechanismKind> mechanisms{MechanismKind::kBlp};
  std::vector<PredictorKind> predictors{PredictorKind::kMogMf};
  std::vector<double> epsilons{0.1, 0.5, 1.0, 2.0, 3.0};
  bool allow_any_epsilon = false;
  std::size_t folds = 10;
  std::vector<std::size_t> only_folds;  // empty: every fold
  std::size_t components = 3;
  std::size_t latent_dim = 20;
  std::size_t max_iters = 100;
  double tol = 1e-4;
  // Chosen on non-private Movielens validation splits.
  double mog_ridge = 0.2;
  double sgd_ridge = 0.1;
  double learning_rate = 0.005;
  std::size_t epochs = 100;
  FillStrategy fill = FillStrategy::kGlobalMean;
  bool center = true;
  std::uint64_t seed = 1;
  std::optional<double> subsample;
  bool clip_predictions = false;
  std::optional<double> relevance_threshold;
  std::size_t top_k = 10;
  bool timing = false;
  std::filesystem::path out;

  // Throws ConfigError.
  void validate() const;
  std::filesystem::path resolved_data_path() const;
  // Compact key=value;... form embedded in every CSV row.
  std::string provenance() const;
};

struct ReportRow {
  std::string method;
  MechanismKind mechanism;
  PredictorKind predictor;
  std::optional<double> epsilon;  // none for non-private rows
  FoldResult result;
};

struct ExperimentReport {
  std::string dataset;
  std::string dataset_sha256;
  std::size_t entries = 0;
  double relevance_threshold = 0.0;
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  CommLedger ledger;
  std::vector<std::string> notes;
};

// Loads (and optionally subsamples) the configured dataset.
LoadedDataset load_experiment_data(const ExperimentConfig& config);

// Grid order: mechanism, predictor, epsilon, fold. Non-private mechanisms run
// once per fold regardless of the epsilon list. Progress lines go to
// `progress` when given.
ExperimentReport run_experiment(const ExperimentConfig& config, const LoadedDataset& data,
                                std::ostream* progress = nullptr);
ExperimentReport run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

// Header plus one row per (grid point, fold). Byte-identical for identical
// inputs unless wall time is included.
void write_report_csv(const ExperimentReport& report, std::ostream& out);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Entry point shared by the executable and the tests. Exit codes: 0 success,
// 1 configuration error, 2 data error, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ldprec

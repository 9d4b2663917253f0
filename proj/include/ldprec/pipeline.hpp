#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldprec/baseline.hpp"
#include "ldprec/eval.hpp"
#include "ldprec/mechanism.hpp"
#include "ldprec/mog.hpp"
#include "ldprec/sparse_matrix.hpp"

namespace ldprec {

enum class PredictorKind { kMogMf, kMf, kSvd };

std::string_view to_string(PredictorKind kind);
PredictorKind parse_predictor(std::string_view name);

// What one fold's users send to the service provider: the perturbed
// training entries and nothing else. Only make_upload can build one.
class Upload {
 public:
  const SparseRatingMatrix& ratings() const noexcept { return ratings_; }
  MechanismKind mechanism() const noexcept { return mechanism_; }
  double scale() const noexcept { return scale_; }
  // Users that sent at least one rating.
  std::size_t senders() const noexcept { return senders_; }

 private:
  friend Upload make_upload(const SparseRatingMatrix&, SparseRatingMatrix, const Perturber&);
  Upload(SparseRatingMatrix ratings, MechanismKind mechanism, double scale, std::size_t senders)
      : ratings_(std::move(ratings)), mechanism_(mechanism), scale_(scale), senders_(senders) {}

  SparseRatingMatrix ratings_;
  MechanismKind mechanism_;
  double scale_;
  std::size_t senders_;
};

// Wraps perturbed training data for transmission. In private modes every
// cell is compared against the true rating it was derived from: a bitwise
// copy is a leak unless the mechanism can legitimately emit that value
// (the clamp atoms at l and u). Throws PrivacyBoundaryError on a leak and
// DomainError when the sparsity patterns differ.
Upload make_upload(const SparseRatingMatrix& truth, SparseRatingMatrix perturbed,
                   const Perturber& perturber);

struct CommLedger {
  std::uint64_t user_to_sp_messages = 0;
  std::uint64_t user_to_sp_payload = 0;  // rating units
  std::uint64_t sp_to_user_messages = 0;
  std::uint64_t sp_to_user_payload = 0;

  void record(const Upload& upload);
  CommLedger& operator+=(const CommLedger& other) noexcept;
  bool operator==(const CommLedger&) const = default;
  std::uint64_t user_to_sp_bytes(std::size_t unit_bytes) const { return user_to_sp_payload * unit_bytes; }
};

struct PipelineConfig {
  MechanismKind mechanism = MechanismKind::kBlp;
  PredictorKind predictor = PredictorKind::kMogMf;
  double epsilon = 1.0;
  FitConfig mog;
  SgdConfig sgd;
  FillStrategy fill = FillStrategy::kGlobalMean;
  bool clip_predictions = false;
  // MF and MoG-MF fit the upload minus its mean and add the mean back.
  bool center = true;
  std::optional<double> relevance_threshold;  // defaults per rating domain
  std::size_t top_k = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FoldResult {
  std::size_t fold = 0;
  double rmse = 0.0;
  RetrievalScores retrieval;
  ConfusionCounts confusion;
  std::size_t train_entries = 0;
  std::size_t test_entries = 0;
  std::size_t cold_start = 0;  // test cells predicted with the training mean
  std::size_t iterations = 0;
  std::size_t reinitializations = 0;
  double scale = 0.0;
  double wall_seconds = 0.0;
  CommLedger ledger;
};

struct PipelineResult {
  std::vector<FoldResult> folds;
  CommLedger ledger;  // summed over folds
};

// For each fold: users perturb their training ratings once, the service
// provider fits the predictor on the upload alone, and the untouched held-out
// ratings score the predictions. `only_folds` restricts the run to a subset.
PipelineResult run_private_pipeline(const SparseRatingMatrix& ratings, const FoldPlan& plan,
                                    const PipelineConfig& config,
                                    std::span<const std::size_t> only_folds = {});

struct CommRow {
  std::string method;
  std::string user_to_sp;
  std::string sp_to_user;
  std::optional<double> modeled_bytes_per_iteration;
  std::string note;
};

struct CommStats {
  std::size_t items = 0;
  std::size_t training_entries = 0;
  std::size_t latent_dim = 20;
  std::size_t value_bytes = 8;
};

// Upload/download shape of the one-shot schemes against the iterative
// gradient-exchange scheme, whose per-iteration download is modeled as
// items x latent_dim x value_bytes.
std::vector<CommRow> compare_communication(const CommStats& stats);

// Per-iteration gradient-exchange payload in MB as published for Movielens.
inline constexpr double kPublishedPgMfMegabytes = 0.15;

}  // namespace ldprec

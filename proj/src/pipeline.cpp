#include "ldprec/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstring>

#include "ldprec/error.hpp"
#include "ldprec/random.hpp"

namespace ldprec {
namespace {

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

struct Fitted {
  FactorModel factors;
  double offset = 0.0;
  std::size_t iterations = 0;
  std::size_t reinitializations = 0;
};

// Service-provider side: sees the upload only.
// The upload shifted by its own mean, on a correspondingly shifted domain.
SparseRatingMatrix centered(const SparseRatingMatrix& r, double offset) {
  std::vector<Rating> entries(r.entries().begin(), r.entries().end());
  for (Rating& e : entries) e.value -= offset;
  return {r.users(), r.items(), std::move(entries),
          RatingDomain(r.domain().lower() - offset, r.domain().upper() - offset)};
}

Fitted fit_predictor(const Upload& upload, const PipelineConfig& config, std::size_t fold) {
  const std::uint64_t seed = derive_seed(config.seed, streams::kFit, fold);
  const double offset = config.center ? upload.ratings().mean() : 0.0;
  switch (config.predictor) {
    case PredictorKind::kMogMf: {
      FitConfig fc = config.mog;
      fc.seed = seed;
      auto result = fit(config.center ? centered(upload.ratings(), offset) : upload.ratings(), fc);
      return {std::move(result.model.factors), offset, result.report.iterations,
              result.report.reinitializations.size()};
    }
    case PredictorKind::kMf: {
      SgdConfig sc = config.sgd;
      sc.seed = seed;
      auto result =
          fit_mf_sgd(config.center ? centered(upload.ratings(), offset) : upload.ratings(), sc);
      return {std::move(result.model.factors), offset, sc.epochs, 0};
    }
    case PredictorKind::kSvd: {
      auto model = fit_svd(upload.ratings(), config.mog.latent_dim, config.fill);
      return {std::move(model.factors), 0.0, 1, 0};
    }
  }
  throw ConfigError("unknown predictor");
}

}  // namespace

std::string_view to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kMogMf: return "mog-mf";
    case PredictorKind::kMf: return "mf";
    case PredictorKind::kSvd: return "svd";
  }
  return "?";
}

PredictorKind parse_predictor(std::string_view name) {
  if (name == "mog-mf") return PredictorKind::kMogMf;
  if (name == "mf") return PredictorKind::kMf;
  if (name == "svd") return PredictorKind::kSvd;
  throw ConfigError("unknown predictor '" + std::string(name) + "' (expected mog-mf, mf or svd)");
}

Upload make_upload(const SparseRatingMatrix& truth, SparseRatingMatrix perturbed,
                   const Perturber& perturber) {
  if (truth.users() != perturbed.users() || truth.items() != perturbed.items() ||
      truth.size() != perturbed.size()) {
    throw DomainError("perturbed upload does not match the training pattern");
  }
  const RatingDomain& domain = truth.domain();
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const Rating& t = truth[k];
    const Rating& p = perturbed[k];
    if (t.user != p.user || t.item != p.item) {
      throw DomainError("perturbed upload does not match the training pattern");
    }
    if (!perturber.is_private() || !same_bits(t.value, p.value)) continue;
    const bool atom = perturber.kind() == MechanismKind::kLaplaceClamp &&
                      (t.value == domain.lower() || t.value == domain.upper());
    if (!atom) {
      throw PrivacyBoundaryError("true rating of user " + std::to_string(t.user) + " on item " +
                                 std::to_string(t.item) + " would cross the privacy boundary");
    }
  }
  std::size_t senders = 0;
  for (std::size_t u = 0; u < perturbed.users(); ++u) {
    if (perturbed.row_end(u) > perturbed.row_begin(u)) ++senders;
  }
  return {std::move(perturbed), perturber.kind(), perturber.scale(), senders};
}

void CommLedger::record(const Upload& upload) {
  user_to_sp_messages += upload.senders();
  user_to_sp_payload += upload.ratings().size();
}

CommLedger& CommLedger::operator+=(const CommLedger& o) noexcept {
  user_to_sp_messages += o.user_to_sp_messages;
  user_to_sp_payload += o.user_to_sp_payload;
  sp_to_user_messages += o.sp_to_user_messages;
  sp_to_user_payload += o.sp_to_user_payload;
  return *this;
}

void PipelineConfig::validate() const {
  if (mechanism == MechanismKind::kLaplace) {
    throw ConfigError("the pipeline needs a bounded mechanism (blp, laplace-clamp or none)");
  }
  if (mechanism != MechanismKind::kNone && (!(epsilon > 0.0) || !std::isfinite(epsilon))) {
    throw ConfigError("epsilon must be positive");
  }
  if (top_k < 1) throw ConfigError("top-k must be at least 1");
  mog.validate();
  sgd.validate();
}

PipelineResult run_private_pipeline(const SparseRatingMatrix& ratings, const FoldPlan& plan,
                                    const PipelineConfig& config,
                                    std::span<const std::size_t> only_folds) {
  config.validate();
  if (plan.assignment.size() != ratings.size()) {
    throw ConfigError("fold plan was built for a different matrix");
  }
  std::vector<std::size_t> folds(only_folds.begin(), only_folds.end());
  if (folds.empty()) {
    for (std::size_t f = 0; f < plan.folds; ++f) folds.push_back(f);
  }
  const Perturber perturber = config.mechanism == MechanismKind::kNone
                                  ? Perturber::identity(ratings.domain())
                                  : Perturber::calibrated(config.mechanism, ratings.domain(),
                                                          config.epsilon);
  const double threshold =
      config.relevance_threshold.value_or(default_relevance_threshold(ratings.domain()));

  PipelineResult out;
  for (std::size_t fold : folds) {
    if (fold >= plan.folds) throw ConfigError("fold " + std::to_string(fold) + " out of range");
    const auto start = std::chrono::steady_clock::now();
    const auto train_pos = plan.train_positions(fold);
    const auto test_pos = plan.test_positions(fold);
    const SparseRatingMatrix train = ratings.select(train_pos);

    // User side.
    SparseRatingMatrix perturbed =
        perturb_matrix(train, perturber, derive_seed(config.seed, streams::kPerturb, fold));
    const Upload upload = make_upload(train, std::move(perturbed), perturber);

    FoldResult row;
    row.fold = fold;
    row.scale = perturber.scale();
    row.train_entries = train.size();
    row.test_entries = test_pos.size();
    row.ledger.record(upload);

    // Service-provider side.
    const Fitted fitted = fit_predictor(upload, config, fold);
    row.iterations = fitted.iterations;
    row.reinitializations = fitted.reinitializations;

    std::vector<bool> user_seen(ratings.users(), false);
    std::vector<bool> item_seen(ratings.items(), false);
    for (const Rating& r : upload.ratings().entries()) {
      user_seen[r.user] = true;
      item_seen[r.item] = true;
    }
    const double fallback = upload.ratings().mean();
    const std::optional<RatingDomain> clip =
        config.clip_predictions ? std::optional<RatingDomain>(ratings.domain()) : std::nullopt;

    std::vector<RatingPair> pairs;
    pairs.reserve(test_pos.size());
    std::vector<UserHoldout> holdouts;
    for (std::size_t pos : test_pos) {
      const Rating& r = ratings[pos];
      double predicted;
      if (user_seen[r.user] && item_seen[r.item]) {
        predicted = fitted.offset + predict(fitted.factors, r.user, r.item);
        if (clip) predicted = clip->clamp(predicted);
      } else {
        predicted = clip ? clip->clamp(fallback) : fallback;
        ++row.cold_start;
      }
      pairs.push_back({r.value, predicted});
      // test positions ascend, so one user's cells are contiguous
      if (holdouts.empty() || holdouts.back().user != r.user) holdouts.push_back({r.user, {}});
      holdouts.back().items.push_back({r.item, r.value, predicted});
    }
    row.rmse = rmse(pairs);
    row.confusion = top_k_confusion(holdouts, config.top_k, threshold);
    row.retrieval = score(row.confusion);
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.ledger += row.ledger;
    out.folds.push_back(std::move(row));
  }
  return out;
}

std::vector<CommRow> compare_communication(const CommStats& stats) {
  const double pg_bytes = static_cast<double>(stats.items) * static_cast<double>(stats.latent_dim) *
                          static_cast<double>(stats.value_bytes);
  const std::string units = std::to_string(stats.training_entries) + " rating-units total";
  return {
      {"BLP-MoG-MF", "1 rating-unit per rating", "no transfer", std::nullopt,
       "one-shot upload; " + units},
      {"ISGD", "1 rating-unit per rating", "no transfer", std::nullopt,
       "one-shot upload of perturbed ratings"},
      {"PG-MF", "gradients per iteration", "item factors per iteration", pg_bytes,
       "modeled as items x d x value bytes = " + std::to_string(stats.items) + " x " +
           std::to_string(stats.latent_dim) + " x " + std::to_string(stats.value_bytes) +
           " per iteration; published estimate " + std::to_string(kPublishedPgMfMegabytes).substr(0, 4) +
           " MB"},
  };
}

}  // namespace ldprec

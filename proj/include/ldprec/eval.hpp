#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ldprec/rating_domain.hpp"
#include "ldprec/sparse_matrix.hpp"

namespace ldprec {

struct RatingPair {
  double actual;
  double predicted;
};

// Throws DomainError on empty input.
double rmse(std::span<const RatingPair> pairs);

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept;
  bool operator==(const ConfusionCounts&) const = default;
};

// Ratios with an empty denominator are reported as 0 and flagged.
struct RetrievalScores {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double f_score(const ConfusionCounts& c);
RetrievalScores score(const ConfusionCounts& c);

struct ScoredItem {
  std::uint32_t item;
  double actual;
  double predicted;
};

// Held-out items of one user.
struct UserHoldout {
  std::uint32_t user;
  std::vector<ScoredItem> items;
};

// Per user, the top-k held-out items by predicted score (ties by item index)
// are the recommended positives; items rated at or above the threshold are
// the relevant ones. Counts are summed over users.
ConfusionCounts top_k_confusion(std::span<const UserHoldout> users, std::size_t k,
                                double relevance_threshold);

// 4 on the 0.5-5 and -10..10 scales, 7 on 1-10, otherwise 70% up the range.
double default_relevance_threshold(const RatingDomain& domain);

struct FoldPlan {
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> assignment;  // fold id per entry position

  std::vector<std::size_t> test_positions(std::size_t fold) const;
  std::vector<std::size_t> train_positions(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

// Uniform random balanced partition of the observed cells. Throws DataError
// when there are fewer cells than folds.
FoldPlan make_folds(const SparseRatingMatrix& ratings, std::size_t folds, std::uint64_t seed);

}  // namespace ldprec

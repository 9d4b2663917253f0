#include "ldprec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ldprec/error.hpp"
#include "ldprec/random.hpp"

namespace ldprec {

double rmse(std::span<const RatingPair> pairs) {
  if (pairs.empty()) throw DomainError("rmse of an empty set");
  double acc = 0.0;
  for (const auto& p : pairs) {
    const double e = p.actual - p.predicted;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(pairs.size()));
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) noexcept {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

double precision(const ConfusionCounts& c) {
  const auto den = c.tp + c.fp;
  return den == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(den);
}

double recall(const ConfusionCounts& c) {
  const auto den = c.tp + c.fn;
  return den == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(den);
}

double f_score(const ConfusionCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

RetrievalScores score(const ConfusionCounts& c) {
  return {precision(c), recall(c), f_score(c), c.tp + c.fp == 0, c.tp + c.fn == 0};
}

ConfusionCounts top_k_confusion(std::span<const UserHoldout> users, std::size_t k,
                                double relevance_threshold) {
  ConfusionCounts total;
  std::vector<ScoredItem> ranked;
  for (const auto& user : users) {
    ranked = user.items;
    std::sort(ranked.begin(), ranked.end(), [](const ScoredItem& a, const ScoredItem& b) {
      if (a.predicted != b.predicted) return a.predicted > b.predicted;
      return a.item < b.item;
    });
    const std::size_t cut = std::min(k, ranked.size());
    for (std::size_t t = 0; t < ranked.size(); ++t) {
      const bool recommended = t < cut;
      const bool relevant = ranked[t].actual >= relevance_threshold;
      if (recommended && relevant) ++total.tp;
      else if (recommended) ++total.fp;
      else if (relevant) ++total.fn;
      else ++total.tn;
    }
  }
  return total;
}

double default_relevance_threshold(const RatingDomain& domain) {
  if (domain.lower() == 0.5 && domain.upper() == 5.0) return 4.0;
  if (domain.lower() == 1.0 && domain.upper() == 10.0) return 7.0;
  if (domain.lower() == -10.0 && domain.upper() == 10.0) return 4.0;
  return domain.lower() + 0.7 * domain.width();
}

std::vector<std::size_t> FoldPlan::test_positions(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < assignment.size(); ++p) {
    if (assignment[p] == fold) out.push_back(p);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_positions(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < assignment.size(); ++p) {
    if (assignment[p] != fold) out.push_back(p);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> out(folds, 0);
  for (auto f : assignment) ++out[f];
  return out;
}

FoldPlan make_folds(const SparseRatingMatrix& ratings, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("need at least 2 folds");
  if (ratings.size() < folds) {
    throw DataError("too few ratings (" + std::to_string(ratings.size()) + ") for " +
                    std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> order(ratings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(seed, streams::kFolds, 0);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan{folds, seed, std::vector<std::uint32_t>(ratings.size())};
  for (std::size_t t = 0; t < order.size(); ++t) {
    plan.assignment[order[t]] = static_cast<std::uint32_t>(t % folds);
  }
  return plan;
}

}  // namespace ldprec

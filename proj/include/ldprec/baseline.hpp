#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ldprec/factor_model.hpp"
#include "ldprec/sparse_matrix.hpp"

namespace ldprec {

struct MFModel {
  FactorModel factors;
  FitMetadata meta;

  ModelContainer to_container() const { return {factors, {}, {}, meta}; }
  static MFModel from_container(ModelContainer container);
};

struct SgdConfig {
  std::size_t latent_dim = 20;
  double learning_rate = 0.005;
  std::size_t epochs = 100;
  double ridge = 0.0;  // per-update L2 shrinkage on the touched factors
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  double divergence_factor = 10.0;

  void validate() const;
};

struct SgdResult {
  MFModel model;
  // Training sum of squared errors; index 0 is the initialisation.
  std::vector<double> epoch_sse;
};

// Plain SGD on sum (r - u.v)^2 with a seeded shuffled visit order each epoch.
// Throws DivergenceError when the training error exceeds divergence_factor
// times its initial value.
SgdResult fit_mf_sgd(const SparseRatingMatrix& ratings, const SgdConfig& config);

enum class FillStrategy { kGlobalMean, kUserMean, kItemMean };

std::string_view to_string(FillStrategy fill);
FillStrategy parse_fill_strategy(std::string_view name);

// Mean-imputes unobserved cells, then keeps the rank-d truncated SVD with the
// singular values split evenly between U and V.
MFModel fit_svd(const SparseRatingMatrix& ratings, std::size_t latent_dim,
                FillStrategy fill = FillStrategy::kGlobalMean);

double training_sse(const SparseRatingMatrix& ratings, const FactorModel& factors);

}  // namespace ldprec

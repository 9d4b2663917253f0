#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ldprec/factor_model.hpp"
#include "ldprec/sparse_matrix.hpp"

namespace ldprec {

struct FitConfig {
  std::size_t components = 3;  // K
  std::size_t latent_dim = 20; // d
  std::size_t max_iters = 100;
  double tol = 1e-4;  // relative Frobenius change of U
  double variance_floor = 1e-6;
  std::size_t inner_solver_iters = 1;
  std::uint64_t seed = 0;
  // Weight-scaled penalty ridge * sum w_ij (|u_i|^2 + |v_j|^2) added to each
  // low-rank step. Zero keeps the plain likelihood objective, for which the
  // log-likelihood is non-decreasing.
  double ridge = 0.0;
  double init_scale = 0.1;  // standard deviation of the initial factors

  // Throws ConfigError.
  void validate() const;
};

// Factors plus the zero-mean Gaussian noise mixture.
struct MogModel {
  FactorModel factors;
  std::vector<double> pi;
  std::vector<double> sigma2;
  FitMetadata meta;

  std::size_t components() const noexcept { return pi.size(); }
  ModelContainer to_container() const;
  static MogModel from_container(ModelContainer container);
};

// Posterior component probabilities per observed cell, stored entry-major
// (aligned with SparseRatingMatrix::entries()).
struct Responsibilities {
  std::size_t components = 0;
  std::vector<double> gamma;

  std::size_t cells() const noexcept { return components == 0 ? 0 : gamma.size() / components; }
  double operator()(std::size_t cell, std::size_t k) const { return gamma[cell * components + k]; }
  std::span<const double> cell(std::size_t c) const {
    return {gamma.data() + c * components, components};
  }
};

// Stable identities used to seed the factor rows. Empty spans mean "use the
// row index". Supplying original ids makes the fit equivariant under row
// permutations.
struct StreamKeys {
  std::span<const std::uint64_t> users;
  std::span<const std::uint64_t> items;
};

MogModel init_model(const SparseRatingMatrix& ratings, const FitConfig& config,
                    StreamKeys keys = {});

Responsibilities e_step(const SparseRatingMatrix& ratings, const MogModel& model);

struct MixtureUpdate {
  std::vector<double> pi;
  std::vector<double> sigma2;
  std::vector<std::size_t> reinitialized;  // components with S_k < 1e-8 S
};

MixtureUpdate m_step_mixture(const SparseRatingMatrix& ratings, const MogModel& model,
                             const Responsibilities& gamma, double variance_floor);

// w = sum_k gamma_k / (2 sigma_k^2), one per observed cell.
std::vector<double> weights_from_responsibilities(const Responsibilities& gamma,
                                                  std::span<const double> sigma2);

// Weight of cell (user, item); 0 when the cell is unobserved.
double cell_weight(const SparseRatingMatrix& ratings, std::span<const double> weights,
                   std::size_t user, std::size_t item);

struct LowRankOptions {
  std::size_t sweeps = 1;
  double ridge = 0.0;
  double jitter = 1e-9;
};

struct LowRankReport {
  std::size_t frozen_rows = 0;     // zero total weight, left at warm start
  std::size_t rejected_solves = 0; // solve would have raised the row objective
};

// Alternating weighted least squares, warm-started from and written back to
// `factors`. Never increases weighted_objective.
LowRankReport weighted_low_rank(const SparseRatingMatrix& ratings, std::span<const double> weights,
                                FactorModel& factors, const LowRankOptions& options = {});

// sum w (r - u.v)^2 + ridge_penalty.
double weighted_objective(const SparseRatingMatrix& ratings, std::span<const double> weights,
                          const FactorModel& factors, double ridge = 0.0);

// ridge * sum over cells of w_ij (|u_i|^2 + |v_j|^2).
double ridge_penalty(const SparseRatingMatrix& ratings, std::span<const double> weights,
                     const FactorModel& factors, double ridge);

// sum over cells of log sum_k pi_k N(r | u.v, sigma_k^2).
double log_likelihood(const SparseRatingMatrix& ratings, const MogModel& model);

// Expected complete-data log-likelihood under fixed responsibilities.
double expected_log_likelihood(const SparseRatingMatrix& ratings, const MogModel& model,
                               const Responsibilities& gamma);

struct Reinitialization {
  std::size_t iteration;
  std::size_t component;
};

struct FitReport {
  std::size_t iterations = 0;
  bool converged = false;
  double last_change = 0.0;
  // Index 0 is the initial model; entry t follows iteration t.
  std::vector<double> log_likelihood;
  std::vector<Reinitialization> reinitializations;
  std::size_t frozen_rows = 0;
  std::size_t rejected_solves = 0;
};

struct FitResult {
  MogModel model;
  FitReport report;
};

FitResult fit(const SparseRatingMatrix& ratings, const FitConfig& config, StreamKeys keys = {});

}  // namespace ldprec

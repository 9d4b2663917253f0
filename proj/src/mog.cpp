#include "ldprec/mog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "ldprec/error.hpp"
#include "ldprec/random.hpp"

namespace ldprec {
namespace {

constexpr double kDegenerateShare = 1e-8;

double residual(const SparseRatingMatrix& ratings, const FactorModel& f, std::size_t cell) {
  const Rating& r = ratings[cell];
  return r.value - f.users.row(r.user).dot(f.items.row(r.item));
}

double mean_squared_residual(const SparseRatingMatrix& ratings, const FactorModel& f) {
  double acc = 0.0;
  for (std::size_t c = 0; c < ratings.size(); ++c) {
    const double e = residual(ratings, f, c);
    acc += e * e;
  }
  return ratings.empty() ? 0.0 : acc / static_cast<double>(ratings.size());
}

void check_model(const SparseRatingMatrix& ratings, const MogModel& model) {
  const auto& f = model.factors;
  if (static_cast<std::size_t>(f.users.rows()) != ratings.users() ||
      static_cast<std::size_t>(f.items.rows()) != ratings.items()) {
    throw DomainError("model dimensions do not match the rating matrix");
  }
  if (f.users.cols() != f.items.cols()) throw DomainError("U and V latent dimensions differ");
  if (model.pi.empty() || model.pi.size() != model.sigma2.size()) {
    throw DomainError("mixture needs matching, nonempty Pi and Sigma2");
  }
  for (double s : model.sigma2) {
    if (!(s > 0.0)) throw DomainError("component variances must be positive");
  }
}

void check_factors(const SparseRatingMatrix& ratings, const FactorModel& f) {
  if (static_cast<std::size_t>(f.users.rows()) != ratings.users() ||
      static_cast<std::size_t>(f.items.rows()) != ratings.items() ||
      f.users.cols() != f.items.cols()) {
    throw DomainError("factor dimensions do not match the rating matrix");
  }
}

// log(pi_k) - log(2 pi sigma_k^2) / 2; -inf for empty components.
std::vector<double> log_normalizers(const MogModel& model) {
  std::vector<double> out(model.components());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = model.pi[k] > 0.0
                 ? std::log(model.pi[k]) - 0.5 * std::log(2.0 * std::numbers::pi * model.sigma2[k])
                 : -std::numeric_limits<double>::infinity();
  }
  return out;
}

// Entry positions grouped by user; same layout as ColumnIndex.
ColumnIndex row_index(const SparseRatingMatrix& ratings) {
  ColumnIndex idx;
  idx.offsets.resize(ratings.users() + 1);
  for (std::size_t u = 0; u <= ratings.users(); ++u) {
    idx.offsets[u] = u < ratings.users() ? ratings.row_begin(u) : ratings.size();
  }
  idx.entry.resize(ratings.size());
  for (std::size_t c = 0; c < ratings.size(); ++c) idx.entry[c] = c;
  return idx;
}

// Re-solves every row of `target` against the fixed `other` factors.
void solve_side(const SparseRatingMatrix& ratings, std::span<const double> weights,
                const ColumnIndex& groups, bool by_user, FactorMatrix& target,
                const FactorMatrix& other, const LowRankOptions& options, LowRankReport& report) {
  const Eigen::Index d = target.cols();
  Eigen::MatrixXd x;
  Eigen::VectorXd w;
  Eigen::VectorXd y;
  for (Eigen::Index row = 0; row < target.rows(); ++row) {
    const auto cells = groups.column(static_cast<std::size_t>(row));
    const auto count = static_cast<Eigen::Index>(cells.size());
    x.resize(count, d);
    w.resize(count);
    y.resize(count);
    double total = 0.0;
    for (Eigen::Index t = 0; t < count; ++t) {
      const Rating& r = ratings[cells[static_cast<std::size_t>(t)]];
      x.row(t) = other.row(by_user ? r.item : r.user);
      w[t] = weights[cells[static_cast<std::size_t>(t)]];
      y[t] = r.value;
      total += w[t];
    }
    if (!(total > 0.0)) {
      ++report.frozen_rows;
      continue;
    }
    const double penalty = options.ridge * total;
    Eigen::MatrixXd a = x.transpose() * w.asDiagonal() * x;
    a.diagonal().array() += penalty + options.jitter;
    const Eigen::VectorXd b = x.transpose() * w.cwiseProduct(y);
    const Eigen::VectorXd solved = a.ldlt().solve(b);

    const Eigen::VectorXd current = target.row(row).transpose();
    const auto row_objective = [&](const Eigen::VectorXd& v) {
      return w.dot((y - x * v).array().square().matrix()) + penalty * v.squaredNorm();
    };
    if (solved.allFinite() && row_objective(solved) <= row_objective(current)) {
      target.row(row) = solved.transpose();
    } else {
      ++report.rejected_solves;
    }
  }
}

}  // namespace

void FitConfig::validate() const {
  if (components < 1) throw ConfigError("K must be at least 1");
  if (latent_dim < 1) throw ConfigError("latent dimension must be at least 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (!(variance_floor > 0.0)) throw ConfigError("variance floor must be positive");
  if (inner_solver_iters < 1) throw ConfigError("inner solver needs at least one sweep");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ConfigError("ridge must be nonnegative");
  if (!(init_scale > 0.0)) throw ConfigError("init scale must be positive");
}

ModelContainer MogModel::to_container() const { return {factors, pi, sigma2, meta}; }

MogModel MogModel::from_container(ModelContainer container) {
  if (container.pi.empty()) throw DataError("container holds no noise mixture");
  return {std::move(container.factors), std::move(container.pi), std::move(container.sigma2),
          container.meta};
}

MogModel init_model(const SparseRatingMatrix& ratings, const FitConfig& config, StreamKeys keys) {
  config.validate();
  if (ratings.empty()) throw DomainError("cannot initialise a model from an empty matrix");
  if (!keys.users.empty() && keys.users.size() != ratings.users()) {
    throw DomainError("user key count does not match the matrix");
  }
  if (!keys.items.empty() && keys.items.size() != ratings.items()) {
    throw DomainError("item key count does not match the matrix");
  }
  const auto d = static_cast<Eigen::Index>(config.latent_dim);
  const auto fill = [&](FactorMatrix& mat, std::size_t rows, std::uint64_t stream,
                        std::span<const std::uint64_t> ids) {
    mat.resize(static_cast<Eigen::Index>(rows), d);
    for (std::size_t i = 0; i < rows; ++i) {
      Rng rng = derive_rng(config.seed, stream, ids.empty() ? i : ids[i]);
      std::normal_distribution<double> normal(0.0, config.init_scale);
      for (Eigen::Index c = 0; c < d; ++c) mat(static_cast<Eigen::Index>(i), c) = normal(rng);
    }
  };

  MogModel model;
  fill(model.factors.users, ratings.users(), streams::kUserFactors, keys.users);
  fill(model.factors.items, ratings.items(), streams::kItemFactors, keys.items);

  FactorModel warm = model.factors;
  const std::vector<double> unit(ratings.size(), 1.0);
  weighted_low_rank(ratings, unit, warm, {.sweeps = 2, .ridge = config.ridge});
  const double base = std::max(mean_squared_residual(ratings, warm), config.variance_floor);

  const std::size_t k = config.components;
  model.pi.assign(k, 1.0 / static_cast<double>(k));
  model.sigma2.resize(k);
  const double centre = 0.5 * static_cast<double>(k - 1);
  for (std::size_t c = 0; c < k; ++c) {
    model.sigma2[c] =
        std::max(base * std::pow(4.0, static_cast<double>(c) - centre), config.variance_floor);
  }
  model.meta.seed = config.seed;
  return model;
}

Responsibilities e_step(const SparseRatingMatrix& ratings, const MogModel& model) {
  check_model(ratings, model);
  const std::size_t k = model.components();
  const auto norm = log_normalizers(model);
  Responsibilities out{k, std::vector<double>(ratings.size() * k)};
  std::vector<double> logp(k);
  for (std::size_t c = 0; c < ratings.size(); ++c) {
    const double e = residual(ratings, model.factors, c);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      logp[j] = norm[j] - e * e / (2.0 * model.sigma2[j]);
      peak = std::max(peak, logp[j]);
    }
    double total = 0.0;
    double* g = out.gamma.data() + c * k;
    for (std::size_t j = 0; j < k; ++j) {
      g[j] = std::exp(logp[j] - peak);
      total += g[j];
    }
    for (std::size_t j = 0; j < k; ++j) g[j] /= total;
  }
  return out;
}

MixtureUpdate m_step_mixture(const SparseRatingMatrix& ratings, const MogModel& model,
                             const Responsibilities& gamma, double variance_floor) {
  check_model(ratings, model);
  if (!(variance_floor > 0.0)) throw ConfigError("variance floor must be positive");
  const std::size_t k = model.components();
  if (gamma.components != k || gamma.cells() != ratings.size()) {
    throw DomainError("responsibilities do not match the model");
  }
  std::vector<double> mass(k, 0.0);
  std::vector<double> spread(k, 0.0);
  double all = 0.0;
  for (std::size_t c = 0; c < ratings.size(); ++c) {
    const double e = residual(ratings, model.factors, c);
    const double e2 = e * e;
    all += e2;
    for (std::size_t j = 0; j < k; ++j) {
      mass[j] += gamma(c, j);
      spread[j] += gamma(c, j) * e2;
    }
  }
  const double cells = static_cast<double>(ratings.size());
  const double global = std::max(cells > 0 ? all / cells : 0.0, variance_floor);

  MixtureUpdate out;
  out.pi.resize(k);
  out.sigma2.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (mass[j] < kDegenerateShare * cells) {
      out.reinitialized.push_back(j);
      out.pi[j] = 1.0 / static_cast<double>(k);
      out.sigma2[j] = global;
    } else {
      out.pi[j] = mass[j];
      out.sigma2[j] = std::max(spread[j] / mass[j], variance_floor);
    }
  }
  if (out.reinitialized.empty()) {
    double total = 0.0;
    for (double m : mass) total += m;
    for (double& p : out.pi) p /= total;
  } else {
    // Healthy components keep their share S_k / S; reinitialised ones take
    // 1/K before the common renormalisation.
    for (std::size_t j = 0; j < k; ++j) {
      if (std::find(out.reinitialized.begin(), out.reinitialized.end(), j) ==
          out.reinitialized.end()) {
        out.pi[j] = mass[j] / cells;
      }
    }
    double total = 0.0;
    for (double p : out.pi) total += p;
    for (double& p : out.pi) p /= total;
  }
  return out;
}

std::vector<double> weights_from_responsibilities(const Responsibilities& gamma,
                                                  std::span<const double> sigma2) {
  if (gamma.components != sigma2.size()) {
    throw DomainError("responsibilities and variances disagree on K");
  }
  std::vector<double> w(gamma.cells(), 0.0);
  for (std::size_t c = 0; c < w.size(); ++c) {
    for (std::size_t j = 0; j < sigma2.size(); ++j) w[c] += gamma(c, j) / (2.0 * sigma2[j]);
  }
  return w;
}

double cell_weight(const SparseRatingMatrix& ratings, std::span<const double> weights,
                   std::size_t user, std::size_t item) {
  if (weights.size() != ratings.size()) throw DomainError("one weight per observed cell required");
  const auto cell = ratings.find(user, item);
  return cell ? weights[*cell] : 0.0;
}

LowRankReport weighted_low_rank(const SparseRatingMatrix& ratings, std::span<const double> weights,
                                FactorModel& factors, const LowRankOptions& options) {
  check_factors(ratings, factors);
  if (weights.size() != ratings.size()) throw DomainError("one weight per observed cell required");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and nonnegative");
  }
  const auto d = static_cast<std::size_t>(factors.users.cols());
  if (d > std::min(ratings.users(), ratings.items())) {
    throw ConfigError("latent dimension " + std::to_string(d) + " exceeds min(m, n)");
  }
  if (!(options.ridge >= 0.0) || !(options.jitter >= 0.0)) {
    throw ConfigError("ridge and jitter must be nonnegative");
  }
  const ColumnIndex users = row_index(ratings);
  const ColumnIndex items = ratings.column_index();
  LowRankReport report;
  for (std::size_t s = 0; s < options.sweeps; ++s) {
    solve_side(ratings, weights, users, true, factors.users, factors.items, options, report);
    solve_side(ratings, weights, items, false, factors.items, factors.users, options, report);
  }
  return report;
}

double ridge_penalty(const SparseRatingMatrix& ratings, std::span<const double> weights,
                     const FactorModel& factors, double ridge) {
  if (ridge == 0.0) return 0.0;
  check_factors(ratings, factors);
  if (weights.size() != ratings.size()) throw DomainError("one weight per observed cell required");
  double acc = 0.0;
  for (std::size_t c = 0; c < ratings.size(); ++c) {
    const Rating& r = ratings[c];
    acc += weights[c] *
           (factors.users.row(r.user).squaredNorm() + factors.items.row(r.item).squaredNorm());
  }
  return ridge * acc;
}

double weighted_objective(const SparseRatingMatrix& ratings, std::span<const double> weights,
                          const FactorModel& factors, double ridge) {
  check_factors(ratings, factors);
  if (weights.size() != ratings.size()) throw DomainError("one weight per observed cell required");
  double acc = 0.0;
  for (std::size_t c = 0; c < ratings.size(); ++c) {
    const double e = residual(ratings, factors, c);
    acc += weights[c] * e * e;
  }
  return acc + ridge_penalty(ratings, weights, factors, ridge);
}

double log_likelihood(const SparseRatingMatrix& ratings, const MogModel& model) {
  check_model(ratings, model);
  const std::size_t k = model.components();
  const auto norm = log_normalizers(model);
  std::vector<double> logp(k);
  double acc = 0.0;
  for (std::size_t c = 0; c < ratings.size(); ++c) {
    const double e = residual(ratings, model.factors, c);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      logp[j] = norm[j] - e * e / (2.0 * model.sigma2[j]);
      peak = std::max(peak, logp[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(logp[j] - peak);
    acc += peak + std::log(total);
  }
  return acc;
}

double expected_log_likelihood(const SparseRatingMatrix& ratings, const MogModel& model,
                               const Responsibilities& gamma) {
  check_model(ratings, model);
  const std::size_t k = model.components();
  if (gamma.components != k || gamma.cells() != ratings.size()) {
    throw DomainError("responsibilities do not match the model");
  }
  const auto norm = log_normalizers(model);
  double acc = 0.0;
  for (std::size_t c = 0; c < ratings.size(); ++c) {
    const double e = residual(ratings, model.factors, c);
    for (std::size_t j = 0; j < k; ++j) {
      const double g = gamma(c, j);
      if (g > 0.0) acc += g * (norm[j] - e * e / (2.0 * model.sigma2[j]));
    }
  }
  return acc;
}

FitResult fit(const SparseRatingMatrix& ratings, const FitConfig& config, StreamKeys keys) {
  config.validate();
  if (ratings.empty()) throw DomainError("cannot fit an empty matrix");
  if (config.latent_dim > std::min(ratings.users(), ratings.items())) {
    throw ConfigError("latent dimension " + std::to_string(config.latent_dim) +
                      " exceeds min(m, n)");
  }
  FitResult out{init_model(ratings, config, keys), {}};
  MogModel& model = out.model;
  FitReport& report = out.report;

  report.log_likelihood.push_back(log_likelihood(ratings, model));

  const LowRankOptions solver{.sweeps = config.inner_solver_iters, .ridge = config.ridge};
  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    const Responsibilities gamma = e_step(ratings, model);
    MixtureUpdate mix = m_step_mixture(ratings, model, gamma, config.variance_floor);
    for (std::size_t j : mix.reinitialized) report.reinitializations.push_back({it, j});
    model.pi = std::move(mix.pi);
    model.sigma2 = std::move(mix.sigma2);

    const auto weights = weights_from_responsibilities(gamma, model.sigma2);
    const FactorMatrix previous = model.factors.users;
    const LowRankReport lr = weighted_low_rank(ratings, weights, model.factors, solver);
    report.frozen_rows += lr.frozen_rows;
    report.rejected_solves += lr.rejected_solves;
    report.log_likelihood.push_back(log_likelihood(ratings, model));

    const double base = previous.norm();
    report.last_change = (model.factors.users - previous).norm() /
                         (base > 0.0 ? base : std::numeric_limits<double>::min());
    report.iterations = it;
    if (report.last_change < config.tol) {
      report.converged = true;
      break;
    }
  }
  model.meta.iterations = report.iterations;
  model.meta.log_likelihood = report.log_likelihood.back();
  model.meta.seed = config.seed;
  return out;
}

}  // namespace ldprec

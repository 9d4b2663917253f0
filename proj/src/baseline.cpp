#include "ldprec/baseline.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ldprec/error.hpp"
#include "ldprec/random.hpp"

namespace ldprec {

MFModel MFModel::from_container(ModelContainer container) {
  return {std::move(container.factors), container.meta};
}

void SgdConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("latent dimension must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(ridge >= 0.0)) throw ConfigError("ridge must be nonnegative");
  if (!(init_scale > 0.0)) throw ConfigError("init scale must be positive");
  if (!(divergence_factor > 1.0)) throw ConfigError("divergence factor must exceed 1");
}

double training_sse(const SparseRatingMatrix& ratings, const FactorModel& factors) {
  double acc = 0.0;
  for (const Rating& r : ratings.entries()) {
    const double e = r.value - factors.users.row(r.user).dot(factors.items.row(r.item));
    acc += e * e;
  }
  return acc;
}

SgdResult fit_mf_sgd(const SparseRatingMatrix& ratings, const SgdConfig& config) {
  config.validate();
  if (ratings.empty()) throw DomainError("cannot fit an empty matrix");
  const auto d = static_cast<Eigen::Index>(config.latent_dim);

  SgdResult out;
  FactorModel& f = out.model.factors;
  const auto fill = [&](FactorMatrix& mat, std::size_t rows, std::uint64_t stream) {
    mat.resize(static_cast<Eigen::Index>(rows), d);
    for (std::size_t i = 0; i < rows; ++i) {
      Rng rng = derive_rng(config.seed, stream, i);
      std::normal_distribution<double> normal(0.0, config.init_scale);
      for (Eigen::Index c = 0; c < d; ++c) mat(static_cast<Eigen::Index>(i), c) = normal(rng);
    }
  };
  fill(f.users, ratings.users(), streams::kUserFactors);
  fill(f.items, ratings.items(), streams::kItemFactors);

  const double initial = training_sse(ratings, f);
  out.epoch_sse.push_back(initial);
  std::vector<std::size_t> order(ratings.size());
  const double lr = config.learning_rate;
  const double shrink = 1.0 - lr * config.ridge;
  Eigen::RowVectorXd u_old;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = derive_rng(config.seed, streams::kSgd, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t c : order) {
      const Rating& r = ratings[c];
      auto u = f.users.row(r.user);
      auto v = f.items.row(r.item);
      const double e = r.value - u.dot(v);
      u_old = u;
      u = shrink * u + (lr * e) * v;
      v = shrink * v + (lr * e) * u_old;
    }
    const double sse = training_sse(ratings, f);
    out.epoch_sse.push_back(sse);
    if (!std::isfinite(sse) || sse > config.divergence_factor * initial) {
      throw DivergenceError("SGD diverged at epoch " + std::to_string(epoch + 1) +
                            " (training SSE " + std::to_string(sse) + "); lower the learning rate");
    }
  }
  out.model.meta.iterations = config.epochs;
  out.model.meta.log_likelihood = -out.epoch_sse.back();
  out.model.meta.seed = config.seed;
  return out;
}

std::string_view to_string(FillStrategy fill) {
  switch (fill) {
    case FillStrategy::kGlobalMean: return "global";
    case FillStrategy::kUserMean: return "user";
    case FillStrategy::kItemMean: return "item";
  }
  return "?";
}

FillStrategy parse_fill_strategy(std::string_view name) {
  if (name == "global") return FillStrategy::kGlobalMean;
  if (name == "user") return FillStrategy::kUserMean;
  if (name == "item") return FillStrategy::kItemMean;
  throw ConfigError("unknown fill strategy '" + std::string(name) + "'");
}

MFModel fit_svd(const SparseRatingMatrix& ratings, std::size_t latent_dim, FillStrategy fill) {
  if (ratings.empty()) throw DomainError("cannot fit an empty matrix");
  if (latent_dim < 1 || latent_dim > std::min(ratings.users(), ratings.items())) {
    throw ConfigError("latent dimension must lie in [1, min(m, n)]");
  }
  const auto m = static_cast<Eigen::Index>(ratings.users());
  const auto n = static_cast<Eigen::Index>(ratings.items());
  const double global = ratings.mean();

  Eigen::MatrixXd dense(m, n);
  if (fill == FillStrategy::kGlobalMean) {
    dense.setConstant(global);
  } else {
    const bool by_user = fill == FillStrategy::kUserMean;
    const Eigen::Index groups = by_user ? m : n;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(groups);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(groups);
    for (const Rating& r : ratings.entries()) {
      const Eigen::Index g = by_user ? r.user : r.item;
      sum[g] += r.value;
      count[g] += 1.0;
    }
    for (Eigen::Index g = 0; g < groups; ++g) {
      const double mean = count[g] > 0.0 ? sum[g] / count[g] : global;
      if (by_user) {
        dense.row(g).setConstant(mean);
      } else {
        dense.col(g).setConstant(mean);
      }
    }
  }
  for (const Rating& r : ratings.entries()) dense(r.user, r.item) = r.value;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto d = static_cast<Eigen::Index>(latent_dim);
  const Eigen::VectorXd root = svd.singularValues().head(d).cwiseSqrt();
  MFModel out;
  out.factors.users = svd.matrixU().leftCols(d) * root.asDiagonal();
  out.factors.items = svd.matrixV().leftCols(d) * root.asDiagonal();
  out.meta.iterations = 1;
  out.meta.log_likelihood = -training_sse(ratings, out.factors);
  return out;
}

}  // namespace ldprec

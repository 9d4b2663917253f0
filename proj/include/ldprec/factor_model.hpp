#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ldprec/rating_domain.hpp"

namespace ldprec {

// Row i holds the latent vector of user i (or item i).
using FactorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FactorModel {
  FactorMatrix users;  // m x d
  FactorMatrix items;  // n x d

  std::size_t latent_dim() const noexcept { return static_cast<std::size_t>(users.cols()); }
};

// u_i . v_j, optionally clipped to the rating domain. Throws DomainError on
// out-of-range indices.
double predict(const FactorModel& model, std::size_t user, std::size_t item,
               const std::optional<RatingDomain>& clip = std::nullopt);

struct FitMetadata {
  std::uint64_t iterations = 0;
  double log_likelihood = 0.0;
  std::uint64_t seed = 0;
};

// Serialized form shared by the MoG-MF and baseline models: dimensions
// (m, n, d, K), row-major U and V, then Pi and Sigma2 (K each, K = 0 for
// plain factor models) and the fit metadata. Little-endian, bit-exact.
struct ModelContainer {
  FactorModel factors;
  std::vector<double> pi;
  std::vector<double> sigma2;
  FitMetadata meta;
};

void write_model(const ModelContainer& model, std::ostream& out);
ModelContainer read_model(std::istream& in);
void save_model(const ModelContainer& model, const std::filesystem::path& path);
ModelContainer load_model(const std::filesystem::path& path);

}  // namespace ldprec

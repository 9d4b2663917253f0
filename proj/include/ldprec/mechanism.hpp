#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldprec/random.hpp"
#include "ldprec/rating_domain.hpp"
#include "ldprec/sparse_matrix.hpp"

namespace ldprec {

// --- Bounded Laplace closed forms -----------------------------------------

// Probability that a Laplace(r, scale) draw lands in [l, u]:
// C(r) = 1 - (exp(-(r-l)/b) + exp(-(u-r)/b)) / 2.
double normalization_constant(double r, const RatingDomain& domain, double scale);

// C(l + sensitivity) / C(l).
double delta_c(const RatingDomain& domain, double sensitivity, double scale);

struct CalibrationOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
  double damping = 0.5;
};

// Smallest b with b >= sensitivity / (epsilon - log delta_c(b)). Full-range
// sensitivity short-circuits to (u - l) / epsilon.
double calibrate_scale(const RatingDomain& domain, const PrivacyParams& params,
                       const CalibrationOptions& options = {});

// Conditional density of the bounded mechanism output given input r.
double blp_pdf(double r_star, double r, const RatingDomain& domain, double scale);
double blp_cdf(double x, double r, const RatingDomain& domain, double scale);
// Output mass of [lo, hi) given input r.
double blp_interval_mass(double lo, double hi, double r, const RatingDomain& domain,
                         double scale);

// Privacy-loss envelope C(r+z)/C(r) * exp(z/b) for inputs r and r + z.
double f_ratio(double r, double z, const RatingDomain& domain, double scale, double sensitivity);

// --- Samplers ---------------------------------------------------------------

inline constexpr std::uint64_t kDefaultAttemptCap = 1'000'000;

struct BlpDraw {
  double value;
  std::uint64_t attempts;
};

double laplace_noise(double scale, Rng& rng);
double laplace_sample(double r, double scale, Rng& rng);
double clamp_perturb(double r, const RatingDomain& domain, double scale, Rng& rng);

// Bounded Laplace with a calibrated (or explicitly checked) scale.
class BlpMechanism {
 public:
  BlpMechanism(RatingDomain domain, PrivacyParams params);
  // Throws DomainError when `scale` violates the privacy condition.
  static BlpMechanism with_scale(RatingDomain domain, PrivacyParams params, double scale);

  const RatingDomain& domain() const noexcept { return domain_; }
  const PrivacyParams& params() const noexcept { return params_; }
  double scale() const noexcept { return scale_; }

  double sample(double r, Rng& rng) const;
  double pdf(double r_star, double r) const { return blp_pdf(r_star, r, domain_, scale_); }

 private:
  BlpMechanism(RatingDomain domain, PrivacyParams params, double scale)
      : domain_(domain), params_(params), scale_(scale) {}

  RatingDomain domain_;
  PrivacyParams params_;
  double scale_;
};

// Rejection loop of the bounded mechanism with an explicit scale. Output
// lies in the closed interval [l, u]. Throws SafetyError past `attempt_cap`.
BlpDraw blp_sample_counted(double r, const RatingDomain& domain, double scale, Rng& rng,
                           std::uint64_t attempt_cap = kDefaultAttemptCap);
double blp_sample(double r, const BlpMechanism& mech, Rng& rng);

// --- Mechanism choice used by the pipeline and the auditor -----------------

enum class MechanismKind { kNone, kBlp, kLaplaceClamp, kLaplace };

std::string_view to_string(MechanismKind kind);
MechanismKind parse_mechanism(std::string_view name);

class Perturber {
 public:
  // Scale calibrated for `epsilon`: bounded Laplace via calibrate_scale,
  // the Laplace variants via (u - l) / epsilon.
  static Perturber calibrated(MechanismKind kind, const RatingDomain& domain, double epsilon);
  static Perturber with_scale(MechanismKind kind, const RatingDomain& domain, double scale);
  static Perturber identity(const RatingDomain& domain);

  MechanismKind kind() const noexcept { return kind_; }
  const RatingDomain& domain() const noexcept { return domain_; }
  double scale() const noexcept { return scale_; }
  bool is_private() const noexcept { return kind_ != MechanismKind::kNone; }
  // Whether outputs always land in [l, u].
  bool is_bounded() const noexcept { return kind_ != MechanismKind::kLaplace; }

  double apply(double r, Rng& rng) const;

 private:
  Perturber(MechanismKind kind, const RatingDomain& domain, double scale)
      : kind_(kind), domain_(domain), scale_(scale) {}

  MechanismKind kind_;
  RatingDomain domain_;
  double scale_;
};

// Perturbs every observed entry exactly once. Each user owns a stream
// derived from (seed, user), so results do not depend on visit order.
SparseRatingMatrix perturb_matrix(const SparseRatingMatrix& ratings, const Perturber& perturber,
                                  std::uint64_t seed);

// --- Theoretical noise distribution ----------------------------------------

// Probabilities of the noise n = r* - r over half-open intervals of width c
// covering [Q_1 - Q_h, Q_h - Q_1).
struct NoiseDistributionTable {
  double origin = 0.0;  // Q_1 - Q_h
  double width = 0.0;   // rank step c
  std::vector<double> probabilities;

  std::size_t size() const noexcept { return probabilities.size(); }
  double lower(std::size_t k) const { return origin + static_cast<double>(k) * width; }
  double upper(std::size_t k) const { return origin + static_cast<double>(k + 1) * width; }
  // Interval containing `noise`, or size() when outside the covered range.
  std::size_t locate(double noise) const;
};

NoiseDistributionTable noise_distribution(const RatingDomain& domain,
                                          std::span<const double> rank_marginal, double scale);

// Monte Carlo noise draws r* - r with r ~ rank_marginal over the rank grid.
std::vector<double> sample_noise(const Perturber& perturber, std::span<const double> rank_marginal,
                                 std::size_t samples, std::uint64_t seed);

// Fraction of `noise` values falling in each interval of `layout`.
std::vector<double> noise_histogram(std::span<const double> noise,
                                    const NoiseDistributionTable& layout);

double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace ldprec

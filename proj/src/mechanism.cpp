#include "ldprec/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ldprec/error.hpp"

namespace ldprec {
namespace {

void require_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("scale must be positive and finite, got " + std::to_string(scale));
  }
}

void require_in_domain(double r, const RatingDomain& domain, const char* what) {
  if (!domain.contains(r)) {
    throw DomainError(std::string(what) + " " + std::to_string(r) + " outside [" +
                      std::to_string(domain.lower()) + ", " + std::to_string(domain.upper()) +
                      "]");
  }
}

// Mass of Laplace(center, scale) on [a, c], a <= c, without cancellation.
double laplace_mass(double a, double c, double center, double scale) {
  if (!(a < c)) return 0.0;
  if (c <= center) {
    return -0.5 * std::exp((c - center) / scale) * std::expm1((a - c) / scale);
  }
  if (a >= center) {
    return -0.5 * std::exp(-(a - center) / scale) * std::expm1(-(c - a) / scale);
  }
  return -0.5 * std::expm1((a - center) / scale) - 0.5 * std::expm1(-(c - center) / scale);
}

// Fixed-point residual g(b) = b (eps - log dC(b)) - sensitivity.
double calibration_gap(double b, const RatingDomain& domain, const PrivacyParams& params) {
  return b * (params.epsilon - std::log(delta_c(domain, params.sensitivity, b))) -
         params.sensitivity;
}

double bisect_scale(const RatingDomain& domain, const PrivacyParams& params, double tolerance) {
  double lo = params.sensitivity / params.epsilon;
  double hi = lo;
  int grow = 0;
  while (calibration_gap(hi, domain, params) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 200) throw ConvergenceError("calibrate_scale: no feasible scale found");
  }
  for (int it = 0; it < 400 && hi - lo > tolerance * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (calibration_gap(mid, domain, params) < 0.0 ? lo : hi) = mid;
  }
  if (hi - lo > tolerance * hi) throw ConvergenceError("calibrate_scale: bisection stalled");
  return hi;
}

}  // namespace

double normalization_constant(double r, const RatingDomain& domain, double scale) {
  require_scale(scale);
  require_in_domain(r, domain, "input rating");
  return -0.5 * (std::expm1(-(r - domain.lower()) / scale) +
                 std::expm1(-(domain.upper() - r) / scale));
}

double delta_c(const RatingDomain& domain, double sensitivity, double scale) {
  if (!(sensitivity > 0.0) || sensitivity > domain.width()) {
    throw DomainError("sensitivity must lie in (0, u - l]");
  }
  const double shifted = std::min(domain.lower() + sensitivity, domain.upper());
  return normalization_constant(shifted, domain, scale) /
         normalization_constant(domain.lower(), domain, scale);
}

double calibrate_scale(const RatingDomain& domain, const PrivacyParams& params,
                       const CalibrationOptions& options) {
  params.validate(domain);
  if (params.sensitivity >= domain.width()) return domain.width() / params.epsilon;

  double b = params.sensitivity / params.epsilon;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double denom = params.epsilon - std::log(delta_c(domain, params.sensitivity, b));
    if (!(denom > 0.0)) break;
    const double target = params.sensitivity / denom;
    const double next = (1.0 - options.damping) * b + options.damping * target;
    if (std::abs(next - b) <= options.tolerance * next) {
      // Settle on the feasible side of the fixed point.
      return std::max(next, params.sensitivity /
                                (params.epsilon -
                                 std::log(delta_c(domain, params.sensitivity, next))));
    }
    b = next;
  }
  return bisect_scale(domain, params, options.tolerance);
}

double blp_pdf(double r_star, double r, const RatingDomain& domain, double scale) {
  const double c = normalization_constant(r, domain, scale);
  if (!domain.contains(r_star)) return 0.0;
  return std::exp(-std::abs(r_star - r) / scale) / (2.0 * scale * c);
}

double blp_interval_mass(double lo, double hi, double r, const RatingDomain& domain,
                         double scale) {
  const double c = normalization_constant(r, domain, scale);
  const double a = std::max(lo, domain.lower());
  const double b = std::min(hi, domain.upper());
  return laplace_mass(a, b, r, scale) / c;
}

double blp_cdf(double x, double r, const RatingDomain& domain, double scale) {
  if (x >= domain.upper()) {
    normalization_constant(r, domain, scale);  // argument validation
    return 1.0;
  }
  return blp_interval_mass(domain.lower(), x, r, domain, scale);
}

double f_ratio(double r, double z, const RatingDomain& domain, double scale, double sensitivity) {
  require_scale(scale);
  if (!(z >= 0.0) || z > sensitivity) {
    throw DomainError("f_ratio requires 0 <= z <= sensitivity");
  }
  require_in_domain(r, domain, "input rating");
  require_in_domain(r + z, domain, "shifted rating");
  return normalization_constant(r + z, domain, scale) / normalization_constant(r, domain, scale) *
         std::exp(z / scale);
}

double laplace_noise(double scale, Rng& rng) {
  const double u = uniform_open01(rng) - 0.5;
  const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0.0 ? -magnitude : magnitude;
}

double laplace_sample(double r, double scale, Rng& rng) {
  require_scale(scale);
  return r + laplace_noise(scale, rng);
}

double clamp_perturb(double r, const RatingDomain& domain, double scale, Rng& rng) {
  return domain.clamp(laplace_sample(r, scale, rng));
}

BlpDraw blp_sample_counted(double r, const RatingDomain& domain, double scale, Rng& rng,
                           std::uint64_t attempt_cap) {
  require_scale(scale);
  require_in_domain(r, domain, "input rating");
  for (std::uint64_t attempt = 1; attempt <= attempt_cap; ++attempt) {
    const double candidate = r + laplace_noise(scale, rng);
    if (domain.contains(candidate)) return {candidate, attempt};
  }
  throw SafetyError("bounded Laplace rejection loop exceeded " + std::to_string(attempt_cap) +
                    " attempts");
}

BlpMechanism::BlpMechanism(RatingDomain domain, PrivacyParams params)
    : BlpMechanism(domain, params, calibrate_scale(domain, params)) {}

BlpMechanism BlpMechanism::with_scale(RatingDomain domain, PrivacyParams params, double scale) {
  params.validate(domain);
  require_scale(scale);
  const double denom = params.epsilon - std::log(delta_c(domain, params.sensitivity, scale));
  if (!(denom > 0.0) || scale < params.sensitivity / denom * (1.0 - 1e-12)) {
    throw DomainError("scale " + std::to_string(scale) + " does not give epsilon = " +
                      std::to_string(params.epsilon) + " local privacy");
  }
  return {domain, params, scale};
}

double BlpMechanism::sample(double r, Rng& rng) const {
  return blp_sample_counted(r, domain_, scale_, rng).value;
}

double blp_sample(double r, const BlpMechanism& mech, Rng& rng) { return mech.sample(r, rng); }

std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kNone: return "none";
    case MechanismKind::kBlp: return "blp";
    case MechanismKind::kLaplaceClamp: return "laplace-clamp";
    case MechanismKind::kLaplace: return "laplace";
  }
  return "unknown";
}

MechanismKind parse_mechanism(std::string_view name) {
  if (name == "none") return MechanismKind::kNone;
  if (name == "blp") return MechanismKind::kBlp;
  if (name == "laplace-clamp") return MechanismKind::kLaplaceClamp;
  if (name == "laplace") return MechanismKind::kLaplace;
  throw ConfigError("unknown mechanism '" + std::string(name) + "'");
}

Perturber Perturber::calibrated(MechanismKind kind, const RatingDomain& domain, double epsilon) {
  switch (kind) {
    case MechanismKind::kNone:
      return identity(domain);
    case MechanismKind::kBlp:
      return {kind, domain, calibrate_scale(domain, PrivacyParams::full_range(epsilon, domain))};
    case MechanismKind::kLaplaceClamp:
    case MechanismKind::kLaplace:
      PrivacyParams::full_range(epsilon, domain).validate(domain);
      return {kind, domain, domain.width() / epsilon};
  }
  throw ConfigError("unknown mechanism");
}

Perturber Perturber::with_scale(MechanismKind kind, const RatingDomain& domain, double scale) {
  if (kind == MechanismKind::kNone) return identity(domain);
  require_scale(scale);
  return {kind, domain, scale};
}

Perturber Perturber::identity(const RatingDomain& domain) {
  return {MechanismKind::kNone, domain, 0.0};
}

double Perturber::apply(double r, Rng& rng) const {
  switch (kind_) {
    case MechanismKind::kNone: return r;
    case MechanismKind::kBlp: return blp_sample_counted(r, domain_, scale_, rng).value;
    case MechanismKind::kLaplaceClamp: return clamp_perturb(r, domain_, scale_, rng);
    case MechanismKind::kLaplace: return laplace_sample(r, scale_, rng);
  }
  return r;
}

SparseRatingMatrix perturb_matrix(const SparseRatingMatrix& ratings, const Perturber& perturber,
                                  std::uint64_t seed) {
  if (!perturber.is_bounded()) {
    throw ConfigError("perturb_matrix needs a mechanism whose outputs stay in [l, u]");
  }
  if (!(perturber.domain() == ratings.domain())) {
    throw ConfigError("mechanism domain differs from the rating matrix domain");
  }
  std::vector<double> out(ratings.size());
  for (std::size_t user = 0; user < ratings.users(); ++user) {
    Rng rng = derive_rng(seed, streams::kPerturb, user);
    for (std::size_t k = ratings.row_begin(user); k < ratings.row_end(user); ++k) {
      out[k] = perturber.apply(ratings[k].value, rng);
    }
  }
  return ratings.with_values(out);
}

std::size_t NoiseDistributionTable::locate(double noise) const {
  const double pos = std::floor((noise - origin) / width);
  if (pos < 0.0) return size();
  auto k = static_cast<std::size_t>(pos);
  // The top edge Q_h - Q_1 is attainable only from Q_1 -> Q_h; close the last interval.
  if (k == size() && noise <= upper(size() - 1)) k = size() - 1;
  return std::min(k, size());
}

NoiseDistributionTable noise_distribution(const RatingDomain& domain,
                                          std::span<const double> rank_marginal, double scale) {
  if (!domain.has_ranks()) throw DomainError("noise_distribution needs a rank grid");
  require_scale(scale);
  const std::vector<double> q = domain.ranks();
  const std::size_t h = q.size();
  if (rank_marginal.size() != h) {
    throw DomainError("rating marginal has " + std::to_string(rank_marginal.size()) +
                      " entries for " + std::to_string(h) + " ranks");
  }
  double total = 0.0;
  for (double p : rank_marginal) {
    if (!(p >= 0.0)) throw DomainError("rating marginal must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("rating marginal must sum to 1");

  NoiseDistributionTable table;
  table.origin = q.front() - q.back();
  table.width = domain.step();
  table.probabilities.assign(2 * (h - 1), 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    if (rank_marginal[i] == 0.0) continue;
    for (std::size_t k = 0; k < table.size(); ++k) {
      const double lo = q[i] + table.lower(k);
      const double hi = q[i] + table.upper(k);
      if (hi <= domain.lower() || lo >= domain.upper()) continue;
      table.probabilities[k] += rank_marginal[i] * blp_interval_mass(lo, hi, q[i], domain, scale);
    }
  }
  return table;
}

std::vector<double> sample_noise(const Perturber& perturber, std::span<const double> rank_marginal,
                                 std::size_t samples, std::uint64_t seed) {
  const std::vector<double> q = perturber.domain().ranks();
  if (rank_marginal.size() != q.size()) throw DomainError("rating marginal size mismatch");
  std::discrete_distribution<std::size_t> pick(rank_marginal.begin(), rank_marginal.end());
  Rng rng = derive_rng(seed, streams::kNoise, 0);
  std::vector<double> noise(samples);
  for (double& n : noise) {
    const double r = q[pick(rng)];
    n = perturber.apply(r, rng) - r;
  }
  return noise;
}

std::vector<double> noise_histogram(std::span<const double> noise,
                                    const NoiseDistributionTable& layout) {
  std::vector<double> hist(layout.size(), 0.0);
  if (noise.empty()) return hist;
  for (double n : noise) {
    const std::size_t k = layout.locate(n);
    if (k < hist.size()) hist[k] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(noise.size());
  return hist;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("total_variation: size mismatch");
  double tv = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) tv += std::abs(p[k] - q[k]);
  return 0.5 * tv;
}

}  // namespace ldprec

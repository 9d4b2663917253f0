#include "ldprec/rating_domain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ldprec/error.hpp"

namespace ldprec {

RatingDomain::RatingDomain(double lower, double upper) : lower_(lower), upper_(upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw DomainError("rating domain requires finite lower < upper, got [" +
                      std::to_string(lower) + ", " + std::to_string(upper) + "]");
  }
}

RatingDomain RatingDomain::with_ranks(double lower, double upper, double step) {
  RatingDomain d(lower, upper);
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw DomainError("rank step must be positive");
  }
  const double intervals = (upper - lower) / step;
  const double rounded = std::round(intervals);
  if (rounded < 1.0 || std::abs(intervals - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw DomainError("rank step " + std::to_string(step) + " does not divide [" +
                      std::to_string(lower) + ", " + std::to_string(upper) + "]");
  }
  d.step_ = step;
  return d;
}

double RatingDomain::clamp(double r) const noexcept { return std::clamp(r, lower_, upper_); }

double RatingDomain::step() const {
  if (!step_) throw DomainError("rating domain has no rank grid");
  return *step_;
}

std::size_t RatingDomain::rank_count() const {
  return static_cast<std::size_t>(std::llround(width() / step())) + 1;
}

std::vector<double> RatingDomain::ranks() const {
  const std::size_t h = rank_count();
  std::vector<double> q(h);
  for (std::size_t i = 0; i < h; ++i) q[i] = lower_ + static_cast<double>(i) * *step_;
  q.back() = upper_;
  return q;
}

std::size_t RatingDomain::nearest_rank(double r) const {
  const double pos = std::round((r - lower_) / step());
  const auto last = static_cast<double>(rank_count() - 1);
  return static_cast<std::size_t>(std::clamp(pos, 0.0, last));
}

void PrivacyParams::validate(const RatingDomain& domain) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("privacy budget epsilon must be positive");
  }
  if (!(sensitivity > 0.0) || sensitivity > domain.width() * (1.0 + 1e-12)) {
    throw DomainError("sensitivity must lie in (0, u - l]");
  }
}

}  // namespace ldprec

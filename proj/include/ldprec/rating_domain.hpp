#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace ldprec {

// Closed rating interval [lower, upper], optionally carrying an evenly
// spaced rank grid Q_1 = lower, ..., Q_h = upper with step c.
class RatingDomain {
 public:
  RatingDomain(double lower, double upper);
  static RatingDomain with_ranks(double lower, double upper, double step);

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  double width() const noexcept { return upper_ - lower_; }
  bool contains(double r) const noexcept { return r >= lower_ && r <= upper_; }
  double clamp(double r) const noexcept;

  bool has_ranks() const noexcept { return step_.has_value(); }
  // Throws DomainError when no rank grid is attached.
  double step() const;
  std::size_t rank_count() const;
  std::vector<double> ranks() const;
  // Index of the nearest rank; throws DomainError without a grid.
  std::size_t nearest_rank(double r) const;

  bool operator==(const RatingDomain&) const = default;

 private:
  double lower_;
  double upper_;
  std::optional<double> step_;
};

// Per-rating privacy budget and sensitivity.
struct PrivacyParams {
  double epsilon;
  double sensitivity;

  // Full-range sensitivity, the input-perturbation setting.
  static PrivacyParams full_range(double epsilon, const RatingDomain& domain) {
    return {epsilon, domain.width()};
  }
  void validate(const RatingDomain& domain) const;
};

}  // namespace ldprec

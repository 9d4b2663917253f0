#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ldprec/mechanism.hpp"

namespace ldprec {

struct AuditOptions {
  std::size_t bins = 50;
  std::size_t samples_per_input = 1'000'000;
  double slack = 0.05;
  // One-sided normal quantile for the per-cell upper bound.
  double z = 3.0;
  // Minimum count per (input, cell); lower counts abort the audit.
  std::size_t min_count = 50;
};

// Empirical check of Pr[M(r) in B] <= e^eps Pr[M(r') in B] over every
// ordered pair of rank-grid inputs and every output cell B.
struct AuditReport {
  std::string mechanism;
  double scale = 0.0;
  double claimed_epsilon = 0.0;
  double slack = 0.0;
  // Largest estimated log-ratio and its confidence interval.
  double measured_epsilon = 0.0;
  double measured_lower = 0.0;
  double measured_upper = 0.0;
  // Largest per-cell upper bound; decides pass/fail.
  double upper_bound = 0.0;
  double worst_input = 0.0;
  double worst_other_input = 0.0;
  double worst_cell_lower = 0.0;
  double worst_cell_upper = 0.0;
  std::size_t inputs = 0;
  std::size_t cells = 0;
  std::size_t samples_per_input = 0;
  bool passed = false;
  std::vector<std::string> notes;

  std::string to_text() const;
};

// `domain` of the perturber must carry a rank grid; its ranks are the inputs.
// Plain Laplace outputs outside [l, u] are dropped (in-range cells only);
// clamped Laplace gets two extra atom cells at l and u.
AuditReport ldp_audit(const Perturber& mechanism, double epsilon, const AuditOptions& options,
                      std::uint64_t seed);

}  // namespace ldprec

#include "ldprec/audit.hpp"

#include <cmath>
#include <algorithm>
#include <sstream>
#include <tuple>

#include "ldprec/error.hpp"

namespace ldprec {

AuditReport ldp_audit(const Perturber& mechanism, double epsilon, const AuditOptions& options,
                      std::uint64_t seed) {
  const RatingDomain& domain = mechanism.domain();
  if (!domain.has_ranks()) throw DomainError("ldp_audit needs a rank grid for its inputs");
  if (!mechanism.is_private()) throw ConfigError("ldp_audit: identity mechanism has no budget");
  if (options.bins == 0 || options.samples_per_input == 0) {
    throw ConfigError("ldp_audit needs bins > 0 and samples > 0");
  }

  const bool atoms = mechanism.kind() == MechanismKind::kLaplaceClamp;
  const std::size_t interior = options.bins;
  // Layout: [atom l] interior bins [atom u]; atom cells only for clamping.
  const std::size_t offset = atoms ? 1 : 0;
  const std::size_t cells = interior + (atoms ? 2 : 0);
  const double bin_width = domain.width() / static_cast<double>(interior);

  const std::vector<double> inputs = domain.ranks();
  std::vector<std::vector<std::size_t>> counts(inputs.size(), std::vector<std::size_t>(cells, 0));
  std::size_t dropped = 0;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    Rng rng = derive_rng(seed, streams::kAudit, a);
    auto& row = counts[a];
    for (std::size_t s = 0; s < options.samples_per_input; ++s) {
      const double out = mechanism.apply(inputs[a], rng);
      if (!domain.contains(out)) {
        ++dropped;
        continue;
      }
      if (atoms && out == domain.lower()) {
        ++row.front();
      } else if (atoms && out == domain.upper()) {
        ++row.back();
      } else {
        auto bin = static_cast<std::size_t>((out - domain.lower()) / bin_width);
        if (bin >= interior) bin = interior - 1;
        ++row[offset + bin];
      }
    }
  }

  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t c = 0; c < cells; ++c) {
      if (counts[a][c] < options.min_count) {
        std::ostringstream msg;
        msg << "ldp_audit: input " << inputs[a] << " has " << counts[a][c] << " samples in cell "
            << c << " (floor " << options.min_count << "); increase samples";
        throw InsufficientSamplesError(msg.str());
      }
    }
  }

  const auto n = static_cast<double>(options.samples_per_input);
  AuditReport report;
  report.mechanism = std::string(to_string(mechanism.kind()));
  report.scale = mechanism.scale();
  report.claimed_epsilon = epsilon;
  report.slack = options.slack;
  report.inputs = inputs.size();
  report.cells = cells;
  report.samples_per_input = options.samples_per_input;
  report.measured_epsilon = -INFINITY;
  report.upper_bound = -INFINITY;

  auto cell_bounds = [&](std::size_t c) -> std::pair<double, double> {
    if (atoms && c == 0) return {domain.lower(), domain.lower()};
    if (atoms && c == cells - 1) return {domain.upper(), domain.upper()};
    const double lo = domain.lower() + static_cast<double>(c - offset) * bin_width;
    return {lo, lo + bin_width};
  };

  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      if (a == b) continue;
      for (std::size_t c = 0; c < cells; ++c) {
        const auto ca = static_cast<double>(counts[a][c]);
        const auto cb = static_cast<double>(counts[b][c]);
        const double estimate = std::log(ca / cb);
        // Delta-method standard error of a log ratio of binomial proportions.
        const double se = std::sqrt(1.0 / ca - 1.0 / n + 1.0 / cb - 1.0 / n);
        const double upper = estimate + options.z * se;
        report.upper_bound = std::max(report.upper_bound, upper);
        if (estimate > report.measured_epsilon) {
          report.measured_epsilon = estimate;
          report.measured_lower = estimate - options.z * se;
          report.measured_upper = upper;
          report.worst_input = inputs[a];
          report.worst_other_input = inputs[b];
          std::tie(report.worst_cell_lower, report.worst_cell_upper) = cell_bounds(c);
        }
      }
    }
  }
  report.passed = report.upper_bound <= epsilon + options.slack;

  if (mechanism.kind() == MechanismKind::kLaplace) {
    std::ostringstream note;
    note << "plain Laplace: " << dropped << " out-of-range outputs excluded from the cells";
    report.notes.push_back(note.str());
  }
  if (atoms) {
    std::ostringstream note;
    note << "clamped Laplace places point masses on the bounds: P(r* = l | r = l) = "
         << static_cast<double>(counts.front().front()) / n
         << ", P(r* = l | r = u) = " << static_cast<double>(counts.back().front()) / n
         << "; bounded Laplace has no atoms";
    report.notes.push_back(note.str());
  }
  return report;
}

std::string AuditReport::to_text() const {
  std::ostringstream out;
  out << "mechanism        " << mechanism << "\n"
      << "scale            " << scale << "\n"
      << "claimed epsilon  " << claimed_epsilon << " (slack " << slack << ")\n"
      << "measured epsilon " << measured_epsilon << " [" << measured_lower << ", "
      << measured_upper << "]\n"
      << "upper bound      " << upper_bound << "\n"
      << "worst pair       r=" << worst_input << " vs r'=" << worst_other_input << " on ["
      << worst_cell_lower << ", " << worst_cell_upper << "]\n"
      << "inputs x cells   " << inputs << " x " << cells << ", " << samples_per_input
      << " samples per input\n";
  for (const auto& note : notes) out << "note             " << note << "\n";
  out << "result           " << (passed ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace ldprec

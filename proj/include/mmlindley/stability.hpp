#pragma once

#include <limits>
#include <optional>
#include <string>

namespace mmlindley {

struct StabilityReport {
  bool stable = false;
  /// Load ratio (model II); NaN where it is not defined.
  double rho = std::numeric_limits<double>::quiet_NaN();
  /// Fraction of probe draws with Y <= 0 (model I).
  std::optional<double> probe_frequency;
  /// Closed-form P(Y <= 0) when interarrival times are exponential (model I).
  std::optional<double> closed_form;
  std::string message;
};

}  // namespace mmlindley

#pragma once

// Numerical acceptance checks shared by the acceptance binary and the CLI
// self-test. Each returns the worst observed value next to its threshold.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>

namespace fllr::oracles {

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// predict_ridge and the lambda = 0 bias/variance against dense inversion.
CheckResult check_oracle_equivalence(std::size_t instances, std::uint64_t seed);
/// solve_bvls against an exhaustive 21-per-axis grid, plus the KKT residual.
CheckResult check_qp_correctness(std::size_t instances, std::uint64_t seed);
/// Minimum eigenvalue of the weighted score covariance.
CheckResult check_psd(std::size_t draws, std::uint64_t seed);
/// FLLR-r with b = 1 / gamma against FLLR.
CheckResult check_lambda_zero(std::size_t instances, std::uint64_t seed);
/// Mean, second and third moments of the Mammen multipliers.
CheckResult check_mammen(std::size_t draws, std::uint64_t seed);
/// Closed-form derivative scores against central differences.
CheckResult check_derivative_formula(std::size_t triples, std::uint64_t seed);

void print(std::ostream& os, const CheckResult& r);

}  // namespace fllr::oracles

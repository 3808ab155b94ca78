#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlab {

// Tolerance policy, shared across the library.
//
//   rate-level identities (martingale checks, measure consistency)  -> kRateTol
//   linear-algebra identities (basket sums, round trips)            -> kLinTol
//   "this probability is zero"                                      -> kZeroProb
//
// Callers can pass their own tolerance where a function takes one; these are
// the defaults the CLI and the test suite pin.
inline constexpr double kRateTol = 1e-9;
inline constexpr double kLinTol = 1e-12;
inline constexpr double kZeroProb = 1e-15;

// |a - b| <= tol * max(1, |a|, |b|). The max(1, .) floor makes the comparison
// absolute near zero and relative for large magnitudes.
inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// One broken invariant. `rule` is a short machine-readable tag, `indices` are
// 1-based currency indices (empty when not about specific currencies), `node`
// is a tree node id (empty for plain matrices), `detail` is human-readable.
struct Violation {
  std::string rule;
  std::vector<int> indices;
  std::string node;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  void add(std::string rule, std::vector<int> indices, std::string node,
           std::string detail) {
    violations.push_back(
        {std::move(rule), std::move(indices), std::move(node), std::move(detail)});
  }
  void merge(const ValidationReport& other) {
    violations.insert(violations.end(), other.violations.begin(),
                      other.violations.end());
  }
};

// Thrown when arithmetic hits 0 * inf, which has no consistent value in the
// exchange-rate calculus.
struct UndefinedProductError : std::domain_error {
  using std::domain_error::domain_error;
};

// Malformed input files (shape/type problems, unknown tokens). Distinct from
// domain-level validation failures, which are reported, not thrown.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structural problems that make a tree unusable (cycles, duplicate ids,
// missing root, time gaps).
struct TreeStructureError : std::domain_error {
  using std::domain_error::domain_error;
};

// Conditioning on a null event.
struct NullConditioningError : std::domain_error {
  using std::domain_error::domain_error;
};

// Payoff is +inf in an active currency with positive probability; such claims
// are rejected rather than priced at infinity.
struct IntegrabilityError : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace nlab

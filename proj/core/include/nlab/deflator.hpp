#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nlab/aggregation.hpp"

namespace nlab {

// One unmet hypothesis of the deflator construction. `condition` is "i"
// (per-currency martingale), "ii" (no fated devaluations under the reference
// measure), or "iii" (support condition). currency is 1-based, -1 when the
// failure is not tied to one currency.
struct PreconditionFailure {
  std::string condition;
  int currency = -1;
  std::string node;
  std::string detail;
};

struct DeflatorPreconditionError : std::domain_error {
  std::vector<PreconditionFailure> failures;
  explicit DeflatorPreconditionError(std::vector<PreconditionFailure> f);
};

// Which currency the construction tracks at each node. A segment starts at
// the root (or wherever a switch happened) with the strongest currency and
// runs until the tracked currency's basket price falls below 1/(d + epsilon).
struct SwitchingSchedule {
  double threshold = 0.0;  // d + epsilon
  std::vector<int> currency;  // per node, 0-based; -1 off the support
  std::vector<std::pair<int, int>> switches;  // (node, currency picked there)
};

struct DeflatorResult {
  std::vector<double> z;       // deflator per node, 0 off the support
  SwitchingSchedule schedule;
  TreeMeasure reference;       // P = mean of the family
  ValuationMeasure qbar;       // dQ/dP = terminal z
  double max_residual = 0.0;   // worst one-step gap in the verification
  std::vector<int> patched_parents;  // nodes where the averaged jump was used
};

// Constructs a strictly positive P-martingale Z with Z(0) = 1 such that
// Z * b_i is a P-martingale for every currency i, P being the family mean.
// Hypotheses checked first, all failures collected:
//   (i)   every row i a true Q_i-martingale,
//   (ii)  no fated devaluations under P,
//   (iii) support condition,
// plus (iv) "sudden devaluations of strong currencies happen at predictable
// times", automatically satisfied here: on a finite tree every time is
// predictable. On a P-positive edge that kills the tracked currency's
// density, the multiplicative step is replaced, for all children of that
// parent, by 1 + the average excess step of the currencies active at the
// parent; elsewhere it is the tracked currency's density-over-basket ratio.
// The martingale properties of Z and Z * b_i are re-verified by brute force
// afterwards (std::logic_error on failure, which would be a bug, not data).
DeflatorResult build_deflator(const MarketTree& t, const MeasureFamily& fam,
                              double epsilon = 1.0, double tol = kRateTol);

}  // namespace nlab

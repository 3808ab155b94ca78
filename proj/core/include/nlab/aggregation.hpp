#pragma once

#include <string>
#include <vector>

#include "nlab/tree.hpp"

namespace nlab {

// Terminal claim: for each leaf (by position in tree.leaves()), the payoff
// quoted in every currency. A well-formed claim quotes consistently with the
// leaf's terminal matrix: values[l][i] = m[i][j] * values[l][j] wherever
// defined.
struct Claim {
  std::vector<std::vector<XReal>> values;
};

ValidationReport validate_claim(const MarketTree& t, const Claim& c,
                                double tol = kRateTol);

// Claim paying one unit of currency i at the terminal date.
Claim claim_of_unit(const MarketTree& t, int i);

// Per-leaf value of the claim in basket units (basket_claim_value at each
// leaf). Throws on inconsistent or non-integrable claims.
std::vector<double> claim_basket_values(const MarketTree& t, const Claim& c,
                                        double tol = kRateTol);

// One failed instance of the numeraire-change identity
//   E_{Q_i}[ S_{i,j}(t) 1_A ] = S_{i,j}(0) * Q_j(A and {S_{j,i}(t) > 0})
// at atom `node` of time t. lhs = +inf is encoded as such.
struct ConsistencyViolation {
  int i = 0, j = 0;  // 1-based
  int time = 0;
  std::string node;
  double lhs = 0.0, rhs = 0.0;
};

struct ConsistencyReport {
  bool ok = true;
  double max_gap = 0.0;
  std::vector<ConsistencyViolation> violations;
};

// Checks the identity above for every ordered pair (i, j), every time, every
// atom. A weight of zero silences an infinite rate (0 * inf counts as 0);
// an infinite rate with positive weight is a violation outright.
ConsistencyReport check_consistency(const MarketTree& t,
                                    const MeasureFamily& fam,
                                    double tol = kRateTol);

struct InconsistentFamilyError : std::domain_error {
  ConsistencyReport report;
  explicit InconsistentFamilyError(ConsistencyReport r);
};

struct NotValuationMeasureError : std::domain_error {
  std::vector<Violation> violations;
  explicit NotValuationMeasureError(std::vector<Violation> v);
};

// Measure under which every basket price is a true martingale (checked on
// adoption, which is the only way to make one).
class ValuationMeasure {
 public:
  static ValuationMeasure adopt(const MarketTree& t, TreeMeasure q,
                                double tol = kRateTol);
  const TreeMeasure& measure() const { return q_; }
  double max_residual() const { return max_residual_; }

 private:
  ValuationMeasure(TreeMeasure q, double r) : q_(std::move(q)), max_residual_(r) {}
  TreeMeasure q_;
  double max_residual_ = 0.0;
};

// Mixture sum_i b_i(0) Q_i of a consistent family, with b the root basket
// prices. Throws InconsistentFamilyError if the family fails
// check_consistency; the result always passes ValuationMeasure::adopt.
ValuationMeasure aggregate_consistent(const MarketTree& t,
                                      const MeasureFamily& fam,
                                      double tol = kRateTol);

// Inverse direction: Q_i(leaf) = q(leaf) * b_i(leaf) / b_i(root). The
// recovered family is consistent and aggregates back to q.
MeasureFamily disaggregate(const MarketTree& t, const ValuationMeasure& q);

// Value at `node`, in basket units, of a claim under a consistent family:
//   sum_{j active at node} b_j(node) E_{Q_j}[ C_j / #active(T) | node ].
// Terms with Q_j(node) = 0 vanish. Cross-checked internally against the
// direct aggregated-measure expectation (throws std::logic_error on
// disagreement beyond tol). node = -1 means the root.
double value_claim(const MarketTree& t, const MeasureFamily& fam,
                   const Claim& c, int node = -1, double tol = kRateTol);

// Shortcut valid for claims that die with currency i (basket value zero on
// every aggregate-positive leaf where i is dead): b_i(node) E_{Q_i}[C_i|node].
// The precondition is checked globally; violations throw std::domain_error.
double value_claim_survival(const MarketTree& t, const MeasureFamily& fam,
                            const Claim& c, int i, int node = -1,
                            double tol = kRateTol);

// Devaluation premium of currency i at `node`, in units of currency i: what
// the currency-i classical expectation misses because currency i can die
// while the claim (quoted in the surviving currency 1) does not:
//   F_i = S_{i,1}(node) E_{Q_1}[ C_1 1_{S_{1,i}(T) = 0} | node ].
// Requires a consistent family in which currency 1 a.s. survives (under the
// family's total mass), i active at `node`, Q_1(node) > 0. The decomposition
//   value/b_i(node) = E_{Q_i}[C_i|node] + F_i
// is verified whenever Q_i(node) > 0 and reported back.
struct CorrectionReport {
  double correction = 0.0;       // F_i at the node
  double total_over_sbar = 0.0;  // value_claim / b_i(node)
  double classical = 0.0;        // E_{Q_i}[C_i | node], 0 when Q_i(node) = 0
  double residual = 0.0;         // total_over_sbar - classical - correction
};
CorrectionReport correction_term(const MarketTree& t, const MeasureFamily& fam,
                                 const Claim& c, int i, int node = -1,
                                 double tol = kRateTol);

// Both sides of the identity tying the expected devaluation of row i to the
// devaluation probabilities of the other currencies:
//   1 - E_{Q_i}[sum_j S_{i,j}(T)] / sum_j S_{i,j}(0)
//     = sum_j w_{i,j} Q_j(S_{j,i}(T) = 0),  w_{i,j} = S_{i,j}(0)/sum_k S_{i,k}(0).
struct DevaluationRow {
  int i = 0;  // 1-based
  double lhs = 0.0, rhs = 0.0, gap = 0.0;
};
struct DevaluationReport {
  bool ok = true;
  std::vector<DevaluationRow> rows;
};
DevaluationReport devaluation_identity_report(const MarketTree& t,
                                              const MeasureFamily& fam,
                                              double tol = kLinTol);

// Two sides of "S_{i,j} is a true Q_i-martingale iff currency i survives
// Q_j-a.s.". No consistency requirement: for consistent families the sides
// agree; reporting both is precisely how a counterexample shows its
// inconsistency.
struct SurvivalEquivalence {
  MartingaleReport martingale;  // entry (i, j) under Q_i
  double survival_prob = 0.0;   // Q_j(S_{j,i}(T) > 0)
  bool martingale_ok = false;
  bool survival_full = false;
  bool agree = false;
};
SurvivalEquivalence martingale_iff_survival(const MarketTree& t,
                                            const MeasureFamily& fam, int i,
                                            int j, double tol = kRateTol);

struct AggregationError : std::domain_error {
  std::vector<int> failing_currencies;  // 1-based
  std::vector<Violation> violations;
  AggregationError(std::vector<int> failing, std::vector<Violation> v);
};

// Mixture (1/d) sum_i QT_i where dQT_i/dQ_i = b_i(0)/b_i(T), defined when
// every row i is a true Q_i-martingale (throws AggregationError listing the
// currencies that fail). No consistency needed.
ValuationMeasure aggregate_martingale(const MarketTree& t,
                                      const MeasureFamily& fam,
                                      double tol = kRateTol);

// Whether ANY consistent family whose aggregate is equivalent to `ref`
// exists on this tree. Two-currency trees only (throws std::invalid_argument
// otherwise): equivalent to b_1 being strictly inside the children's range
// (or equal across all children) at every ref-positive internal node.
struct FeasibilityReport {
  bool feasible = true;
  std::vector<std::string> witnesses;  // nodes where the condition fails
};
FeasibilityReport valuation_measure_feasibility(const MarketTree& t,
                                                const TreeMeasure& ref);

}  // namespace nlab

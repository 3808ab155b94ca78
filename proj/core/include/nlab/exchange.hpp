#pragma once

#include <utility>
#include <vector>

#include "nlab/common.hpp"
#include "nlab/xreal.hpp"

namespace nlab {

// Unvalidated square grid as read from a file. May contain +inf; negative or
// NaN entries are reported by validation, never stored in an ExchangeMatrix.
using RawMatrix = std::vector<std::vector<double>>;

// All-pairs exchange rates at one point in time. at(i, j) is the price of one
// unit of currency j expressed in currency i. Construction only enforces
// well-formedness (square, entries in [0, inf]); the algebraic invariants are
// the business of validate_exchange_matrix.
class ExchangeMatrix {
 public:
  explicit ExchangeMatrix(const RawMatrix& raw);

  int d() const { return d_; }
  XReal at(int i, int j) const { return a_[static_cast<size_t>(i) * d_ + j]; }
  RawMatrix raw() const;

  friend bool operator==(const ExchangeMatrix& a, const ExchangeMatrix& b) {
    return a.d_ == b.d_ && a.a_ == b.a_;
  }

 private:
  int d_;
  std::vector<XReal> a_;
};

// Shape and entry-domain check only: square, no negatives, no NaN.
// Rules: "shape", "entry".
ValidationReport matrix_wellformed(const RawMatrix& raw);

// Full invariant check. On a raw grid, runs matrix_wellformed first and stops
// there if it fails. Semantic rules:
//   "diagonal"  m[i][i] != 1
//   "duality"   m[i][j] == 0 without m[j][i] == inf (or vice versa)
//   "chain"     m[i][j] * m[j][k] != m[i][k] where the product is defined
// Indices in violations are 1-based.
ValidationReport validate_exchange_matrix(const RawMatrix& raw,
                                          double tol = kRateTol);
ValidationReport validate_exchange_matrix(const ExchangeMatrix& m,
                                          double tol = kRateTol);

// Matrix of cross rates p_j / p_i from strictly positive prices p (each p_i
// being the price of currency i in some common unit). Throws
// std::invalid_argument unless every price is finite and > 0.
ExchangeMatrix from_price_vector(const std::vector<double>& prices);

// Currencies whose row sums are finite, i.e. currencies of nonzero value.
// 0-based, ascending. Nonempty for every matrix passing validation.
std::vector<int> active_set(const ExchangeMatrix& m);

// Smallest i whose whole row is <= 1 (within a 1e-12 slack): the currency at
// least as valuable as every other. Exists for every valid matrix; throws
// std::domain_error otherwise.
int strongest_currency(const ExchangeMatrix& m);

// Price of each currency in units of the basket holding one unit of every
// currency: b_i = 1 / sum_j m[i][j], zero for inactive currencies. For valid
// matrices the entries lie in [0, 1] and sum to 1.
std::vector<double> basket_prices(const ExchangeMatrix& m);

// Rules: "range" (entry outside [0,1]), "sum" (entries do not sum to 1).
ValidationReport validate_basket_prices(const std::vector<double>& b,
                                        double tol = kLinTol);

// Cross rates b_j / b_i recovered from basket prices. Pairs of dead
// currencies (b_i = b_j = 0, i != j) have no determined rate; those entries
// are set to 1 and the pair (i, j) with i < j is listed in `indeterminate`.
struct RecoveredRates {
  ExchangeMatrix matrix;
  std::vector<std::pair<int, int>> indeterminate;
};
RecoveredRates recover_rates(const std::vector<double>& b);

// Checks m[i][j] * v[j] == v[i] wherever the product is defined.
// Rule "value_vector", indices {i+1, j+1}.
ValidationReport validate_value_vector(const ExchangeMatrix& m,
                                       const std::vector<XReal>& v,
                                       double tol = kRateTol);

// Claim paying one unit of currency i at the terminal date, quoted in every
// currency: column i of the terminal matrix.
std::vector<XReal> unit_claim(const ExchangeMatrix& m_T, int i);

// Value, in basket units, of a claim paying c[i] in currency i. Every active
// currency must quote a finite payoff (else IntegrabilityError) and all
// active-currency evaluations b_i * c_i must agree within tol (else
// std::domain_error); the mean over active currencies is returned.
double basket_claim_value(const ExchangeMatrix& m, const std::vector<XReal>& c,
                          double tol = kRateTol);

}  // namespace nlab

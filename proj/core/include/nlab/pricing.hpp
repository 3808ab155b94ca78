#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nlab/common.hpp"

namespace nlab {

// Two-currency jump-diffusion market: S_{1,2} follows a lognormal diffusion
// killed at an independent exponential devaluation time. Under the
// currency-1 numeraire measure, currency 2 devalues at rate lambda2; under
// the currency-2 measure, currency 1 devalues at rate lambda1. Drifts and
// intensities are tied together (mu1 = mu2 = lambda2 - lambda1) so the two
// descriptions quote the same market; lambda1, lambda2 >= 0 keeps both rows
// supermartingales under their own measures.
struct CHParams {
  double spot = 1.0;     // S_{1,2}(0), currency-1 units per currency-2 unit
  double sigma = 0.2;    // volatility, per sqrt(year)
  double mu1 = 0.0;      // drift of S_{1,2} under the currency-1 measure
  double mu2 = 0.0;      // drift of S_{2,1} under the currency-2 measure
  double lambda1 = 0.0;  // intensity of currency-1 devaluation
  double lambda2 = 0.0;  // intensity of currency-2 devaluation
  double horizon = 1.0;  // T, years

  double sbar1() const { return 1.0 / (1.0 + spot); }         // basket price of currency 1
  double sbar2() const { return spot / (1.0 + spot); }        // basket price of currency 2
};

// Rules: "spot", "sigma", "horizon", "lambda" (domain problems),
// "consistency" (mu1 = mu2 = lambda2 - lambda1 broken; detail starts with
// "consistency constraint violated"), "supermartingale" (lambda1 + mu2 < 0
// or lambda2 - mu1 < 0). Tolerance on the equality/inequality checks 1e-12.
ValidationReport validate_params(const CHParams& p, double tol = kLinTol);

// Standard normal CDF, absolute error ~1e-16.
double normal_cdf(double x);

// Basket value of the call on currency 2: pays (S_{1,2}(T) - K)^+ in
// currency 1 while currency 1 survives and one unit of currency 2 after a
// currency-1 devaluation. K = 0 collapses to the basket price of currency 2.
// Throws std::invalid_argument on invalid params or K < 0.
double price_exchange_option(const CHParams& p, double strike);

// The same price split per currency-1 unit: classical is the jump-discounted
// Black-Scholes-type term E_{Q1}[(S(T) - K)^+], correction is
// spot * (1 - e^{-lambda1 T}), and classical + correction equals
// price_exchange_option / sbar1.
struct PriceBreakdown {
  double aggregated = 0.0;  // basket units
  double classical = 0.0;   // currency-1 units
  double correction = 0.0;  // currency-1 units
};
PriceBreakdown decompose_price(const CHParams& p, double strike);

// E_{Q1}[(K - S_{1,2}(T))^+] in closed form (the put pays K outright on a
// currency-2 devaluation).
double classical_put(const CHParams& p, double strike);

// Both parity identities at one strike. Aggregated prices obey
// call - put = sbar2 - K * sbar1 exactly; the classical currency-1 prices
// miss forward parity by exactly -spot (1 - e^{-lambda1 T}).
struct ParityReport {
  double strike = 0.0;
  double call = 0.0;                  // basket units
  double put = 0.0;                   // basket units
  double aggregated_gap = 0.0;        // call - put - (sbar2 - K sbar1)
  double classical_gap = 0.0;         // (call1 - put1) - (spot - K)
  double classical_gap_expected = 0.0;  // -spot (1 - e^{-lambda1 T})
  double residual = 0.0;              // classical_gap - expected
};
ParityReport parity_report(const CHParams& p, double strike);

enum class Leg {
  survival,     // under the currency-1 measure: terminal S_{1,2}
  devaluation,  // under the currency-2 measure: terminal S_{2,1}
};

// Exact draws of the terminal rate (no discretization bias: the lognormal
// part is simulated as a sum of n_steps Gaussian increments, the
// devaluation time as one exponential). terminal[k] is 0 when the path
// devalued; devalued[k] flags it. Deterministic given (params, leg, n_paths,
// n_steps, seed), independent of how calls are batched.
struct PathBatch {
  std::vector<double> terminal;
  std::vector<std::uint8_t> devalued;
};
PathBatch simulate_paths(const CHParams& p, Leg leg, std::uint64_t n_paths,
                         int n_steps, std::uint64_t seed);

// Terminal payoff in currency 1 as a function of S_{1,2}(T) (evaluated at 0
// on currency-2 devaluation), and in currency 2 as a function of S_{2,1}(T)
// (only chargeable when currency 1 has devalued).
struct TwoCurrencyClaim {
  std::function<double(double)> pay1;
  std::function<double(double)> pay2;
};
TwoCurrencyClaim exchange_call(double strike);
TwoCurrencyClaim exchange_put(double strike);

struct MCEstimate {
  double value = 0.0;      // basket units
  double std_error = 0.0;
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;
};

// sbar1 * E_{Q1}[pay1(S_{1,2}(T))] + sbar2 * E_{Q2}[pay2(S_{2,1}(T));
// currency 1 devalued], each leg estimated from its own n_paths draws;
// standard errors combine in quadrature.
MCEstimate mc_price(const CHParams& p, const TwoCurrencyClaim& claim,
                    std::uint64_t n_paths, std::uint64_t seed,
                    int n_steps = 1);

}  // namespace nlab

#include "nlab/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace nlab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kBlockPaths = 1 << 16;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::uint64_t mix64(std::uint64_t a) {
  a += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = a;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Draws with a fixed consumption pattern so results are reproducible
// byte-for-byte for a given seed on any conforming platform: mt19937_64 is
// specified bit-exactly, and the mappings below avoid the
// implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double normal() {  // Box-Muller, one spare cached
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate) {  // +inf when rate == 0
    double u = uniform();
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log1p(-u) / rate;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

void require_valid(const CHParams& p) {
  ValidationReport rep = validate_params(p);
  if (!rep.ok())
    throw std::invalid_argument("invalid model parameters: " +
                                rep.violations.front().detail);
}

struct D12 {
  double d1, d2;
};

D12 d_values(const CHParams& p, double strike) {
  double st = p.sigma * std::sqrt(p.horizon);
  double d1 = (std::log(p.spot / strike) +
               (p.lambda2 - p.lambda1 + 0.5 * p.sigma * p.sigma) * p.horizon) /
              st;
  return {d1, d1 - st};
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

ValidationReport validate_params(const CHParams& p, double tol) {
  ValidationReport rep;
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(p.spot) || !(p.spot > 0.0))
    rep.add("spot", {}, "", "spot must be finite and > 0, got " + fmt(p.spot));
  if (!finite(p.sigma) || !(p.sigma > 0.0))
    rep.add("sigma", {}, "",
            "sigma must be finite and > 0, got " + fmt(p.sigma));
  if (!finite(p.horizon) || !(p.horizon > 0.0))
    rep.add("horizon", {}, "",
            "horizon must be finite and > 0, got " + fmt(p.horizon));
  if (!finite(p.lambda1) || p.lambda1 < 0.0)
    rep.add("lambda", {1}, "",
            "lambda1 must be finite and >= 0, got " + fmt(p.lambda1));
  if (!finite(p.lambda2) || p.lambda2 < 0.0)
    rep.add("lambda", {2}, "",
            "lambda2 must be finite and >= 0, got " + fmt(p.lambda2));
  if (!finite(p.mu1) || !finite(p.mu2)) {
    rep.add("consistency", {}, "", "drifts must be finite");
    return rep;
  }
  if (rep.ok()) {
    if (std::abs(p.mu1 - p.mu2) > tol ||
        std::abs((p.lambda2 - p.lambda1) - p.mu1) > tol)
      rep.add("consistency", {}, "",
              "consistency constraint violated: need mu1 = mu2 = "
              "lambda2 - lambda1, got mu1 = " +
                  fmt(p.mu1) + ", mu2 = " + fmt(p.mu2) +
                  ", lambda2 - lambda1 = " + fmt(p.lambda2 - p.lambda1));
    if (p.lambda1 + p.mu2 < -tol || p.lambda2 - p.mu1 < -tol)
      rep.add("supermartingale", {}, "",
              "supermartingale constraint violated: need lambda1 >= -mu2 "
              "and lambda2 >= mu1");
  }
  return rep;
}

double price_exchange_option(const CHParams& p, double strike) {
  require_valid(p);
  if (strike < 0.0) throw std::invalid_argument("strike must be >= 0");
  double sb1 = p.sbar1(), sb2 = p.sbar2();
  // A zero strike makes the call surrender nothing: it is the claim on one
  // unit of currency 2 outright, worth its basket price. The formula below
  // degenerates to the same value (Phi -> 1, K Phi -> 0).
  if (strike == 0.0) return sb2;
  auto [d1, d2] = d_values(p, strike);
  return sb2 * std::exp(-p.lambda1 * p.horizon) * normal_cdf(d1) -
         sb1 * strike * std::exp(-p.lambda2 * p.horizon) * normal_cdf(d2) +
         sb2 * (1.0 - std::exp(-p.lambda1 * p.horizon));
}

PriceBreakdown decompose_price(const CHParams& p, double strike) {
  require_valid(p);
  if (strike < 0.0) throw std::invalid_argument("strike must be >= 0");
  PriceBreakdown out;
  out.aggregated = price_exchange_option(p, strike);
  double disc1 = std::exp(-p.lambda1 * p.horizon);
  if (strike == 0.0) {
    out.classical = p.spot * disc1;
  } else {
    auto [d1, d2] = d_values(p, strike);
    out.classical = p.spot * disc1 * normal_cdf(d1) -
                    strike * std::exp(-p.lambda2 * p.horizon) * normal_cdf(d2);
  }
  out.correction = p.spot * (1.0 - disc1);
  return out;
}

double classical_put(const CHParams& p, double strike) {
  require_valid(p);
  if (strike < 0.0) throw std::invalid_argument("strike must be >= 0");
  if (strike == 0.0) return 0.0;
  auto [d1, d2] = d_values(p, strike);
  double disc2 = std::exp(-p.lambda2 * p.horizon);
  // diffusion part on survival, plus K outright on currency-2 devaluation
  return strike * disc2 * normal_cdf(-d2) -
         p.spot * std::exp(-p.lambda1 * p.horizon) * normal_cdf(-d1) +
         strike * (1.0 - disc2);
}

ParityReport parity_report(const CHParams& p, double strike) {
  require_valid(p);
  if (strike < 0.0) throw std::invalid_argument("strike must be >= 0");
  ParityReport out;
  out.strike = strike;
  out.call = price_exchange_option(p, strike);
  double put1 = classical_put(p, strike);
  out.put = p.sbar1() * put1;  // the put pays nothing on currency-1 devaluation
  out.aggregated_gap =
      out.call - out.put - (p.sbar2() - strike * p.sbar1());
  PriceBreakdown dec = decompose_price(p, strike);
  out.classical_gap = (dec.classical - put1) - (p.spot - strike);
  out.classical_gap_expected =
      -p.spot * (1.0 - std::exp(-p.lambda1 * p.horizon));
  out.residual = out.classical_gap - out.classical_gap_expected;
  return out;
}

PathBatch simulate_paths(const CHParams& p, Leg leg, std::uint64_t n_paths,
                         int n_steps, std::uint64_t seed) {
  require_valid(p);
  if (n_paths == 0) throw std::invalid_argument("need at least one path");
  if (n_steps < 1) throw std::invalid_argument("need at least one step");

  const double T = p.horizon;
  const double sdt = p.sigma * std::sqrt(T / n_steps);
  // log-drift of the simulated rate and intensity of the devaluation that
  // kills it, under the leg's own measure
  const double drift = (leg == Leg::survival ? p.mu1 : -p.mu2) -
                       0.5 * p.sigma * p.sigma;
  const double rate = leg == Leg::survival ? p.lambda2 : p.lambda1;
  const double start = leg == Leg::survival ? p.spot : 1.0 / p.spot;
  const std::uint64_t tag = leg == Leg::survival ? 0x5331ULL : 0x5332ULL;

  PathBatch batch;
  batch.terminal.resize(n_paths);
  batch.devalued.resize(n_paths);
  for (std::uint64_t b = 0; b * kBlockPaths < n_paths; ++b) {
    Rng rng(mix64(mix64(seed ^ tag) + b));
    std::uint64_t lo = b * kBlockPaths;
    std::uint64_t hi = std::min(n_paths, lo + kBlockPaths);
    for (std::uint64_t k = lo; k < hi; ++k) {
      double w = 0.0;
      for (int s = 0; s < n_steps; ++s) w += rng.normal();
      double tau = rng.exponential(rate);
      if (tau <= T) {
        batch.terminal[k] = 0.0;
        batch.devalued[k] = 1;
      } else {
        batch.terminal[k] = start * std::exp(sdt * w + drift * T);
        batch.devalued[k] = 0;
      }
    }
  }
  return batch;
}

TwoCurrencyClaim exchange_call(double strike) {
  return {[strike](double s) { return std::max(s - strike, 0.0); },
          [strike](double s) { return std::max(1.0 - strike * s, 0.0); }};
}

TwoCurrencyClaim exchange_put(double strike) {
  return {[strike](double s) { return std::max(strike - s, 0.0); },
          [](double) { return 0.0; }};
}

MCEstimate mc_price(const CHParams& p, const TwoCurrencyClaim& claim,
                    std::uint64_t n_paths, std::uint64_t seed, int n_steps) {
  require_valid(p);
  if (!claim.pay1 || !claim.pay2)
    throw std::invalid_argument("claim payoffs must be set");

  struct Moments {
    double mean, se;
  };
  auto leg_moments = [&](Leg leg) -> Moments {
    PathBatch batch = simulate_paths(p, leg, n_paths, n_steps, seed);
    long double sum = 0.0L, sumsq = 0.0L;
    for (std::uint64_t k = 0; k < n_paths; ++k) {
      double v;
      if (leg == Leg::survival)
        v = claim.pay1(batch.terminal[k]);
      else
        // the devaluation leg only charges when currency 1 actually died
        v = batch.devalued[k] ? claim.pay2(batch.terminal[k]) : 0.0;
      sum += v;
      sumsq += static_cast<long double>(v) * v;
    }
    double n = static_cast<double>(n_paths);
    double mean = static_cast<double>(sum / n_paths);
    double var = n > 1.0
                     ? std::max(0.0, (static_cast<double>(sumsq / n_paths) -
                                      mean * mean) *
                                         n / (n - 1.0))
                     : 0.0;
    return {mean, std::sqrt(var / n)};
  };

  Moments m1 = leg_moments(Leg::survival);
  Moments m2 = leg_moments(Leg::devaluation);
  MCEstimate est;
  est.value = p.sbar1() * m1.mean + p.sbar2() * m2.mean;
  est.std_error = std::hypot(p.sbar1() * m1.se, p.sbar2() * m2.se);
  est.paths = n_paths;
  est.seed = seed;
  return est;
}

}  // namespace nlab

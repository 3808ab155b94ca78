// Release gate: every numbered criterion prints exactly one PASS/FAIL line.
// Tolerances are fixed here on purpose; loosening them is a release decision,
// not a test fix.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlab/aggregation.hpp>
#include <nlab/deflator.hpp>
#include <nlab/pricing.hpp>
#include <nlab/scenarios.hpp>
#include <nlab/tree.hpp>

#include "support/generators.hpp"

using namespace nlab;
using testgen::Corpus;
using testgen::GenOptions;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%-4s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

CHParams grid_params(double sigma) {
  CHParams p;
  p.spot = 1.0;
  p.sigma = sigma;
  p.horizon = 1.0;
  p.lambda1 = 0.05;
  p.lambda2 = 0.10;
  p.mu1 = p.mu2 = 0.05;
  return p;
}

const double kSigmas[] = {0.1, 0.2, 0.4};
const double kStrikes[] = {0.5, 1.0, 2.0};

double rel(double x, double ref) {
  return std::abs(x - ref) / std::max(1.0, std::abs(ref));
}

// written independently of the library's normal_cdf / pricing path on purpose
double plain_exchange_call(double spot, double strike, double sigma,
                           double horizon) {
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  if (strike == 0.0) return spot;
  double sq = sigma * std::sqrt(horizon);
  double d1 = (std::log(spot / strike) + 0.5 * sigma * sigma * horizon) / sq;
  return spot * phi(d1) - strike * phi(d1 - sq);
}

// ---------------------------------------------------------------- criteria

void ac1_closed_form_vs_mc() {
  auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double sigma : kSigmas)
    for (double k : kStrikes) {
      CHParams p = grid_params(sigma);
      double closed = price_exchange_option(p, k);
      MCEstimate mc = mc_price(p, exchange_call(k), 1000000, 20250817);
      worst = std::max(worst, std::abs(mc.value - closed) / mc.std_error);
    }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  report("AC1", worst <= 3.0 && secs < 60.0,
         "closed form vs 1e6-path Monte Carlo, 9 grid points: max |diff|/SE " +
             fmt(worst) + ", " + fmt(secs) + " s");
}

void ac2_degenerate_reductions() {
  double worst_k0 = 0.0;
  for (double sigma : kSigmas)
    for (double spot : {0.7, 1.0, 1.6}) {
      CHParams p = grid_params(sigma);
      p.spot = spot;
      worst_k0 = std::max(worst_k0,
                          std::abs(price_exchange_option(p, 0.0) - p.sbar2()));
    }
  double worst_nj = 0.0;
  for (double sigma : kSigmas)
    for (double spot : {0.7, 1.0, 1.6})
      for (double k : kStrikes) {
        CHParams p;
        p.spot = spot;
        p.sigma = sigma;
        p.horizon = 1.0;  // lambdas and drifts stay zero
        double mine = price_exchange_option(p, k);
        double ref =
            p.sbar1() * plain_exchange_call(spot, k, sigma, p.horizon);
        worst_nj = std::max(worst_nj, std::abs(mine - ref));
      }
  report("AC2", worst_k0 <= 1e-14 && worst_nj <= 1e-12,
         "K=0 reduces to the currency-2 basket price (err " + fmt(worst_k0) +
             "); no-jump limit matches a reference formula (err " +
             fmt(worst_nj) + ")");
}

void ac3_parity() {
  double worst_agg = 0.0, worst_cls = 0.0;
  for (double sigma : kSigmas)
    for (double k : kStrikes) {
      CHParams p = grid_params(sigma);
      ParityReport rep = parity_report(p, k);
      worst_agg = std::max(worst_agg, std::abs(rep.aggregated_gap));
      double expected = -p.spot * (1.0 - std::exp(-p.lambda1 * p.horizon));
      worst_cls = std::max(worst_cls, std::abs(rep.classical_gap - expected));
    }
  report("AC3", worst_agg <= 1e-12 && worst_cls <= 1e-12,
         "aggregated put-call parity exact (gap " + fmt(worst_agg) +
             "); classical gap equals the devaluation correction (err " +
             fmt(worst_cls) + ")");
}

void ac4_aggregation_round_trips() {
  std::mt19937_64 rng(0xAC04);
  double worst_rt = 0.0, worst_claim = 0.0;
  for (int rep_i = 0; rep_i < 200; ++rep_i) {
    Corpus c = testgen::make_consistent(rng);
    const MarketTree& t = c.tree;
    ValuationMeasure vm = aggregate_consistent(t, c.family);

    MeasureFamily back = disaggregate(t, vm);
    for (int i = 0; i < t.d(); ++i)
      for (size_t l = 0; l < t.leaves().size(); ++l)
        worst_rt = std::max(
            worst_rt, std::abs(back.measures[i].leaf_weight(l) -
                               c.family.measures[i].leaf_weight(l)));
    ValuationMeasure again = aggregate_consistent(t, back);
    for (size_t l = 0; l < t.leaves().size(); ++l)
      worst_rt = std::max(worst_rt,
                          std::abs(again.measure().leaf_weight(l) -
                                   vm.measure().leaf_weight(l)));

    for (int k = 0; k < 10; ++k) {
      Claim cl = testgen::random_claim(rng, t);
      std::vector<double> bv = claim_basket_values(t, cl);
      double direct = 0.0;
      for (size_t l = 0; l < bv.size(); ++l)
        direct += vm.measure().leaf_weight(l) * bv[l];
      worst_claim =
          std::max(worst_claim, rel(value_claim(t, c.family, cl), direct));
    }
  }
  report("AC4", worst_rt <= 1e-12 && worst_claim <= 1e-12,
         "200 consistent trees: aggregate/disaggregate round trips (err " +
             fmt(worst_rt) + "), claim values vs direct expectation (err " +
             fmt(worst_claim) + ", 10 claims each)");
}

void ac5_martingale_aggregation() {
  std::mt19937_64 rng(0xAC05);
  double worst = 0.0;
  int built = 0;
  for (int rep_i = 0; rep_i < 200; ++rep_i) {
    Corpus c = testgen::make_martingale(rng);
    const MarketTree& t = c.tree;
    std::optional<ValuationMeasure> vm;
    try {
      vm.emplace(aggregate_martingale(t, c.family));
    } catch (const AggregationError&) {
      report("AC5", false,
             "aggregate_martingale rejected tree " + std::to_string(rep_i));
      return;
    }
    ++built;
    worst = std::max(worst, vm->max_residual());
    const TreeMeasure& q = vm->measure();
    for (int n = 0; n < t.size(); ++n) {
      const auto& node = t.node(n);
      if (node.children.empty() || !q.positive(n)) continue;
      for (int i = 0; i < t.d(); ++i) {
        double e = 0.0;
        for (int ch : node.children) e += q.node_prob(ch) * t.node(ch).sbar[i];
        worst = std::max(worst, rel(e / q.node_prob(n), node.sbar[i]));
      }
    }
  }
  report("AC5", built == 200 && worst <= 1e-9,
         "200 per-currency-martingale trees: basket prices are aggregate "
         "martingales (max residual " +
             fmt(worst) + ")");
}

void ac6_deflator_construction() {
  std::mt19937_64 rng(0xAC06);
  double worst = 0.0;
  int patched_trees = 0, death_trees = 0, built = 0;
  bool positive_ok = true;
  for (int rep_i = 0; rep_i < 200; ++rep_i) {
    Corpus c = testgen::make_martingale(rng);
    const MarketTree& t = c.tree;
    std::optional<DeflatorResult> ro;
    try {
      ro.emplace(build_deflator(t, c.family));
    } catch (const DeflatorPreconditionError& e) {
      report("AC6", false, "preconditions rejected tree " +
                               std::to_string(rep_i) + ": " + e.what());
      return;
    }
    const DeflatorResult& r = *ro;
    ++built;
    if (c.has_death) ++death_trees;
    if (!r.patched_parents.empty()) ++patched_trees;
    worst = std::max(worst, r.max_residual);

    const TreeMeasure& P = r.reference;
    for (int n = 0; n < t.size(); ++n) {
      if (P.positive(n)) positive_ok = positive_ok && r.z[n] > 0.0;
      const auto& node = t.node(n);
      if (node.children.empty() || !P.positive(n)) continue;
      double zn = r.z[n];
      double ez = 0.0;
      for (int ch : node.children) ez += P.node_prob(ch) * r.z[ch];
      worst = std::max(worst, rel(ez / P.node_prob(n), zn));
      for (int i = 0; i < t.d(); ++i) {
        double e = 0.0;
        for (int ch : node.children)
          e += P.node_prob(ch) * r.z[ch] * t.node(ch).sbar[i];
        worst = std::max(worst, rel(e / P.node_prob(n), zn * node.sbar[i]));
      }
    }
  }
  report("AC6", built == 200 && positive_ok && worst <= 1e-9 &&
                    patched_trees > 0,
         "200 trees: deflator strictly positive, Z and Z*sbar are reference "
         "martingales (max residual " +
             fmt(worst) + "); devaluation patch exercised on " +
             std::to_string(patched_trees) + "/" +
             std::to_string(death_trees) + " death trees");
}

void ac7_counterexample_suite() {
  bool all = true;
  std::string detail;
  for (const std::string& name : scenario_names()) {
    ScenarioReport rep = run_scenario(builtin_scenario(name));
    all = all && rep.pass;
    if (!rep.pass) detail += " " + name + " drifted;";
  }
  int rc = std::system((std::string(NLAB_CLI_PATH) +
                        " counterexamples >/dev/null 2>&1")
                           .c_str());
  bool cli_ok = rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
  report("AC7", all && cli_ok,
         "three archived failure modes verified in-process and by the CLI "
         "(exit " +
             std::to_string(rc == -1 ? -1 : WEXITSTATUS(rc)) + ")" + detail);
}

void ac8_structural_identities() {
  std::mt19937_64 rng(0xAC08);
  GenOptions opt;
  opt.allow_currency1_death = false;  // correction terms quote in currency 1
  double worst_sum = 0.0, worst_dev = 0.0, worst_neg = 0.0, worst_leaf = 0.0,
         worst_super = 0.0;
  for (int rep_i = 0; rep_i < 200; ++rep_i) {
    Corpus c = testgen::make_consistent(rng, opt);
    const MarketTree& t = c.tree;

    for (int n = 0; n < t.size(); ++n) {
      double s = 0.0;
      for (int i = 0; i < t.d(); ++i) s += t.node(n).sbar[i];
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }

    DevaluationReport dev = devaluation_identity_report(t, c.family);
    for (const DevaluationRow& row : dev.rows)
      worst_dev = std::max(worst_dev, std::abs(row.gap));

    // the devaluation premium is a potential: nonnegative, zero at the
    // horizon, supermartingale under the currency's own measure
    Claim cl = testgen::random_claim(rng, t);
    for (int i = 0; i < t.d(); ++i) {
      const TreeMeasure& qi = c.family.measures[i];
      std::vector<double> f(t.size(), 0.0);
      for (int n = 0; n < t.size(); ++n) {
        if (!qi.positive(n)) continue;
        f[n] = correction_term(t, c.family, cl, i, n).correction;
        worst_neg = std::max(worst_neg, -f[n]);
        if (t.node(n).children.empty())
          worst_leaf = std::max(worst_leaf, std::abs(f[n]));
      }
      for (int n = 0; n < t.size(); ++n) {
        const auto& node = t.node(n);
        if (node.children.empty() || !qi.positive(n)) continue;
        double e = 0.0;
        for (int ch : node.children)
          if (qi.positive(ch)) e += qi.node_prob(ch) * f[ch];
        worst_super = std::max(worst_super, e / qi.node_prob(n) - f[n]);
      }
    }
  }
  bool pass = worst_sum <= 1e-12 && worst_dev <= 1e-12 &&
              worst_neg <= 1e-12 && worst_leaf <= 1e-12 &&
              worst_super <= 1e-9;
  report("AC8", pass,
         "basket prices sum to 1 (err " + fmt(worst_sum) +
             "); devaluation identity (err " + fmt(worst_dev) +
             "); correction term is a potential (neg " + fmt(worst_neg) +
             ", leaf " + fmt(worst_leaf) + ", supermartingale slack " +
             fmt(worst_super) + ")");
}

}  // namespace

int main() {
  ac1_closed_form_vs_mc();
  ac2_degenerate_reductions();
  ac3_parity();
  ac4_aggregation_round_trips();
  ac5_martingale_aggregation();
  ac6_deflator_construction();
  ac7_counterexample_suite();
  ac8_structural_identities();
  if (failures == 0) {
    std::printf("8/8 acceptance criteria pass\n");
    return 0;
  }
  std::printf("%d/8 acceptance criteria FAILED\n", failures);
  return 1;
}

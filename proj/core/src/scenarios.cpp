#include "nlab/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace nlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Two-currency matrix from the single rate s = S_{1,2}; s = 0 means
// currency 2 is dead.
RawMatrix m2(double s) {
  if (s == 0.0) return {{1.0, 0.0}, {kInf, 1.0}};
  return {{1.0, s}, {1.0 / s, 1.0}};
}

void add(std::vector<RawNode>& nodes, std::string id, int time,
         std::optional<std::string> parent, double s) {
  nodes.push_back({std::move(id), time, std::move(parent), m2(s)});
}

Scenario make_sudden_arbitrage() {
  std::vector<RawNode> nodes;
  add(nodes, "n0", 0, {}, 1.0);
  add(nodes, "w1", 1, "n0", 1.0);
  add(nodes, "w2", 1, "n0", 0.0);
  MarketTree t = MarketTree::build(nodes);
  MeasureFamily fam;
  fam.measures.push_back(
      TreeMeasure::from_leaf_weights(t, {{"w1", 0.5}, {"w2", 0.5}}));
  fam.measures.push_back(
      TreeMeasure::from_leaf_weights(t, {{"w1", 1.0}, {"w2", 0.0}}));
  return {"sudden_arbitrage",
          "Sudden devaluation priced by nobody: consistency and the "
          "martingale condition fail",
          std::move(t), std::move(fam)};
}

Scenario make_fated_devaluation() {
  std::vector<RawNode> nodes;
  add(nodes, "n0", 0, {}, 1.0);
  add(nodes, "nU", 1, "n0", 1.5);
  add(nodes, "nD", 1, "n0", 0.5);
  add(nodes, "nUa", 2, "nU", 2.0);
  add(nodes, "nUb", 2, "nU", 1.0);
  add(nodes, "nDa", 2, "nD", 1.0);
  add(nodes, "nDb", 2, "nD", 0.25);
  add(nodes, "nDc", 2, "nD", 0.25);
  add(nodes, "l1", 3, "nUa", 3.0);
  add(nodes, "l2", 3, "nUa", 1.0);
  add(nodes, "l3", 3, "nUb", 1.5);
  add(nodes, "l4", 3, "nUb", 0.5);
  add(nodes, "l5", 3, "nDa", 2.0);
  add(nodes, "l6", 3, "nDa", 0.5);
  add(nodes, "l7", 3, "nDb", 0.0);
  add(nodes, "l8", 3, "nDb", 0.0);
  add(nodes, "l9", 3, "nDc", 0.125);
  add(nodes, "l10", 3, "nDc", 0.5);
  MarketTree t = MarketTree::build(nodes);
  MeasureFamily fam;
  fam.measures.push_back(TreeMeasure::from_leaf_weights(
      t, {{"l1", 1.0 / 8}, {"l2", 1.0 / 8}, {"l3", 1.0 / 8}, {"l4", 1.0 / 8},
          {"l5", 1.0 / 18}, {"l6", 1.0 / 9}, {"l7", 1.0 / 12},
          {"l8", 1.0 / 12}, {"l9", 1.0 / 9}, {"l10", 1.0 / 18}}));
  fam.measures.push_back(TreeMeasure::from_leaf_weights(
      t, {{"l1", 3.0 / 8}, {"l2", 1.0 / 8}, {"l3", 3.0 / 16}, {"l4", 1.0 / 16},
          {"l5", 1.0 / 9}, {"l6", 1.0 / 18}, {"l7", 0.0}, {"l8", 0.0},
          {"l9", 1.0 / 36}, {"l10", 1.0 / 18}}));
  return {"fated_devaluation",
          "A currency fated to die: no-fated-devaluations fails and no "
          "consistent family can exist",
          std::move(t), std::move(fam)};
}

Scenario make_support_gap() {
  std::vector<RawNode> nodes;
  add(nodes, "n0", 0, {}, 1.0);
  add(nodes, "nA", 1, "n0", 1.0);
  add(nodes, "nB", 1, "n0", 1.0);
  add(nodes, "lA1", 2, "nA", 1.0);
  add(nodes, "lA2", 2, "nA", 1.0);
  add(nodes, "lB1", 2, "nB", 1.5);
  add(nodes, "lB2", 2, "nB", 1.25);
  MarketTree t = MarketTree::build(nodes);
  MeasureFamily fam;
  // the currency-1 measure is the currency-2 measure conditioned on never
  // entering the nB branch
  fam.measures.push_back(TreeMeasure::from_leaf_weights(
      t, {{"lA1", 0.5}, {"lA2", 0.5}, {"lB1", 0.0}, {"lB2", 0.0}}));
  fam.measures.push_back(TreeMeasure::from_leaf_weights(
      t, {{"lA1", 0.25}, {"lA2", 0.25}, {"lB1", 0.25}, {"lB2", 0.25}}));
  return {"support_gap",
          "A measure blind to a live branch: the support condition fails",
          std::move(t), std::move(fam)};
}

const std::map<std::string, std::map<std::string, std::string>>&
expectations() {
  static const std::map<std::string, std::map<std::string, std::string>> e = {
      {"sudden_arbitrage",
       {{"consistency", "fails"},
        {"martingale_currency_1", "fails"},
        {"martingale_currency_2", "holds"},
        {"nod", "holds"},
        {"nsd", "fails"},
        {"support", "holds"},
        {"deflator", "rejected: (i) currency 1"},
        {"feasibility", "infeasible"},
        {"survival_equivalence_1_2", "disagree"},
        {"survival_equivalence_2_1", "disagree"}}},
      {"fated_devaluation",
       {{"consistency", "fails"},
        {"martingale_currency_1", "fails"},
        {"martingale_currency_2", "holds"},
        {"nod", "fails"},
        {"nsd", "fails"},
        {"support", "holds"},
        {"deflator", "rejected: (i) currency 1; (ii) currency 2"},
        {"feasibility", "infeasible"},
        {"survival_equivalence_1_2", "disagree"},
        {"survival_equivalence_2_1", "disagree"}}},
      {"support_gap",
       {{"consistency", "fails"},
        {"martingale_currency_1", "holds"},
        {"martingale_currency_2", "fails"},
        {"nod", "holds"},
        {"nsd", "holds"},
        {"support", "fails"},
        {"deflator", "rejected: (i) currency 2; (iii) currency 1"},
        {"feasibility", "infeasible"},
        {"survival_equivalence_1_2", "agree"},
        {"survival_equivalence_2_1", "disagree"}}},
  };
  return e;
}

std::string witness_list(const std::vector<Violation>& vs) {
  std::ostringstream os;
  for (size_t k = 0; k < vs.size() && k < 6; ++k) {
    if (k) os << ", ";
    os << vs[k].node;
    if (!vs[k].indices.empty()) {
      os << " (currency";
      for (int i : vs[k].indices) os << " " << i;
      os << ")";
    }
  }
  if (vs.size() > 6) os << ", ...";
  return os.str();
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"sudden_arbitrage", "fated_devaluation", "support_gap"};
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "sudden_arbitrage") return make_sudden_arbitrage();
  if (name == "fated_devaluation") return make_fated_devaluation();
  if (name == "support_gap") return make_support_gap();
  throw std::invalid_argument("unknown scenario \"" + name + "\"");
}

ScenarioReport run_scenario(const Scenario& s) {
  auto eit = expectations().find(s.name);
  if (eit == expectations().end())
    throw std::invalid_argument("no expectations for scenario \"" + s.name +
                                "\"");
  const auto& expect = eit->second;
  const MarketTree& t = s.tree;
  TreeMeasure ref = reference_measure(t, s.family);

  ScenarioReport rep;
  rep.name = s.name;
  rep.title = s.title;

  auto push = [&](const std::string& check, std::string actual,
                  std::string detail) {
    ScenarioFinding f;
    f.check = check;
    f.expected = expect.at(check);
    f.actual = std::move(actual);
    f.match = f.actual == f.expected;
    f.detail = std::move(detail);
    rep.findings.push_back(std::move(f));
  };

  ConsistencyReport crep = check_consistency(t, s.family);
  std::string cdetail;
  if (!crep.ok) {
    const ConsistencyViolation& v = crep.violations.front();
    std::ostringstream os;
    os << crep.violations.size() << " violation"
       << (crep.violations.size() == 1 ? "" : "s") << ", first at atom \""
       << v.node << "\" pair (" << v.i << "," << v.j << ")";
    cdetail = os.str();
  }
  push("consistency", crep.ok ? "holds" : "fails", cdetail);

  for (int i = 0; i < t.d(); ++i) {
    MartingaleReport m = is_martingale(t, s.family.measures[i], i);
    push("martingale_currency_" + std::to_string(i + 1),
         m.ok ? "holds" : "fails",
         m.ok ? "" : "witness: " + witness_list(m.violations));
  }

  ValidationReport nod = check_nod(t, ref);
  push("nod", nod.ok() ? "holds" : "fails",
       nod.ok() ? "" : "witness: " + witness_list(nod.violations));
  ValidationReport nsd = check_nsd(t, ref);
  push("nsd", nsd.ok() ? "holds" : "fails",
       nsd.ok() ? "" : "witness: " + witness_list(nsd.violations));
  ValidationReport sup = check_support_condition(t, s.family);
  push("support", sup.ok() ? "holds" : "fails",
       sup.ok() ? "" : "witness: " + witness_list(sup.violations));

  std::string defl_actual, defl_detail;
  try {
    DeflatorResult r = build_deflator(t, s.family);
    defl_actual = "constructed";
    std::ostringstream os;
    os << "max residual " << r.max_residual;
    defl_detail = os.str();
  } catch (const DeflatorPreconditionError& e) {
    std::set<std::pair<std::string, int>> seen;
    for (const PreconditionFailure& f : e.failures)
      seen.insert({f.condition, f.currency});
    std::ostringstream os;
    os << "rejected:";
    bool first = true;
    for (const auto& [cond, cur] : seen) {
      os << (first ? " " : "; ") << "(" << cond << ") currency " << cur;
      first = false;
    }
    defl_actual = os.str();
    defl_detail = e.what();
  }
  push("deflator", defl_actual, defl_detail);

  if (t.d() == 2) {
    FeasibilityReport feas = valuation_measure_feasibility(t, ref);
    std::string fd;
    if (!feas.feasible) {
      fd = "no consistent family with equivalent aggregate exists; witness:";
      for (const std::string& w : feas.witnesses) fd += " " + w;
    }
    push("feasibility", feas.feasible ? "feasible" : "infeasible", fd);

    for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 0}}) {
      SurvivalEquivalence se = martingale_iff_survival(t, s.family, i, j);
      std::ostringstream os;
      os << "rate (" << i + 1 << "," << j + 1 << ") martingale "
         << (se.martingale_ok ? "holds" : "fails") << ", survival probability "
         << se.survival_prob;
      push("survival_equivalence_" + std::to_string(i + 1) + "_" +
               std::to_string(j + 1),
           se.agree ? "agree" : "disagree", os.str());
    }
  }

  rep.pass = std::all_of(rep.findings.begin(), rep.findings.end(),
                         [](const ScenarioFinding& f) { return f.match; });
  return rep;
}

}  // namespace nlab

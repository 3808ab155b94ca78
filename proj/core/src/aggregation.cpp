#include "nlab/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlab {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

bool is_active_at(const MarketTree::Node& n, int i) {
  return std::find(n.active.begin(), n.active.end(), i) != n.active.end();
}

std::string render(const ConsistencyReport& r) {
  std::ostringstream os;
  os << "family is not numeraire-consistent (" << r.violations.size()
     << " violation" << (r.violations.size() == 1 ? "" : "s") << ")";
  if (!r.violations.empty()) {
    const ConsistencyViolation& v = r.violations.front();
    os << ", first at atom \"" << v.node << "\" time " << v.time << " pair ("
       << v.i << "," << v.j << "): lhs " << fmt(v.lhs) << " vs rhs "
       << fmt(v.rhs);
  }
  return os.str();
}

}  // namespace

InconsistentFamilyError::InconsistentFamilyError(ConsistencyReport r)
    : std::domain_error(render(r)), report(std::move(r)) {}

NotValuationMeasureError::NotValuationMeasureError(std::vector<Violation> v)
    : std::domain_error(
          "basket prices are not martingales under this measure" +
          (v.empty() ? std::string()
                     : " (first: node \"" + v.front().node + "\", " +
                           v.front().detail + ")")),
      violations(std::move(v)) {}

AggregationError::AggregationError(std::vector<int> failing,
                                   std::vector<Violation> v)
    : std::domain_error([&] {
        std::string msg = "per-currency martingale property fails for";
        for (size_t k = 0; k < failing.size(); ++k)
          msg += (k ? ", currency " : " currency ") + std::to_string(failing[k]);
        return msg;
      }()),
      failing_currencies(std::move(failing)),
      violations(std::move(v)) {}

ValidationReport validate_claim(const MarketTree& t, const Claim& c,
                                double tol) {
  ValidationReport rep;
  if (c.values.size() != t.leaves().size()) {
    rep.add("claim_shape", {}, "",
            "claim has " + std::to_string(c.values.size()) +
                " leaf rows, tree has " + std::to_string(t.leaves().size()) +
                " leaves");
    return rep;
  }
  for (size_t k = 0; k < c.values.size(); ++k) {
    const MarketTree::Node& leaf = t.node(t.leaves()[k]);
    ValidationReport vrep = validate_value_vector(leaf.mat, c.values[k], tol);
    for (Violation& v : vrep.violations) {
      v.node = leaf.id;
      rep.violations.push_back(std::move(v));
    }
  }
  return rep;
}

Claim claim_of_unit(const MarketTree& t, int i) {
  if (i < 0 || i >= t.d())
    throw std::invalid_argument("currency index out of range");
  Claim c;
  c.values.reserve(t.leaves().size());
  for (int leaf : t.leaves())
    c.values.push_back(unit_claim(t.node(leaf).mat, i));
  return c;
}

std::vector<double> claim_basket_values(const MarketTree& t, const Claim& c,
                                        double tol) {
  ValidationReport rep = validate_claim(t, c, tol);
  if (!rep.ok())
    throw std::domain_error("claim inconsistent with terminal rates: " +
                            rep.violations.front().detail + " at leaf \"" +
                            rep.violations.front().node + "\"");
  std::vector<double> out(c.values.size());
  for (size_t k = 0; k < c.values.size(); ++k)
    out[k] = basket_claim_value(t.node(t.leaves()[k]).mat, c.values[k], tol);
  return out;
}

ConsistencyReport check_consistency(const MarketTree& t,
                                    const MeasureFamily& fam, double tol) {
  if (static_cast<int>(fam.measures.size()) != t.d())
    throw MeasureError("family has " + std::to_string(fam.measures.size()) +
                       " measures, tree has " + std::to_string(t.d()) +
                       " currencies");
  ConsistencyReport rep;
  const MarketTree::Node& root = t.node(t.root());
  for (int time = 0; time <= t.depth(); ++time) {
    for (int n : t.nodes_at(time)) {
      const MarketTree::Node& node = t.node(n);
      for (int i = 0; i < t.d(); ++i) {
        for (int j = 0; j < t.d(); ++j) {
          if (i == j) continue;
          double qi = fam.measures[i].node_prob(n);
          double qj = fam.measures[j].node_prob(n);
          XReal s0 = root.mat.at(i, j);
          if (s0.is_inf()) continue;  // dead at the root: no identity to hold
          double rhs =
              s0.raw() * (node.mat.at(j, i) > XReal(0.0) ? qj : 0.0);
          bool lhs_inf = qi > kZeroProb && node.mat.at(i, j).is_inf();
          double lhs =
              qi <= kZeroProb ? 0.0
                              : (lhs_inf ? 0.0 : qi * node.mat.at(i, j).raw());
          bool bad = lhs_inf || !rel_close(lhs, rhs, tol);
          if (!lhs_inf)
            rep.max_gap = std::max(rep.max_gap, rel_gap(lhs, rhs));
          if (bad) {
            rep.ok = false;
            rep.violations.push_back(
                {i + 1, j + 1, time, node.id,
                 lhs_inf ? std::numeric_limits<double>::infinity() : lhs,
                 rhs});
          }
        }
      }
    }
  }
  return rep;
}

ValuationMeasure ValuationMeasure::adopt(const MarketTree& t, TreeMeasure q,
                                         double tol) {
  std::vector<Violation> violations;
  double max_residual = 0.0;
  for (int n = 0; n < t.size(); ++n) {
    if (!q.positive(n)) continue;
    const MarketTree::Node& node = t.node(n);
    if (node.children.empty()) continue;
    for (int i = 0; i < t.d(); ++i) {
      double e = 0.0;
      for (int c : node.children)
        e += q.node_prob(c) * t.node(c).sbar[i];
      e /= q.node_prob(n);
      double gap = rel_gap(e, node.sbar[i]);
      max_residual = std::max(max_residual, gap);
      if (gap > tol)
        violations.push_back({"valuation", {i + 1}, node.id,
                              "E[b_" + std::to_string(i + 1) + "] = " + fmt(e) +
                                  " vs current " + fmt(node.sbar[i])});
    }
  }
  if (!violations.empty())
    throw NotValuationMeasureError(std::move(violations));
  return ValuationMeasure(std::move(q), max_residual);
}

ValuationMeasure aggregate_consistent(const MarketTree& t,
                                      const MeasureFamily& fam, double tol) {
  ConsistencyReport rep = check_consistency(t, fam, tol);
  if (!rep.ok) throw InconsistentFamilyError(std::move(rep));
  const MarketTree::Node& root = t.node(t.root());
  std::vector<double> w(t.leaves().size(), 0.0);
  for (int i = 0; i < t.d(); ++i)
    for (size_t k = 0; k < w.size(); ++k)
      w[k] += root.sbar[i] * fam.measures[i].leaf_weight(k);
  return ValuationMeasure::adopt(t, TreeMeasure::from_vector(t, std::move(w)),
                                 tol);
}

MeasureFamily disaggregate(const MarketTree& t, const ValuationMeasure& q) {
  const MarketTree::Node& root = t.node(t.root());
  MeasureFamily fam;
  for (int i = 0; i < t.d(); ++i) {
    if (root.sbar[i] <= 0.0)
      throw std::domain_error("currency " + std::to_string(i + 1) +
                              " dead at the root; its measure is undefined");
    std::vector<double> w(t.leaves().size(), 0.0);
    for (size_t k = 0; k < w.size(); ++k) {
      int leaf = t.leaves()[k];
      w[k] = q.measure().leaf_weight(k) * t.node(leaf).sbar[i] / root.sbar[i];
    }
    // the sum is E_q[b_i(T)]/b_i(0) = 1 up to the measure's martingale
    // residual, not machine precision
    fam.measures.push_back(TreeMeasure::from_vector(t, std::move(w), 1e-8));
  }
  return fam;
}

namespace {

// E_q[payoff | node] over doubles, weights below kZeroProb skipped; caller
// guarantees q(node) > 0 and finiteness on the support.
double expect_under(const MarketTree& t, const TreeMeasure& q, int node,
                    const std::vector<double>& leaf_payoff) {
  double sum = 0.0;
  for (int leaf : t.leaves_under(node)) {
    double w = q.leaf_weight(t.leaf_pos(leaf));
    if (w <= kZeroProb) continue;
    sum += w * leaf_payoff[t.leaf_pos(leaf)];
  }
  return sum / q.node_prob(node);
}

// Payoff of the claim in currency j as finite doubles on the q-positive
// support; throws IntegrabilityError when q sees an infinite payoff.
std::vector<double> finite_payoffs(const MarketTree& t, const TreeMeasure& q,
                                   const Claim& c, int j) {
  std::vector<double> out(c.values.size(), 0.0);
  for (size_t k = 0; k < c.values.size(); ++k) {
    if (q.leaf_weight(static_cast<int>(k)) <= kZeroProb) continue;
    if (c.values[k][j].is_inf())
      throw IntegrabilityError(
          "claim pays +inf in currency " + std::to_string(j + 1) +
          " on leaf \"" + t.node(t.leaves()[k]).id +
          "\" seen by its own measure");
    out[k] = c.values[k][j].raw();
  }
  return out;
}

}  // namespace

double value_claim(const MarketTree& t, const MeasureFamily& fam,
                   const Claim& c, int node, double tol) {
  ConsistencyReport crep = check_consistency(t, fam, tol);
  if (!crep.ok) throw InconsistentFamilyError(std::move(crep));
  std::vector<double> cbar = claim_basket_values(t, c, tol);
  int r = node < 0 ? t.root() : node;
  if (r >= t.size()) throw std::invalid_argument("node index out of range");

  ValuationMeasure qbar = aggregate_consistent(t, fam, tol);
  if (!qbar.measure().positive(r))
    throw NullConditioningError("node \"" + t.node(r).id +
                                "\" is null under the aggregated measure");
  double direct = expect_under(t, qbar.measure(), r, cbar);

  const MarketTree::Node& rn = t.node(r);
  double formula = 0.0;
  for (int j : rn.active) {
    const TreeMeasure& qj = fam.measures[j];
    if (!qj.positive(r)) continue;  // fated-but-active: the term vanishes
    std::vector<double> pay = finite_payoffs(t, qj, c, j);
    for (size_t k = 0; k < pay.size(); ++k) {
      int nact = static_cast<int>(t.node(t.leaves()[k]).active.size());
      pay[k] /= static_cast<double>(nact == 0 ? 1 : nact);
    }
    formula += rn.sbar[j] * expect_under(t, qj, r, pay);
  }
  if (!rel_close(direct, formula, std::max(tol, 1e-9)))
    throw std::logic_error(
        "aggregation identity violated: direct " + fmt(direct) +
        " vs per-currency decomposition " + fmt(formula));
  return formula;
}

double value_claim_survival(const MarketTree& t, const MeasureFamily& fam,
                            const Claim& c, int i, int node, double tol) {
  ConsistencyReport crep = check_consistency(t, fam, tol);
  if (!crep.ok) throw InconsistentFamilyError(std::move(crep));
  if (i < 0 || i >= t.d())
    throw std::invalid_argument("currency index out of range");
  std::vector<double> cbar = claim_basket_values(t, c, tol);
  int r = node < 0 ? t.root() : node;

  ValuationMeasure qbar = aggregate_consistent(t, fam, tol);
  double scale = 1.0;
  for (double v : cbar) scale = std::max(scale, std::abs(v));
  for (size_t k = 0; k < cbar.size(); ++k) {
    int leaf = t.leaves()[k];
    if (qbar.measure().leaf_weight(static_cast<int>(k)) <= kZeroProb) continue;
    if (!is_active_at(t.node(leaf), i) && std::abs(cbar[k]) > tol * scale)
      throw std::domain_error(
          "claim does not die with currency " + std::to_string(i + 1) +
          ": basket value " + fmt(cbar[k]) + " on leaf \"" + t.node(leaf).id +
          "\" where the currency is dead");
  }

  const MarketTree::Node& rn = t.node(r);
  if (!is_active_at(rn, i))
    throw std::domain_error("currency " + std::to_string(i + 1) +
                            " is dead at node \"" + rn.id + "\"");
  const TreeMeasure& qi = fam.measures[i];
  if (!qi.positive(r))
    throw NullConditioningError("node \"" + rn.id +
                                "\" is null under the measure of currency " +
                                std::to_string(i + 1));
  double shortcut =
      rn.sbar[i] * expect_under(t, qi, r, finite_payoffs(t, qi, c, i));
  double full = value_claim(t, fam, c, r, tol);
  if (!rel_close(shortcut, full, std::max(tol, 1e-9)))
    throw std::logic_error("survival shortcut " + fmt(shortcut) +
                           " disagrees with full valuation " + fmt(full));
  return shortcut;
}

CorrectionReport correction_term(const MarketTree& t, const MeasureFamily& fam,
                                 const Claim& c, int i, int node, double tol) {
  ConsistencyReport crep = check_consistency(t, fam, tol);
  if (!crep.ok) throw InconsistentFamilyError(std::move(crep));
  if (i < 0 || i >= t.d())
    throw std::invalid_argument("currency index out of range");
  claim_basket_values(t, c, tol);  // validates the claim
  int r = node < 0 ? t.root() : node;
  const MarketTree::Node& rn = t.node(r);

  // currency 1 must survive under every measure of the family
  for (int leaf : t.leaves()) {
    double total = 0.0;
    for (const TreeMeasure& q : fam.measures)
      total += q.leaf_weight(t.leaf_pos(leaf));
    if (total > kZeroProb && !is_active_at(t.node(leaf), 0))
      throw std::domain_error(
          "currency 1 devalues with positive probability (leaf \"" +
          t.node(leaf).id + "\"); the correction term needs an almost surely "
          "surviving reference currency");
  }
  if (!is_active_at(rn, i))
    throw std::domain_error("currency " + std::to_string(i + 1) +
                            " is dead at node \"" + rn.id + "\"");
  const TreeMeasure& q1 = fam.measures[0];
  if (!q1.positive(r))
    throw NullConditioningError("node \"" + rn.id +
                                "\" is null under the currency-1 measure");

  // F_i = S_{i,1}(r) E_{Q1}[ C_1 1_{currency i dead at T} | r ]
  std::vector<double> pay = finite_payoffs(t, q1, c, 0);
  for (size_t k = 0; k < pay.size(); ++k)
    if (!t.node(t.leaves()[k]).mat.at(0, i).is_zero()) pay[k] = 0.0;
  CorrectionReport out;
  out.correction =
      rn.mat.at(i, 0).raw() * expect_under(t, q1, r, pay);

  out.total_over_sbar = value_claim(t, fam, c, r, tol) / rn.sbar[i];
  const TreeMeasure& qi = fam.measures[i];
  if (qi.positive(r)) {
    out.classical = expect_under(t, qi, r, finite_payoffs(t, qi, c, i));
    out.residual = out.total_over_sbar - out.classical - out.correction;
    if (!rel_close(out.total_over_sbar, out.classical + out.correction,
                   std::max(tol, 1e-9)))
      throw std::logic_error(
          "correction decomposition violated: total " +
          fmt(out.total_over_sbar) + " vs classical " + fmt(out.classical) +
          " + correction " + fmt(out.correction));
  }
  return out;
}

DevaluationReport devaluation_identity_report(const MarketTree& t,
                                              const MeasureFamily& fam,
                                              double tol) {
  if (static_cast<int>(fam.measures.size()) != t.d())
    throw MeasureError("family size does not match currency count");
  DevaluationReport rep;
  const MarketTree::Node& root = t.node(t.root());
  for (int i = 0; i < t.d(); ++i) {
    DevaluationRow row;
    row.i = i + 1;
    double row0 = 0.0;
    for (int j = 0; j < t.d(); ++j) row0 += root.mat.at(i, j).raw();
    if (std::isinf(row0)) continue;  // dead at the root, identity void

    double e = 0.0;
    bool e_inf = false;
    for (int leaf : t.leaves()) {
      double w = fam.measures[i].leaf_weight(t.leaf_pos(leaf));
      if (w <= kZeroProb) continue;
      double rs = 0.0;
      for (int j = 0; j < t.d(); ++j)
        rs += t.node(leaf).mat.at(i, j).raw();
      if (std::isinf(rs)) {
        e_inf = true;
        break;
      }
      e += w * rs;
    }
    row.lhs = e_inf ? -std::numeric_limits<double>::infinity()
                    : 1.0 - e / row0;

    double rhs = 0.0;
    for (int j = 0; j < t.d(); ++j) {
      double w = root.mat.at(i, j).raw() / row0;
      if (w <= 0.0) continue;
      double dead = 0.0;
      for (int leaf : t.leaves())
        if (t.node(leaf).mat.at(j, i).is_zero())
          dead += fam.measures[j].leaf_weight(t.leaf_pos(leaf));
      rhs += w * dead;
    }
    row.rhs = rhs;
    row.gap = row.lhs - row.rhs;
    if (e_inf || !rel_close(row.lhs, row.rhs, tol)) rep.ok = false;
    rep.rows.push_back(row);
  }
  return rep;
}

SurvivalEquivalence martingale_iff_survival(const MarketTree& t,
                                            const MeasureFamily& fam, int i,
                                            int j, double tol) {
  if (static_cast<int>(fam.measures.size()) != t.d())
    throw MeasureError("family size does not match currency count");
  if (i < 0 || i >= t.d() || j < 0 || j >= t.d() || i == j)
    throw std::invalid_argument("need two distinct currency indices");
  SurvivalEquivalence out;
  out.martingale = entry_martingale(t, fam.measures[i], i, j, tol);
  out.martingale_ok = out.martingale.ok;
  double p = 0.0;
  for (int leaf : t.leaves())
    if (t.node(leaf).mat.at(j, i) > XReal(0.0))
      p += fam.measures[j].leaf_weight(t.leaf_pos(leaf));
  out.survival_prob = p;
  out.survival_full = p >= 1.0 - std::max(tol, kZeroProb);
  out.agree = out.martingale_ok == out.survival_full;
  return out;
}

ValuationMeasure aggregate_martingale(const MarketTree& t,
                                      const MeasureFamily& fam, double tol) {
  if (static_cast<int>(fam.measures.size()) != t.d())
    throw MeasureError("family size does not match currency count");
  std::vector<int> failing;
  std::vector<Violation> violations;
  for (int i = 0; i < t.d(); ++i) {
    MartingaleReport mrep = is_martingale(t, fam.measures[i], i, tol);
    if (!mrep.ok) {
      failing.push_back(i + 1);
      violations.insert(violations.end(), mrep.violations.begin(),
                        mrep.violations.end());
    }
  }
  if (!failing.empty())
    throw AggregationError(std::move(failing), std::move(violations));

  const MarketTree::Node& root = t.node(t.root());
  std::vector<double> w(t.leaves().size(), 0.0);
  for (int i = 0; i < t.d(); ++i) {
    if (root.sbar[i] <= 0.0)
      throw std::domain_error("currency " + std::to_string(i + 1) +
                              " dead at the root");
    for (size_t k = 0; k < w.size(); ++k) {
      double qw = fam.measures[i].leaf_weight(static_cast<int>(k));
      if (qw <= kZeroProb) continue;
      // reweight by b_i(0)/b_i(T); the martingale property keeps total mass 1
      w[k] += qw * root.sbar[i] / t.node(t.leaves()[k]).sbar[i] /
              static_cast<double>(t.d());
    }
  }
  return ValuationMeasure::adopt(
      t, TreeMeasure::from_vector(t, std::move(w), 1e-8), tol);
}

FeasibilityReport valuation_measure_feasibility(const MarketTree& t,
                                                const TreeMeasure& ref) {
  if (t.d() != 2)
    throw std::invalid_argument(
        "feasibility check is implemented for two-currency trees only");
  FeasibilityReport rep;
  for (int n = 0; n < t.size(); ++n) {
    if (!ref.positive(n)) continue;
    const MarketTree::Node& node = t.node(n);
    if (node.children.empty()) continue;
    double target = node.sbar[0];
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool all_equal = true;
    for (int c : node.children) {
      if (!ref.positive(c)) continue;
      double v = t.node(c).sbar[0];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      if (std::abs(v - target) > kLinTol) all_equal = false;
    }
    bool ok = all_equal || (lo < target - kLinTol && hi > target + kLinTol);
    if (!ok) {
      rep.feasible = false;
      rep.witnesses.push_back(node.id);
    }
  }
  return rep;
}

}  // namespace nlab

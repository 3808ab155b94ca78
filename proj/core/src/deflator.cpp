#include "nlab/deflator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
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

std::string render(const std::vector<PreconditionFailure>& failures) {
  std::ostringstream os;
  os << "deflator preconditions failed: ";
  for (size_t k = 0; k < failures.size(); ++k) {
    const PreconditionFailure& f = failures[k];
    if (k) os << "; ";
    os << "condition (" << f.condition << ") fails";
    if (f.currency > 0) os << " for currency " << f.currency;
    if (!f.node.empty()) os << " at node \"" << f.node << "\"";
    if (f.condition == "ii") os << " [no fated devaluations]";
    if (f.condition == "iii") os << " [support condition]";
  }
  return os.str();
}

}  // namespace

DeflatorPreconditionError::DeflatorPreconditionError(
    std::vector<PreconditionFailure> f)
    : std::domain_error(render(f)), failures(std::move(f)) {}

DeflatorResult build_deflator(const MarketTree& t, const MeasureFamily& fam,
                              double epsilon, double tol) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("epsilon must be positive");
  if (static_cast<int>(fam.measures.size()) != t.d())
    throw MeasureError("family has " + std::to_string(fam.measures.size()) +
                       " measures, tree has " + std::to_string(t.d()) +
                       " currencies");

  TreeMeasure ref = reference_measure(t, fam);

  std::vector<PreconditionFailure> failures;
  for (int i = 0; i < t.d(); ++i) {
    MartingaleReport mrep = is_martingale(t, fam.measures[i], i, tol);
    if (!mrep.ok) {
      const Violation& v = mrep.violations.front();
      failures.push_back({"i", i + 1, v.node, v.detail});
    }
  }
  for (const Violation& v : check_nod(t, ref).violations)
    failures.push_back({"ii", v.indices.front(), v.node, v.detail});
  for (const Violation& v : check_support_condition(t, fam).violations)
    failures.push_back({"iii", v.indices.front(), v.node, v.detail});
  // Condition (iv), predictable devaluation times of strong currencies, is
  // automatic: on a finite tree every time is announced by the previous one.
  if (!failures.empty()) throw DeflatorPreconditionError(std::move(failures));

  SwitchingSchedule schedule;
  schedule.threshold = t.d() + epsilon;
  schedule.currency.assign(t.size(), -1);
  std::vector<double> z(t.size(), 0.0);
  std::vector<int> patched_parents;

  // X_i = (dQ_i/dP)/b_i on the P-positive support; the deflator is built
  // from ratios of this along edges.
  auto x_of = [&](int i, int n) -> double {
    double qn = fam.measures[i].node_prob(n);
    if (qn <= kZeroProb) return 0.0;
    double b = t.node(n).sbar[i];
    if (b <= 0.0 || ref.node_prob(n) <= kZeroProb)
      throw std::logic_error("density/basket degenerate where positive mass "
                             "was guaranteed (node \"" +
                             t.node(n).id + "\")");
    return qn / ref.node_prob(n) / b;
  };

  int root = t.root();
  z[root] = 1.0;
  schedule.currency[root] = strongest_currency(t.node(root).mat);
  schedule.switches.emplace_back(root, schedule.currency[root]);

  std::deque<int> queue{root};
  while (!queue.empty()) {
    int p = queue.front();
    queue.pop_front();
    const MarketTree::Node& pn = t.node(p);
    if (pn.children.empty()) continue;
    int ip = schedule.currency[p];

    // A P-positive child abandoned by the tracked currency's measure is a
    // sudden devaluation of the tracked currency: predictable here, so the
    // whole transition out of p is replaced by the averaged step.
    bool patch = false;
    for (int c : pn.children)
      if (ref.positive(c) && fam.measures[ip].node_prob(c) <= kZeroProb)
        patch = true;
    if (patch) patched_parents.push_back(p);

    for (int c : pn.children) {
      if (!ref.positive(c)) continue;  // off the support, and so is its subtree
      double g;
      if (patch) {
        g = 1.0;
        const auto& act = pn.active;
        for (int j : act) {
          double xp = x_of(j, p);
          if (xp <= 0.0)
            throw std::logic_error(
                "active currency with null density at node \"" + pn.id +
                "\"; NOD and the support condition should forbid this");
          g += (x_of(j, c) / xp - 1.0) / static_cast<double>(act.size());
        }
      } else {
        g = x_of(ip, c) / x_of(ip, p);
      }
      z[c] = z[p] * g;

      const MarketTree::Node& cn = t.node(c);
      bool must_switch =
          cn.sbar[ip] <= 0.0 || 1.0 / cn.sbar[ip] > schedule.threshold;
      if (must_switch) {
        schedule.currency[c] = strongest_currency(cn.mat);
        schedule.switches.emplace_back(c, schedule.currency[c]);
      } else {
        schedule.currency[c] = ip;
      }
      queue.push_back(c);
    }
  }

  // Brute-force re-verification: Z and every Z*b_i must be P-martingales and
  // Z strictly positive on the support. Failures here are bugs, not data.
  double max_res = 0.0;
  for (int n = 0; n < t.size(); ++n) {
    if (!ref.positive(n)) continue;
    if (!(z[n] > 0.0))
      throw std::logic_error("deflator vanishes on the support at node \"" +
                             t.node(n).id + "\"");
    const MarketTree::Node& node = t.node(n);
    if (node.children.empty()) continue;
    double pn = ref.node_prob(n);
    for (int i = -1; i < t.d(); ++i) {
      double cur = z[n] * (i < 0 ? 1.0 : node.sbar[i]);
      double e = 0.0;
      for (int c : node.children) {
        if (!ref.positive(c)) continue;
        e += ref.node_prob(c) * z[c] * (i < 0 ? 1.0 : t.node(c).sbar[i]);
      }
      e /= pn;
      double gap = rel_gap(e, cur);
      max_res = std::max(max_res, gap);
      if (gap > tol)
        throw std::logic_error(
            "deflator verification failed at node \"" + node.id + "\"" +
            (i < 0 ? std::string(" for Z")
                   : " for Z*b_" + std::to_string(i + 1)) +
            ": one-step expectation " + fmt(e) + " vs " + fmt(cur));
    }
  }

  std::vector<double> w(t.leaves().size(), 0.0);
  for (size_t k = 0; k < w.size(); ++k)
    w[k] = ref.leaf_weight(static_cast<int>(k)) * z[t.leaves()[k]];
  ValuationMeasure qbar = ValuationMeasure::adopt(
      t, TreeMeasure::from_vector(t, std::move(w), 1e-8), tol);

  return DeflatorResult{std::move(z),       std::move(schedule),
                        std::move(ref),     std::move(qbar),
                        max_res,            std::move(patched_parents)};
}

}  // namespace nlab

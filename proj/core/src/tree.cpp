#include "nlab/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace nlab {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

MarketTree MarketTree::build(const std::vector<RawNode>& nodes,
                             std::optional<int> declared_depth) {
  if (nodes.empty()) throw TreeStructureError("tree has no nodes");
  MarketTree t;
  t.declared_depth_ = declared_depth;

  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    const RawNode& rn = nodes[i];
    if (rn.id.empty()) throw TreeStructureError("node with empty id");
    if (!t.index_.emplace(rn.id, i).second)
      throw TreeStructureError("duplicate node id \"" + rn.id + "\"");
    ValidationReport wf = matrix_wellformed(rn.matrix);
    if (!wf.ok())
      throw TreeStructureError("node \"" + rn.id + "\": " +
                               wf.violations.front().detail);
    Node n{rn.id, rn.time, -1, {}, ExchangeMatrix(rn.matrix), {}, {}};
    n.sbar = basket_prices(n.mat);
    n.active = active_set(n.mat);
    t.nodes_.push_back(std::move(n));
  }

  t.d_ = t.nodes_.front().mat.d();
  for (const Node& n : t.nodes_)
    if (n.mat.d() != t.d_)
      throw TreeStructureError("node \"" + n.id + "\" has dimension " +
                               std::to_string(n.mat.d()) + ", expected " +
                               std::to_string(t.d_));

  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    const RawNode& rn = nodes[i];
    if (!rn.parent) {
      if (t.root_ >= 0)
        throw TreeStructureError("multiple roots: \"" +
                                 t.nodes_[t.root_].id + "\" and \"" + rn.id +
                                 "\"");
      t.root_ = i;
      if (rn.time != 0)
        throw TreeStructureError("root \"" + rn.id + "\" has time " +
                                 std::to_string(rn.time) + ", expected 0");
    } else {
      auto it = t.index_.find(*rn.parent);
      if (it == t.index_.end())
        throw TreeStructureError("node \"" + rn.id + "\" references unknown parent \"" +
                                 *rn.parent + "\"");
      t.nodes_[i].parent = it->second;
      t.nodes_[it->second].children.push_back(i);
      if (rn.time != nodes[it->second].time + 1)
        throw TreeStructureError(
            "node \"" + rn.id + "\" at time " + std::to_string(rn.time) +
            " but its parent \"" + *rn.parent + "\" is at time " +
            std::to_string(nodes[it->second].time));
    }
  }
  if (t.root_ < 0) throw TreeStructureError("no root node");

  // Reachability from the root catches parent cycles: a cycle has no path
  // from the root into it.
  std::vector<char> seen(t.nodes_.size(), 0);
  std::deque<int> queue{t.root_};
  seen[t.root_] = 1;
  int count = 0;
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    ++count;
    for (int c : t.nodes_[cur].children)
      if (!seen[c]) {
        seen[c] = 1;
        queue.push_back(c);
      }
  }
  if (count != static_cast<int>(t.nodes_.size()))
    for (int i = 0; i < static_cast<int>(t.nodes_.size()); ++i)
      if (!seen[i])
        throw TreeStructureError("node \"" + t.nodes_[i].id +
                                 "\" is not reachable from the root");

  t.depth_ = 0;
  for (const Node& n : t.nodes_) t.depth_ = std::max(t.depth_, n.time);

  t.leaf_pos_.assign(t.nodes_.size(), -1);
  for (int i = 0; i < static_cast<int>(t.nodes_.size()); ++i)
    if (t.nodes_[i].children.empty()) {
      t.leaf_pos_[i] = static_cast<int>(t.leaves_.size());
      t.leaves_.push_back(i);
    }

  t.by_time_.assign(t.depth_ + 1, {});
  for (int i = 0; i < static_cast<int>(t.nodes_.size()); ++i)
    t.by_time_[t.nodes_[i].time].push_back(i);

  t.subtree_leaves_.assign(t.nodes_.size(), {});
  // Children are recorded before parents are processed bottom-up: walk nodes
  // by decreasing time.
  std::vector<int> order(t.nodes_.size());
  for (int i = 0; i < static_cast<int>(order.size()); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return t.nodes_[a].time > t.nodes_[b].time;
  });
  for (int i : order) {
    if (t.nodes_[i].children.empty()) {
      t.subtree_leaves_[i] = {i};
    } else {
      for (int c : t.nodes_[i].children)
        t.subtree_leaves_[i].insert(t.subtree_leaves_[i].end(),
                                    t.subtree_leaves_[c].begin(),
                                    t.subtree_leaves_[c].end());
    }
  }
  return t;
}

int MarketTree::index_of(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

ValidationReport validate_tree(const MarketTree& t, double tol) {
  ValidationReport rep;
  for (int i = 0; i < t.size(); ++i) {
    const MarketTree::Node& n = t.node(i);
    ValidationReport mrep = validate_exchange_matrix(n.mat, tol);
    for (Violation& v : mrep.violations) {
      v.node = n.id;
      rep.violations.push_back(std::move(v));
    }
  }
  const MarketTree::Node& root = t.node(t.root());
  for (int i = 0; i < t.d(); ++i)
    if (root.sbar[i] <= 0.0)
      rep.add("root_active", {i + 1}, root.id,
              "currency " + std::to_string(i + 1) + " already dead at the root");
  for (int i = 0; i < t.size(); ++i) {
    const MarketTree::Node& n = t.node(i);
    for (int c : n.children)
      for (int k = 0; k < t.d(); ++k)
        if (n.sbar[k] <= 0.0 && t.node(c).sbar[k] > 0.0)
          rep.add("absorbing", {k + 1}, t.node(c).id,
                  "currency " + std::to_string(k + 1) +
                      " dead at \"" + n.id + "\" but alive at \"" +
                      t.node(c).id + "\"");
    if (n.children.empty() && n.time != t.depth())
      rep.add("leaf_depth", {}, n.id,
              "leaf at time " + std::to_string(n.time) +
                  ", terminal date is " + std::to_string(t.depth()));
  }
  if (t.declared_depth() && *t.declared_depth() != t.depth())
    rep.add("depth_field", {}, "",
            "file declares depth " + std::to_string(*t.declared_depth()) +
                ", actual depth is " + std::to_string(t.depth()));
  return rep;
}

TreeMeasure TreeMeasure::from_vector(const MarketTree& t,
                                     std::vector<double> leaf_weights,
                                     double tol) {
  if (leaf_weights.size() != t.leaves().size())
    throw MeasureError("expected " + std::to_string(t.leaves().size()) +
                       " leaf weights, got " +
                       std::to_string(leaf_weights.size()));
  double sum = 0.0;
  for (size_t k = 0; k < leaf_weights.size(); ++k) {
    double w = leaf_weights[k];
    if (std::isnan(w) || w < -kZeroProb)
      throw MeasureError("negative weight " + fmt(w) + " on leaf \"" +
                         t.node(t.leaves()[k]).id + "\"");
    if (w < 0.0) leaf_weights[k] = 0.0;
    sum += leaf_weights[k];
  }
  if (std::abs(sum - 1.0) > tol)
    throw MeasureError("leaf weights sum to " + fmt(sum) + ", expected 1");

  TreeMeasure q;
  q.w_ = std::move(leaf_weights);
  q.p_.assign(t.size(), 0.0);
  for (size_t k = 0; k < q.w_.size(); ++k) {
    int node = t.leaves()[k];
    // climb to the root, accumulating
    for (int cur = node; cur >= 0; cur = t.node(cur).parent)
      q.p_[cur] += q.w_[k];
  }
  return q;
}

TreeMeasure TreeMeasure::from_leaf_weights(
    const MarketTree& t, const std::map<std::string, double>& w, double tol) {
  std::vector<double> v(t.leaves().size(), 0.0);
  for (const auto& [id, weight] : w) {
    int idx = t.index_of(id);
    if (idx < 0) throw MeasureError("weight on unknown node \"" + id + "\"");
    int pos = t.leaf_pos(idx);
    if (pos < 0) throw MeasureError("weight on non-leaf node \"" + id + "\"");
    v[pos] = weight;
  }
  for (int leaf : t.leaves())
    if (!w.count(t.node(leaf).id))
      throw MeasureError("no weight for leaf \"" + t.node(leaf).id + "\"");
  return from_vector(t, std::move(v), tol);
}

TreeMeasure reference_measure(const MarketTree& t, const MeasureFamily& fam) {
  if (static_cast<int>(fam.measures.size()) != t.d())
    throw MeasureError("family has " + std::to_string(fam.measures.size()) +
                       " measures, tree has " + std::to_string(t.d()) +
                       " currencies");
  std::vector<double> w(t.leaves().size(), 0.0);
  for (const TreeMeasure& q : fam.measures)
    for (size_t k = 0; k < w.size(); ++k) w[k] += q.leaf_weight(k);
  for (double& x : w) x /= static_cast<double>(t.d());
  return TreeMeasure::from_vector(t, std::move(w));
}

XReal conditional_expectation(const MarketTree& t, const TreeMeasure& q,
                              int node, const std::vector<XReal>& leaf_payoff) {
  if (node < 0 || node >= t.size())
    throw std::invalid_argument("node index out of range");
  if (leaf_payoff.size() != t.leaves().size())
    throw std::invalid_argument("payoff size does not match leaf count");
  double mass = q.node_prob(node);
  if (mass <= kZeroProb)
    throw NullConditioningError("conditioning on null node \"" +
                                t.node(node).id + "\"");
  double sum = 0.0;
  for (int leaf : t.leaves_under(node)) {
    double w = q.leaf_weight(t.leaf_pos(leaf));
    if (w <= kZeroProb) continue;
    if (leaf_payoff[t.leaf_pos(leaf)].is_inf()) return XReal::inf();
    sum += w * leaf_payoff[t.leaf_pos(leaf)].raw();
  }
  return XReal(sum / mass);
}

namespace {

bool is_active_at(const MarketTree::Node& n, int i) {
  return std::find(n.active.begin(), n.active.end(), i) != n.active.end();
}

// Shared body of the supermartingale/martingale checks: one-step conditional
// expectations of row i (or just entry (i, j) when js has one element).
MartingaleReport row_check(const MarketTree& t, const TreeMeasure& q, int i,
                           const std::vector<int>& js, bool two_sided,
                           bool full_row, double tol) {
  MartingaleReport rep;
  auto note = [&](double r) { rep.max_residual = std::max(rep.max_residual, r); };
  for (int n = 0; n < t.size(); ++n) {
    if (!q.positive(n)) continue;
    const MarketTree::Node& node = t.node(n);
    if (full_row) {
      if (!is_active_at(node, i)) {
        rep.ok = false;
        rep.violations.push_back(
            {"finiteness", {i + 1}, node.id,
             "currency " + std::to_string(i + 1) +
                 " inactive with positive probability"});
        continue;
      }
    } else {
      // single-entry check: only that entry needs to stay finite
      if (node.mat.at(i, js.front()).is_inf()) {
        rep.ok = false;
        rep.violations.push_back(
            {"finiteness", {i + 1, js.front() + 1}, node.id,
             "rate is +inf with positive probability"});
        continue;
      }
    }
    if (node.children.empty()) continue;
    double pn = q.node_prob(n);
    for (int j : js) {
      double cur = node.mat.at(i, j).raw();
      double e = 0.0;
      bool e_inf = false;
      for (int c : node.children) {
        double pc = q.node_prob(c);
        if (pc <= kZeroProb) continue;
        XReal s = t.node(c).mat.at(i, j);
        if (s.is_inf()) {
          e_inf = true;
          break;
        }
        e += pc * s.raw();
      }
      if (e_inf) {
        rep.ok = false;
        rep.violations.push_back(
            {two_sided ? "martingale" : "supermartingale", {i + 1, j + 1},
             node.id, "one-step expectation is +inf"});
        continue;
      }
      e /= pn;
      double scaled = (e - cur) / std::max({1.0, std::abs(e), std::abs(cur)});
      note(std::abs(scaled));
      bool bad = two_sided ? std::abs(scaled) > tol : scaled > tol;
      if (bad) {
        rep.ok = false;
        rep.violations.push_back(
            {two_sided ? "martingale" : "supermartingale", {i + 1, j + 1},
             node.id,
             "E[s(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                 ")] = " + fmt(e) + " vs current " + fmt(cur)});
      }
    }
  }
  return rep;
}

}  // namespace

MartingaleReport is_supermartingale(const MarketTree& t, const TreeMeasure& q,
                                    int i, double tol) {
  std::vector<int> js(t.d());
  for (int j = 0; j < t.d(); ++j) js[j] = j;
  return row_check(t, q, i, js, /*two_sided=*/false, /*full_row=*/true, tol);
}

MartingaleReport is_martingale(const MarketTree& t, const TreeMeasure& q,
                               int i, double tol) {
  std::vector<int> js(t.d());
  for (int j = 0; j < t.d(); ++j) js[j] = j;
  return row_check(t, q, i, js, /*two_sided=*/true, /*full_row=*/true, tol);
}

MartingaleReport entry_martingale(const MarketTree& t, const TreeMeasure& q,
                                  int i, int j, double tol) {
  return row_check(t, q, i, {j}, /*two_sided=*/true, /*full_row=*/false, tol);
}

ValidationReport check_nod(const MarketTree& t, const TreeMeasure& q) {
  ValidationReport rep;
  for (int n = 0; n < t.size(); ++n) {
    if (!q.positive(n)) continue;
    const MarketTree::Node& node = t.node(n);
    for (int i : node.active) {
      double surv = 0.0;
      for (int leaf : t.leaves_under(n))
        if (is_active_at(t.node(leaf), i))
          surv += q.leaf_weight(t.leaf_pos(leaf));
      if (surv <= kZeroProb)
        rep.add("nod", {i + 1}, node.id,
                "currency " + std::to_string(i + 1) +
                    " is active but certain to devalue");
    }
  }
  return rep;
}

ValidationReport check_nsd(const MarketTree& t, const TreeMeasure& q) {
  ValidationReport rep;
  for (int n = 0; n < t.size(); ++n) {
    if (!q.positive(n)) continue;
    const MarketTree::Node& node = t.node(n);
    if (node.parent < 0) continue;
    const MarketTree::Node& par = t.node(node.parent);
    for (int i = 0; i < t.d(); ++i)
      for (int j = 0; j < t.d(); ++j)
        if (par.mat.at(i, j).is_finite() && node.mat.at(i, j).is_inf())
          rep.add("nsd", {i + 1, j + 1}, node.id,
                  "rate (" + std::to_string(i + 1) + "," +
                      std::to_string(j + 1) + ") jumps from " +
                      fmt(par.mat.at(i, j).raw()) + " to +inf");
  }
  return rep;
}

ValidationReport check_support_condition(const MarketTree& t,
                                         const MeasureFamily& fam) {
  ValidationReport rep;
  if (static_cast<int>(fam.measures.size()) != t.d())
    throw MeasureError("family size does not match currency count");
  for (int leaf : t.leaves()) {
    int pos = t.leaf_pos(leaf);
    double total = 0.0;
    for (const TreeMeasure& q : fam.measures) total += q.leaf_weight(pos);
    if (total <= kZeroProb) continue;
    for (int i : t.node(leaf).active)
      if (fam.measures[i].leaf_weight(pos) <= kZeroProb)
        rep.add("support", {i + 1}, t.node(leaf).id,
                "currency " + std::to_string(i + 1) +
                    " active on a leaf its own measure cannot see");
  }
  return rep;
}

}  // namespace nlab

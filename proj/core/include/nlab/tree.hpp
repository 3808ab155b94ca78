#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlab/exchange.hpp"

namespace nlab {

// Node as read from a file, before any structural checks.
struct RawNode {
  std::string id;
  int time = 0;
  std::optional<std::string> parent;  // absent for the root
  RawMatrix matrix;
};

// Problems with measure data (unknown leaf, negative weight, bad total mass).
struct MeasureError : std::domain_error {
  using std::domain_error::domain_error;
};

// Finite event tree with one exchange matrix per node. Time is the node's
// depth: the root sits at 0 and every edge advances time by exactly one, so
// all leaves share the terminal date. Structure is enforced at build
// (TreeStructureError); per-node algebra and cross-node monotonicity are
// checked by validate_tree.
class MarketTree {
 public:
  struct Node {
    std::string id;
    int time = 0;
    int parent = -1;
    std::vector<int> children;
    ExchangeMatrix mat;
    std::vector<double> sbar;  // basket prices at this node
    std::vector<int> active;   // active currencies, 0-based ascending
  };

  // Requires well-formed matrices (see matrix_wellformed); throws
  // TreeStructureError on duplicate ids, missing/multiple roots, root not at
  // time 0, child time != parent time + 1, unreachable nodes, or mixed
  // matrix dimensions. declared_depth, when given, is kept for validate_tree
  // to compare against the actual depth.
  static MarketTree build(const std::vector<RawNode>& nodes,
                          std::optional<int> declared_depth = {});

  int size() const { return static_cast<int>(nodes_.size()); }
  int d() const { return d_; }
  int depth() const { return depth_; }
  int root() const { return root_; }
  const Node& node(int idx) const { return nodes_[idx]; }
  std::optional<int> declared_depth() const { return declared_depth_; }

  // Leaves in insertion order; measures and claims are indexed by position in
  // this list.
  const std::vector<int>& leaves() const { return leaves_; }
  const std::vector<int>& leaves_under(int idx) const {
    return subtree_leaves_[idx];
  }
  // Position of a leaf node in leaves(), -1 for non-leaves.
  int leaf_pos(int idx) const { return leaf_pos_[idx]; }

  // Nodes at a given time: the atoms of the time-t information set.
  const std::vector<int>& nodes_at(int time) const { return by_time_[time]; }

  // Index by id, -1 if unknown.
  int index_of(const std::string& id) const;

 private:
  MarketTree() = default;
  int d_ = 0;
  int depth_ = 0;
  int root_ = -1;
  std::optional<int> declared_depth_;
  std::vector<Node> nodes_;
  std::vector<int> leaves_;
  std::vector<int> leaf_pos_;
  std::vector<std::vector<int>> subtree_leaves_;
  std::vector<std::vector<int>> by_time_;
  std::map<std::string, int> index_;
};

// Semantic checks on a built tree:
//   per-node matrix invariants (rules as in validate_exchange_matrix, with
//   the node id attached),
//   "root_active"    some currency already dead at the root,
//   "absorbing"      a currency dead at a node comes back to life in a child,
//   "leaf_depth"     a leaf above the terminal date,
//   "depth_field"    declared depth != actual depth.
ValidationReport validate_tree(const MarketTree& t, double tol = kRateTol);

// Probability measure given by leaf weights. Weights must be nonnegative and
// sum to 1 within tol (MeasureError otherwise); node probabilities are the
// sums over the leaves below. Anything below kZeroProb counts as zero.
class TreeMeasure {
 public:
  // every leaf must appear in w, zeros spelled out
  static TreeMeasure from_leaf_weights(const MarketTree& t,
                                       const std::map<std::string, double>& w,
                                       double tol = kLinTol);
  // weights aligned with t.leaves() order
  static TreeMeasure from_vector(const MarketTree& t,
                                 std::vector<double> leaf_weights,
                                 double tol = kLinTol);

  double leaf_weight(int leaf_pos) const { return w_[leaf_pos]; }
  const std::vector<double>& leaf_weights() const { return w_; }
  double node_prob(int node_idx) const { return p_[node_idx]; }
  bool positive(int node_idx) const { return p_[node_idx] > kZeroProb; }

 private:
  std::vector<double> w_;  // by leaf position
  std::vector<double> p_;  // by node index
};

// One measure per currency, measures[i] interpreted as the measure using
// currency i as numeraire.
struct MeasureFamily {
  std::vector<TreeMeasure> measures;
};

// Mean of the family: the reference measure the family is compared against.
TreeMeasure reference_measure(const MarketTree& t, const MeasureFamily& fam);

// E_q[payoff | node]: throws NullConditioningError when q(node) is zero.
// payoff is indexed by leaf position; an infinite payoff on a q-positive
// leaf makes the expectation +inf.
XReal conditional_expectation(const MarketTree& t, const TreeMeasure& q,
                              int node, const std::vector<XReal>& leaf_payoff);

struct MartingaleReport {
  bool ok = true;
  double max_residual = 0.0;  // largest scaled one-step gap seen
  std::vector<Violation> violations;
};

// One-step checks of row i of the exchange matrix under q on every q-positive
// node. Both include the finiteness clause (currency i must be active
// q-almost surely; rule "finiteness"). Supermartingale flags E > current
// (rule "supermartingale"), martingale flags E != current (rule
// "martingale"); children of weight zero are skipped.
MartingaleReport is_supermartingale(const MarketTree& t, const TreeMeasure& q,
                                    int i, double tol = kRateTol);
MartingaleReport is_martingale(const MarketTree& t, const TreeMeasure& q,
                               int i, double tol = kRateTol);

// Same one-step test for the single entry (i, j), including q-a.s.
// finiteness of that entry.
MartingaleReport entry_martingale(const MarketTree& t, const TreeMeasure& q,
                                  int i, int j, double tol = kRateTol);

// No fated devaluations: at every q-positive node, each locally active
// currency keeps positive q-mass of leaves where it is still active.
// Rule "nod", indices {i}, node = offending node.
ValidationReport check_nod(const MarketTree& t, const TreeMeasure& q);

// No sudden devaluations: no q-positive edge turns a finite entry into +inf.
// Rule "nsd", indices {i, j}, node = child.
ValidationReport check_nsd(const MarketTree& t, const TreeMeasure& q);

// On leaves where currency i is active and the family's total mass is
// positive, measure i itself must be positive. Rule "support", indices {i},
// node = leaf.
ValidationReport check_support_condition(const MarketTree& t,
                                         const MeasureFamily& fam);

}  // namespace nlab

#pragma once

#include <string>
#include <vector>

#include "nlab/deflator.hpp"

namespace nlab {

// A stress market: a tree plus a measure family engineered to break one
// specific hypothesis of the valuation theory while keeping the others
// intact. The three built-in scenarios:
//
//   sudden_arbitrage   an unpriced sudden devaluation; the family fails the
//                      numeraire-change consistency identity and the
//                      deflator construction rejects on condition (i).
//   fated_devaluation  a node where one currency is certain to die next
//                      step: NOD fails (condition (ii)), aggregation is
//                      rejected, and no consistent family can exist on the
//                      tree at all.
//   support_gap        one measure blind to a branch the others see: the
//                      support condition (iii) fails, the
//                      martingale-vs-survival equivalence breaks, and no
//                      consistent family with equivalent aggregate exists.
struct Scenario {
  std::string name;
  std::string title;
  MarketTree tree;
  MeasureFamily family;
};

std::vector<std::string> scenario_names();
Scenario builtin_scenario(const std::string& name);

// One checked property: what the scenario is expected to show vs what the
// given tree/family actually shows.
struct ScenarioFinding {
  std::string check;
  std::string expected;
  std::string actual;
  bool match = false;
  std::string detail;
};

struct ScenarioReport {
  std::string name;
  std::string title;
  bool pass = false;  // every finding matches the expectation
  std::vector<ScenarioFinding> findings;
};

// Runs every check (consistency, per-currency martingale property, NOD, NSD,
// support, deflator construction, family feasibility, martingale-vs-survival
// agreement) on the scenario and compares against the built-in expectations
// for its name. A report that fails indicates the fixture has drifted from
// the behavior it exists to pin down.
ScenarioReport run_scenario(const Scenario& s);

}  // namespace nlab

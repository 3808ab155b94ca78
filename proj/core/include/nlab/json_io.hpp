#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlab/aggregation.hpp"
#include "nlab/deflator.hpp"
#include "nlab/pricing.hpp"
#include "nlab/scenarios.hpp"
#include "nlab/tree.hpp"

namespace nlab {

// File formats. Infinite rates are spelled "inf" (string token); everything
// else is plain JSON numbers.
//
// matrix file   {"d": 2, "entries": [[1, 2], [0.5, 1]]}
// tree file     {"depth": 1,
//                "nodes": [{"id": "n0", "time": 0, "matrix": [[...]]},
//                          {"id": "w1", "time": 1, "parent": "n0",
//                           "matrix": [[...]]}],
//                "measures": {"Q1": {"w1": 1.0}, ...}}      (optional)
// params file   {"spot", "sigma", "mu1", "mu2", "lambda1", "lambda2", "T"}
// claim file    {"values": {"leaf id": [c_1, ..., c_d], ...}}
//
// Shape/type problems (missing keys, wrong types, tokens other than "inf",
// non-object files) throw ParseError. Values that parse but are out of
// domain (negative rates, weights) are validation failures, not parse
// errors, and are reported by the validate_* functions.

struct TreeInput {
  std::optional<int> declared_depth;
  std::vector<RawNode> nodes;
  // measure name -> (leaf id -> weight), insertion order preserved
  std::vector<std::pair<std::string, std::map<std::string, double>>> measures;
};

nlohmann::json parse_text(const std::string& text);  // ParseError on bad JSON
nlohmann::json load_json_file(const std::string& path);  // ParseError on I/O too

bool looks_like_tree(const nlohmann::json& j);  // has "nodes"; else matrix

RawMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const RawMatrix& m);

TreeInput tree_input_from_json(const nlohmann::json& j);
nlohmann::json tree_to_json(const MarketTree& t);
nlohmann::json tree_with_measures_to_json(
    const MarketTree& t,
    const std::vector<std::pair<std::string, TreeMeasure>>& measures);

CHParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const CHParams& p);

Claim claim_from_json(const MarketTree& t, const nlohmann::json& j);
nlohmann::json claim_to_json(const MarketTree& t, const Claim& c);

// Report serialization. All indices 1-based, nodes by id.
nlohmann::json to_json(const Violation& v);
nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const MartingaleReport& r);
nlohmann::json to_json(const ConsistencyReport& r);
nlohmann::json to_json(const DevaluationReport& r);
nlohmann::json to_json(const ParityReport& r);
nlohmann::json to_json(const MCEstimate& e);
nlohmann::json to_json(const ScenarioReport& r);
nlohmann::json to_json(const FeasibilityReport& r);
nlohmann::json measure_to_json(const MarketTree& t, const TreeMeasure& q);
nlohmann::json to_json(const MarketTree& t, const DeflatorResult& r);

// Canonical text forms used by the CLI and the golden files: JSON with
// 2-space indent and sorted object keys, one trailing newline; numbers in
// CSV cells use the same shortest-round-trip formatting as the JSON dump.
std::string canonical_dump(const nlohmann::json& j);
std::string csv_number(double x);

}  // namespace nlab

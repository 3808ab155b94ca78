#include "nlab/json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace nlab {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad(const std::string& what) { throw ParseError(what); }

// Rates and payoffs: JSON number, or the token "inf".
double entry_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    bad(where + ": unknown token \"" + j.get<std::string>() +
        "\" (only \"inf\" is recognized)");
  }
  bad(where + ": expected a number or \"inf\"");
}

json entry_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

const json& need(const json& j, const std::string& key,
                 const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) bad(where + ": missing key \"" + key + "\"");
  return *it;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok) bad(where + ": unknown key \"" + it.key() + "\"");
  }
}

json violations_to_json(const std::vector<Violation>& vs) {
  json arr = json::array();
  for (const Violation& v : vs)
    arr.push_back({{"rule", v.rule},
                   {"indices", v.indices},
                   {"node", v.node},
                   {"detail", v.detail}});
  return arr;
}

}  // namespace

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot read \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    bad("\"" + path + "\": malformed JSON: " + std::string(e.what()));
  }
}

bool looks_like_tree(const json& j) {
  return j.is_object() && j.contains("nodes");
}

RawMatrix matrix_from_json(const json& j) {
  if (!j.is_object()) bad("matrix file: expected an object");
  reject_unknown(j, {"d", "entries"}, "matrix file");
  const json& entries = need(j, "entries", "matrix file");
  if (!entries.is_array()) bad("matrix file: \"entries\" must be an array");
  RawMatrix m;
  for (size_t r = 0; r < entries.size(); ++r) {
    const json& row = entries[r];
    if (!row.is_array()) bad("matrix file: row " + std::to_string(r + 1) +
                             " is not an array");
    std::vector<double> out;
    for (size_t c = 0; c < row.size(); ++c)
      out.push_back(entry_from_json(
          row[c], "matrix entry (" + std::to_string(r + 1) + "," +
                      std::to_string(c + 1) + ")"));
    m.push_back(std::move(out));
  }
  if (j.contains("d")) {
    const json& d = j["d"];
    if (!d.is_number_integer()) bad("matrix file: \"d\" must be an integer");
    if (d.get<int>() != static_cast<int>(m.size()))
      bad("matrix file: \"d\" is " + d.dump() + " but there are " +
          std::to_string(m.size()) + " rows");
  }
  return m;
}

json matrix_to_json(const RawMatrix& m) {
  json entries = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (double v : row) r.push_back(entry_to_json(v));
    entries.push_back(std::move(r));
  }
  return {{"d", m.size()}, {"entries", std::move(entries)}};
}

TreeInput tree_input_from_json(const json& j) {
  if (!j.is_object()) bad("tree file: expected an object");
  reject_unknown(j, {"depth", "nodes", "measures"}, "tree file");
  TreeInput in;
  if (j.contains("depth")) {
    if (!j["depth"].is_number_integer())
      bad("tree file: \"depth\" must be an integer");
    in.declared_depth = j["depth"].get<int>();
  }
  const json& nodes = need(j, "nodes", "tree file");
  if (!nodes.is_array() || nodes.empty())
    bad("tree file: \"nodes\" must be a nonempty array");
  for (const json& n : nodes) {
    if (!n.is_object()) bad("tree file: node entries must be objects");
    reject_unknown(n, {"id", "time", "parent", "matrix"}, "tree node");
    RawNode rn;
    const json& id = need(n, "id", "tree node");
    if (!id.is_string()) bad("tree node: \"id\" must be a string");
    rn.id = id.get<std::string>();
    const json& time = need(n, "time", "node \"" + rn.id + "\"");
    if (!time.is_number_integer())
      bad("node \"" + rn.id + "\": \"time\" must be an integer");
    rn.time = time.get<int>();
    if (n.contains("parent")) {
      if (!n["parent"].is_string())
        bad("node \"" + rn.id + "\": \"parent\" must be a string");
      rn.parent = n["parent"].get<std::string>();
    }
    const json& mat = need(n, "matrix", "node \"" + rn.id + "\"");
    if (!mat.is_array()) bad("node \"" + rn.id + "\": \"matrix\" must be an array");
    for (size_t r = 0; r < mat.size(); ++r) {
      if (!mat[r].is_array())
        bad("node \"" + rn.id + "\": matrix row " + std::to_string(r + 1) +
            " is not an array");
      std::vector<double> row;
      for (size_t c = 0; c < mat[r].size(); ++c)
        row.push_back(entry_from_json(
            mat[r][c], "node \"" + rn.id + "\" matrix entry (" +
                           std::to_string(r + 1) + "," +
                           std::to_string(c + 1) + ")"));
      rn.matrix.push_back(std::move(row));
    }
    in.nodes.push_back(std::move(rn));
  }
  if (j.contains("measures")) {
    const json& ms = j["measures"];
    if (!ms.is_object()) bad("tree file: \"measures\" must be an object");
    for (auto it = ms.begin(); it != ms.end(); ++it) {
      if (!it.value().is_object())
        bad("measure \"" + it.key() + "\": expected an object of leaf weights");
      std::map<std::string, double> w;
      for (auto wit = it.value().begin(); wit != it.value().end(); ++wit) {
        if (!wit.value().is_number())
          bad("measure \"" + it.key() + "\", leaf \"" + wit.key() +
              "\": weight must be a number");
        w[wit.key()] = wit.value().get<double>();
      }
      in.measures.emplace_back(it.key(), std::move(w));
    }
  }
  return in;
}

json tree_to_json(const MarketTree& t) {
  json nodes = json::array();
  for (int i = 0; i < t.size(); ++i) {
    const MarketTree::Node& n = t.node(i);
    json jn = {{"id", n.id},
               {"time", n.time},
               {"matrix", matrix_to_json(n.mat.raw())["entries"]}};
    if (n.parent >= 0) jn["parent"] = t.node(n.parent).id;
    nodes.push_back(std::move(jn));
  }
  return {{"depth", t.depth()}, {"nodes", std::move(nodes)}};
}

json tree_with_measures_to_json(
    const MarketTree& t,
    const std::vector<std::pair<std::string, TreeMeasure>>& measures) {
  json out = tree_to_json(t);
  json ms = json::object();
  for (const auto& [name, q] : measures) ms[name] = measure_to_json(t, q);
  out["measures"] = std::move(ms);
  return out;
}

CHParams params_from_json(const json& j) {
  if (!j.is_object()) bad("params file: expected an object");
  reject_unknown(j, {"spot", "sigma", "mu1", "mu2", "lambda1", "lambda2", "T"},
                 "params file");
  auto num = [&](const char* key) {
    const json& v = need(j, key, "params file");
    if (!v.is_number()) bad(std::string("params file: \"") + key +
                            "\" must be a number");
    return v.get<double>();
  };
  CHParams p;
  p.spot = num("spot");
  p.sigma = num("sigma");
  p.mu1 = num("mu1");
  p.mu2 = num("mu2");
  p.lambda1 = num("lambda1");
  p.lambda2 = num("lambda2");
  p.horizon = num("T");
  return p;
}

json params_to_json(const CHParams& p) {
  return {{"spot", p.spot},     {"sigma", p.sigma},
          {"mu1", p.mu1},       {"mu2", p.mu2},
          {"lambda1", p.lambda1}, {"lambda2", p.lambda2},
          {"T", p.horizon}};
}

Claim claim_from_json(const MarketTree& t, const json& j) {
  if (!j.is_object()) bad("claim file: expected an object");
  reject_unknown(j, {"values"}, "claim file");
  const json& values = need(j, "values", "claim file");
  if (!values.is_object()) bad("claim file: \"values\" must be an object");
  Claim c;
  c.values.assign(t.leaves().size(), {});
  std::vector<char> seen(t.leaves().size(), 0);
  for (auto it = values.begin(); it != values.end(); ++it) {
    int idx = t.index_of(it.key());
    if (idx < 0 || t.leaf_pos(idx) < 0)
      bad("claim file: \"" + it.key() + "\" is not a leaf of the tree");
    if (!it.value().is_array() ||
        static_cast<int>(it.value().size()) != t.d())
      bad("claim file: leaf \"" + it.key() + "\" needs " +
          std::to_string(t.d()) + " per-currency values");
    std::vector<XReal> row;
    for (const json& v : it.value()) {
      double x = entry_from_json(v, "claim leaf \"" + it.key() + "\"");
      if (std::isnan(x) || x < 0.0)
        bad("claim leaf \"" + it.key() + "\": payoffs must be in [0, inf]");
      row.push_back(x == kInf ? XReal::inf() : XReal(x));
    }
    c.values[t.leaf_pos(idx)] = std::move(row);
    seen[t.leaf_pos(idx)] = 1;
  }
  for (size_t k = 0; k < seen.size(); ++k)
    if (!seen[k])
      bad("claim file: missing leaf \"" + t.node(t.leaves()[k]).id + "\"");
  return c;
}

json claim_to_json(const MarketTree& t, const Claim& c) {
  json values = json::object();
  for (size_t k = 0; k < c.values.size(); ++k) {
    json row = json::array();
    for (const XReal& v : c.values[k]) row.push_back(entry_to_json(v.raw()));
    values[t.node(t.leaves()[k]).id] = std::move(row);
  }
  return {{"values", std::move(values)}};
}

json to_json(const Violation& v) {
  return {{"rule", v.rule},
          {"indices", v.indices},
          {"node", v.node},
          {"detail", v.detail}};
}

json to_json(const ValidationReport& r) {
  return {{"ok", r.ok()}, {"violations", violations_to_json(r.violations)}};
}

json to_json(const MartingaleReport& r) {
  return {{"ok", r.ok},
          {"max_residual", r.max_residual},
          {"violations", violations_to_json(r.violations)}};
}

json to_json(const ConsistencyReport& r) {
  json vs = json::array();
  for (const ConsistencyViolation& v : r.violations)
    vs.push_back({{"i", v.i},
                  {"j", v.j},
                  {"time", v.time},
                  {"node", v.node},
                  {"lhs", entry_to_json(v.lhs)},
                  {"rhs", entry_to_json(v.rhs)}});
  return {{"ok", r.ok}, {"max_gap", r.max_gap}, {"violations", std::move(vs)}};
}

json to_json(const DevaluationReport& r) {
  json rows = json::array();
  for (const DevaluationRow& row : r.rows)
    rows.push_back({{"currency", row.i},
                    {"lhs", entry_to_json(row.lhs)},
                    {"rhs", entry_to_json(row.rhs)},
                    {"gap", entry_to_json(row.gap)}});
  return {{"ok", r.ok}, {"rows", std::move(rows)}};
}

json to_json(const ParityReport& r) {
  return {{"strike", r.strike},
          {"call", r.call},
          {"put", r.put},
          {"aggregated_gap", r.aggregated_gap},
          {"classical_gap", r.classical_gap},
          {"classical_gap_expected", r.classical_gap_expected},
          {"residual", r.residual}};
}

json to_json(const MCEstimate& e) {
  return {{"value", e.value},
          {"std_error", e.std_error},
          {"paths", e.paths},
          {"seed", e.seed}};
}

json to_json(const ScenarioReport& r) {
  json fs = json::array();
  for (const ScenarioFinding& f : r.findings)
    fs.push_back({{"check", f.check},
                  {"expected", f.expected},
                  {"actual", f.actual},
                  {"match", f.match},
                  {"detail", f.detail}});
  return {{"name", r.name},
          {"title", r.title},
          {"status", r.pass ? "PASS" : "FIXTURE-DRIFT"},
          {"findings", std::move(fs)}};
}

json to_json(const FeasibilityReport& r) {
  return {{"feasible", r.feasible}, {"witnesses", r.witnesses}};
}

json measure_to_json(const MarketTree& t, const TreeMeasure& q) {
  json out = json::object();
  for (size_t k = 0; k < t.leaves().size(); ++k)
    out[t.node(t.leaves()[k]).id] = q.leaf_weight(static_cast<int>(k));
  return out;
}

json to_json(const MarketTree& t, const DeflatorResult& r) {
  json z = json::object();
  json cur = json::object();
  for (int n = 0; n < t.size(); ++n) {
    z[t.node(n).id] = r.z[n];
    if (r.schedule.currency[n] >= 0)
      cur[t.node(n).id] = r.schedule.currency[n] + 1;
  }
  json switches = json::array();
  for (auto [node, c] : r.schedule.switches)
    switches.push_back({{"node", t.node(node).id}, {"currency", c + 1}});
  json patched = json::array();
  for (int n : r.patched_parents) patched.push_back(t.node(n).id);
  return {{"z", std::move(z)},
          {"switching",
           {{"threshold", r.schedule.threshold},
            {"currency", std::move(cur)},
            {"switches", std::move(switches)}}},
          {"qbar", measure_to_json(t, r.qbar.measure())},
          {"max_residual", r.max_residual},
          {"patched_parents", std::move(patched)}};
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv_number(double x) { return json(x).dump(); }

}  // namespace nlab

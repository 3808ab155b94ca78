// nlab: validation, aggregation, pricing and regression workflows for
// devaluation-aware multi-currency market models.
//
// Exit codes: 0 success / verified, 1 domain failure (validation,
// precondition, assertion), 2 I/O or parse error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlab/aggregation.hpp>
#include <nlab/deflator.hpp>
#include <nlab/exchange.hpp>
#include <nlab/json_io.hpp>
#include <nlab/pricing.hpp>
#include <nlab/scenarios.hpp>
#include <nlab/tree.hpp>

namespace {

using nlohmann::json;
using namespace nlab;

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kIo = 2;

struct Output {
  std::string format = "json";
  std::string out;
};

// Reports (exit 0 or 1) honor --out; exit-2 envelopes always go to stdout.
int emit(const Output& o, const std::string& text, int rc) {
  if (o.out.empty() || rc == kIo) {
    std::cout << text;
    return rc;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) {
    std::cout << canonical_dump(
        {{"error", "io"}, {"message", "cannot write \"" + o.out + "\""}});
    return kIo;
  }
  f << text;
  return rc;
}

int emit_json(const Output& o, const json& j, int rc) {
  return emit(o, canonical_dump(j), rc);
}

int io_error(const Output& o, const std::string& message) {
  return emit_json(o, {{"error", "parse"}, {"message", message}}, kIo);
}

int domain_error_out(const Output& o, const std::string& kind,
                     const std::string& message) {
  return emit_json(o, {{"error", kind}, {"message", message}}, kDomain);
}

uint64_t default_seed() {
  if (const char* e = std::getenv("NLAB_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(e, &end, 10);
    if (end != e && *end == '\0') return v;
  }
  return 12345;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const Output& o, const std::string& path, double tol) {
  if (o.format != "json")
    return io_error(o, "validate only supports --format json");
  json j;
  try {
    j = load_json_file(path);
  } catch (const ParseError& e) {
    return io_error(o, e.what());
  }
  std::string kind;
  ValidationReport rep;
  try {
    if (looks_like_tree(j)) {
      kind = "tree";
      TreeInput in = tree_input_from_json(j);
      try {
        MarketTree t = MarketTree::build(in.nodes, in.declared_depth);
        rep = validate_tree(t, tol);
        for (const auto& [name, weights] : in.measures) {
          try {
            (void)TreeMeasure::from_leaf_weights(t, weights);
          } catch (const MeasureError& e) {
            rep.add("measure", {}, name, e.what());
          }
        }
      } catch (const TreeStructureError& e) {
        rep.add("structure", {}, "", e.what());
      } catch (const std::invalid_argument& e) {
        rep.add("entry", {}, "", e.what());
      }
    } else {
      kind = "matrix";
      RawMatrix m = matrix_from_json(j);
      rep = matrix_wellformed(m);
      if (rep.ok()) rep = validate_exchange_matrix(m, tol);
    }
  } catch (const ParseError& e) {
    return io_error(o, e.what());
  }
  json out = to_json(rep);
  out["kind"] = kind;
  return emit_json(o, out, rep.ok() ? kOk : kDomain);
}

// ---------------------------------------------------------------- aggregate

struct LoadedTree {
  std::optional<MarketTree> tree;
  MeasureFamily family;
  std::vector<std::string> names;
};

// rc < 0 means the tree and family loaded fine.
int load_tree_family(const Output& o, const std::string& path,
                     const std::string& measures_flag, LoadedTree& lt) {
  json j;
  TreeInput in;
  try {
    j = load_json_file(path);
    if (!looks_like_tree(j))
      return io_error(o, "\"" + path + "\": not a tree file (no \"nodes\")");
    in = tree_input_from_json(j);
  } catch (const ParseError& e) {
    return io_error(o, e.what());
  }
  try {
    lt.tree = MarketTree::build(in.nodes, in.declared_depth);
  } catch (const TreeStructureError& e) {
    return domain_error_out(o, "structure", e.what());
  } catch (const std::invalid_argument& e) {
    return domain_error_out(o, "entry", e.what());
  }
  std::vector<std::string> names;
  if (measures_flag.empty()) {
    for (int i = 1; i <= lt.tree->d(); ++i)
      names.push_back("Q" + std::to_string(i));
  } else {
    names = split_csv(measures_flag);
    if (static_cast<int>(names.size()) != lt.tree->d())
      return domain_error_out(
          o, "measure",
          "--measures names " + std::to_string(names.size()) +
              " but the tree has " + std::to_string(lt.tree->d()) +
              " currencies");
  }
  for (const std::string& name : names) {
    const std::map<std::string, double>* found = nullptr;
    for (const auto& [n, w] : in.measures)
      if (n == name) found = &w;
    if (!found)
      return domain_error_out(o, "measure",
                              "measure \"" + name + "\" not found in input");
    try {
      lt.family.measures.push_back(
          TreeMeasure::from_leaf_weights(*lt.tree, *found));
    } catch (const MeasureError& e) {
      return domain_error_out(o, "measure",
                              "measure \"" + name + "\": " + e.what());
    }
  }
  lt.names = std::move(names);
  return -1;
}

int cmd_aggregate(const Output& o, const std::string& path,
                  const std::string& mode, const std::string& measures_flag,
                  double epsilon, double tol) {
  if (o.format != "json")
    return io_error(o, "aggregate only supports --format json");
  LoadedTree lt;
  if (int rc = load_tree_family(o, path, measures_flag, lt); rc >= 0)
    return rc;
  const MarketTree& t = *lt.tree;
  const MeasureFamily& fam = lt.family;

  if (mode == "consistent") {
    ConsistencyReport rep = check_consistency(t, fam, tol);
    json out = {{"mode", "consistent"}, {"consistency", to_json(rep)}};
    if (!rep.ok) return emit_json(o, out, kDomain);
    ValuationMeasure vm = aggregate_consistent(t, fam, tol);
    out["qbar"] = measure_to_json(t, vm.measure());
    out["max_residual"] = vm.max_residual();
    return emit_json(o, out, kOk);
  }
  if (mode == "martingale") {
    try {
      ValuationMeasure vm = aggregate_martingale(t, fam, tol);
      json out = {{"mode", "martingale"},
                  {"qbar", measure_to_json(t, vm.measure())},
                  {"max_residual", vm.max_residual()}};
      return emit_json(o, out, kOk);
    } catch (const AggregationError& e) {
      json vs = json::array();
      for (const Violation& v : e.violations) vs.push_back(to_json(v));
      return emit_json(o,
                       {{"error", "martingale_aggregation"},
                        {"message", e.what()},
                        {"failing_currencies", e.failing_currencies},
                        {"violations", std::move(vs)}},
                       kDomain);
    }
  }
  // deflator
  try {
    DeflatorResult r = build_deflator(t, fam, epsilon, tol);
    json out = to_json(t, r);
    out["mode"] = "deflator";
    return emit_json(o, out, kOk);
  } catch (const DeflatorPreconditionError& e) {
    json fails = json::array();
    for (const PreconditionFailure& f : e.failures)
      fails.push_back({{"condition", f.condition},
                       {"currency", f.currency},
                       {"node", f.node},
                       {"detail", f.detail}});
    json out = {{"error", "deflator_preconditions"},
                {"message", e.what()},
                {"failures", std::move(fails)}};
    if (check_consistency(t, fam, tol).ok)
      out["hint"] =
          "the family is numeraire-consistent; --mode consistent aggregates "
          "it directly";
    return emit_json(o, out, kDomain);
  }
}

// -------------------------------------------------------------------- price

int cmd_price(const Output& o, const std::string& path,
              const std::string& strikes_flag, bool mc, uint64_t paths,
              uint64_t seed) {
  std::vector<double> strikes;
  for (const std::string& s : split_csv(strikes_flag)) {
    try {
      size_t pos = 0;
      double k = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      strikes.push_back(k);
    } catch (const std::exception&) {
      return io_error(o, "--strikes: \"" + s + "\" is not a number");
    }
  }
  if (strikes.empty()) return io_error(o, "--strikes: empty list");
  CHParams p;
  try {
    p = params_from_json(load_json_file(path));
  } catch (const ParseError& e) {
    return io_error(o, e.what());
  }
  ValidationReport rep = validate_params(p);
  if (!rep.ok()) {
    json out = to_json(rep);
    out["error"] = "params";
    return emit_json(o, out, kDomain);
  }

  struct Row {
    double k, closed, classical, correction, gap, mc_mean = 0, mc_se = 0;
  };
  std::vector<Row> rows;
  for (double k : strikes) {
    Row r;
    r.k = k;
    r.closed = price_exchange_option(p, k);
    PriceBreakdown b = decompose_price(p, k);
    r.classical = b.classical;
    r.correction = b.correction;
    r.gap = parity_report(p, k).classical_gap;
    if (mc) {
      MCEstimate est = mc_price(p, exchange_call(k), paths, seed);
      r.mc_mean = est.value;
      r.mc_se = est.std_error;
    }
    rows.push_back(r);
  }

  if (o.format == "csv") {
    std::ostringstream out;
    out << "K,closed_form,mc_mean,mc_se,classical,correction,parity_gap\n";
    for (const Row& r : rows) {
      out << csv_number(r.k) << ',' << csv_number(r.closed) << ',';
      if (mc) out << csv_number(r.mc_mean) << ',' << csv_number(r.mc_se);
      else out << ',';
      out << ',' << csv_number(r.classical) << ',' << csv_number(r.correction)
          << ',' << csv_number(r.gap) << '\n';
    }
    return emit(o, out.str(), kOk);
  }
  json jrows = json::array();
  for (const Row& r : rows) {
    json jr = {{"K", r.k},
               {"closed_form", r.closed},
               {"classical", r.classical},
               {"correction", r.correction},
               {"parity_gap", r.gap}};
    if (mc) {
      jr["mc_mean"] = r.mc_mean;
      jr["mc_se"] = r.mc_se;
    }
    jrows.push_back(std::move(jr));
  }
  json out = {{"params", params_to_json(p)}, {"rows", std::move(jrows)}};
  if (mc) {
    out["paths"] = paths;
    out["seed"] = seed;
  }
  return emit_json(o, out, kOk);
}

// ----------------------------------------------------------- counterexamples

int cmd_counterexamples(const Output& o, const std::string& fixtures_dir) {
  namespace fs = std::filesystem;
  std::vector<ScenarioReport> reports;
  for (const std::string& name : scenario_names()) {
    Scenario s = builtin_scenario(name);
    if (!fixtures_dir.empty()) {
      fs::path p = fs::path(fixtures_dir) / (name + ".json");
      std::error_code ec;
      if (!fs::exists(p, ec))
        return io_error(o, "missing fixture \"" + p.string() + "\"");
      try {
        TreeInput in = tree_input_from_json(load_json_file(p.string()));
        s.tree = MarketTree::build(in.nodes, in.declared_depth);
        s.family.measures.clear();
        for (int i = 1; i <= s.tree.d(); ++i) {
          std::string mname = "Q" + std::to_string(i);
          const std::map<std::string, double>* found = nullptr;
          for (const auto& [n, w] : in.measures)
            if (n == mname) found = &w;
          if (!found)
            return io_error(o, "fixture \"" + p.string() +
                                   "\": missing measure \"" + mname + "\"");
          s.family.measures.push_back(
              TreeMeasure::from_leaf_weights(s.tree, *found));
        }
      } catch (const ParseError& e) {
        return io_error(o, e.what());
      } catch (const std::exception& e) {
        return io_error(o, "fixture \"" + p.string() + "\": " + e.what());
      }
    }
    reports.push_back(run_scenario(s));
  }
  bool pass = true;
  for (const ScenarioReport& r : reports) pass = pass && r.pass;
  if (o.format == "csv") {
    std::ostringstream out;
    out << "name,status\n";
    for (const ScenarioReport& r : reports)
      out << r.name << ',' << (r.pass ? "PASS" : "FIXTURE-DRIFT") << '\n';
    return emit(o, out.str(), pass ? kOk : kDomain);
  }
  json js = json::array();
  for (const ScenarioReport& r : reports) js.push_back(to_json(r));
  return emit_json(o, {{"pass", pass}, {"scenarios", std::move(js)}},
                   pass ? kOk : kDomain);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "valuation toolkit for multi-currency markets with devaluations"};
  app.require_subcommand(1);

  Output out;
  double tol = kRateTol;
  app.add_option("--format", out.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_option("--out", out.out, "write the report here instead of stdout");
  app.add_option("--tol", tol, "residual tolerance for checks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string validate_path;
  CLI::App* validate =
      app.add_subcommand("validate",
                         "check an exchange-matrix or market-tree file");
  validate->fallthrough();
  validate->add_option("file", validate_path, "JSON input")->required();

  std::string agg_path, agg_mode = "consistent", agg_measures;
  double epsilon = 1.0;
  CLI::App* aggregate = app.add_subcommand(
      "aggregate", "combine per-currency measures into a basket measure");
  aggregate->fallthrough();
  aggregate->add_option("file", agg_path, "tree JSON with named measures")
      ->required();
  aggregate->add_option("--mode", agg_mode, "aggregation route")
      ->check(CLI::IsMember({"consistent", "martingale", "deflator"}))
      ->capture_default_str();
  aggregate->add_option("--measures", agg_measures,
                        "comma-separated measure names (default Q1..Qd)");
  aggregate->add_option("--epsilon", epsilon,
                        "switching threshold margin (deflator mode)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string price_path, strikes;
  bool mc = false;
  uint64_t paths = 1000000;
  uint64_t seed = default_seed();
  CLI::App* price = app.add_subcommand(
      "price", "closed-form and Monte Carlo exchange-option prices");
  price->fallthrough();
  price->add_option("params", price_path, "model parameter JSON")->required();
  price->add_option("--strikes", strikes, "comma-separated strike list")
      ->required();
  price->add_flag("--mc", mc, "add Monte Carlo columns");
  price->add_option("--paths", paths, "Monte Carlo path count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  price->add_option("--seed", seed, "RNG seed (default env NLAB_SEED)");

  std::string fixtures_dir;
  CLI::App* counter = app.add_subcommand(
      "counterexamples", "run the stress-scenario regression suite");
  counter->fallthrough();
  counter->add_option("--fixtures", fixtures_dir,
                      "directory of {name}.json fixture overrides");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kIo;
  }

  try {
    if (validate->parsed()) return cmd_validate(out, validate_path, tol);
    if (aggregate->parsed())
      return cmd_aggregate(out, agg_path, agg_mode, agg_measures, epsilon,
                           tol);
    if (price->parsed())
      return cmd_price(out, price_path, strikes, mc, paths, seed);
    if (counter->parsed()) return cmd_counterexamples(out, fixtures_dir);
  } catch (const std::exception& e) {
    std::cout << canonical_dump(
        {{"error", "internal"}, {"message", e.what()}});
    return kDomain;
  }
  return kIo;
}

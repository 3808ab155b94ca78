#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlab/json_io.hpp>
#include <nlab/scenarios.hpp>
#include <sstream>
#include <string>

// NLAB_CLI_PATH, NLAB_DATA_DIR, NLAB_GOLDEN_DIR come from the build system.

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int rc = -1;
  std::string out;
};

// Runs the CLI through the shell, capturing stdout only; stderr is dropped
// so usage errors stay out of the golden comparisons.
RunResult run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + NLAB_CLI_PATH + " " +
                    args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) {
  return std::string(NLAB_DATA_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string golden(const std::string& name) {
  return slurp(std::string(NLAB_GOLDEN_DIR) + "/" + name);
}

nlohmann::json parsed(const RunResult& r) {
  return nlohmann::json::parse(r.out);
}

}  // namespace

TEST_CASE("usage and parse errors exit 2, help exits 0") {
  CHECK(run("").rc == 2);
  CHECK(run("frobnicate").rc == 2);
  CHECK(run("validate").rc == 2);              // missing required argument
  CHECK(run("--format xml validate x").rc == 2);
  CHECK(run("--help").rc == 0);
  CHECK(run("price " + data("params_basic.json")).rc == 2);  // no --strikes
}

TEST_CASE("validate: golden outputs and exit codes") {
  RunResult ok = run("validate " + data("matrix_ok.json"));
  CHECK(ok.rc == 0);
  CHECK(ok.out == golden("validate_matrix_ok.json"));

  RunResult bad = run("validate " + data("matrix_chain_bad.json"));
  CHECK(bad.rc == 1);
  CHECK(bad.out == golden("validate_matrix_chain_bad.json"));

  RunResult tree = run("validate " + data("tree_twoleaf.json"));
  CHECK(tree.rc == 0);
  CHECK(tree.out == golden("validate_tree_twoleaf.json"));
}

TEST_CASE("validate: malformed input is a parse error on stdout, exit 2") {
  RunResult r = run("validate " + data("malformed.json"));
  CHECK(r.rc == 2);
  nlohmann::json j = parsed(r);
  CHECK(j["error"] == "parse");
  CHECK(j["message"].get<std::string>().find("malformed.json") !=
        std::string::npos);

  RunResult missing = run("validate " + data("no_such_file.json"));
  CHECK(missing.rc == 2);
  CHECK(parsed(missing)["error"] == "parse");
}

TEST_CASE("aggregate: the three modes against golden reports") {
  RunResult cons = run("aggregate " + data("tree_twoleaf.json"));
  CHECK(cons.rc == 0);
  CHECK(cons.out == golden("aggregate_twoleaf_consistent.json"));

  RunResult defl =
      run("aggregate " + data("tree_twoleaf.json") + " --mode deflator");
  CHECK(defl.rc == 1);
  CHECK(defl.out == golden("aggregate_twoleaf_deflator.json"));

  RunResult mart =
      run("aggregate " + data("tree_twoleaf.json") + " --mode martingale");
  CHECK(mart.rc == 1);
  CHECK(mart.out == golden("aggregate_twoleaf_martingale.json"));

  RunResult skew =
      run("aggregate " + data("tree_sudden.json") + " --mode consistent");
  CHECK(skew.rc == 1);
  CHECK(skew.out == golden("aggregate_sudden_consistent.json"));
}

TEST_CASE("aggregate: measure selection errors") {
  RunResult missing = run("aggregate " + data("tree_twoleaf.json") +
                          " --measures Q1,QX");
  CHECK(missing.rc == 1);
  nlohmann::json j = parsed(missing);
  CHECK(j["error"] == "measure");
  CHECK(j["message"].get<std::string>().find("QX") != std::string::npos);

  RunResult count = run("aggregate " + data("tree_twoleaf.json") +
                        " --measures Q1");
  CHECK(count.rc == 1);
  CHECK(parsed(count)["error"] == "measure");
}

TEST_CASE("price: golden JSON and CSV, parameter rejection") {
  std::string strikes = " --strikes 0.5,1,2";
  RunResult j = run("price " + data("params_basic.json") + strikes);
  CHECK(j.rc == 0);
  CHECK(j.out == golden("price_basic.json"));

  RunResult c = run("--format csv price " + data("params_basic.json") +
                    strikes);
  CHECK(c.rc == 0);
  CHECK(c.out == golden("price_basic.csv"));

  RunResult bad = run("price " + data("params_bad_mu.json") + " --strikes 1");
  CHECK(bad.rc == 1);
  nlohmann::json jb = parsed(bad);
  CHECK(jb["error"] == "params");
  bool consistency = false;
  for (const auto& v : jb["violations"])
    consistency = consistency || v["rule"] == "consistency";
  CHECK(consistency);

  RunResult nan = run("price " + data("params_basic.json") + " --strikes 1,x");
  CHECK(nan.rc == 2);
  CHECK(parsed(nan)["error"] == "parse");
}

TEST_CASE("price: Monte Carlo determinism and the NLAB_SEED default") {
  std::string base =
      "price " + data("params_basic.json") + " --strikes 1 --mc --paths 20000";
  RunResult a = run(base + " --seed 777");
  RunResult b = run(base + " --seed 777");
  CHECK(a.rc == 0);
  CHECK(a.out == b.out);
  RunResult c = run(base + " --seed 778");
  CHECK(c.rc == 0);
  CHECK(a.out != c.out);

  // the env seed fills in when --seed is absent
  RunResult env = run(base, "NLAB_SEED=777");
  CHECK(env.out == a.out);
  RunResult junk = run(base + " --seed 12345", "NLAB_SEED=garbage");
  RunResult dflt = run(base, "NLAB_SEED=garbage");  // falls back to 12345
  CHECK(dflt.out == junk.out);

  nlohmann::json ja = parsed(a);
  CHECK(ja["seed"] == 777);
  CHECK(ja["paths"] == 20000);
  double mc = ja["rows"][0]["mc_mean"].get<double>();
  double se = ja["rows"][0]["mc_se"].get<double>();
  double closed = ja["rows"][0]["closed_form"].get<double>();
  CHECK(se > 0.0);
  CHECK(std::abs(mc - closed) <= 4.0 * se);
}

TEST_CASE("--out writes the report file and leaves stdout empty") {
  fs::path tmp = fs::temp_directory_path() /
                 ("nlab_cli_out_" + std::to_string(::getpid()) + ".json");
  RunResult r = run("--out " + tmp.string() + " price " +
                    data("params_basic.json") + " --strikes 0.5,1,2");
  CHECK(r.rc == 0);
  CHECK(r.out.empty());
  CHECK(slurp(tmp.string()) == golden("price_basic.json"));
  fs::remove(tmp);

  RunResult bad = run("--out /nonexistent-dir/x.json validate " +
                      data("matrix_ok.json"));
  CHECK(bad.rc == 2);
  CHECK(parsed(bad)["error"] == "io");
}

TEST_CASE("counterexamples: builtin suite passes, golden in both formats") {
  RunResult j = run("counterexamples");
  CHECK(j.rc == 0);
  CHECK(j.out == golden("counterexamples.json"));
  CHECK(parsed(j)["pass"] == true);

  RunResult c = run("--format csv counterexamples");
  CHECK(c.rc == 0);
  CHECK(c.out == golden("counterexamples.csv"));
}

TEST_CASE("counterexamples: fixture overrides, drift, and missing files") {
  using namespace nlab;
  fs::path dir = fs::temp_directory_path() /
                 ("nlab_cli_fixtures_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  for (const std::string& name : scenario_names()) {
    Scenario s = builtin_scenario(name);
    std::vector<std::pair<std::string, TreeMeasure>> named;
    for (size_t i = 0; i < s.family.measures.size(); ++i)
      named.emplace_back("Q" + std::to_string(i + 1), s.family.measures[i]);
    std::ofstream f(dir / (name + ".json"), std::ios::binary);
    f << canonical_dump(tree_with_measures_to_json(s.tree, named));
  }

  // faithful re-exports of the builtin fixtures still pass
  RunResult ok = run("counterexamples --fixtures " + dir.string());
  CHECK(ok.rc == 0);
  CHECK(parsed(ok)["pass"] == true);

  // a drifted fixture flips its scenario to FIXTURE-DRIFT and the exit to 1
  {
    Scenario s = builtin_scenario("sudden_arbitrage");
    s.family.measures[0] = TreeMeasure::from_leaf_weights(
        s.tree, {{"w1", 1.0}, {"w2", 0.0}});
    std::vector<std::pair<std::string, TreeMeasure>> named = {
        {"Q1", s.family.measures[0]}, {"Q2", s.family.measures[1]}};
    std::ofstream f(dir / "sudden_arbitrage.json", std::ios::binary);
    f << canonical_dump(tree_with_measures_to_json(s.tree, named));
  }
  RunResult drift =
      run("--format csv counterexamples --fixtures " + dir.string());
  CHECK(drift.rc == 1);
  CHECK(drift.out.find("sudden_arbitrage,FIXTURE-DRIFT") != std::string::npos);
  CHECK(drift.out.find("fated_devaluation,PASS") != std::string::npos);
  CHECK(drift.out.find("support_gap,PASS") != std::string::npos);

  // a missing fixture is an I/O error
  fs::remove(dir / "support_gap.json");
  RunResult gone = run("counterexamples --fixtures " + dir.string());
  CHECK(gone.rc == 2);
  CHECK(parsed(gone)["error"] == "parse");
  CHECK(parsed(gone)["message"].get<std::string>().find("support_gap") !=
        std::string::npos);

  fs::remove_all(dir);
}

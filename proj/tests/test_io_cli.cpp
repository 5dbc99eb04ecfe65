#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "surplex/io.hpp"
#include "surplex/numeraire.hpp"

using namespace surplex;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/surplex_test_") + std::to_string(::getpid()) + "_" + name;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SURPLEX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

const char* kScenarioCsv =
    "outcome,prob,X,Y,R\n"
    "w1,0.25,-1,0.125,1\n"
    "w2,0.25,2,-0.375,0.1\n"
    "w3,0.25,3,0.0625,1\n"
    "w4,0.25,4,1,1\n";

}  // namespace

TEST_CASE("scenario csv parsing") {
  const ScenarioTable t = parse_scenarios(kScenarioCsv);
  CHECK(t.space.size() == 4);
  CHECK(t.names == std::vector<std::string>{"X", "Y", "R"});
  CHECK(t.outcome_labels[2] == "w3");
  CHECK(t.column("X")[0] == -1.0);
  CHECK(t.column("Y")[1] == -0.375);
  CHECK_THROWS_AS(t.column("Z"), ParseError);
}

TEST_CASE("scenario csv round trip is bit exact") {
  const ScenarioTable t = parse_scenarios(kScenarioCsv);
  const ScenarioTable again = parse_scenarios(scenarios_to_csv(t));
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    CHECK((t.columns[j].values() == again.columns[j].values()).all());
  CHECK((t.space.probs() == again.space.probs()).all());

  // awkward decimals survive the trip too
  const OutcomeSpace s = OutcomeSpace::make((Vec(3) << 0.1, 0.3, 0.6).finished());
  Vec v(3);
  v << 0.1 + 0.2, -1.0 / 3.0, 5.000000000000001;
  ScenarioTable table{s, {"a", "b", "c"}, {"V"}, {RandVar(s, v)}};
  const ScenarioTable back = parse_scenarios(scenarios_to_csv(table));
  CHECK((back.columns[0].values() == v).all());
}

TEST_CASE("scenario csv error reporting") {
  CHECK_THROWS_AS(parse_scenarios(""), ParseError);
  CHECK_THROWS_AS(parse_scenarios("a,b\n"), ParseError);  // wrong header
  CHECK_THROWS_AS(parse_scenarios("outcome,prob,X\n"), ParseError);  // no rows
  CHECK_THROWS_AS(parse_scenarios("outcome,prob,X\nw1,0.5,1\nw2,0.5\n"), ParseError);
  try {
    parse_scenarios("outcome,prob,X\nw1,0.5,1\nw2,0.5,oops\n");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("column 3") != std::string::npos);
  }
  // probabilities off by more than the gate need --normalize
  const char* skewed = "outcome,prob,X\nw1,0.5,1\nw2,0.4,2\n";
  CHECK_THROWS_AS(parse_scenarios(skewed), ParseError);
  const ScenarioTable fixed = parse_scenarios(skewed, true);
  CHECK(fixed.space.prob(0) == doctest::Approx(5.0 / 9.0));
}

TEST_CASE("spec json parsing and binding") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);

  const SpecDesc var_desc = parse_spec(json::parse(R"({"family":"VaRLevel","params":{"alpha":0.3}})"));
  CHECK(bind_spec(var_desc, u4).family() == Family::kVaRLevel);

  const SpecDesc ts = parse_spec(json::parse(R"({"family":"TestScenario","params":{"event":[0,1]}})"));
  const AcceptanceSet ts_set = bind_spec(ts, u4);
  CHECK(ts_set.event().indices() == std::vector<int>{0, 1});

  const SpecDesc sf = parse_spec(json::parse(
      R"({"family":"Shortfall","params":{"loss":{"family":"Power","p":2.0},"c":1.0}})"));
  CHECK(bind_spec(sf, u4).threshold() == 1.0);
  const SpecDesc expo = parse_spec(json::parse(
      R"({"family":"Shortfall","params":{"loss":{"family":"Exponential","k":0.5},"c":2.0}})"));
  CHECK(bind_spec(expo, u4).loss().family() == LossFunction::Family::kExponential);

  const SpecDesc esc = parse_spec(json::parse(
      R"({"family":"EsConstructed","params":{"event":[0],"xstar":[0,-1,-1,0]}})"));
  CHECK(bind_spec(esc, u4).es_bound()[1] == -1.0);

  const SpecDesc poly = parse_spec(json::parse(
      R"({"family":"PolyhedralSolid","params":{"generators":[[-1,0,0,0],[0,-2,0,0]]}})"));
  CHECK(bind_spec(poly, u4).generators().size() == 2);

  CHECK_THROWS_AS(parse_spec(json::parse(R"({"family":"Nope","params":{}})")), SpecError);
  CHECK_THROWS_AS(parse_spec(json::parse(R"({"family":"VaRLevel","params":{}})")), SpecError);
  CHECK_THROWS_AS(parse_spec(json::parse(R"([1,2,3])")), SpecError);
  // binding failures: event out of range, alpha out of range, length mismatch
  CHECK_THROWS_AS(
      bind_spec(parse_spec(json::parse(R"({"family":"TestScenario","params":{"event":[9]}})")), u4),
      SpecError);
  CHECK_THROWS_AS(
      bind_spec(parse_spec(json::parse(R"({"family":"VaRLevel","params":{"alpha":1.5}})")), u4),
      SpecError);
  CHECK_THROWS_AS(
      bind_spec(parse_spec(json::parse(
                    R"({"family":"EsConstructed","params":{"event":[0],"xstar":[0,-1]}})")),
                u4),
      SpecError);
}

TEST_CASE("spec json round trip") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  for (const char* text :
       {R"({"family":"VaRLevel","params":{"alpha":0.3}})",
        R"({"family":"Shortfall","params":{"loss":{"family":"Power","p":2.0},"c":1.0}})",
        R"({"family":"TestScenario","params":{"event":[0,1]}})",
        R"({"family":"ExpectedTailLoss","params":{"alpha":0.3,"c":1.0}})",
        R"({"family":"ExpectedShortfall","params":{"alpha":0.3}})",
        R"({"family":"EsConstructed","params":{"event":[0],"xstar":[0.0,-1.0,-1.0,0.0]}})",
        R"({"family":"PolyhedralSolid","params":{"generators":[[-1.0,0.0,0.0,0.0]]}})"}) {
    const SpecDesc d = parse_spec(json::parse(text));
    const SpecDesc d2 = parse_spec(spec_to_json(d));
    const AcceptanceSet a = bind_spec(d, u4), b = bind_spec(d2, u4);
    Rng rng(11);
    for (int k = 0; k < 100; ++k) {
      Vec v(4);
      for (int i = 0; i < 4; ++i) v[i] = 2.0 * rng.normal();
      const RandVar x(u4, v);
      CHECK(a.accepts(x) == b.accepts(x));
    }
  }
}

TEST_CASE("caps serialize infinities as a sentinel") {
  Vec caps(3);
  caps << 0.0, 2.5, std::numeric_limits<double>::infinity();
  const json j = caps_to_json(caps);
  CHECK(j[0] == 0.0);
  CHECK(j[1] == 2.5);
  CHECK(j[2] == "inf");
}

TEST_CASE("cli evaluate emits the frozen figures") {
  const std::string csv = temp_path("s.csv"), spec = temp_path("var.json"),
                    out = temp_path("eval.json");
  write_file(csv, kScenarioCsv);
  write_file(spec, R"({"family":"VaRLevel","params":{"alpha":0.3}})");
  REQUIRE(run_cli("evaluate --scenarios " + csv + " --spec " + spec + " --deterministic --output " +
                  out) == 0);
  const json report = json::parse(read_file(out));
  CHECK(report["version"] == SURPLEX_VERSION);
  CHECK(!report.contains("timestamp"));
  const json& row = report["results"][0];
  CHECK(row["name"] == "X");
  CHECK(row["accepted"] == true);
  CHECK(row["var"] == -2.0);
  CHECK(row["es"].get<double>() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("cli reports are byte-identical under --deterministic") {
  const std::string csv = temp_path("s2.csv"), spec = temp_path("etl.json");
  write_file(csv, kScenarioCsv);
  write_file(spec, R"({"family":"ExpectedTailLoss","params":{"alpha":0.3,"c":1.0}})");
  std::string first;
  for (int run = 0; run < 3; ++run) {
    const std::string out = temp_path("rep" + std::to_string(run) + ".json");
    REQUIRE(run_cli("check --scenarios " + csv + " --spec " + spec +
                    " --budget 500 --seed 7 --deterministic --output " + out) == 0);
    const std::string text = read_file(out);
    if (run == 0)
      first = text;
    else
      CHECK(text == first);
  }
  const json report = json::parse(first);
  CHECK(report["results"]["surplus_invariant"]["holds"] == true);
  CHECK(report["results"]["cone"]["holds"] == false);
  CHECK(report["results"]["numeraire_invariant"]["holds"] == false);
  CHECK(report["results"]["numeraire_equivalence_consistent"] == true);
}

TEST_CASE("cli exit codes") {
  const std::string csv = temp_path("s3.csv"), bad = temp_path("bad.csv"),
                    es = temp_path("es.json");
  write_file(csv, kScenarioCsv);
  write_file(bad, "");
  write_file(es, R"({"family":"ExpectedShortfall","params":{"alpha":0.3}})");

  // input errors exit 2
  CHECK(run_cli("evaluate --scenarios " + bad + " --spec " + es) == 2);
  CHECK(run_cli("evaluate --scenarios " + temp_path("missing.csv") + " --spec " + es) == 2);
  // found violations exit 1 under --strict, 0 otherwise
  CHECK(run_cli("check --scenarios " + csv + " --spec " + es + " --budget 400 --seed 3") == 0);
  CHECK(run_cli("check --scenarios " + csv + " --spec " + es + " --budget 400 --seed 3 --strict") ==
        1);
  CHECK(run_cli("decompose --scenarios " + csv + " --spec " + es +
                " --budget 100 --seed 3 --strict") == 1);
}

TEST_CASE("cli witnesses replay through evaluate") {
  const std::string csv = temp_path("s4.csv"), es = temp_path("es2.json"),
                    out = temp_path("check.json");
  write_file(csv, kScenarioCsv);
  write_file(es, R"({"family":"ExpectedShortfall","params":{"alpha":0.3}})");
  REQUIRE(run_cli("check --scenarios " + csv + " --spec " + es +
                  " --budget 500 --seed 5 --deterministic --output " + out) == 0);
  const json report = json::parse(read_file(out));
  const json witness = report["results"]["surplus_invariant"]["witness"];
  REQUIRE(witness.size() == 2);

  // write the witness positions as scenario columns and evaluate them
  std::ostringstream csv2;
  csv2 << "outcome,prob,member,localized\n";
  for (int i = 0; i < 4; ++i) {
    csv2 << "w" << (i + 1) << ",0.25," << json(witness[0]["values"][i]).dump() << ","
         << json(witness[1]["values"][i]).dump() << "\n";
  }
  const std::string csv2_path = temp_path("witness.csv"), out2 = temp_path("eval2.json");
  write_file(csv2_path, csv2.str());
  REQUIRE(run_cli("evaluate --scenarios " + csv2_path + " --spec " + es +
                  " --deterministic --output " + out2) == 0);
  const json eval = json::parse(read_file(out2));
  CHECK(eval["results"][0]["accepted"] == witness[0]["accepted"]);
  CHECK(eval["results"][1]["accepted"] == witness[1]["accepted"]);
}

TEST_CASE("cli arbitrage finds and reports the witness") {
  const std::string csv = temp_path("s5.csv"), out = temp_path("arb.json");
  write_file(csv, kScenarioCsv);
  REQUIRE(run_cli("arbitrage --scenarios " + csv + " --measure es --alpha 0.5 --rate R "
                  "--budget 1000 --seed 11 --deterministic --output " +
                  out) == 0);
  const json report = json::parse(read_file(out));
  REQUIRE(report["results"]["found"] == true);
  CHECK(report["results"]["rho_before"].get<double>() <= 0.0);
  CHECK(report["results"]["rho_after"].get<double>() > 0.0);
  CHECK(report["results"]["measure"] == "ES");
  CHECK(report["results"]["alpha"] == 0.5);
  CHECK(report["results"]["R"].size() == 4);
}

TEST_CASE("cli decompose and bound") {
  const std::string csv = temp_path("s6.csv"), sf = temp_path("sf.json"),
                    out = temp_path("dec.json"), bout = temp_path("bound.json");
  write_file(csv, kScenarioCsv);
  write_file(sf, R"({"family":"Shortfall","params":{"loss":{"family":"Power","p":2.0},"c":1.0}})");
  REQUIRE(run_cli("decompose --scenarios " + csv + " --spec " + sf +
                  " --budget 200 --seed 9 --deterministic --output " + out) == 0);
  const json dec = json::parse(read_file(out));
  CHECK(dec["results"]["controlled"].size() == 4);
  CHECK(dec["results"]["no_default"].empty());
  for (const auto& cap : dec["results"]["caps"])
    CHECK(cap.get<double>() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(dec["results"]["reconstruction"]["holds"] == true);

  REQUIRE(run_cli("bound --scenarios " + csv + " --spec " + sf +
                  " --budget 300 --seed 9 --deterministic --output " + bout) == 0);
  const json bound = json::parse(read_file(bout));
  CHECK(bound["results"]["construction"]["kind"] == "closed-form");
  CHECK(bound["results"]["verify"]["holds"] == true);
  CHECK(bound["results"]["bound"]["levels"].back() == 1.0);
}

TEST_CASE("cli dual command") {
  const std::string csv = temp_path("s7.csv"), sf = temp_path("sf2.json"),
                    out = temp_path("dual.json");
  write_file(csv, kScenarioCsv);
  write_file(sf, R"({"family":"Shortfall","params":{"loss":{"family":"Power","p":2.0},"c":1.0}})");
  REQUIRE(run_cli("dual --scenarios " + csv + " --spec " + sf +
                  " --refine --deterministic --output " + out) == 0);
  const json report = json::parse(read_file(out));
  for (const auto& row : report["results"]) CHECK(row["dual_holds"] == row["accepted"]);
}

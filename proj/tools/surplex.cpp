// surplex: batch front-end for acceptance-set evaluation, property checks,
// structural decomposition, stochastic bounds and cross-currency arbitrage
// search over finite scenario spaces.

#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "surplex/dominance.hpp"
#include "surplex/io.hpp"
#include "surplex/numeraire.hpp"
#include "surplex/structure.hpp"

namespace {

using surplex::json;

#ifndef SURPLEX_VERSION
#define SURPLEX_VERSION "0.0.0"
#endif

struct CommonOpts {
  std::string scenarios;
  std::string spec;
  std::uint64_t seed = 0;
  std::uint64_t budget = 10000;
  std::vector<double> alpha_grid;
  std::string output;
  std::string format = "json";
  double slack = 0.0;
  bool normalize = false;
  bool deterministic = false;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonOpts* o, bool needs_spec = true) {
  cmd->add_option("--scenarios", o->scenarios, "scenario CSV file")->required();
  auto* spec = cmd->add_option("--spec", o->spec, "acceptance spec JSON file");
  if (needs_spec) spec->required();
  cmd->add_option("--seed", o->seed, "RNG seed, echoed in the report");
  cmd->add_option("--budget", o->budget, "sample budget for randomized checks");
  cmd->add_option("--alpha-grid", o->alpha_grid, "levels for VaR/ES tables");
  cmd->add_option("--output", o->output, "write the report here instead of stdout");
  cmd->add_option("--format", o->format, "json or text")
      ->check(CLI::IsMember({"json", "text"}));
  cmd->add_option("--slack", o->slack, "relax membership thresholds by this much");
  cmd->add_flag("--normalize", o->normalize, "rescale the prob column to sum 1");
  cmd->add_flag("--deterministic", o->deterministic, "suppress the timestamp field");
  cmd->add_flag("--strict", o->strict, "exit 1 when a property violation is found");
}

json report_envelope(const std::string& command, const CommonOpts& o) {
  json config{{"scenarios", o.scenarios}, {"budget", o.budget},
              {"slack", o.slack},         {"normalize", o.normalize},
              {"format", o.format}};
  if (!o.spec.empty()) config["spec"] = o.spec;
  if (!o.alpha_grid.empty()) config["alpha_grid"] = o.alpha_grid;
  json j{{"version", SURPLEX_VERSION}, {"command", command}, {"seed", o.seed},
         {"config", config}};
  if (!o.deterministic) j["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
  return j;
}

void emit(const json& report, const CommonOpts& o, const std::string& text_form) {
  std::string payload = o.format == "json" ? report.dump(2) + "\n" : text_form;
  if (o.output.empty()) {
    std::cout << payload;
  } else {
    std::ofstream out(o.output);
    if (!out) throw surplex::ParseError("cannot write report to '" + o.output + "'");
    out << payload;
  }
}

std::string text_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << std::left << std::setw(static_cast<int>(width[i]) + 2) << row[i];
    out << '\n';
  }
  return out.str();
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

std::vector<double> grid_or_default(const CommonOpts& o) {
  return o.alpha_grid.empty() ? surplex::default_alpha_grid() : o.alpha_grid;
}

int run_evaluate(const CommonOpts& o) {
  const surplex::ScenarioTable table = surplex::load_scenarios(o.scenarios, o.normalize);
  const surplex::SpecDesc desc = surplex::load_spec(o.spec);
  const surplex::AcceptanceSet set = surplex::bind_spec(desc, table.space).with_slack(o.slack);
  const bool has_alpha = desc.family == surplex::Family::kVaRLevel ||
                         desc.family == surplex::Family::kExpectedTailLoss ||
                         desc.family == surplex::Family::kExpectedShortfall;
  const double alpha = has_alpha ? set.alpha() : 0.5;

  json results = json::array();
  std::vector<std::vector<std::string>> rows{{"name", "accepted", "margin", "var", "es"}};
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    const surplex::RandVar& x = table.columns[i];
    json r{{"name", table.names[i]},
           {"accepted", set.accepts(x)},
           {"margin", set.margin(x)},
           {"alpha", alpha},
           {"var", surplex::var(x, alpha)},
           {"es", surplex::es(x, alpha)},
           {"p_default", surplex::cdf_strict(x, 0.0)},
           {"expectation", surplex::expectation(x)}};
    const double p_default = surplex::cdf_strict(x, 0.0);
    if (desc.family == surplex::Family::kExpectedShortfall && p_default > set.alpha())
      r["es_split_regime"] = "default-mass exceeds alpha";
    if (!o.alpha_grid.empty()) {
      json per_level = json::array();
      for (double a : o.alpha_grid)
        per_level.push_back(json{{"alpha", a}, {"var", surplex::var(x, a)},
                                 {"es", surplex::es(x, a)}});
      r["levels"] = per_level;
    }
    results.push_back(r);
    rows.push_back({table.names[i], set.accepts(x) ? "yes" : "no", fmt(set.margin(x)),
                    fmt(surplex::var(x, alpha)), fmt(surplex::es(x, alpha))});
  }
  json report = report_envelope("evaluate", o);
  report["spec"] = surplex::spec_to_json(desc);
  report["results"] = results;
  emit(report, o, text_table(rows));
  return 0;
}

int run_check(const CommonOpts& o) {
  const surplex::ScenarioTable table = surplex::load_scenarios(o.scenarios, o.normalize);
  const surplex::SpecDesc desc = surplex::load_spec(o.spec);
  const surplex::AcceptanceSet set = surplex::bind_spec(desc, table.space).with_slack(o.slack);
  surplex::CheckBudget budget{o.budget, o.seed, 10};

  const surplex::Verdict monotone = surplex::check_monotone(set, budget);
  const surplex::Verdict convex = surplex::check_convex(set, budget);
  const surplex::Verdict cone = surplex::check_cone(set, budget);
  const surplex::Verdict surplus = surplex::check_surplus_invariant(set, budget);
  const surplex::EquivalenceAudit eq = surplex::equivalence_audit(set, budget);
  const surplex::FormsAudit forms = surplex::equivalent_forms_audit(set, budget);

  json report = report_envelope("check", o);
  report["spec"] = surplex::spec_to_json(desc);
  report["results"] = json{{"monotone", surplex::verdict_to_json(monotone)},
                           {"convex", surplex::verdict_to_json(convex)},
                           {"cone", surplex::verdict_to_json(cone)},
                           {"surplus_invariant", surplex::verdict_to_json(surplus)},
                           {"numeraire_invariant", surplex::verdict_to_json(eq.numeraire)},
                           {"numeraire_equivalence_consistent", eq.consistent},
                           {"forms_consistent", forms.consistent}};
  if (!eq.conversion.empty()) {
    report["results"]["witness_conversion"] = eq.conversion;
    report["results"]["converted_witness"] = surplex::witness_to_json(eq.converted_witness);
  }
  std::vector<std::vector<std::string>> rows{{"property", "holds", "checked"}};
  auto row = [&](const char* name, const surplex::Verdict& v) {
    rows.push_back({name, v.holds ? "true" : "false", std::to_string(v.checked)});
  };
  row("monotone", monotone);
  row("convex", convex);
  row("cone", cone);
  row("surplus-invariant", surplus);
  row("numeraire-invariant", eq.numeraire);
  rows.push_back({"equivalence-consistent", eq.consistent ? "true" : "false", "-"});
  rows.push_back({"forms-consistent", forms.consistent ? "true" : "false",
                  std::to_string(forms.checked)});
  emit(report, o, text_table(rows));

  const bool violation = !monotone.holds || !convex.holds || !cone.holds || !surplus.holds ||
                         !eq.numeraire.holds || !eq.consistent || !forms.consistent;
  return (o.strict && violation) ? 1 : 0;
}

int run_decompose(const CommonOpts& o, double cap_max) {
  const surplex::ScenarioTable table = surplex::load_scenarios(o.scenarios, o.normalize);
  const surplex::SpecDesc desc = surplex::load_spec(o.spec);
  const surplex::AcceptanceSet set = surplex::bind_spec(desc, table.space).with_slack(o.slack);
  surplex::CheckBudget budget{o.budget, o.seed, 10};

  json report = report_envelope("decompose", o);
  report["spec"] = surplex::spec_to_json(desc);
  try {
    const surplex::Decomposition dec = surplex::decompose(set, cap_max, budget);
    const surplex::Partition& part = dec.partition;
    report["results"] =
        json{{"no_default", part.no_default().indices()},
             {"controlled", part.controlled().indices()},
             {"unconstrained", part.unconstrained().indices()},
             {"caps", surplex::caps_to_json(part.caps())},
             {"reconstruction", json{{"verified", dec.verified}, {"holds", true}}}};
    std::vector<std::vector<std::string>> rows{{"class", "outcomes"}};
    auto list = [](const std::vector<int>& v) {
      std::ostringstream out;
      for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
      return out.str();
    };
    rows.push_back({"A (no default)", list(part.no_default().indices())});
    rows.push_back({"B (controlled)", list(part.controlled().indices())});
    rows.push_back({"C (unconstrained)", list(part.unconstrained().indices())});
    emit(report, o, text_table(rows));
    return 0;
  } catch (const surplex::DecompositionFailure& e) {
    report["results"] = json{{"error", "DecompositionMismatch"},
                             {"message", e.what()},
                             {"witness", json{{"values", surplex::values_to_json(e.position.values())},
                                              {"accepted", e.actual_accept},
                                              {"trichotomy_predicts", e.predicted_accept}}}};
    emit(report, o, std::string("DecompositionMismatch: ") + e.what() + "\n");
    return o.strict ? 1 : 0;
  } catch (const surplex::PCFull& e) {
    report["results"] = json{{"error", "PCFull"}, {"message", e.what()}};
    emit(report, o, std::string("PCFull: ") + e.what() + "\n");
    return o.strict ? 1 : 0;
  }
}

int run_bound(const CommonOpts& o, int grid_points, double margin) {
  const surplex::ScenarioTable table = surplex::load_scenarios(o.scenarios, o.normalize);
  const surplex::SpecDesc desc = surplex::load_spec(o.spec);
  const surplex::AcceptanceSet set = surplex::bind_spec(desc, table.space).with_slack(o.slack);
  surplex::CheckBudget budget{o.budget, o.seed, 10};

  const surplex::Decomposition dec = surplex::decompose(set, 1e12, budget);
  std::optional<surplex::StepCdf> bound;
  bool check_es = true;
  json how;
  try {
    const surplex::ClosedFormBound cf = surplex::closed_form_bound(set, grid_points);
    bound = cf.step;
    check_es = cf.finite_mean;
    how = json{{"kind", "closed-form"}, {"x_star", cf.x_star}, {"finite_mean", cf.finite_mean}};
  } catch (const surplex::UnsupportedFamily&) {
    // Envelope of sampled default options, then the point-mass bound.
    surplex::Rng rng(o.seed);
    std::vector<surplex::RandVar> defaults;
    const std::uint64_t count = std::min<std::uint64_t>(o.budget, 512);
    for (std::uint64_t k = 0; k < count; ++k) {
      const surplex::RandVar m = surplex::sample_member(set, rng);
      defaults.push_back(m.with_values(-surplex::neg_part(m).values()));
    }
    bound = surplex::construct_bound(surplex::tightness_envelope(defaults), margin);
    how = json{{"kind", "sampled-envelope"}, {"members", count}, {"margin", margin}};
  }

  const std::vector<double> grid = grid_or_default(o);
  const surplex::Verdict ver = surplex::verify_bound(set, dec.partition, *bound, grid,
                                                     budget, check_es);
  json report = report_envelope("bound", o);
  report["spec"] = surplex::spec_to_json(desc);
  report["results"] = json{{"bound", json{{"breakpoints", bound->breakpoints()},
                                          {"levels", bound->levels()}}},
                           {"construction", how},
                           {"es_clause_checked", check_es},
                           {"verify", surplex::verdict_to_json(ver)}};
  std::vector<std::vector<std::string>> rows{{"alpha", "VaR(bound)", "ES(bound)"}};
  for (double a : grid)
    rows.push_back({fmt(a), fmt(surplex::var_of(*bound, a)), fmt(surplex::es_of(*bound, a))});
  rows.push_back({"verify", ver.holds ? "holds" : "FAILS", std::to_string(ver.checked)});
  emit(report, o, text_table(rows));
  return (o.strict && !ver.holds) ? 1 : 0;
}

int run_dual(const CommonOpts& o, bool refine) {
  const surplex::ScenarioTable table = surplex::load_scenarios(o.scenarios, o.normalize);
  const surplex::SpecDesc desc = surplex::load_spec(o.spec);
  const surplex::AcceptanceSet set = surplex::bind_spec(desc, table.space).with_slack(o.slack);
  const std::vector<surplex::RandVar> grid = surplex::default_dual_grid(table.space, o.seed);

  json results = json::array();
  std::vector<std::vector<std::string>> rows{{"name", "accepted", "dual_holds", "min_slack"}};
  bool disagreement = false;
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    const surplex::RandVar& x = table.columns[i];
    surplex::DualCheck dc = surplex::dual_membership_check(set, x, grid);
    bool refined = false;
    if (refine && dc.holds && !dc.accepted) {
      if (auto z = surplex::separating_direction(set, x)) {
        std::vector<surplex::RandVar> extended = grid;
        extended.push_back(*z);
        dc = surplex::dual_membership_check(set, x, extended);
        refined = true;
      }
    }
    disagreement |= dc.holds != dc.accepted;
    results.push_back(json{{"name", table.names[i]},
                           {"accepted", dc.accepted},
                           {"dual_holds", dc.holds},
                           {"min_slack", dc.min_slack},
                           {"directions", dc.checked},
                           {"refined", refined}});
    rows.push_back({table.names[i], dc.accepted ? "yes" : "no", dc.holds ? "yes" : "no",
                    fmt(dc.min_slack)});
  }
  json report = report_envelope("dual", o);
  report["spec"] = surplex::spec_to_json(desc);
  report["results"] = results;
  emit(report, o, text_table(rows));
  return (o.strict && disagreement) ? 1 : 0;
}

int run_arbitrage(const CommonOpts& o, const std::string& measure_name, double alpha,
                  const std::string& rate_column) {
  const surplex::ScenarioTable table = surplex::load_scenarios(o.scenarios, o.normalize);
  const surplex::Measure measure =
      measure_name == "var" ? surplex::Measure::kVar : surplex::Measure::kEs;
  const surplex::RescalingFactor rate(table.column(rate_column));
  surplex::CheckBudget budget{o.budget, o.seed, 10};
  const auto witness = surplex::arbitrage_search(measure, alpha, rate, budget);

  json report = report_envelope("arbitrage", o);
  report["config"]["measure"] = measure_name;
  report["config"]["alpha"] = alpha;
  report["config"]["rate_column"] = rate_column;
  if (witness) {
    report["results"] = json{{"found", true},
                             {"X", surplex::values_to_json(witness->position.values())},
                             {"R", surplex::values_to_json(rate.rate().values())},
                             {"rho_before", witness->rho_before},
                             {"rho_after", witness->rho_after},
                             {"measure", surplex::measure_name(witness->measure)},
                             {"alpha", witness->alpha},
                             {"reversed", witness->reversed}};
    std::ostringstream text;
    text << "arbitrage witness: rho_before=" << witness->rho_before
         << " rho_after=" << witness->rho_after << "\n";
    emit(report, o, text.str());
  } else {
    report["results"] = json{{"found", false}};
    emit(report, o, "no arbitrage witness found\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surplus- and numeraire-invariance toolkit for finite scenario spaces"};
  app.require_subcommand(1);

  CommonOpts eval_o, check_o, dec_o, bound_o, dual_o, arb_o;
  double cap_max = 1e12, bound_margin = 0.0, arb_alpha = 0.5;
  int grid_points = 512;
  bool dual_refine = false;
  std::string arb_measure = "es", arb_rate;

  add_common(app.add_subcommand("evaluate", "acceptance and risk figures per position"), &eval_o);
  add_common(app.add_subcommand("check", "randomized property checks"), &check_o);
  auto* dec = app.add_subcommand("decompose", "scenario classes {A,B,C} with default caps");
  add_common(dec, &dec_o);
  dec->add_option("--cap-max", cap_max, "depth treated as an infinite cap");
  auto* bnd = app.add_subcommand("bound", "stochastic bound for controlled defaults");
  add_common(bnd, &bound_o);
  bnd->add_option("--grid-points", grid_points, "discretization points for analytic bounds");
  bnd->add_option("--margin", bound_margin, "tail mass ignored by the envelope bound");
  auto* dual = app.add_subcommand("dual", "dual membership inequalities per position");
  add_common(dual, &dual_o);
  dual->add_flag("--refine", dual_refine, "retry disagreements with a separating direction");
  auto* arb = app.add_subcommand("arbitrage", "cross-currency acceptability search");
  add_common(arb, &arb_o, /*needs_spec=*/false);
  arb->add_option("--measure", arb_measure, "var or es")
      ->check(CLI::IsMember({"var", "es"}));
  arb->add_option("--alpha", arb_alpha, "level of the test")->required();
  arb->add_option("--rate", arb_rate, "scenario column holding the exchange rate")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (app.got_subcommand("evaluate")) return run_evaluate(eval_o);
    if (app.got_subcommand("check")) return run_check(check_o);
    if (app.got_subcommand("decompose")) return run_decompose(dec_o, cap_max);
    if (app.got_subcommand("bound")) return run_bound(bound_o, grid_points, bound_margin);
    if (app.got_subcommand("dual")) return run_dual(dual_o, dual_refine);
    if (app.got_subcommand("arbitrage"))
      return run_arbitrage(arb_o, arb_measure, arb_alpha, arb_rate);
  } catch (const surplex::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const surplex::SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return 2;
  } catch (const surplex::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

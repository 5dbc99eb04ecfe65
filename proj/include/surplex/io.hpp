#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "surplex/acceptance.hpp"

namespace surplex {

using json = nlohmann::json;

/// A scenario file: outcomes with probabilities plus named positions.
/// CSV layout: header `outcome,prob,<name1>,<name2>,...`, one row per
/// outcome, '.' decimal, no thousands separators, UTF-8.
struct ScenarioTable {
  OutcomeSpace space;
  std::vector<std::string> outcome_labels;
  std::vector<std::string> names;
  std::vector<RandVar> columns;

  const RandVar& column(const std::string& name) const;
};

ScenarioTable load_scenarios(const std::string& path, bool normalize = false);
ScenarioTable parse_scenarios(const std::string& text, bool normalize = false);
std::string scenarios_to_csv(const ScenarioTable& table);
void save_scenarios(const std::string& path, const ScenarioTable& table);

/// Parsed acceptance-set description, not yet bound to a space. JSON layout:
/// {"family": "...", "params": {...}} with events as outcome-index arrays.
struct SpecDesc {
  Family family = Family::kVaRLevel;
  double alpha = 0.0;
  double c = 0.0;
  bool has_loss = false;
  LossFunction::Family loss_family = LossFunction::Family::kPower;
  double loss_param = 2.0;
  std::vector<int> event;
  std::vector<double> xstar;
  std::vector<double> alphas;
  std::vector<std::vector<double>> generators;
};

SpecDesc parse_spec(const json& j);
SpecDesc load_spec(const std::string& path);
json spec_to_json(const SpecDesc& desc);
AcceptanceSet bind_spec(const SpecDesc& desc, const OutcomeSpace& space);

json values_to_json(const Vec& v);
/// Caps serialization: infinite entries become the string "inf".
json caps_to_json(const Vec& caps);
json witness_to_json(const std::vector<WitnessClaim>& claims);
json verdict_to_json(const Verdict& v);

}  // namespace surplex

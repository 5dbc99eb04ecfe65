#include "surplex/io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace surplex {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(field);
  return out;
}

double parse_number(const std::string& field, int line, int col) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "line " << line << ", column " << col << ": '" << field << "' is not a finite number";
    throw ParseError(msg.str());
  }
  return v;
}

std::string format_number(double v) {
  // 17 significant digits: enough for a bit-exact double round trip.
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

const RandVar& ScenarioTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  throw ParseError("scenario file has no column named '" + name + "'");
}

ScenarioTable parse_scenarios(const std::string& text, bool normalize) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty scenario file");
  ++lineno;
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "outcome" || header[1] != "prob")
    throw ParseError("line 1: header must start with 'outcome,prob'");
  std::vector<std::string> names(header.begin() + 2, header.end());

  std::vector<std::string> labels;
  std::vector<double> probs;
  std::vector<std::vector<double>> cols(names.size());
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "line " << lineno << ": expected " << header.size() << " fields, got "
          << fields.size();
      throw ParseError(msg.str());
    }
    labels.push_back(fields[0]);
    probs.push_back(parse_number(fields[1], lineno, 2));
    for (std::size_t j = 0; j < names.size(); ++j)
      cols[j].push_back(parse_number(fields[j + 2], lineno, static_cast<int>(j) + 3));
  }
  if (probs.empty()) throw ParseError("scenario file has no outcome rows");

  Vec p(static_cast<Eigen::Index>(probs.size()));
  for (std::size_t i = 0; i < probs.size(); ++i) p[static_cast<Eigen::Index>(i)] = probs[i];
  OutcomeSpace space = [&] {
    try {
      return OutcomeSpace::make(p, normalize);
    } catch (const Error& e) {
      throw ParseError(std::string("prob column: ") + e.what());
    }
  }();

  ScenarioTable table{space, std::move(labels), std::move(names), {}};
  for (auto& col : cols) {
    Vec v(static_cast<Eigen::Index>(col.size()));
    for (std::size_t i = 0; i < col.size(); ++i) v[static_cast<Eigen::Index>(i)] = col[i];
    table.columns.emplace_back(space, std::move(v));
  }
  return table;
}

ScenarioTable load_scenarios(const std::string& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenarios(buf.str(), normalize);
}

std::string scenarios_to_csv(const ScenarioTable& table) {
  std::ostringstream out;
  out << "outcome,prob";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < table.space.size(); ++i) {
    out << (static_cast<std::size_t>(i) < table.outcome_labels.size()
                ? table.outcome_labels[static_cast<std::size_t>(i)]
                : "w" + std::to_string(i + 1));
    out << ',' << format_number(table.space.prob(i));
    for (const auto& col : table.columns) out << ',' << format_number(col[i]);
    out << '\n';
  }
  return out.str();
}

void save_scenarios(const std::string& path, const ScenarioTable& table) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write scenario file '" + path + "'");
  out << scenarios_to_csv(table);
}

namespace {

const json& need(const json& params, const char* key) {
  if (!params.contains(key))
    throw SpecError(std::string("spec params missing required key '") + key + "'");
  return params.at(key);
}

std::vector<int> parse_event_indices(const json& j) {
  if (!j.is_array()) throw SpecError("event must be an array of outcome indices");
  std::vector<int> out;
  for (const auto& e : j) out.push_back(e.get<int>());
  return out;
}

}  // namespace

SpecDesc parse_spec(const json& j) {
  if (!j.is_object() || !j.contains("family"))
    throw SpecError("spec must be an object with a 'family' key");
  const std::string fam = j.at("family").get<std::string>();
  const json params = j.value("params", json::object());
  SpecDesc d;
  if (fam == "VaRLevel") {
    d.family = Family::kVaRLevel;
    d.alpha = need(params, "alpha").get<double>();
  } else if (fam == "Shortfall") {
    d.family = Family::kShortfall;
    d.c = need(params, "c").get<double>();
    const json& loss = need(params, "loss");
    const std::string lf = need(loss, "family").get<std::string>();
    d.has_loss = true;
    if (lf == "Power") {
      d.loss_family = LossFunction::Family::kPower;
      d.loss_param = need(loss, "p").get<double>();
    } else if (lf == "Exponential") {
      d.loss_family = LossFunction::Family::kExponential;
      d.loss_param = need(loss, "k").get<double>();
    } else {
      throw SpecError("loss family must be 'Power' or 'Exponential', got '" + lf + "'");
    }
  } else if (fam == "TestScenario") {
    d.family = Family::kTestScenario;
    d.event = parse_event_indices(need(params, "event"));
  } else if (fam == "ExpectedTailLoss") {
    d.family = Family::kExpectedTailLoss;
    d.alpha = need(params, "alpha").get<double>();
    d.c = need(params, "c").get<double>();
  } else if (fam == "ExpectedShortfall") {
    d.family = Family::kExpectedShortfall;
    d.alpha = need(params, "alpha").get<double>();
  } else if (fam == "EsConstructed") {
    d.family = Family::kEsConstructed;
    d.event = parse_event_indices(need(params, "event"));
    d.xstar = need(params, "xstar").get<std::vector<double>>();
    if (params.contains("alphas")) d.alphas = params.at("alphas").get<std::vector<double>>();
  } else if (fam == "PolyhedralSolid") {
    d.family = Family::kPolyhedralSolid;
    d.generators = need(params, "generators").get<std::vector<std::vector<double>>>();
  } else {
    throw SpecError("unknown acceptance family '" + fam + "'");
  }
  return d;
}

SpecDesc load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open spec file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("spec file '") + path + "': " + e.what());
  }
  return parse_spec(j);
}

json spec_to_json(const SpecDesc& d) {
  json params = json::object();
  switch (d.family) {
    case Family::kVaRLevel:
      params["alpha"] = d.alpha;
      break;
    case Family::kShortfall:
      params["c"] = d.c;
      params["loss"] = {{"family", d.loss_family == LossFunction::Family::kPower ? "Power"
                                                                                 : "Exponential"},
                        {d.loss_family == LossFunction::Family::kPower ? "p" : "k", d.loss_param}};
      break;
    case Family::kTestScenario:
      params["event"] = d.event;
      break;
    case Family::kExpectedTailLoss:
      params["alpha"] = d.alpha;
      params["c"] = d.c;
      break;
    case Family::kExpectedShortfall:
      params["alpha"] = d.alpha;
      break;
    case Family::kEsConstructed:
      params["event"] = d.event;
      params["xstar"] = d.xstar;
      if (!d.alphas.empty()) params["alphas"] = d.alphas;
      break;
    case Family::kPolyhedralSolid:
      params["generators"] = d.generators;
      break;
  }
  return json{{"family", family_name(d.family)}, {"params", params}};
}

AcceptanceSet bind_spec(const SpecDesc& d, const OutcomeSpace& space) {
  auto vec_of = [&](const std::vector<double>& raw, const char* what) {
    if (raw.size() != static_cast<std::size_t>(space.size()))
      throw SpecError(std::string(what) + " needs one value per outcome");
    Vec v(space.size());
    for (Eigen::Index i = 0; i < space.size(); ++i) v[i] = raw[static_cast<std::size_t>(i)];
    return RandVar(space, std::move(v));
  };
  try {
    switch (d.family) {
      case Family::kVaRLevel:
        return AcceptanceSet::var_level(space, d.alpha);
      case Family::kShortfall:
        return AcceptanceSet::shortfall(space,
                                        d.loss_family == LossFunction::Family::kPower
                                            ? LossFunction::power(d.loss_param)
                                            : LossFunction::exponential(d.loss_param),
                                        d.c);
      case Family::kTestScenario:
        return AcceptanceSet::test_scenario(Event::from_indices(space, d.event));
      case Family::kExpectedTailLoss:
        return AcceptanceSet::expected_tail_loss(space, d.alpha, d.c);
      case Family::kExpectedShortfall:
        return AcceptanceSet::expected_shortfall(space, d.alpha);
      case Family::kEsConstructed:
        return AcceptanceSet::es_constructed(Event::from_indices(space, d.event),
                                             vec_of(d.xstar, "xstar"), d.alphas);
      case Family::kPolyhedralSolid: {
        std::vector<RandVar> gens;
        for (const auto& g : d.generators) gens.push_back(vec_of(g, "generator"));
        return AcceptanceSet::polyhedral_solid(std::move(gens));
      }
    }
  } catch (const AlphaOutOfRange& e) {
    throw SpecError(e.what());
  }
  throw SpecError("unhandled family");
}

json values_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json caps_to_json(const Vec& caps) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < caps.size(); ++i) {
    if (std::isinf(caps[i]))
      arr.push_back("inf");
    else
      arr.push_back(caps[i]);
  }
  return arr;
}

json witness_to_json(const std::vector<WitnessClaim>& claims) {
  json arr = json::array();
  for (const auto& c : claims)
    arr.push_back(json{{"label", c.label},
                       {"values", values_to_json(c.position.values())},
                       {"accepted", c.expected_accept}});
  return arr;
}

json verdict_to_json(const Verdict& v) {
  json j{{"holds", v.holds}, {"checked", v.checked}};
  if (!v.detail.empty()) j["detail"] = v.detail;
  if (!v.witness.empty()) j["witness"] = witness_to_json(v.witness);
  return j;
}

}  // namespace surplex

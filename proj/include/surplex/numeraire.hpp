#pragma once

#include <functional>
#include <optional>

#include "surplex/acceptance.hpp"

namespace surplex {

/// Strictly positive change of unit of account (stochastic exchange rate).
class RescalingFactor {
 public:
  explicit RescalingFactor(RandVar rate);
  const RandVar& rate() const { return rate_; }

 private:
  RandVar rate_;
};

/// Members must stay members after any rescaling. The factor sampler mixes
/// per-atom log-uniform rates in [1e-3,1e3], constant rates, and factors
/// vanishing on an event (the stronger form that closedness makes
/// equivalent on these families).
Verdict check_numeraire_invariance(const AcceptanceSet& set, const CheckBudget& budget);

/// Numeraire invariance against conicity + surplus invariance at the same
/// budget and seed; the verdicts must satisfy numeraire == cone && surplus,
/// and any failing check's witness is converted into a witness of the
/// matching property on the other side.
struct EquivalenceAudit {
  Verdict numeraire;
  Verdict cone;
  Verdict surplus;
  bool consistent = false;
  std::string conversion;
  std::vector<WitnessClaim> converted_witness;
};
EquivalenceAudit equivalence_audit(const AcceptanceSet& set, const CheckBudget& budget);

enum class Measure { kVar, kEs };
std::string measure_name(Measure m);

/// A position acceptable under the measure in one currency but not after
/// translation (or the reverse).
struct ArbitrageWitness {
  RandVar position;
  RandVar rescaled;
  double rho_before;
  double rho_after;
  Measure measure;
  double alpha;
  bool reversed;
};

/// Searches for regulatory capital arbitrage under a VaR- or ES-based test
/// applied in two currencies linked by `rate`: random members plus
/// surplus-minimal constructive templates (single default, just enough
/// surplus), both directions. Deterministic in budget.seed.
std::optional<ArbitrageWitness> arbitrage_search(Measure measure, double alpha,
                                                 const RescalingFactor& rate,
                                                 const CheckBudget& budget);

/// Membership predicate of the translated test R*A: Y is acceptable in the
/// new currency iff Y/R passes the original test.
std::function<bool(const RandVar&)> translate_set(const AcceptanceSet& set,
                                                  const RescalingFactor& rate);

}  // namespace surplex

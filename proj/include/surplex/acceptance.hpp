#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surplex/prob_core.hpp"
#include "surplex/risk_measures.hpp"
#include "surplex/rng.hpp"

namespace surplex {

enum class Family {
  kVaRLevel,
  kShortfall,
  kTestScenario,
  kExpectedTailLoss,
  kExpectedShortfall,
  kEsConstructed,
  kPolyhedralSolid,
};

std::string family_name(Family f);

/// One acceptance-set family bound to an outcome space; membership is the
/// capital adequacy test. Immutable; `accepts` is deterministic and pure.
///
/// Families and their tests:
///   VaRLevel{alpha}:          P(X < 0) <= alpha
///   Shortfall{l, c}:          E[l(X^-)] <= c, c > 0
///   TestScenario{E}:          X >= 0 on E, P(E) > 0
///   ExpectedTailLoss{a, c}:   ES_a(-X^-) <= c, c >= 0
///   ExpectedShortfall{a}:     ES_a(X) <= 0
///   EsConstructed{A, X*, G}:  X >= 0 on A and ES_b(-1_B X^-) <= ES_b(X*)
///                             for all levels b, B = A^c (checked on the grid
///                             G plus both variables' exact breakpoints,
///                             which on a finite space equals the full check)
///   PolyhedralSolid{g_1..g_m}: -X^- >= sum_i w_i g_i pointwise for some
///                             convex weights w (solid hull of the generator
///                             hull, plus every nonnegative position)
class AcceptanceSet {
 public:
  static AcceptanceSet var_level(OutcomeSpace space, double alpha);
  static AcceptanceSet shortfall(OutcomeSpace space, LossFunction ell, double c);
  static AcceptanceSet test_scenario(Event e);
  static AcceptanceSet expected_tail_loss(OutcomeSpace space, double alpha, double c);
  static AcceptanceSet expected_shortfall(OutcomeSpace space, double alpha);
  static AcceptanceSet es_constructed(Event no_default_region, RandVar bound,
                                      std::vector<double> alpha_grid = {});
  static AcceptanceSet polyhedral_solid(std::vector<RandVar> generators);

  bool accepts(const RandVar& x) const;

  /// Nonnegative iff accepted (at zero slack); the magnitude is in the
  /// family's own functional units, useful only for diagnostics.
  double margin(const RandVar& x) const;

  /// Same family with membership relaxed to margin >= -eps.
  AcceptanceSet with_slack(double eps) const;

  Family family() const { return family_; }
  const OutcomeSpace& space() const { return space_; }
  double alpha() const { return alpha_; }
  double threshold() const { return c_; }
  double slack() const { return slack_; }
  const LossFunction& loss() const { return *loss_; }
  const Event& event() const { return *event_; }
  const RandVar& es_bound() const { return *xstar_; }
  const std::vector<double>& alpha_grid() const { return alphas_; }
  const std::vector<RandVar>& generators() const { return generators_; }

 private:
  explicit AcceptanceSet(OutcomeSpace space, Family f) : space_(std::move(space)), family_(f) {}

  OutcomeSpace space_;
  Family family_;
  double alpha_ = 0.0;
  double c_ = 0.0;
  double slack_ = 0.0;
  std::optional<LossFunction> loss_;
  std::optional<Event> event_;
  std::optional<RandVar> xstar_;
  std::vector<double> alphas_;
  std::vector<RandVar> generators_;
};

/// {0.01, 0.05, 0.10, ..., 0.95, 0.99}.
std::vector<double> default_alpha_grid();

/// Typical position magnitude for a family, used to scale samplers.
double family_scale(const AcceptanceSet& set);

struct CheckBudget {
  std::uint64_t samples = 10000;
  std::uint64_t seed = 0;
  /// Below this outcome count, event quantifiers run over all 2^n events.
  int exhaustive_threshold = 10;
};

/// One recorded accept/reject observation; a witness is a list of claims that
/// jointly exhibit the violated property and can be replayed bit-for-bit.
struct WitnessClaim {
  RandVar position;
  bool expected_accept;
  std::string label;
};

struct Verdict {
  bool holds = true;
  std::vector<WitnessClaim> witness;
  std::uint64_t checked = 0;
  std::string detail;
};

/// True iff every claim reproduces under `accepts`.
bool replay_witness(const AcceptanceSet& set, const std::vector<WitnessClaim>& claims);

/// Draws a member of the set: a mix of rejection sampling, boundary rays
/// (positions scaled out to the acceptance frontier along random default
/// directions), single-atom defaults at their caps, and nonnegative
/// positions. Throws SamplerExhausted if the set looks empty to rejection.
RandVar sample_member(const AcceptanceSet& set, Rng& rng);

/// X in A, D >= 0  =>  X + D in A.
Verdict check_monotone(const AcceptanceSet& set, const CheckBudget& budget);
/// X, Y in A, l in [0,1]  =>  lX + (1-l)Y in A.
Verdict check_convex(const AcceptanceSet& set, const CheckBudget& budget);
/// X in A, t in (0, 1e3]  =>  tX in A.
Verdict check_cone(const AcceptanceSet& set, const CheckBudget& budget);
/// Forms (c) and (d) of the surplus-invariance characterization:
/// members keep membership after dropping the surplus (-X^-) and after
/// localization to any event (1_E X; all 2^n events when the space is small).
Verdict check_surplus_invariant(const AcceptanceSet& set, const CheckBudget& budget);

/// Cross-checks the four equivalent formulations of surplus invariance on
/// common samples; the four verdicts must agree for every family.
struct FormsAudit {
  Verdict dominated_default;  // (a) Y^- <= X^- keeps membership
  Verdict equal_default;      // (b) Y^- == X^- keeps membership
  Verdict default_only;       // (c) -X^- stays a member
  Verdict localized;          // (d) 1_E X stays a member
  bool consistent = true;
  std::uint64_t checked = 0;
};
FormsAudit equivalent_forms_audit(const AcceptanceSet& set, const CheckBudget& budget);

}  // namespace surplex

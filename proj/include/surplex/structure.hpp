#pragma once

#include <optional>

#include "surplex/acceptance.hpp"

namespace surplex {

/// Scenario classes of the structural decomposition: no default allowed on A,
/// bounded default on B, no constraint on C, with per-atom default caps
/// (0 on A, finite positive on B, +inf on C). P(C) < 1.
class Partition {
 public:
  Partition(Event no_default, Event controlled, Event unconstrained, Vec caps);

  const Event& no_default() const { return a_; }
  const Event& controlled() const { return b_; }
  const Event& unconstrained() const { return c_; }
  const Vec& caps() const { return caps_; }
  const OutcomeSpace& space() const { return a_.space(); }

 private:
  Event a_, b_, c_;
  Vec caps_;
};

struct Decomposition {
  Partition partition;
  /// Positions on which the reconstruction identity was verified.
  std::uint64_t verified = 0;
};

/// Raised by decompose when the cap trichotomy fails to reproduce membership;
/// carries the offending position.
struct DecompositionFailure : DecompositionMismatch {
  DecompositionFailure(const std::string& msg, RandVar pos, bool actual, bool predicted)
      : DecompositionMismatch(msg), position(std::move(pos)), actual_accept(actual),
        predicted_accept(predicted) {}
  RandVar position;
  bool actual_accept;
  bool predicted_accept;
};

/// Largest single-atom default depth the set tolerates at `omega`:
/// sup{d >= 0 : -d 1_omega acceptable}. Doubling then bisection to relative
/// tolerance 1e-10; +inf once cap_max is still acceptable, 0 once 1e-12 is
/// already rejected. Test-scenario and VaR-level caps are decided
/// symbolically (bisection cannot certify unboundedness); the polyhedral cap
/// is the vertex optimum max_i(-g_i(omega)).
double atom_default_cap(const AcceptanceSet& set, Eigen::Index omega, double cap_max = 1e12);

/// Computes per-atom caps, classifies {A,B,C} by the cap trichotomy and
/// verifies the reconstruction identity
///   accepts(X)  ==  [X >= 0 on A] and accepts(1_B X + M 1_{B^c})
/// on probe and random positions. Throws DecompositionFailure on mismatch
/// (expected for non-convex or non-surplus-invariant families) and PCFull
/// when the caps declare every scenario unconstrained.
Decomposition decompose(const AcceptanceSet& set, double cap_max,
                        const CheckBudget& verify_budget);

/// Geometric ray grid 2^0 .. 2^40.
std::vector<double> default_ray_grid();

/// True iff t*X stays acceptable along the whole grid; exact for the
/// implemented families since each functional is monotone along rays.
bool recession_membership(const AcceptanceSet& set, const RandVar& x,
                          const std::vector<double>& t_grid = {});

/// For a coherent surplus-invariant set, the event A with
/// accepts(X) <=> 1_A X >= 0. Throws NotCoherent if the cone/convexity/
/// surplus checks fail, ScenarioExtractionMismatch if the extracted event
/// does not reproduce membership.
Event coherent_scenario_set(const AcceptanceSet& set, const CheckBudget& budget);

/// Lower support function evaluation sigma(Z) = inf{E[XZ] : X acceptable},
/// on nonnegative directions; -inf outside the barrier cone.
struct SupportEvaluation {
  RandVar direction;
  double sigma;  // always <= 0: every set contains the positive cone
};
SupportEvaluation support_function(const AcceptanceSet& set, const RandVar& z);

/// Outcome of testing the dual membership inequalities
/// -E[X^- Z] >= sigma(Z) over a grid of directions.
struct DualCheck {
  bool holds = true;        // all inequalities satisfied within 1e-9
  bool accepted = false;    // accepts(X), for comparison
  double min_slack = 0.0;   // smallest -E[X^-Z] - sigma(Z) over finite sigma
  std::uint64_t checked = 0;
};
DualCheck dual_membership_check(const AcceptanceSet& set, const RandVar& x,
                                const std::vector<RandVar>& z_grid);

/// Single indicators, pairwise indicators, the full-space direction and 64
/// seeded random positive directions.
std::vector<RandVar> default_dual_grid(const OutcomeSpace& space, std::uint64_t seed = 17);

/// A direction certifying non-membership through the dual inequality, where
/// the family admits one (closed-form conjugates, the ES dual maximizer, or
/// the polyhedral dual program). Returns nullopt when no violated direction
/// was produced. The result is verified before being returned.
std::optional<RandVar> separating_direction(const AcceptanceSet& set, const RandVar& x);

}  // namespace surplex

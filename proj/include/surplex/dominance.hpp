#pragma once

#include <functional>

#include "surplex/structure.hpp"

namespace surplex {

/// Right-continuous step distribution function: F(t) = levels[i] on
/// [breakpoints[i], breakpoints[i+1]), zero before the first breakpoint,
/// terminal level 1. Stochastic bounds need not live on the ambient space,
/// so they are carried as plain distributions.
class StepCdf {
 public:
  StepCdf(std::vector<double> breakpoints, std::vector<double> levels);
  static StepCdf point_mass(double at);

  double operator()(double t) const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& levels() const { return levels_; }
  /// Atoms with their cumulative masses (zero-mass breakpoints kept).
  DiscreteDist distribution() const { return {breakpoints_, levels_}; }
  double mean() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> levels_;
};

StepCdf to_step_cdf(const RandVar& x);

double var_of(const StepCdf& f, double alpha);
double es_of(const StepCdf& f, double alpha);

/// First-order stochastic preference: F_x(t) <= F_y(t) for every t, decided
/// exactly on the merged breakpoints.
bool fosd(const StepCdf& x, const StepCdf& y);
bool fosd(const RandVar& x, const RandVar& y);

/// Cross-checks the CDF ordering against the pointwise VaR ordering (they
/// characterize each other) and, when the ordering holds, the implied ES
/// ordering, over the grid augmented with both variables' breakpoints.
struct FosdAudit {
  bool cdf_ordered = false;
  bool var_ordered = false;
  bool agree = false;       // cdf_ordered == var_ordered
  bool es_ordered = false;  // vacuously true when not ordered
  std::uint64_t checked = 0;
};
FosdAudit fosd_var_equivalence(const RandVar& x, const RandVar& y,
                               std::vector<double> alpha_grid = {});

/// Pointwise supremum of the members' CDFs. All members must be <= 0; the
/// result's value at -x is the worst default probability beyond depth x
/// across the family.
StepCdf tightness_envelope(const std::vector<RandVar>& members);

/// Point mass at the deepest envelope breakpoint still carrying more than
/// `margin` of mass: the finite-family stochastic bound (every finite family
/// of positions is uniformly bounded, so the point-mass branch always
/// applies). With margin 0 the bound dominates the envelope exactly and is
/// the minimal point mass that does.
StepCdf construct_bound(const StepCdf& envelope, double margin = 0.0);

/// Analytic stochastic bound for the shortfall and expected-tail-loss
/// families with c > 0, plus a conservative (rounded-up) step discretization
/// on a log-spaced grid reaching the 1e-9 quantile.
struct ClosedFormBound {
  double x_star;  // F == 1 at and beyond this point
  bool finite_mean;
  StepCdf step;
  std::function<double(double)> analytic;
};
ClosedFormBound closed_form_bound(const AcceptanceSet& set, int grid_points = 512);

/// Samples members X and checks VaR_a(1_B X) <= VaR_a(bound) on the grid,
/// plus the ES comparison when check_es is set (the integrable-bound clause).
Verdict verify_bound(const AcceptanceSet& set, const Partition& partition, const StepCdf& bound,
                     const std::vector<double>& alpha_grid, const CheckBudget& budget,
                     bool check_es = true);

}  // namespace surplex

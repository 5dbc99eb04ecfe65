#include "surplex/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace surplex {

StepCdf::StepCdf(std::vector<double> breakpoints, std::vector<double> levels)
    : breakpoints_(std::move(breakpoints)), levels_(std::move(levels)) {
  if (breakpoints_.empty() || breakpoints_.size() != levels_.size())
    throw SpecError("step cdf needs matching nonempty breakpoints and levels");
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i])) throw SpecError("step cdf breakpoints must be finite");
    if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
      throw SpecError("step cdf breakpoints must be strictly increasing");
    if (levels_[i] < 0.0 || levels_[i] > 1.0 + 1e-12 ||
        (i > 0 && levels_[i] < levels_[i - 1]))
      throw SpecError("step cdf levels must be nondecreasing within [0,1]");
  }
  if (std::abs(levels_.back() - 1.0) > 1e-12)
    throw SpecError("step cdf terminal level must be 1");
  levels_.back() = 1.0;
}

StepCdf StepCdf::point_mass(double at) { return StepCdf({at}, {1.0}); }

double StepCdf::operator()(double t) const {
  // Largest breakpoint <= t, right-continuous.
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return 0.0;
  return levels_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double StepCdf::mean() const {
  double m = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    m += (levels_[i] - prev) * breakpoints_[i];
    prev = levels_[i];
  }
  return m;
}

StepCdf to_step_cdf(const RandVar& x) {
  DiscreteDist d = distribution_of(x);
  return StepCdf(std::move(d.values), std::move(d.cum));
}

double var_of(const StepCdf& f, double alpha) { return var(f.distribution(), alpha); }

double es_of(const StepCdf& f, double alpha) { return es(f.distribution(), alpha); }

namespace {
// Probability levels reached by different summation orders can disagree by a
// few ulp; comparisons treat masses within this band as equal.
constexpr double kProbTol = 1e-12;
}  // namespace

bool fosd(const StepCdf& x, const StepCdf& y) {
  // Both step functions are right-continuous, so comparing at the merged
  // breakpoints decides the comparison at every real t.
  for (double t : x.breakpoints())
    if (x(t) > y(t) + kProbTol) return false;
  for (double t : y.breakpoints())
    if (x(t) > y(t) + kProbTol) return false;
  return true;
}

bool fosd(const RandVar& x, const RandVar& y) { return fosd(to_step_cdf(x), to_step_cdf(y)); }

FosdAudit fosd_var_equivalence(const RandVar& x, const RandVar& y,
                               std::vector<double> alpha_grid) {
  FosdAudit audit;
  audit.cdf_ordered = fosd(x, y);

  // The VaR map is right-continuous and piecewise constant in the level with
  // jumps at the cumulative breakpoints; midpoints between breakpoints plus
  // points just off each breakpoint cover every piece. Breakpoints that agree
  // up to the ulp band are one mathematical jump and get clustered first, so
  // no level lands inside a band where the summation orders disagree.
  for (double b : var_breakpoints(x)) alpha_grid.push_back(b);
  for (double b : var_breakpoints(y)) alpha_grid.push_back(b);
  std::sort(alpha_grid.begin(), alpha_grid.end());
  std::vector<double> jumps;
  for (double b : alpha_grid) {
    if (!(b > 0.0) || !(b < 1.0)) continue;
    if (jumps.empty() || b - jumps.back() > 4.0 * kProbTol) jumps.push_back(b);
  }
  std::vector<double> levels;
  double prev = 0.0;
  for (double b : jumps) {  // off-points clear the whole cluster width
    levels.push_back(0.5 * (prev + b));
    if (b - 8.0 * kProbTol > 0.0) levels.push_back(b - 8.0 * kProbTol);
    if (b + 8.0 * kProbTol < 1.0) levels.push_back(b + 8.0 * kProbTol);
    prev = b;
  }
  levels.push_back(0.5 * (prev + 1.0));

  const DiscreteDist dx = distribution_of(x);
  const DiscreteDist dy = distribution_of(y);
  audit.var_ordered = true;
  audit.es_ordered = true;
  for (double a : levels) {
    ++audit.checked;
    if (var(dx, a) > var(dy, a)) audit.var_ordered = false;
  }
  audit.agree = audit.cdf_ordered == audit.var_ordered;
  if (audit.cdf_ordered) {
    for (double a : levels) {
      const double ex = es(dx, a), ey = es(dy, a);
      if (ex > ey + 1e-10 * std::max({1.0, std::abs(ex), std::abs(ey)}))
        audit.es_ordered = false;
    }
  }
  return audit;
}

StepCdf tightness_envelope(const std::vector<RandVar>& members) {
  if (members.empty()) throw EmptyFamily("tightness envelope needs at least one member");
  std::vector<StepCdf> cdfs;
  cdfs.reserve(members.size());
  for (const auto& m : members) {
    require_same_space(m, members.front());
    if (!(m.values() <= 0.0).all())
      throw SpecError("tightness envelope members must be <= 0");
    cdfs.push_back(to_step_cdf(m));
  }
  std::vector<double> points;
  for (const auto& f : cdfs)
    for (double b : f.breakpoints()) points.push_back(b);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<double> levels;
  levels.reserve(points.size());
  for (double t : points) {
    double sup = 0.0;
    for (const auto& f : cdfs) sup = std::max(sup, f(t));
    levels.push_back(sup);
  }
  return StepCdf(std::move(points), std::move(levels));
}

StepCdf construct_bound(const StepCdf& envelope, double margin) {
  if (!(margin >= 0.0) || margin >= 1.0)
    throw NotDecayingEnvelope("margin must lie in [0,1)");
  // The deepest point still carrying more than `margin` of envelope mass; a
  // point mass there dominates the envelope up to the margin and is the
  // smallest point mass that does.
  for (std::size_t i = 0; i < envelope.breakpoints().size(); ++i)
    if (envelope.levels()[i] > margin) return StepCdf::point_mass(envelope.breakpoints()[i]);
  throw NotDecayingEnvelope("envelope never exceeds the margin");
}

ClosedFormBound closed_form_bound(const AcceptanceSet& set, int grid_points) {
  if (grid_points < 2) throw SpecError("closed-form bound needs at least two grid points");
  double x_star, x_low;  // x_low: the 1e-9 quantile of the analytic bound
  bool finite_mean;
  std::function<double(double)> analytic;
  if (set.family() == Family::kShortfall) {
    const LossFunction ell = set.loss();
    const double c = set.threshold();
    x_star = -ell.inverse(c);
    analytic = [ell, c, xs = x_star](double t) { return t > xs ? 1.0 : c / ell(-t); };
    finite_mean = ell.family() == LossFunction::Family::kExponential || ell.param() > 1.0;
    x_low = -ell.inverse(c * 1e9);
  } else if (set.family() == Family::kExpectedTailLoss && set.threshold() > 0.0) {
    const double alpha = set.alpha(), c = set.threshold();
    x_star = -c;
    analytic = [alpha, c](double t) { return t >= -c ? 1.0 : -alpha * c / t; };
    finite_mean = false;
    x_low = -alpha * c * 1e9;
  } else {
    throw UnsupportedFamily("closed-form bounds exist for Shortfall and ExpectedTailLoss c>0");
  }

  // Log-spaced grid from the far tail up to x*, rounded up so the step
  // function upper-bounds the analytic F and dominance stays a sufficient
  // check after discretization.
  std::vector<double> points(static_cast<std::size_t>(grid_points));
  const double lo = std::log(-x_low), hi = std::log(-x_star);
  for (int i = 0; i < grid_points; ++i) {
    const double w = static_cast<double>(i) / (grid_points - 1);
    points[static_cast<std::size_t>(i)] = -std::exp(lo + (hi - lo) * w);
  }
  points.back() = x_star;
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<double> levels(points.size());
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    levels[i] = std::min(1.0, analytic(points[i + 1]));
  levels.back() = 1.0;
  for (std::size_t i = 1; i < levels.size(); ++i) levels[i] = std::max(levels[i], levels[i - 1]);
  return ClosedFormBound{x_star, finite_mean, StepCdf(std::move(points), std::move(levels)),
                         std::move(analytic)};
}

Verdict verify_bound(const AcceptanceSet& set, const Partition& partition, const StepCdf& bound,
                     const std::vector<double>& alpha_grid, const CheckBudget& budget,
                     bool check_es) {
  require_same_space(set.space(), partition.space());
  if (alpha_grid.empty()) throw SpecError("verify_bound needs a level grid");
  const DiscreteDist dbound = bound.distribution();
  Verdict v;
  Rng rng(budget.seed);
  for (std::uint64_t k = 0; k < budget.samples; ++k) {
    const RandVar x = sample_member(set, rng);
    const RandVar on_b = restrict(x, partition.controlled());
    const DiscreteDist dx = distribution_of(on_b);
    for (double a : alpha_grid) {
      ++v.checked;
      const double lhs_var = var(dx, a);
      const double rhs_var = var(dbound, a);
      bool bad = lhs_var > rhs_var + 1e-9;
      double lhs_es = 0.0, rhs_es = 0.0;
      if (!bad && check_es) {
        lhs_es = es(dx, a);
        rhs_es = es(dbound, a);
        bad = lhs_es > rhs_es + 1e-9;
      }
      if (bad) {
        v.holds = false;
        v.witness = {{x, true, "member whose controlled default escapes the bound"}};
        std::ostringstream d;
        d << "at level " << a << ": VaR " << lhs_var << " vs bound " << rhs_var;
        if (check_es) d << ", ES " << lhs_es << " vs bound " << rhs_es;
        v.detail = d.str();
        return v;
      }
    }
  }
  return v;
}

}  // namespace surplex

#include "surplex/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "surplex/parallel.hpp"
#include "surplex/simplex.hpp"

namespace surplex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Atom count up to which the polyhedral membership program is solved in exact
// rational arithmetic; beyond it, doubles with a 1e-9 feasibility tolerance.
constexpr Eigen::Index kExactLpMaxAtoms = 12;

using Rational = boost::multiprecision::cpp_rational;

template <typename Scalar>
Scalar polyhedral_gap_impl(const std::vector<RandVar>& gens, const Vec& xneg, Scalar tol) {
  // min t  s.t.  sum_i w_i g_i(omega) - t <= -xneg(omega),  w in the simplex.
  // t <= 0 certifies that the default profile is dominated by a mixture of
  // generators, i.e. the position is a member.
  const std::size_t m = gens.size();
  const std::size_t n = static_cast<std::size_t>(xneg.size());
  Simplex<Scalar> lp(m + 2, tol);  // w_1..w_m, t = u - v
  for (std::size_t w = 0; w < n; ++w) {
    std::vector<Scalar> row(m + 2, Scalar(0));
    for (std::size_t i = 0; i < m; ++i) row[i] = Scalar(gens[i][static_cast<Eigen::Index>(w)]);
    row[m] = Scalar(-1);
    row[m + 1] = Scalar(1);
    lp.add_le(std::move(row), Scalar(-xneg[static_cast<Eigen::Index>(w)]));
  }
  std::vector<Scalar> simplex_row(m + 2, Scalar(0));
  for (std::size_t i = 0; i < m; ++i) simplex_row[i] = Scalar(1);
  lp.add_eq(std::move(simplex_row), Scalar(1));
  std::vector<Scalar> cost(m + 2, Scalar(0));
  cost[m] = Scalar(1);
  cost[m + 1] = Scalar(-1);
  const LpStatus st = lp.minimize(cost);
  if (st != LpStatus::kOptimal) throw Error("polyhedral membership program did not solve");
  return lp.objective();
}

double polyhedral_gap(const std::vector<RandVar>& gens, const RandVar& x, bool exact) {
  const Vec xneg = (-x.values()).max(0.0);
  if (exact) {
    const Rational gap = polyhedral_gap_impl<Rational>(gens, xneg, Rational(0));
    return static_cast<double>(gap);
  }
  return polyhedral_gap_impl<double>(gens, xneg, 1e-9);
}

/// Smallest value over all levels of ES_b(bound) - ES_b(v). Exact sign for
/// the all-levels comparison: the gap is piecewise linear in b with kinks
/// only at the two variables' cumulative breakpoints, so checking kinks, the
/// grid and the b -> 1 limit decides it.
double es_dominance_margin(const RandVar& v, const RandVar& bound,
                           const std::vector<double>& grid) {
  const DiscreteDist dv = distribution_of(v);
  const DiscreteDist db = distribution_of(bound);
  double m = expectation(v) - expectation(bound);  // the b -> 1 endpoint
  auto visit = [&](double beta) {
    if (beta > 0.0 && beta < 1.0)
      m = std::min(m, integrate_var(db, 0.0, beta) / beta - integrate_var(dv, 0.0, beta) / beta);
  };
  for (double b : grid) visit(b);
  for (double b : dv.cum) visit(b);
  for (double b : db.cum) visit(b);
  return m;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::kVaRLevel:
      return "VaRLevel";
    case Family::kShortfall:
      return "Shortfall";
    case Family::kTestScenario:
      return "TestScenario";
    case Family::kExpectedTailLoss:
      return "ExpectedTailLoss";
    case Family::kExpectedShortfall:
      return "ExpectedShortfall";
    case Family::kEsConstructed:
      return "EsConstructed";
    case Family::kPolyhedralSolid:
      return "PolyhedralSolid";
  }
  return "?";
}

AcceptanceSet AcceptanceSet::var_level(OutcomeSpace space, double alpha) {
  require_alpha(alpha);
  AcceptanceSet s(std::move(space), Family::kVaRLevel);
  s.alpha_ = alpha;
  return s;
}

AcceptanceSet AcceptanceSet::shortfall(OutcomeSpace space, LossFunction ell, double c) {
  if (!(c > 0.0)) throw SpecError("shortfall family needs threshold c > 0");
  AcceptanceSet s(std::move(space), Family::kShortfall);
  s.loss_ = ell;
  s.c_ = c;
  return s;
}

AcceptanceSet AcceptanceSet::test_scenario(Event e) {
  if (e.empty()) throw SpecError("test scenario event must have positive probability");
  AcceptanceSet s(e.space(), Family::kTestScenario);
  s.event_ = std::move(e);
  return s;
}

AcceptanceSet AcceptanceSet::expected_tail_loss(OutcomeSpace space, double alpha, double c) {
  require_alpha(alpha);
  if (!(c >= 0.0)) throw SpecError("expected tail loss needs threshold c >= 0");
  AcceptanceSet s(std::move(space), Family::kExpectedTailLoss);
  s.alpha_ = alpha;
  s.c_ = c;
  return s;
}

AcceptanceSet AcceptanceSet::expected_shortfall(OutcomeSpace space, double alpha) {
  require_alpha(alpha);
  AcceptanceSet s(std::move(space), Family::kExpectedShortfall);
  s.alpha_ = alpha;
  return s;
}

AcceptanceSet AcceptanceSet::es_constructed(Event no_default_region, RandVar bound,
                                            std::vector<double> alpha_grid) {
  require_same_space(bound, no_default_region);
  if (!(bound.values() <= 0.0).all()) throw SpecError("constructed-ES bound must be <= 0");
  AcceptanceSet s(bound.space(), Family::kEsConstructed);
  if (alpha_grid.empty()) alpha_grid = default_alpha_grid();
  for (double a : alpha_grid) require_alpha(a);
  s.event_ = std::move(no_default_region);
  s.xstar_ = std::move(bound);
  s.alphas_ = std::move(alpha_grid);
  return s;
}

AcceptanceSet AcceptanceSet::polyhedral_solid(std::vector<RandVar> generators) {
  if (generators.empty()) throw SpecError("polyhedral family needs at least one generator");
  for (const auto& g : generators) {
    require_same_space(g, generators.front());
    if (!(g.values() <= 0.0).all()) throw SpecError("polyhedral generators must be <= 0");
  }
  AcceptanceSet s(generators.front().space(), Family::kPolyhedralSolid);
  s.generators_ = std::move(generators);
  return s;
}

double AcceptanceSet::margin(const RandVar& x) const {
  require_same_space(x.space(), space_);
  switch (family_) {
    case Family::kVaRLevel:
      return alpha_ - cdf_strict(x, 0.0);
    case Family::kShortfall:
      return c_ - shortfall_risk(x, *loss_);
    case Family::kTestScenario: {
      double m = kInf;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (event_->contains(i)) m = std::min(m, x[i]);
      return m;
    }
    case Family::kExpectedTailLoss:
      return c_ - surplex::expected_tail_loss(x, alpha_);
    case Family::kExpectedShortfall:
      return -es(x, alpha_);
    case Family::kEsConstructed: {
      double m = kInf;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (event_->contains(i)) m = std::min(m, x[i]);
      const RandVar v = restrict(neg_part(x), event_->complement());
      return std::min(m, es_dominance_margin(v.with_values(-v.values()), *xstar_, alphas_));
    }
    case Family::kPolyhedralSolid:
      return -polyhedral_gap(generators_, x, space_.size() <= kExactLpMaxAtoms);
  }
  return -kInf;
}

bool AcceptanceSet::accepts(const RandVar& x) const {
  double eps = slack_;
  if (family_ == Family::kPolyhedralSolid && space_.size() > kExactLpMaxAtoms) eps += 1e-9;
  return margin(x) >= -eps;
}

AcceptanceSet AcceptanceSet::with_slack(double eps) const {
  if (!(eps >= 0.0)) throw SpecError("slack must be >= 0");
  AcceptanceSet s(*this);
  s.slack_ = eps;
  return s;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> g;
  g.push_back(0.01);
  for (int k = 1; k <= 19; ++k) g.push_back(0.05 * k);
  g.push_back(0.99);
  return g;
}

double family_scale(const AcceptanceSet& set) {
  switch (set.family()) {
    case Family::kShortfall:
      return std::max(1e-6, set.loss().inverse(set.threshold()));
    case Family::kExpectedTailLoss:
      return set.threshold() > 0.0 ? std::max(1e-6, set.threshold()) : 1.0;
    case Family::kEsConstructed: {
      const double m = set.es_bound().values().abs().maxCoeff();
      return std::max(1.0, m);
    }
    case Family::kPolyhedralSolid: {
      double m = 0.0;
      for (const auto& g : set.generators()) m = std::max(m, g.values().abs().maxCoeff());
      return std::max(1e-6, m);
    }
    default:
      return 1.0;
  }
}

namespace {

/// Membership with the polyhedral program always in doubles; used inside
/// sampler loops where many near-boundary probes are made and exact
/// rationals would be wasted.
bool fast_accepts(const AcceptanceSet& set, const RandVar& x) {
  if (set.family() == Family::kPolyhedralSolid)
    return -polyhedral_gap(set.generators(), x, false) >= -(set.slack() + 1e-9);
  return set.accepts(x);
}

/// sup{t >= 0 : pos - t*dir acceptable}, dir >= 0 nonzero. Doubles from 1,
/// then bisection; +inf once t_cap is still acceptable. Membership along the
/// ray is downward closed (the set is monotone), so the bracket is valid.
double ray_boundary(const AcceptanceSet& set, const Vec& pos, const Vec& dir, double t_cap) {
  auto at = [&](double t) { return RandVar(set.space(), pos - t * dir); };
  if (fast_accepts(set, at(t_cap))) return kInf;
  if (!fast_accepts(set, at(1e-12))) return 0.0;
  double lo = 1e-12, hi = 1.0;
  while (hi < t_cap && fast_accepts(set, at(hi))) {
    lo = hi;
    hi *= 2.0;
  }
  hi = std::min(hi, t_cap);
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * std::max(1.0, lo); ++it) {
    const double mid = 0.5 * (lo + hi);
    (fast_accepts(set, at(mid)) ? lo : hi) = mid;
  }
  return lo;
}

Vec gaussian_vec(Rng& rng, Eigen::Index n, double scale) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

/// Steps a candidate member back onto the safe side if the exact membership
/// test disagrees with the fast one within the boundary band.
bool settle_member(const AcceptanceSet& set, const Vec& pos, const Vec& dir, double t,
                   RandVar* out) {
  for (double shrink : {1.0, 1.0 - 1e-9, 1.0 - 1e-6, 1.0 - 1e-3, 0.5}) {
    RandVar x(set.space(), pos - (t * shrink) * dir);
    if (set.accepts(x)) {
      *out = std::move(x);
      return true;
    }
  }
  return false;
}

}  // namespace

RandVar sample_member(const AcceptanceSet& set, Rng& rng) {
  const OutcomeSpace& space = set.space();
  const Eigen::Index n = space.size();
  const double scale = family_scale(set);
  std::uint64_t tried = 0, landed = 0;
  RandVar candidate = constant(space, 0.0);
  for (int attempt = 0; attempt < 4000; ++attempt) {
    ++tried;
    switch (rng.uniform_index(4)) {
      case 0: {  // rejection from a shifted gaussian cloud
        const double shift = rng.uniform(-1.0, 2.0);
        const double spread = rng.log_uniform(0.25, 4.0);
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * (spread * rng.normal() + shift);
        RandVar x(space, std::move(v));
        if (set.accepts(x)) return x;
        break;
      }
      case 1: {  // boundary ray along a random default direction
        const Vec w = gaussian_vec(rng, n, scale);
        const Vec pos = w.max(0.0);
        Vec dir = (-w).max(0.0);
        if (!(dir.maxCoeff() > 0.0)) dir[rng.uniform_index(static_cast<std::uint64_t>(n))] = scale;
        const double hit = ray_boundary(set, pos, dir, 1e10);
        const double t = std::isinf(hit)
                             ? rng.log_uniform(1e-2, 1e4)
                             : hit * (rng.coin() ? rng.uniform(0.9, 1.0) : rng.uniform(0.0, 1.0));
        if (settle_member(set, pos, dir, t, &candidate)) return candidate;
        break;
      }
      case 2: {  // single-atom default pushed toward its cap
        const Eigen::Index omega = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        Vec pos = rng.coin() ? Vec::Zero(n).eval() : gaussian_vec(rng, n, scale).abs().eval();
        pos[omega] = 0.0;
        Vec dir = Vec::Zero(n);
        dir[omega] = 1.0;
        const double hit = ray_boundary(set, pos, dir, 1e10);
        const double t = std::isinf(hit)
                             ? rng.log_uniform(1e-2 * scale, 1e4 * scale)
                             : hit * (rng.coin() ? rng.uniform(0.9, 1.0) : rng.uniform(0.0, 1.0));
        if (settle_member(set, pos, dir, t, &candidate)) return candidate;
        break;
      }
      default: {  // nonnegative positions are members of every family
        ++landed;
        return RandVar(space, gaussian_vec(rng, n, scale).abs());
      }
    }
    if (tried >= 1000 && landed == 0) break;
  }
  throw SamplerExhausted("member sampler rejected more than 99.9% of draws for family " +
                         family_name(set.family()));
}

bool replay_witness(const AcceptanceSet& set, const std::vector<WitnessClaim>& claims) {
  for (const auto& c : claims)
    if (set.accepts(c.position) != c.expected_accept) return false;
  return true;
}

namespace {

struct SampleOutcome {
  bool ok = true;
  std::vector<WitnessClaim> claims;
  std::string detail;
};

/// Shard-parallel driver: runs `fn` budget.samples times with per-shard RNG
/// streams split off budget.seed; the verdict and the first witness (lowest
/// shard, earliest sample) are independent of the worker count.
template <typename Fn>
Verdict run_sampled_check(const CheckBudget& budget, Fn&& fn) {
  const std::uint64_t samples = std::max<std::uint64_t>(1, budget.samples);
  const std::size_t shards = static_cast<std::size_t>(std::min<std::uint64_t>(64, samples));
  std::vector<SampleOutcome> failures(shards);
  std::vector<std::uint64_t> done(shards, 0);
  for_each_shard(shards, [&](std::size_t s) {
    const std::uint64_t quota = samples / shards + (s < samples % shards ? 1 : 0);
    Rng rng(Rng::split(budget.seed, s));
    for (std::uint64_t k = 0; k < quota; ++k) {
      SampleOutcome out = fn(rng);
      ++done[s];
      if (!out.ok) {
        failures[s] = std::move(out);
        return;
      }
    }
  });
  Verdict v;
  for (std::size_t s = 0; s < shards; ++s) {
    v.checked += done[s];
    if (v.holds && !failures[s].ok) {
      v.holds = false;
      v.witness = std::move(failures[s].claims);
      v.detail = std::move(failures[s].detail);
    }
  }
  return v;
}

}  // namespace

Verdict check_monotone(const AcceptanceSet& set, const CheckBudget& budget) {
  const double scale = family_scale(set);
  return run_sampled_check(budget, [&](Rng& rng) {
    SampleOutcome out;
    const RandVar x = sample_member(set, rng);
    Vec bump = gaussian_vec(rng, set.space().size(), scale).abs();
    if (rng.coin(0.3))  // sparse bumps probe single-atom monotonicity
      for (Eigen::Index i = 0; i < bump.size(); ++i)
        if (rng.coin(0.6)) bump[i] = 0.0;
    const RandVar y = x.with_values(x.values() + bump);
    if (!set.accepts(y)) {
      out.ok = false;
      out.claims = {{x, true, "member"}, {y, false, "member plus nonnegative bump"}};
      out.detail = "monotonicity violated";
    }
    return out;
  });
}

Verdict check_convex(const AcceptanceSet& set, const CheckBudget& budget) {
  return run_sampled_check(budget, [&](Rng& rng) {
    SampleOutcome out;
    const RandVar x = sample_member(set, rng);
    const RandVar y = sample_member(set, rng);
    const double lambda = rng.uniform();
    const RandVar mix = x.with_values(lambda * x.values() + (1.0 - lambda) * y.values());
    if (!set.accepts(mix)) {
      out.ok = false;
      out.claims = {{x, true, "member"}, {y, true, "member"}, {mix, false, "convex mix"}};
      std::ostringstream d;
      d << "convexity violated at lambda=" << lambda;
      out.detail = d.str();
    }
    return out;
  });
}

Verdict check_cone(const AcceptanceSet& set, const CheckBudget& budget) {
  return run_sampled_check(budget, [&](Rng& rng) {
    SampleOutcome out;
    const RandVar x = sample_member(set, rng);
    const double t = rng.log_uniform(1e-3, 1e3);
    const RandVar scaled = x.with_values(t * x.values());
    if (!set.accepts(scaled)) {
      out.ok = false;
      out.claims = {{x, true, "member"}, {scaled, false, "scaled member"}};
      std::ostringstream d;
      d << "conicity violated at t=" << t;
      out.detail = d.str();
    }
    return out;
  });
}

Verdict check_surplus_invariant(const AcceptanceSet& set, const CheckBudget& budget) {
  const Eigen::Index n = set.space().size();
  const bool exhaustive = n <= budget.exhaustive_threshold && n < 63;
  const std::uint64_t events = exhaustive ? (std::uint64_t{1} << n) : 0;

  auto check_event = [&](const RandVar& x, const Event& e, SampleOutcome* out) {
    const RandVar localized = restrict(x, e);
    if (!set.accepts(localized)) {
      out->ok = false;
      out->claims = {{x, true, "member"}, {localized, false, "member localized to event"}};
      std::ostringstream d;
      d << "surplus invariance (localization) violated on event {";
      for (int i : e.indices()) d << i << ",";
      d << "}";
      out->detail = d.str();
      return false;
    }
    return true;
  };

  CheckBudget eff = budget;
  if (exhaustive) eff.samples = std::max<std::uint64_t>(1, budget.samples >> n);
  return run_sampled_check(eff, [&](Rng& rng) {
    SampleOutcome out;
    const RandVar x = sample_member(set, rng);
    const RandVar dropped = neg_part(x).with_values(-neg_part(x).values());
    if (!set.accepts(dropped)) {
      out.ok = false;
      out.claims = {{x, true, "member"}, {dropped, false, "surplus dropped"}};
      out.detail = "surplus invariance (default option) violated";
      return out;
    }
    if (exhaustive) {
      for (std::uint64_t bits = 0; bits < events; ++bits)
        if (!check_event(x, Event::from_bits(set.space(), bits), &out)) return out;
    } else {
      check_event(x, Event::from_bits(set.space(), rng.next_u64()), &out);
    }
    return out;
  });
}

FormsAudit equivalent_forms_audit(const AcceptanceSet& set, const CheckBudget& budget) {
  FormsAudit audit;
  const double scale = family_scale(set);
  const Eigen::Index n = set.space().size();
  const std::uint64_t samples = std::max<std::uint64_t>(1, budget.samples);
  Rng rng(budget.seed);

  auto record = [](Verdict* v, const RandVar& x, const RandVar& y, const char* label,
                   bool accepted) {
    ++v->checked;
    if (!accepted && v->holds) {
      v->holds = false;
      v->witness = {{x, true, "member"}, {y, false, label}};
      v->detail = label;
    }
  };

  for (std::uint64_t k = 0; k < samples; ++k) {
    const RandVar x = sample_member(set, rng);
    const Vec xneg = (-x.values()).max(0.0);

    // (a) any position with a dominated default profile
    const Vec g = gaussian_vec(rng, n, scale);
    const RandVar ya = x.with_values(g.max(-xneg));
    record(&audit.dominated_default, x, ya, "position with smaller default", set.accepts(ya));

    // (b) same default profile, resampled surplus
    Vec vb(n);
    for (Eigen::Index i = 0; i < n; ++i)
      vb[i] = xneg[i] > 0.0 ? -xneg[i] : scale * std::abs(rng.normal());
    const RandVar yb = x.with_values(std::move(vb));
    record(&audit.equal_default, x, yb, "position with equal default", set.accepts(yb));

    // (c) surplus dropped entirely
    const RandVar yc = x.with_values(-xneg);
    record(&audit.default_only, x, yc, "default option", set.accepts(yc));

    // (d) localization to a random event
    const Event e = Event::from_bits(set.space(), rng.next_u64());
    const RandVar yd = restrict(x, e);
    record(&audit.localized, x, yd, "localized position", set.accepts(yd));
  }
  audit.checked = samples;
  audit.consistent = audit.dominated_default.holds == audit.equal_default.holds &&
                     audit.equal_default.holds == audit.default_only.holds &&
                     audit.default_only.holds == audit.localized.holds;
  return audit;
}

}  // namespace surplex

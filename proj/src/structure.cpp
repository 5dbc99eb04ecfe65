#include "surplex/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "surplex/parallel.hpp"
#include "surplex/simplex.hpp"

namespace surplex {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDualSlackTol = 1e-9;
}  // namespace

Partition::Partition(Event no_default, Event controlled, Event unconstrained, Vec caps)
    : a_(std::move(no_default)), b_(std::move(controlled)), c_(std::move(unconstrained)),
      caps_(std::move(caps)) {
  require_same_space(a_.space(), b_.space());
  require_same_space(a_.space(), c_.space());
  const Eigen::Index n = a_.space().size();
  if (caps_.size() != n) throw SpecError("partition caps length mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    const int covered = int(a_.contains(i)) + int(b_.contains(i)) + int(c_.contains(i));
    if (covered != 1) throw SpecError("partition classes must be disjoint and cover the space");
    const double u = caps_[i];
    const bool matches = (a_.contains(i) && u == 0.0) ||
                         (b_.contains(i) && u > 0.0 && std::isfinite(u)) ||
                         (c_.contains(i) && std::isinf(u));
    if (!matches) throw SpecError("cap trichotomy does not match the partition classes");
  }
  if (c_.mask().all()) throw PCFull("every scenario is unconstrained");
}

double atom_default_cap(const AcceptanceSet& set, Eigen::Index omega, double cap_max) {
  if (!(cap_max > 0.0)) throw SpecError("cap_max must be positive");
  switch (set.family()) {
    case Family::kTestScenario:
      return set.event().contains(omega) ? 0.0 : kInf;
    case Family::kVaRLevel:
      // -d 1_omega defaults with probability p(omega) regardless of d.
      return set.space().prob(omega) <= set.alpha() ? kInf : 0.0;
    case Family::kPolyhedralSolid: {
      // Linear objective over the weight simplex peaks at a vertex.
      double cap = 0.0;
      for (const auto& g : set.generators()) cap = std::max(cap, -g[omega]);
      return cap;
    }
    default:
      break;
  }
  auto probe = [&](double d) { return set.accepts(single_atom_default(set.space(), omega, d)); };
  if (!probe(1e-12)) return 0.0;
  if (probe(cap_max)) return kInf;
  double lo = 1e-12, hi = 1.0;
  if (probe(1.0)) {
    lo = 1.0;
    hi = 2.0;
    while (hi < cap_max && probe(hi)) {
      lo = hi;
      hi *= 2.0;
    }
    hi = std::min(hi, cap_max);
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

/// Membership predicted by a cap trichotomy: clean on A, and the B-part alone
/// (with the other scenarios flooded by a large surplus, making them
/// irrelevant exactly as the representation claims) must be acceptable.
bool trichotomy_predicts(const AcceptanceSet& set, const Event& a, const Event& b,
                         double surplus, const RandVar& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (a.contains(i) && x[i] < 0.0) return false;
  const Vec flooded =
      x.values() * b.mask().cast<double>() + surplus * (!b.mask()).cast<double>();
  return set.accepts(RandVar(set.space(), flooded));
}

/// Default depths used by the deterministic decomposition probes.
double probe_depth(double cap, double scale, double factor) {
  const double base = (std::isfinite(cap) && cap > 0.0) ? cap : scale;
  return factor * base;
}

}  // namespace

Decomposition decompose(const AcceptanceSet& set, double cap_max,
                        const CheckBudget& verify_budget) {
  const OutcomeSpace& space = set.space();
  const Eigen::Index n = space.size();
  Vec caps(n);
  for (Eigen::Index i = 0; i < n; ++i) caps[i] = atom_default_cap(set, i, cap_max);

  Mask am(n), bm(n), cm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    am[i] = caps[i] == 0.0;
    cm[i] = std::isinf(caps[i]);
    bm[i] = !am[i] && !cm[i];
  }
  const Event a(space, am), b(space, bm), c(space, cm);
  const double scale = family_scale(set);
  const double surplus = 1e6 * scale;

  std::uint64_t verified = 0;
  auto verify = [&](const RandVar& x) {
    const bool actual = set.accepts(x);
    const bool predicted = trichotomy_predicts(set, a, b, surplus, x);
    ++verified;
    if (actual != predicted) {
      std::ostringstream msg;
      msg << family_name(set.family()) << " membership disagrees with the {A,B,C} trichotomy: "
          << "accepts=" << actual << " predicted=" << predicted;
      throw DecompositionFailure(msg.str(), x, actual, predicted);
    }
  };

  // Deterministic probes: joint defaults over outcome subsets at depths
  // inside and beyond the per-atom caps, with and without surplus elsewhere.
  std::vector<std::uint64_t> subsets;
  if (n <= 10) {
    for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << n); ++bits) subsets.push_back(bits);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) subsets.push_back(std::uint64_t{1} << i);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        subsets.push_back((std::uint64_t{1} << i) | (std::uint64_t{1} << j));
    Rng rng(verify_budget.seed + 1);
    for (int k = 0; k < 256; ++k) subsets.push_back(rng.next_u64() & ((std::uint64_t{1} << n) - 1));
  }
  for (std::uint64_t bits : subsets) {
    for (double factor : {0.45, 0.9, 1.8}) {
      for (double up : {0.0, surplus * 0.5}) {
        Vec v = Vec::Constant(n, up);
        for (Eigen::Index i = 0; i < n; ++i)
          if ((bits >> i) & 1u) v[i] = -probe_depth(caps[i], scale, factor);
        verify(RandVar(space, v));
      }
    }
  }

  // Random positions plus sampled members.
  Rng rng(verify_budget.seed);
  for (std::uint64_t k = 0; k < verify_budget.samples; ++k) {
    if (rng.coin(0.5)) {
      const double spread = rng.log_uniform(0.1, 10.0);
      Vec v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * spread * rng.normal();
      verify(RandVar(space, v));
    } else {
      verify(sample_member(set, rng));
    }
  }

  if (cm.all())
    throw PCFull("all per-atom caps are infinite: no scenario constrains membership");
  return Decomposition{Partition(a, b, c, caps), verified};
}

std::vector<double> default_ray_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 40; ++k) g.push_back(std::ldexp(1.0, k));
  return g;
}

bool recession_membership(const AcceptanceSet& set, const RandVar& x,
                          const std::vector<double>& t_grid) {
  const std::vector<double> grid = t_grid.empty() ? default_ray_grid() : t_grid;
  for (double t : grid)
    if (!set.accepts(x.with_values(t * x.values()))) return false;
  return true;
}

Event coherent_scenario_set(const AcceptanceSet& set, const CheckBudget& budget) {
  const Verdict cone = check_cone(set, budget);
  const Verdict convex = check_convex(set, budget);
  const Verdict surplus = check_surplus_invariant(set, budget);
  if (!cone.holds || !convex.holds || !surplus.holds) {
    std::ostringstream msg;
    msg << family_name(set.family()) << " is not a coherent surplus-invariant set (cone="
        << cone.holds << " convex=" << convex.holds << " surplus=" << surplus.holds << ")";
    throw NotCoherent(msg.str());
  }
  const OutcomeSpace& space = set.space();
  const Eigen::Index n = space.size();
  Mask am(n);
  for (Eigen::Index i = 0; i < n; ++i) am[i] = atom_default_cap(set, i) == 0.0;
  const Event a(space, am);

  auto predicted = [&](const RandVar& x) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (am[i] && x[i] < 0.0) return false;
    return true;
  };
  Rng rng(budget.seed);
  for (std::uint64_t k = 0; k < budget.samples; ++k) {
    RandVar x = rng.coin(0.5)
                    ? RandVar(space, [&] {
                        Vec v(n);
                        const double spread = rng.log_uniform(0.1, 10.0);
                        for (Eigen::Index i = 0; i < n; ++i) v[i] = spread * rng.normal();
                        return v;
                      }())
                    : sample_member(set, rng);
    if (set.accepts(x) != predicted(x))
      throw ScenarioExtractionMismatch("extracted stress set does not reproduce membership");
  }
  return a;
}

namespace {

/// sup{E[YZ] : E[l(Y)] <= c, Y >= 0} via the scalar multiplier: per atom
/// Y(m) solves l'(Y) = Z/m clipped at zero, and E[l(Y(m))] falls
/// monotonically in m; geometric bisection pins the active constraint.
double shortfall_exponential_best_payoff(const Vec& probs, const Vec& z, double k, double c) {
  if (!(z.maxCoeff() > 0.0)) return 0.0;
  auto y_at = [&](double m) {
    Vec y(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      y[i] = z[i] > m * k ? std::log(z[i] / (m * k)) / k : 0.0;
    return y;
  };
  auto load = [&](double m) {
    const Vec y = y_at(m);
    double tot = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) tot += probs[i] * std::expm1(k * y[i]);
    return tot;
  };
  double lo = 1e-12, hi = 1e12;
  if (load(lo) <= c) {
    // Even a nearly free constraint cannot be saturated: dual at the floor.
    const Vec y = y_at(lo);
    return (probs * y * z).sum();
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (load(mid) > c ? lo : hi) = mid;
  }
  const Vec y = y_at(hi);
  return (probs * y * z).sum();
}

/// sup{E[YZ] : Y >= 0 on B, zero elsewhere, ES_b(-Y) <= ES_b(X*) for all b}
/// by LP over tail-average epigraphs on a working grid of levels, refined
/// with exactly violated levels until the optimum is feasible for every
/// level (kinks of both sides decide the full comparison).
double es_constructed_best_payoff(const AcceptanceSet& set, const Vec& z) {
  const OutcomeSpace& space = set.space();
  const Eigen::Index n = space.size();
  const Event region_b = set.event().complement();
  std::vector<Eigen::Index> bidx;
  for (Eigen::Index i = 0; i < n; ++i)
    if (region_b.contains(i)) bidx.push_back(i);
  if (bidx.empty()) return 0.0;

  const RandVar& xstar = set.es_bound();
  const DiscreteDist dstar = distribution_of(xstar);
  std::vector<double> grid = set.alpha_grid();
  for (double b : dstar.cum)
    if (b > 0.0 && b < 1.0) grid.push_back(b);
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const std::size_t nb = bidx.size();
  double best = 0.0;
  for (int round = 0; round < 12; ++round) {
    const std::size_t levels = grid.size();
    // Variables: y_1..y_nb, then per level: t+, t-, s_1..s_n.
    const std::size_t block = 2 + static_cast<std::size_t>(n);
    const std::size_t nvars = nb + levels * block;
    Simplex<double> lp(nvars, 1e-9);
    for (std::size_t l = 0; l < levels; ++l) {
      const double beta = grid[l];
      const std::size_t base = nb + l * block;
      // s_w >= y_w - t (y = 0 off the controlled region)
      for (Eigen::Index w = 0; w < n; ++w) {
        std::vector<double> row(nvars, 0.0);
        for (std::size_t j = 0; j < nb; ++j)
          if (bidx[j] == w) row[j] = 1.0;
        row[base] = -1.0;
        row[base + 1] = 1.0;
        row[base + 2 + static_cast<std::size_t>(w)] = -1.0;
        lp.add_le(std::move(row), 0.0);
      }
      // t + (1/beta) E[s] <= ES_beta(X*)
      std::vector<double> row(nvars, 0.0);
      row[base] = 1.0;
      row[base + 1] = -1.0;
      for (Eigen::Index w = 0; w < n; ++w)
        row[base + 2 + static_cast<std::size_t>(w)] = space.prob(w) / beta;
      lp.add_le(std::move(row), integrate_var(dstar, 0.0, beta) / beta);
    }
    std::vector<double> cost(nvars, 0.0);
    for (std::size_t j = 0; j < nb; ++j) cost[j] = -space.prob(bidx[j]) * z[bidx[j]];
    if (lp.minimize(cost) != LpStatus::kOptimal)
      throw Error("support function program did not solve");
    best = -lp.objective();

    // Exact feasibility scan of the candidate payoff profile.
    Vec y = Vec::Zero(n);
    for (std::size_t j = 0; j < nb; ++j) y[bidx[j]] = std::max(0.0, lp.solution()[j]);
    const RandVar candidate(space, (-y).eval());
    const DiscreteDist dc = distribution_of(candidate);
    std::vector<double> violated;
    auto scan = [&](double beta) {
      if (beta <= 0.0 || beta >= 1.0) return;
      const double gap =
          integrate_var(dstar, 0.0, beta) / beta - integrate_var(dc, 0.0, beta) / beta;
      if (gap < -1e-9) violated.push_back(beta);
    };
    for (double beta : dc.cum) scan(beta);
    for (double beta : dstar.cum) scan(beta);
    if (violated.empty()) return best;
    const std::size_t before = grid.size();
    grid.insert(grid.end(), violated.begin(), violated.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.size() == before) return best;  // numerically stuck at the kink
  }
  return best;
}

}  // namespace

SupportEvaluation support_function(const AcceptanceSet& set, const RandVar& z) {
  require_same_space(z.space(), set.space());
  if ((z.values() < 0.0).any())
    throw NegativeDualDirection("support function directions must be >= 0");
  const Vec& probs = set.space().probs();
  const Vec& zv = z.values();
  if (!(zv.maxCoeff() > 0.0)) return {z, 0.0};

  double sigma = 0.0;
  switch (set.family()) {
    case Family::kTestScenario: {
      // A cone: zero on directions carried by the stress scenarios, else
      // unbounded through the unconstrained region.
      bool outside = false;
      for (Eigen::Index i = 0; i < zv.size(); ++i)
        if (zv[i] > 0.0 && !set.event().contains(i)) outside = true;
      sigma = outside ? -kInf : 0.0;
      break;
    }
    case Family::kVaRLevel: {
      // Defaults are free on any atom of mass <= alpha.
      bool light = false;
      for (Eigen::Index i = 0; i < zv.size(); ++i)
        if (zv[i] > 0.0 && probs[i] <= set.alpha()) light = true;
      sigma = light ? -kInf : 0.0;
      break;
    }
    case Family::kExpectedShortfall: {
      // Cone case: sigma = 0 exactly on the scaled dual ball, i.e. when
      // alpha * max(Z) <= E[Z].
      const double mean = (probs * zv).sum();
      sigma = set.alpha() * zv.maxCoeff() <= mean ? 0.0 : -kInf;
      break;
    }
    case Family::kShortfall: {
      const LossFunction& ell = set.loss();
      const double c = set.threshold();
      if (ell.family() == LossFunction::Family::kPower) {
        const double p = ell.param();
        if (p == 1.0) {
          sigma = -c * zv.maxCoeff();
        } else {
          const double q = p / (p - 1.0);
          const double zq = (probs * zv.pow(q)).sum();
          sigma = -std::pow(c, 1.0 / p) * std::pow(zq, 1.0 / q);
        }
      } else {
        sigma = -shortfall_exponential_best_payoff(probs, zv, ell.param(), c);
      }
      break;
    }
    case Family::kExpectedTailLoss: {
      // The scaled dual: smallest multiplier with Z dominated by a tail
      // density; equals max(alpha*max(Z), E[Z]).
      const double mean = (probs * zv).sum();
      sigma = -set.threshold() * std::max(set.alpha() * zv.maxCoeff(), mean);
      break;
    }
    case Family::kEsConstructed:
      sigma = -es_constructed_best_payoff(set, zv);
      break;
    case Family::kPolyhedralSolid: {
      double m = kInf;
      for (const auto& g : set.generators()) m = std::min(m, (probs * g.values() * zv).sum());
      sigma = m;
      break;
    }
  }
  if (sigma > 0.0) sigma = 0.0;  // fp guard: the positive cone forces sigma <= 0
  return {z, sigma};
}

DualCheck dual_membership_check(const AcceptanceSet& set, const RandVar& x,
                                const std::vector<RandVar>& z_grid) {
  if (z_grid.empty()) throw SpecError("dual membership check needs a nonempty grid");
  DualCheck out;
  out.accepted = set.accepts(x);
  out.min_slack = kInf;
  const RandVar xneg = neg_part(x);
  for (const auto& z : z_grid) {
    const SupportEvaluation ev = support_function(set, z);
    ++out.checked;
    if (std::isinf(ev.sigma)) continue;  // -inf floor holds trivially
    const double lhs = -(set.space().probs() * xneg.values() * z.values()).sum();
    const double slack = lhs - ev.sigma;
    out.min_slack = std::min(out.min_slack, slack);
    if (slack < -kDualSlackTol) out.holds = false;
  }
  return out;
}

std::vector<RandVar> default_dual_grid(const OutcomeSpace& space, std::uint64_t seed) {
  const Eigen::Index n = space.size();
  std::vector<RandVar> grid;
  for (Eigen::Index i = 0; i < n; ++i)
    grid.push_back(indicator(Event::from_bits(space, std::uint64_t{1} << i)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      grid.push_back(
          indicator(Event::from_bits(space, (std::uint64_t{1} << i) | (std::uint64_t{1} << j))));
  grid.push_back(constant(space, 1.0));
  Rng rng(seed);
  for (int k = 0; k < 64; ++k) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = std::abs(rng.normal());
    grid.push_back(RandVar(space, std::move(v)));
  }
  return grid;
}

namespace {

std::optional<RandVar> polyhedral_separator(const AcceptanceSet& set, const Vec& xneg) {
  // Dual of the membership program:
  //   max_{y in simplex} sum_w y_w xneg_w + min_i sum_w y_w g_i(w)
  // A positive value certifies non-membership and y/p is the direction.
  const OutcomeSpace& space = set.space();
  const std::size_t n = static_cast<std::size_t>(space.size());
  Simplex<double> lp(n + 2, 1e-9);  // y, s = u - v
  for (const auto& g : set.generators()) {
    std::vector<double> row(n + 2, 0.0);
    for (std::size_t w = 0; w < n; ++w) row[w] = -g[static_cast<Eigen::Index>(w)];
    row[n] = 1.0;
    row[n + 1] = -1.0;
    lp.add_le(std::move(row), 0.0);
  }
  std::vector<double> simplex_row(n + 2, 0.0);
  for (std::size_t w = 0; w < n; ++w) simplex_row[w] = 1.0;
  lp.add_eq(std::move(simplex_row), 1.0);
  std::vector<double> cost(n + 2, 0.0);
  for (std::size_t w = 0; w < n; ++w) cost[w] = -xneg[static_cast<Eigen::Index>(w)];
  cost[n] = -1.0;
  cost[n + 1] = 1.0;
  if (lp.minimize(cost) != LpStatus::kOptimal) return std::nullopt;
  if (-lp.objective() <= kDualSlackTol) return std::nullopt;
  Vec z(space.size());
  for (std::size_t w = 0; w < n; ++w)
    z[static_cast<Eigen::Index>(w)] =
        std::max(0.0, lp.solution()[w]) / space.prob(static_cast<Eigen::Index>(w));
  return RandVar(space, std::move(z));
}

}  // namespace

std::optional<RandVar> separating_direction(const AcceptanceSet& set, const RandVar& x) {
  if (set.accepts(x)) return std::nullopt;
  const OutcomeSpace& space = set.space();
  const RandVar xneg = neg_part(x);
  std::vector<RandVar> candidates;
  switch (set.family()) {
    case Family::kShortfall: {
      const LossFunction& ell = set.loss();
      if (ell.family() == LossFunction::Family::kPower) {
        const double p = ell.param();
        candidates.push_back(p == 1.0 ? constant(space, 1.0)
                                      : xneg.with_values(xneg.values().pow(p - 1.0)));
      } else {
        candidates.push_back(xneg.with_values((ell.param() * xneg.values()).exp()));
      }
      break;
    }
    case Family::kExpectedTailLoss:
      candidates.push_back(es_dual_maximizer(xneg.with_values(-xneg.values()), set.alpha()));
      break;
    case Family::kTestScenario: {
      Eigen::Index worst = -1;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (set.event().contains(i) && (worst < 0 || x[i] < x[worst])) worst = i;
      if (worst >= 0)
        candidates.push_back(indicator(Event::from_bits(space, std::uint64_t{1} << worst)));
      break;
    }
    case Family::kEsConstructed: {
      Eigen::Index worst = -1;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (set.event().contains(i) && x[i] < 0.0 && (worst < 0 || x[i] < x[worst])) worst = i;
      if (worst >= 0)
        candidates.push_back(indicator(Event::from_bits(space, std::uint64_t{1} << worst)));
      const RandVar v = restrict(xneg, set.event().complement());
      const RandVar flipped = v.with_values(-v.values());
      for (double beta : var_breakpoints(flipped))
        candidates.push_back(es_dual_maximizer(flipped, beta));
      for (double beta : set.alpha_grid()) candidates.push_back(es_dual_maximizer(flipped, beta));
      break;
    }
    case Family::kPolyhedralSolid: {
      if (auto z = polyhedral_separator(set, xneg.values())) candidates.push_back(*z);
      break;
    }
    default:
      return std::nullopt;  // no dual certificate for the non-convex families
  }
  for (const auto& z : candidates) {
    const SupportEvaluation ev = support_function(set, z);
    if (std::isinf(ev.sigma)) continue;
    const double lhs = -(space.probs() * xneg.values() * z.values()).sum();
    if (lhs - ev.sigma < -kDualSlackTol) return z;
  }
  return std::nullopt;
}

}  // namespace surplex

#include "surplex/numeraire.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "surplex/parallel.hpp"

namespace surplex {

RescalingFactor::RescalingFactor(RandVar rate) : rate_(std::move(rate)) {
  if (!(rate_.values() > 0.0).all())
    throw SpecError("a rescaling factor must be strictly positive in every state");
}

namespace {

Vec sample_factor(Rng& rng, Eigen::Index n) {
  Vec r(n);
  switch (rng.uniform_index(4)) {
    case 0:  // per-atom log-uniform rates
      for (Eigen::Index i = 0; i < n; ++i) r[i] = rng.log_uniform(1e-3, 1e3);
      break;
    case 1:  // constant rate: the conical direction
      r.setConstant(rng.log_uniform(1e-3, 1e3));
      break;
    case 2: {  // rates vanishing on an event (localization direction)
      const std::uint64_t bits = rng.next_u64();
      for (Eigen::Index i = 0; i < n; ++i)
        r[i] = ((bits >> i) & 1u) ? rng.log_uniform(1e-2, 1e2) : 0.0;
      break;
    }
    default:  // plain indicator
      for (Eigen::Index i = 0; i < n; ++i) r[i] = double((rng.next_u64() >> i) & 1u);
      break;
  }
  return r;
}

}  // namespace

Verdict check_numeraire_invariance(const AcceptanceSet& set, const CheckBudget& budget) {
  const Eigen::Index n = set.space().size();
  const std::uint64_t samples = std::max<std::uint64_t>(1, budget.samples);
  const std::size_t shards = static_cast<std::size_t>(std::min<std::uint64_t>(64, samples));
  struct ShardResult {
    bool failed = false;
    std::vector<WitnessClaim> claims;
    std::string detail;
    std::uint64_t done = 0;
  };
  std::vector<ShardResult> results(shards);
  for_each_shard(shards, [&](std::size_t s) {
    ShardResult& res = results[s];
    const std::uint64_t quota = samples / shards + (s < samples % shards ? 1 : 0);
    Rng rng(Rng::split(budget.seed, s));
    for (std::uint64_t k = 0; k < quota; ++k) {
      const RandVar x = sample_member(set, rng);
      const Vec r = sample_factor(rng, n);
      const RandVar rx = x.with_values(r * x.values());
      ++res.done;
      if (!set.accepts(rx)) {
        res.failed = true;
        res.claims = {{x, true, "member"}, {rx, false, "member in the new currency"}};
        std::ostringstream d;
        d << "numeraire invariance violated by rate (";
        for (Eigen::Index i = 0; i < n; ++i) d << (i ? "," : "") << r[i];
        d << ")";
        res.detail = d.str();
        return;
      }
    }
  });
  Verdict v;
  for (auto& res : results) {
    v.checked += res.done;
    if (v.holds && res.failed) {
      v.holds = false;
      v.witness = std::move(res.claims);
      v.detail = std::move(res.detail);
    }
  }
  return v;
}

EquivalenceAudit equivalence_audit(const AcceptanceSet& set, const CheckBudget& budget) {
  EquivalenceAudit audit;
  audit.numeraire = check_numeraire_invariance(set, budget);
  audit.cone = check_cone(set, budget);
  audit.surplus = check_surplus_invariant(set, budget);
  audit.consistent = audit.numeraire.holds == (audit.cone.holds && audit.surplus.holds);

  // Exhibit the witness conversion across the two sides of the equivalence.
  if (!audit.cone.holds && audit.cone.witness.size() == 2) {
    // tX = RX for the constant rate R = t.
    audit.conversion = "cone witness doubles as a numeraire witness with a constant rate";
    audit.converted_witness = audit.cone.witness;
  } else if (!audit.surplus.holds && audit.surplus.witness.size() == 2) {
    audit.conversion =
        "surplus witness doubles as a numeraire witness with a vanishing/indicator rate";
    audit.converted_witness = audit.surplus.witness;
  } else if (!audit.numeraire.holds && audit.numeraire.witness.size() == 2) {
    // RX >= -max(R) X^-: walk the chain and report the first broken link.
    const RandVar& x = audit.numeraire.witness[0].position;
    const RandVar& rx = audit.numeraire.witness[1].position;
    const RandVar dropped = neg_part(x).with_values(-neg_part(x).values());
    Vec ratio = Vec::Ones(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) ratio[i] = rx[i] / x[i];
    const double t = std::max(1e-12, ratio.maxCoeff());
    const RandVar scaled = dropped.with_values(t * dropped.values());
    if (!set.accepts(dropped)) {
      audit.conversion = "numeraire witness converts to a surplus witness (default option exits)";
      audit.converted_witness = {{x, true, "member"}, {dropped, false, "default option"}};
    } else if (!set.accepts(scaled)) {
      audit.conversion = "numeraire witness converts to a cone witness (scaled default exits)";
      audit.converted_witness = {{dropped, true, "default option"}, {scaled, false, "scaled"}};
    } else {
      audit.conversion = "numeraire witness contradicts monotonicity (bug signal)";
      audit.converted_witness = {{scaled, true, "dominated member"}, {rx, false, "dominating"}};
    }
  }
  return audit;
}

std::string measure_name(Measure m) { return m == Measure::kVar ? "VaR" : "ES"; }

namespace {

double rho(Measure m, const RandVar& x, double alpha) {
  return m == Measure::kVar ? var(x, alpha) : es(x, alpha);
}

/// Single default of depth `d` at `omega` with just enough flat surplus
/// elsewhere to pass; the most surplus-fragile members the measure admits.
std::optional<RandVar> minimal_surplus_template(Measure m, double alpha,
                                                const OutcomeSpace& space, Eigen::Index omega,
                                                double d) {
  const Eigen::Index n = space.size();
  auto position = [&](double s) {
    Vec v = Vec::Constant(n, s);
    v[omega] = -d;
    return RandVar(space, v);
  };
  if (rho(m, position(0.0), alpha) <= 0.0) return position(0.0);
  double lo = 0.0, hi = 1.0;
  while (hi < 1e12 && rho(m, position(hi), alpha) > 0.0) hi *= 2.0;
  if (hi >= 1e12) return std::nullopt;  // no surplus rescues this default
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rho(m, position(mid), alpha) > 0.0 ? lo : hi) = mid;
  }
  return position(hi * (1.0 + 1e-9));
}

}  // namespace

std::optional<ArbitrageWitness> arbitrage_search(Measure measure, double alpha,
                                                 const RescalingFactor& rate,
                                                 const CheckBudget& budget) {
  require_alpha(alpha);
  const OutcomeSpace& space = rate.rate().space();
  const Eigen::Index n = space.size();
  const Vec& r = rate.rate().values();
  const AcceptanceSet set = measure == Measure::kVar
                                ? AcceptanceSet::var_level(space, alpha)
                                : AcceptanceSet::expected_shortfall(space, alpha);

  auto examine = [&](const RandVar& x) -> std::optional<ArbitrageWitness> {
    const double before = rho(measure, x, alpha);
    if (before <= 0.0) {
      const RandVar rx = x.with_values(r * x.values());
      const double after = rho(measure, rx, alpha);
      if (after > 0.0) return ArbitrageWitness{x, rx, before, after, measure, alpha, false};
    }
    const RandVar back = x.with_values(x.values() / r);
    const double rho_back = rho(measure, back, alpha);
    if (rho_back > 0.0 && before <= 0.0) {
      // x passes at home; back = x/r is the same position booked abroad.
      return ArbitrageWitness{back, x, rho_back, before, measure, alpha, true};
    }
    return std::nullopt;
  };

  // Deterministic templates first: surplus-minimal single-default members.
  for (Eigen::Index omega = 0; omega < n; ++omega) {
    for (double d : {1.0, 10.0}) {
      if (auto x = minimal_surplus_template(measure, alpha, space, omega, d))
        if (auto w = examine(*x)) return w;
    }
  }

  const std::uint64_t samples = std::max<std::uint64_t>(1, budget.samples);
  const std::size_t shards = static_cast<std::size_t>(std::min<std::uint64_t>(64, samples));
  std::vector<std::optional<ArbitrageWitness>> found(shards);
  for_each_shard(shards, [&](std::size_t s) {
    const std::uint64_t quota = samples / shards + (s < samples % shards ? 1 : 0);
    Rng rng(Rng::split(budget.seed, s));
    for (std::uint64_t k = 0; k < quota; ++k) {
      if (auto w = examine(sample_member(set, rng))) {
        found[s] = std::move(w);
        return;
      }
    }
  });
  for (auto& w : found)
    if (w) return w;
  return std::nullopt;
}

std::function<bool(const RandVar&)> translate_set(const AcceptanceSet& set,
                                                  const RescalingFactor& rate) {
  const Vec r = rate.rate().values();
  return [set, r](const RandVar& y) {
    return set.accepts(y.with_values(y.values() / r));
  };
}

}  // namespace surplex

#include <doctest.h>

#include <cmath>
#include <limits>

#include "surplex/structure.hpp"

using namespace surplex;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RandVar rv(const OutcomeSpace& s, std::initializer_list<double> vals) {
  Vec v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return RandVar(s, std::move(v));
}

}  // namespace

TEST_CASE("atom default caps against closed forms") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);

  // square shortfall: p d^2 <= c gives d = sqrt(c/p)
  const AcceptanceSet sq = AcceptanceSet::shortfall(u4, LossFunction::power(2.0), 1.0);
  for (Eigen::Index w = 0; w < 4; ++w)
    CHECK(atom_default_cap(sq, w) == doctest::Approx(2.0).epsilon(1e-9));
  const OutcomeSpace skew = OutcomeSpace::make((Vec(3) << 0.5, 0.3, 0.2).finished());
  const AcceptanceSet sq2 = AcceptanceSet::shortfall(skew, LossFunction::power(2.0), 0.8);
  for (Eigen::Index w = 0; w < 3; ++w)
    CHECK(atom_default_cap(sq2, w) ==
          doctest::Approx(std::sqrt(0.8 / skew.prob(w))).epsilon(1e-9));

  // exponential shortfall: p (e^{kd} - 1) <= c gives d = log(1 + c/p)/k
  const AcceptanceSet ex = AcceptanceSet::shortfall(u4, LossFunction::exponential(0.5), 1.0);
  for (Eigen::Index w = 0; w < 4; ++w)
    CHECK(atom_default_cap(ex, w) == doctest::Approx(std::log(5.0) / 0.5).epsilon(1e-9));

  // expected tail loss: d min(p,alpha)/alpha <= c gives d = c alpha / min(alpha, p)
  const AcceptanceSet etl = AcceptanceSet::expected_tail_loss(u4, 0.3, 1.0);
  for (Eigen::Index w = 0; w < 4; ++w)
    CHECK(atom_default_cap(etl, w) == doctest::Approx(1.2).epsilon(1e-9));

  // test scenarios and VaR levels are decided symbolically
  const AcceptanceSet ts = AcceptanceSet::test_scenario(Event::from_indices(u4, {0, 2}));
  CHECK(atom_default_cap(ts, 0) == 0.0);
  CHECK(atom_default_cap(ts, 1) == kInf);
  CHECK(atom_default_cap(ts, 2) == 0.0);
  const AcceptanceSet var_set = AcceptanceSet::var_level(u4, 0.3);
  for (Eigen::Index w = 0; w < 4; ++w) CHECK(atom_default_cap(var_set, w) == kInf);
  const AcceptanceSet var_tight = AcceptanceSet::var_level(u4, 0.2);
  for (Eigen::Index w = 0; w < 4; ++w) CHECK(atom_default_cap(var_tight, w) == 0.0);

  // polyhedral caps are vertex optima of the weight simplex
  std::vector<RandVar> gens{rv(u4, {-1.0, 0.0, 0.0, 0.0}), rv(u4, {-0.25, -2.0, 0.0, 0.0})};
  const AcceptanceSet poly = AcceptanceSet::polyhedral_solid(gens);
  CHECK(atom_default_cap(poly, 0) == 1.0);
  CHECK(atom_default_cap(poly, 1) == 2.0);
  CHECK(atom_default_cap(poly, 2) == 0.0);

  // expected shortfall allows no pure single-atom default
  const AcceptanceSet es_set = AcceptanceSet::expected_shortfall(u4, 0.3);
  for (Eigen::Index w = 0; w < 4; ++w) CHECK(atom_default_cap(es_set, w) == 0.0);
}

TEST_CASE("decompose the convex surplus-invariant families") {
  const CheckBudget budget{400, 7, 10};
  for (const auto& probs :
       {Vec(Vec::Constant(4, 0.25)), Vec((Vec(5) << 0.35, 0.3, 0.2, 0.1, 0.05).finished())}) {
    const OutcomeSpace s = OutcomeSpace::make(probs);

    const Decomposition sq =
        decompose(AcceptanceSet::shortfall(s, LossFunction::power(2.0), 1.0), 1e12, budget);
    CHECK(sq.partition.controlled().prob() == doctest::Approx(1.0));  // B is everything
    CHECK(sq.partition.no_default().empty());
    CHECK(sq.partition.unconstrained().empty());
    CHECK(sq.verified > 0);

    const Decomposition etl =
        decompose(AcceptanceSet::expected_tail_loss(s, 0.3, 1.0), 1e12, budget);
    CHECK(etl.partition.controlled().prob() == doctest::Approx(1.0));

    // scenarios: A = E, the complement is unconstrained
    const Event e = Event::from_indices(s, {0, 1});
    const Decomposition ts = decompose(AcceptanceSet::test_scenario(e), 1e12, budget);
    CHECK(ts.partition.no_default() == e);
    CHECK(ts.partition.controlled().empty());
    CHECK(ts.partition.unconstrained() == e.complement());
  }
}

TEST_CASE("decompose the constructed-ES family") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  const AcceptanceSet set =
      AcceptanceSet::es_constructed(Event::from_indices(u4, {0}), constant(u4, -1.0));
  const Decomposition dec = decompose(set, 1e12, {400, 11, 10});
  CHECK(dec.partition.no_default() == Event::from_indices(u4, {0}));
  CHECK(dec.partition.controlled() == Event::from_indices(u4, {1, 2, 3}));
  // cap on B: d min(p,b)/b <= ES_b(-1) = 1 for all b forces d <= 1
  for (int w : {1, 2, 3}) CHECK(dec.partition.caps()[w] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("decompose the polyhedral family") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  std::vector<RandVar> gens{rv(u4, {-1.0, 0.0, 0.0, 0.0}), rv(u4, {0.0, -2.0, 0.0, 0.0})};
  const Decomposition dec = decompose(AcceptanceSet::polyhedral_solid(gens), 1e12, {300, 13, 10});
  CHECK(dec.partition.no_default() == Event::from_indices(u4, {2, 3}));
  CHECK(dec.partition.controlled() == Event::from_indices(u4, {0, 1}));
  CHECK(dec.partition.caps()[0] == 1.0);
  CHECK(dec.partition.caps()[1] == 2.0);
}

TEST_CASE("decompose rejects the non-structural families") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  const AcceptanceSet var_set = AcceptanceSet::var_level(u4, 0.3);
  bool threw = false;
  try {
    decompose(var_set, 1e12, {200, 17, 10});
  } catch (const DecompositionFailure& e) {
    threw = true;
    // the witness replays: actual membership really disagrees with the caps
    CHECK(var_set.accepts(e.position) == e.actual_accept);
    CHECK(e.actual_accept != e.predicted_accept);
  }
  CHECK(threw);

  CHECK_THROWS_AS(decompose(AcceptanceSet::expected_shortfall(u4, 0.3), 1e12, {200, 19, 10}),
                  DecompositionMismatch);
}

TEST_CASE("partition invariants") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  Vec caps(4);
  caps << 0.0, 1.0, kInf, kInf;
  const Partition p(Event::from_indices(u4, {0}), Event::from_indices(u4, {1}),
                    Event::from_indices(u4, {2, 3}), caps);
  CHECK(p.no_default().prob() == doctest::Approx(0.25));

  // overlapping classes, mismatched caps, and an all-unconstrained space
  CHECK_THROWS_AS(Partition(Event::from_indices(u4, {0, 1}), Event::from_indices(u4, {1}),
                            Event::from_indices(u4, {2, 3}), caps),
                  SpecError);
  Vec bad = caps;
  bad[0] = 0.5;
  CHECK_THROWS_AS(Partition(Event::from_indices(u4, {0}), Event::from_indices(u4, {1}),
                            Event::from_indices(u4, {2, 3}), bad),
                  SpecError);
  CHECK_THROWS_AS(Partition(Event::none(u4), Event::none(u4), Event::full(u4),
                            Vec::Constant(4, kInf)),
                  PCFull);
}

TEST_CASE("recession membership") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  const AcceptanceSet sq = AcceptanceSet::shortfall(u4, LossFunction::power(2.0), 1.0);
  CHECK(recession_membership(sq, rv(u4, {0.0, 1.0, 2.0, 3.0})));
  CHECK(!recession_membership(sq, rv(u4, {-1.0, 2.0, 3.0, 4.0})));

  const AcceptanceSet ts = AcceptanceSet::test_scenario(Event::from_indices(u4, {0, 1}));
  CHECK(recession_membership(ts, rv(u4, {0.0, 0.0, -1.0, -1.0})));
  CHECK(!recession_membership(ts, rv(u4, {-0.001, 0.0, 0.0, 0.0})));

  CHECK(default_ray_grid().size() == 41);
  CHECK(default_ray_grid().front() == 1.0);
  CHECK(default_ray_grid().back() == std::ldexp(1.0, 40));
}

TEST_CASE("coherent scenario extraction") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  const CheckBudget budget{400, 23, 10};
  const Event e = Event::from_indices(u4, {1, 3});
  CHECK(coherent_scenario_set(AcceptanceSet::test_scenario(e), budget) == e);
  // the positive cone is the full-space scenario test
  CHECK(coherent_scenario_set(AcceptanceSet::test_scenario(Event::full(u4)), budget) ==
        Event::full(u4));
  CHECK_THROWS_AS(
      coherent_scenario_set(AcceptanceSet::shortfall(u4, LossFunction::power(2.0), 1.0), budget),
      NotCoherent);
}

TEST_CASE("support function closed forms") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  const AcceptanceSet sq = AcceptanceSet::shortfall(u4, LossFunction::power(2.0), 1.0);
  CHECK(support_function(sq, constant(u4, 1.0)).sigma == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(support_function(sq, indicator(Event::from_indices(u4, {0}))).sigma ==
        doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(support_function(sq, constant(u4, 0.0)).sigma == 0.0);
  CHECK_THROWS_AS(support_function(sq, rv(u4, {-0.1, 1.0, 0.0, 0.0})), NegativeDualDirection);

  const AcceptanceSet ts = AcceptanceSet::test_scenario(Event::from_indices(u4, {0, 1}));
  CHECK(support_function(ts, indicator(Event::from_indices(u4, {0}))).sigma == 0.0);
  CHECK(std::isinf(support_function(ts, indicator(Event::from_indices(u4, {2}))).sigma));

  // ETL: -c max(alpha max Z, E[Z])
  const AcceptanceSet etl = AcceptanceSet::expected_tail_loss(u4, 0.3, 1.0);
  CHECK(support_function(etl, constant(u4, 1.0)).sigma == doctest::Approx(-1.0));
  CHECK(support_function(etl, indicator(Event::from_indices(u4, {0}))).sigma ==
        doctest::Approx(-0.3));
  CHECK(support_function(etl, indicator(Event::from_indices(u4, {0, 1}))).sigma ==
        doctest::Approx(-0.5));

  // VaR level: 0 on heavy atoms, unbounded through any light atom
  const OutcomeSpace skew = OutcomeSpace::make((Vec(3) << 0.5, 0.3, 0.2).finished());
  const AcceptanceSet var_set = AcceptanceSet::var_level(skew, 0.3);
  CHECK(support_function(var_set, indicator(Event::from_indices(skew, {0}))).sigma == 0.0);
  CHECK(std::isinf(support_function(var_set, indicator(Event::from_indices(skew, {1}))).sigma));

  // ES cone: zero exactly when alpha max Z <= E[Z]
  const OutcomeSpace half = OutcomeSpace::make((Vec(2) << 0.4, 0.6).finished());
  const AcceptanceSet es_set = AcceptanceSet::expected_shortfall(half, 0.5);
  CHECK(support_function(es_set, constant(half, 1.0)).sigma == 0.0);
  CHECK(std::isinf(support_function(es_set, indicator(Event::from_indices(half, {0}))).sigma));
  CHECK(support_function(es_set, indicator(Event::from_indices(half, {1}))).sigma == 0.0);

  // polyhedral: worst generator
  std::vector<RandVar> gens{rv(u4, {-1.0, 0.0, 0.0, 0.0}), rv(u4, {0.0, -2.0, 0.0, 0.0})};
  const AcceptanceSet poly = AcceptanceSet::polyhedral_solid(gens);
  CHECK(support_function(poly, constant(u4, 1.0)).sigma == doctest::Approx(-0.5));
  CHECK(support_function(poly, indicator(Event::from_indices(u4, {1}))).sigma ==
        doctest::Approx(-0.5));
}

TEST_CASE("support function is the sampled infimum") {
  // sigma(Z) <= E[XZ] for every member, with near-equality at the minimizer
  const OutcomeSpace s = OutcomeSpace::make((Vec(4) << 0.4, 0.3, 0.2, 0.1).finished());
  std::vector<AcceptanceSet> sets;
  sets.push_back(AcceptanceSet::shortfall(s, LossFunction::power(2.0), 1.0));
  sets.push_back(AcceptanceSet::shortfall(s, LossFunction::power(1.0), 1.0));
  sets.push_back(AcceptanceSet::shortfall(s, LossFunction::power(3.0), 2.0));
  sets.push_back(AcceptanceSet::shortfall(s, LossFunction::exponential(0.7), 1.5));
  sets.push_back(AcceptanceSet::expected_tail_loss(s, 0.3, 1.0));
  sets.push_back(AcceptanceSet::es_constructed(Event::from_indices(s, {0}),
                                               rv(s, {0.0, -1.0, -2.0, -1.0})));
  Rng rng(301);
  for (const auto& set : sets) {
    for (int zi = 0; zi < 6; ++zi) {
      Vec z(4);
      for (int i = 0; i < 4; ++i) z[i] = std::abs(rng.normal());
      const double sigma = support_function(set, RandVar(s, z)).sigma;
      CHECK(sigma <= 1e-9);
      double best = 0.0;  // X = 0 is always a member
      for (int k = 0; k < 4000; ++k) {
        const RandVar x = sample_member(set, rng);
        best = std::min(best, (s.probs() * x.values() * z).sum());
        CHECK(sigma <= best + 1e-7 * std::max(1.0, std::abs(best)));
      }
      // the sampled infimum should come close to sigma for these budgets
      CHECK(best <= sigma + 0.35 * std::max(1.0, std::abs(sigma)));
    }
  }
}

TEST_CASE("support function is superlinear and homogeneous") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  std::vector<AcceptanceSet> sets;
  sets.push_back(AcceptanceSet::shortfall(u4, LossFunction::power(2.0), 1.0));
  sets.push_back(AcceptanceSet::expected_tail_loss(u4, 0.3, 1.0));
  sets.push_back(AcceptanceSet::test_scenario(Event::from_indices(u4, {0, 1})));
  sets.push_back(AcceptanceSet::polyhedral_solid(
      {rv(u4, {-1.0, -0.5, 0.0, 0.0}), rv(u4, {0.0, -2.0, -0.25, 0.0})}));
  Rng rng(307);
  for (const auto& set : sets) {
    for (int k = 0; k < 200; ++k) {
      Vec z1(4), z2(4);
      for (int i = 0; i < 4; ++i) {
        z1[i] = std::abs(rng.normal());
        z2[i] = std::abs(rng.normal());
      }
      const double s1 = support_function(set, RandVar(u4, z1)).sigma;
      const double s2 = support_function(set, RandVar(u4, z2)).sigma;
      const double s12 = support_function(set, RandVar(u4, z1 + z2)).sigma;
      if (std::isfinite(s1) && std::isfinite(s2)) CHECK(s12 >= s1 + s2 - 1e-9);
      const double t = rng.log_uniform(0.1, 10.0);
      const double st = support_function(set, RandVar(u4, t * z1)).sigma;
      if (std::isfinite(s1))
        CHECK(st == doctest::Approx(t * s1).epsilon(1e-9));
      else
        CHECK(std::isinf(st));
    }
  }
}

TEST_CASE("coherent families have a zero support function on the barrier cone") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  const AcceptanceSet ts = AcceptanceSet::test_scenario(Event::from_indices(u4, {0, 1}));
  Rng rng(311);
  for (int k = 0; k < 200; ++k) {
    Vec z(4);
    for (int i = 0; i < 4; ++i) z[i] = std::abs(rng.normal());
    const double sigma = support_function(ts, RandVar(u4, z)).sigma;
    CHECK((sigma == 0.0 || std::isinf(sigma)));
  }
}

TEST_CASE("dual membership check") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  const AcceptanceSet sq = AcceptanceSet::shortfall(u4, LossFunction::power(2.0), 1.0);
  const auto grid = default_dual_grid(u4);

  // members satisfy every inequality
  Rng rng(313);
  for (int k = 0; k < 200; ++k) {
    const DualCheck dc = dual_membership_check(sq, sample_member(sq, rng), grid);
    CHECK(dc.accepted);
    CHECK(dc.holds);
    CHECK(dc.min_slack >= -1e-9);
  }

  // the frozen violated direction: -E[X^- 1_w1] = -0.75 < sigma = -0.5
  const RandVar bad = rv(u4, {-3.0, 0.0, 0.0, 0.0});
  const DualCheck dc = dual_membership_check(sq, bad, grid);
  CHECK(!dc.accepted);
  CHECK(!dc.holds);
  CHECK(dc.min_slack <= -0.25 + 1e-9);

  CHECK_THROWS_AS(dual_membership_check(sq, bad, {}), SpecError);
  CHECK_THROWS_AS(dual_membership_check(sq, bad, {rv(u4, {-1.0, 0.0, 0.0, 0.0})}),
                  NegativeDualDirection);
}

TEST_CASE("default dual grid composition") {
  const OutcomeSpace u4 = OutcomeSpace::uniform(4);
  const auto grid = default_dual_grid(u4, 5);
  CHECK(grid.size() == 4 + 6 + 1 + 64);
  for (const auto& z : grid) CHECK((z.values() >= 0.0).all());
}

TEST_CASE("separating directions certify non-membership") {
  const OutcomeSpace s = OutcomeSpace::make((Vec(4) << 0.4, 0.3, 0.2, 0.1).finished());
  std::vector<AcceptanceSet> sets;
  sets.push_back(AcceptanceSet::shortfall(s, LossFunction::power(2.0), 1.0));
  sets.push_back(AcceptanceSet::shortfall(s, LossFunction::power(1.0), 0.5));
  sets.push_back(AcceptanceSet::shortfall(s, LossFunction::exponential(1.0), 1.0));
  sets.push_back(AcceptanceSet::expected_tail_loss(s, 0.3, 1.0));
  sets.push_back(AcceptanceSet::test_scenario(Event::from_indices(s, {0, 1})));
  sets.push_back(AcceptanceSet::polyhedral_solid(
      {single_atom_default(s, 0, 1.0), single_atom_default(s, 1, 2.0)}));
  Rng rng(317);
  for (const auto& set : sets) {
    int separated = 0, nonmembers = 0;
    for (int k = 0; k < 500; ++k) {
      Vec v(4);
      for (int i = 0; i < 4; ++i) v[i] = 2.0 * rng.normal();
      const RandVar x(s, v);
      if (set.accepts(x)) {
        CHECK(!separating_direction(set, x).has_value());
        continue;
      }
      ++nonmembers;
      if (const auto z = separating_direction(set, x)) {
        ++separated;
        // the direction genuinely violates the dual inequality
        const double sigma = support_function(set, *z).sigma;
        REQUIRE(std::isfinite(sigma));
        const double lhs = -(s.probs() * neg_part(x).values() * z->values()).sum();
        CHECK(lhs < sigma - 1e-9);
      }
    }
    REQUIRE(nonmembers > 50);
    // the convex families admit an exact separator for every non-member
    CHECK(separated == nonmembers);
  }
}

TEST_CASE("polyhedral primal and dual programs agree") {
  const OutcomeSpace s = OutcomeSpace::make((Vec(4) << 0.4, 0.3, 0.2, 0.1).finished());
  const AcceptanceSet poly = AcceptanceSet::polyhedral_solid(
      {rv(s, {-1.0, -0.5, 0.0, 0.0}), rv(s, {0.0, -2.0, -0.25, 0.0})});
  Rng rng(331);
  for (int k = 0; k < 300; ++k) {
    Vec v(4);
    for (int i = 0; i < 4; ++i) v[i] = 1.5 * rng.normal();
    const RandVar x(s, v);
    const bool member = poly.accepts(x);
    const auto z = separating_direction(poly, x);
    CHECK(member == !z.has_value());
  }
}

#include "surplex/risk_measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace surplex {

LossFunction LossFunction::power(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw SpecError("power loss needs exponent p >= 1");
  return LossFunction(Family::kPower, p);
}

LossFunction LossFunction::exponential(double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw SpecError("exponential loss needs rate k > 0");
  return LossFunction(Family::kExponential, k);
}

double LossFunction::operator()(double x) const {
  switch (family_) {
    case Family::kPower:
      return std::pow(x, param_);
    case Family::kExponential:
      return std::expm1(param_ * x);
  }
  return 0.0;
}

double LossFunction::inverse(double y) const {
  switch (family_) {
    case Family::kPower:
      return std::pow(y, 1.0 / param_);
    case Family::kExponential:
      return std::log1p(y) / param_;
  }
  return 0.0;
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw AlphaOutOfRange("alpha must lie in (0,1), got " + std::to_string(alpha));
}

DiscreteDist distribution_of(const RandVar& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });

  DiscreteDist d;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = order[static_cast<std::size_t>(k)];
    if (d.values.empty() || x[i] != d.values.back()) d.values.push_back(x[i]);
  }
  // Each cumulative mass is an index-ordered sum over its sublevel set, the
  // same order cdf() uses, so equal sublevel sets produce bit-equal doubles
  // and threshold comparisons across code paths stay consistent.
  d.cum.resize(d.values.size());
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (x[i] <= d.values[k]) acc += x.space().prob(i);
    d.cum[k] = acc;
  }
  d.cum.back() = 1.0;  // kill summation drift at the top
  return d;
}

double var(const DiscreteDist& d, double alpha) {
  require_alpha(alpha);
  for (std::size_t k = 0; k < d.cum.size(); ++k)
    if (d.cum[k] > alpha) return -d.values[k];
  return -d.values.back();
}

double var(const RandVar& x, double alpha) { return var(distribution_of(x), alpha); }

double integrate_var(const DiscreteDist& d, double a, double b) {
  a = std::max(a, 0.0);
  b = std::min(b, 1.0);
  if (!(a < b)) return 0.0;
  // VaR_beta = -values[k] on [cum[k-1], cum[k]).
  double total = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < d.cum.size(); ++k) {
    const double lo = std::max(prev, a);
    const double hi = std::min(d.cum[k], b);
    if (hi > lo) total += -d.values[k] * (hi - lo);
    prev = d.cum[k];
    if (prev >= b) break;
  }
  return total;
}

double integrate_var(const RandVar& x, double a, double b) {
  return integrate_var(distribution_of(x), a, b);
}

double es(const DiscreteDist& d, double alpha) {
  require_alpha(alpha);
  return integrate_var(d, 0.0, alpha) / alpha;
}

double es(const RandVar& x, double alpha) { return es(distribution_of(x), alpha); }

double expected_tail_loss(const RandVar& x, double alpha) {
  require_alpha(alpha);
  const RandVar default_option = neg_part(x);
  return es(default_option.with_values(-default_option.values()), alpha);
}

EsSplit es_split(const RandVar& x, double alpha) {
  require_alpha(alpha);
  const double p_default = cdf_strict(x, 0.0);
  if (p_default > alpha) return {es(x, alpha), 0.0};
  const RandVar down = neg_part(x);
  const double left = integrate_var(down.with_values(-down.values()), 0.0, p_default) / alpha;
  const double right = integrate_var(pos_part(x), p_default, alpha) / alpha;
  return {left, right};
}

double shortfall_risk(const RandVar& x, const LossFunction& ell) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    total += x.space().prob(i) * ell(std::max(-x[i], 0.0));
  return total;
}

double lower_quantile(const RandVar& x, double alpha) {
  require_alpha(alpha);
  const DiscreteDist d = distribution_of(x);
  for (std::size_t k = 0; k < d.cum.size(); ++k)
    if (d.cum[k] >= alpha) return d.values[k];
  return d.values.back();
}

RandVar es_dual_maximizer(const RandVar& x, double alpha) {
  require_alpha(alpha);
  const double q = lower_quantile(x, alpha);
  const double p_below = cdf_strict(x, q);
  const double p_at = cdf(x, q) - p_below;
  // q is the lower quantile, so p_below < alpha <= p_below + p_at and kappa
  // lands in [0,1].
  const double kappa = (alpha - p_below) / p_at;
  Vec z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < q)
      z[i] = 1.0 / alpha;
    else if (x[i] == q)
      z[i] = kappa / alpha;
    else
      z[i] = 0.0;
  }
  return RandVar(x.space(), std::move(z));
}

std::vector<double> var_breakpoints(const RandVar& x) {
  const DiscreteDist d = distribution_of(x);
  std::vector<double> out;
  for (double c : d.cum)
    if (c > 0.0 && c < 1.0) out.push_back(c);
  return out;
}

}  // namespace surplex

#pragma once

#include <utility>
#include <vector>

#include "surplex/prob_core.hpp"

namespace surplex {

/// Loss function for shortfall-risk acceptance: increasing, convex, l(0)=0.
/// Restricted to two analytic families so inverses and conjugates stay in
/// closed form.
class LossFunction {
 public:
  enum class Family { kPower, kExponential };

  /// l(x) = x^p, p >= 1.
  static LossFunction power(double p);
  /// l(x) = exp(k*x) - 1, k > 0.
  static LossFunction exponential(double k);

  double operator()(double x) const;
  /// Inverse on [0,inf).
  double inverse(double y) const;

  Family family() const { return family_; }
  double param() const { return param_; }

 private:
  LossFunction(Family f, double p) : family_(f), param_(p) {}
  Family family_;
  double param_;
};

/// Sorted one-dimensional distribution: strictly increasing distinct values
/// with cumulative probabilities, cum.back() == 1. The common backend for
/// quantile-based functionals of positions and of step CDFs.
struct DiscreteDist {
  std::vector<double> values;
  std::vector<double> cum;
};

DiscreteDist distribution_of(const RandVar& x);

/// min{t : P(X < -t) <= alpha}; the infimum in the usual definition is
/// attained on finite spaces. Equals -values[k] for the first k with
/// cum[k] > alpha.
double var(const DiscreteDist& d, double alpha);
double var(const RandVar& x, double alpha);

/// Exact integral of the piecewise-constant map beta -> VaR_beta(X) over
/// [a,b] within [0,1].
double integrate_var(const DiscreteDist& d, double a, double b);
double integrate_var(const RandVar& x, double a, double b);

/// (1/alpha) * integral of VaR_beta over (0,alpha].
double es(const DiscreteDist& d, double alpha);
double es(const RandVar& x, double alpha);

/// ES applied to the default option only: es(-neg_part(X), alpha).
double expected_tail_loss(const RandVar& x, double alpha);

/// The two summands of the ES decomposition across P(X<0): default-option
/// term and surplus term. When P(X<0) <= alpha, left + right == es(X,alpha)
/// up to 1e-12; when P(X<0) > alpha the surplus term is empty by convention
/// and (es(X,alpha), 0) is returned.
struct EsSplit {
  double left;
  double right;
};
EsSplit es_split(const RandVar& x, double alpha);

/// E[l(X^-)].
double shortfall_risk(const RandVar& x, const LossFunction& ell);

/// Lower alpha-quantile: smallest q with P(X <= q) >= alpha.
double lower_quantile(const RandVar& x, double alpha);

/// The maximizer Z* = (1/alpha)(1_{X<q} + kappa 1_{X=q}) of E[-XZ] over
/// Q_alpha = {0 <= Z <= 1/alpha, E[Z]=1}, with q the lower alpha-quantile and
/// kappa in [0,1] solving E[Z*]=1.
RandVar es_dual_maximizer(const RandVar& x, double alpha);

/// Cumulative probabilities of the sorted atoms (the breakpoints of
/// beta -> VaR_beta), interior points only, i.e. values in (0,1).
std::vector<double> var_breakpoints(const RandVar& x);

void require_alpha(double alpha);

}  // namespace surplex

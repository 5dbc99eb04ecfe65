#include "surplex/prob_core.hpp"

#include <cmath>
#include <sstream>

namespace surplex {

OutcomeSpace OutcomeSpace::make(const Vec& probs, bool normalize) {
  if (probs.size() == 0) throw ProbabilitySumMismatch("outcome space needs at least one atom");
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0) || !std::isfinite(probs[i])) {
      std::ostringstream msg;
      msg << "probability " << probs[i] << " at outcome " << i << " is not strictly positive";
      throw NonPositiveProbability(msg.str());
    }
  }
  const double sum = probs.sum();
  if (!normalize && std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "probabilities sum to " << sum << ", not 1 (pass normalize to rescale)";
    throw ProbabilitySumMismatch(msg.str());
  }
  return OutcomeSpace(std::make_shared<const Vec>(probs / sum));
}

OutcomeSpace OutcomeSpace::uniform(Eigen::Index n) {
  return make(Vec::Constant(n, 1.0 / static_cast<double>(n)), true);
}

RandVar::RandVar(OutcomeSpace space, Vec values) : space_(std::move(space)), values_(std::move(values)) {
  if (values_.size() != space_.size())
    throw SpaceMismatch("position has " + std::to_string(values_.size()) + " values on a " +
                        std::to_string(space_.size()) + "-atom space");
  if (!values_.isFinite().all()) throw NonFiniteValue("position values must be finite");
}

Event::Event(OutcomeSpace space, Mask mask) : space_(std::move(space)), mask_(std::move(mask)) {
  if (mask_.size() != space_.size()) throw SpaceMismatch("event mask length does not match space");
}

Event Event::full(const OutcomeSpace& space) {
  return Event(space, Mask::Constant(space.size(), true));
}

Event Event::none(const OutcomeSpace& space) {
  return Event(space, Mask::Constant(space.size(), false));
}

Event Event::from_indices(const OutcomeSpace& space, const std::vector<int>& indices) {
  Mask m = Mask::Constant(space.size(), false);
  for (int i : indices) {
    if (i < 0 || i >= space.size())
      throw SpecError("event index " + std::to_string(i) + " out of range");
    m[i] = true;
  }
  return Event(space, m);
}

Event Event::from_bits(const OutcomeSpace& space, std::uint64_t bits) {
  Mask m = Mask::Constant(space.size(), false);
  for (Eigen::Index i = 0; i < space.size(); ++i) m[i] = (bits >> i) & 1u;
  return Event(space, m);
}

double Event::prob() const {
  return (space_.probs() * mask_.cast<double>()).sum();
}

Event Event::complement() const { return Event(space_, !mask_); }

std::vector<int> Event::indices() const {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < mask_.size(); ++i)
    if (mask_[i]) out.push_back(static_cast<int>(i));
  return out;
}

void require_same_space(const OutcomeSpace& a, const OutcomeSpace& b) {
  if (!a.same_as(b)) throw SpaceMismatch("positions live on different outcome spaces");
}

void require_same_space(const RandVar& a, const RandVar& b) {
  require_same_space(a.space(), b.space());
}

void require_same_space(const RandVar& a, const Event& b) {
  require_same_space(a.space(), b.space());
}

RandVar constant(const OutcomeSpace& space, double value) {
  return RandVar(space, Vec::Constant(space.size(), value));
}

RandVar indicator(const Event& e) {
  return RandVar(e.space(), e.mask().cast<double>());
}

RandVar single_atom_default(const OutcomeSpace& space, Eigen::Index omega, double depth) {
  Vec v = Vec::Zero(space.size());
  v[omega] = -depth;
  return RandVar(space, std::move(v));
}

RandVar pos_part(const RandVar& x) { return x.with_values(x.values().max(0.0)); }

RandVar neg_part(const RandVar& x) { return x.with_values((-x.values()).max(0.0)); }

RandVar restrict(const RandVar& x, const Event& e) {
  require_same_space(x, e);
  return x.with_values(x.values() * e.mask().cast<double>());
}

double expectation(const RandVar& x) {
  return (x.space().probs() * x.values()).sum();
}

double cdf(const RandVar& x, double t) {
  return (x.space().probs() * (x.values() <= t).cast<double>()).sum();
}

double cdf_strict(const RandVar& x, double t) {
  return (x.space().probs() * (x.values() < t).cast<double>()).sum();
}

bool dominates_ae(const RandVar& x, const RandVar& y) {
  require_same_space(x, y);
  return (x.values() >= y.values()).all();
}

}  // namespace surplex

#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "surplex/errors.hpp"

namespace surplex {

using Vec = Eigen::ArrayXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Finite probability space: one atom per outcome, all atoms carry strictly
/// positive mass summing to one. Copies share the probability vector, so a
/// space is cheap to pass by value; identity is "same vector object or equal
/// probabilities".
class OutcomeSpace {
 public:
  /// Builds a space from raw probabilities. Entries must be > 0. Without
  /// `normalize` the sum must match 1 within 1e-9; the stored copy is always
  /// rescaled to sum exactly to 1.
  static OutcomeSpace make(const Vec& probs, bool normalize = false);
  static OutcomeSpace uniform(Eigen::Index n);

  Eigen::Index size() const { return static_cast<Eigen::Index>(probs_->size()); }
  const Vec& probs() const { return *probs_; }
  double prob(Eigen::Index i) const { return (*probs_)[i]; }

  bool same_as(const OutcomeSpace& other) const {
    if (probs_ == other.probs_) return true;
    return probs_->size() == other.probs_->size() && (*probs_ == *other.probs_).all();
  }

 private:
  explicit OutcomeSpace(std::shared_ptr<const Vec> p) : probs_(std::move(p)) {}
  std::shared_ptr<const Vec> probs_;
};

/// A capital position: one finite value per outcome.
class RandVar {
 public:
  RandVar(OutcomeSpace space, Vec values);

  const Vec& values() const { return values_; }
  const OutcomeSpace& space() const { return space_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

  /// Same values, new expression; keeps the space binding.
  RandVar with_values(Vec v) const { return RandVar(space_, std::move(v)); }

 private:
  OutcomeSpace space_;
  Vec values_;
};

/// A measurable set of outcomes.
class Event {
 public:
  Event(OutcomeSpace space, Mask mask);
  static Event full(const OutcomeSpace& space);
  static Event none(const OutcomeSpace& space);
  static Event from_indices(const OutcomeSpace& space, const std::vector<int>& indices);
  /// Event with mask given by the bits of `bits` (outcome i in iff bit i set).
  static Event from_bits(const OutcomeSpace& space, std::uint64_t bits);

  const Mask& mask() const { return mask_; }
  const OutcomeSpace& space() const { return space_; }
  bool contains(Eigen::Index i) const { return mask_[i]; }
  bool empty() const { return !mask_.any(); }
  double prob() const;
  Event complement() const;
  std::vector<int> indices() const;

  bool operator==(const Event& other) const {
    return space_.same_as(other.space_) && (mask_ == other.mask_).all();
  }

 private:
  OutcomeSpace space_;
  Mask mask_;
};

void require_same_space(const OutcomeSpace& a, const OutcomeSpace& b);
void require_same_space(const RandVar& a, const RandVar& b);
void require_same_space(const RandVar& a, const Event& b);

RandVar constant(const OutcomeSpace& space, double value);
RandVar indicator(const Event& e);
/// -d on the single outcome `omega`, zero elsewhere.
RandVar single_atom_default(const OutcomeSpace& space, Eigen::Index omega, double depth);

/// X+ = max(X,0) pointwise.
RandVar pos_part(const RandVar& x);
/// X- = max(-X,0) pointwise, so X = pos_part(X) - neg_part(X) exactly.
RandVar neg_part(const RandVar& x);
/// Value kept inside the event, zero outside.
RandVar restrict(const RandVar& x, const Event& e);

double expectation(const RandVar& x);
/// P(X <= t).
double cdf(const RandVar& x, double t);
/// P(X < t).
double cdf_strict(const RandVar& x, double t);
/// True iff X >= Y at every outcome (all atoms carry positive mass).
bool dominates_ae(const RandVar& x, const RandVar& y);

}  // namespace surplex

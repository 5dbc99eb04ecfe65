#pragma once

#include <cstddef>
#include <vector>

#include "surplex/errors.hpp"

namespace surplex {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

/// Dense two-phase simplex over x >= 0 with <= and == rows, Bland's rule.
/// Scalar is double (tolerance 1e-9) or an exact rational type (tolerance 0),
/// which is how small polyhedral membership questions get decided exactly.
template <typename Scalar>
class Simplex {
 public:
  explicit Simplex(std::size_t num_vars, Scalar tol) : n_(num_vars), tol_(tol) {}

  void add_le(std::vector<Scalar> row, Scalar rhs) { add_row(std::move(row), rhs, false); }
  void add_eq(std::vector<Scalar> row, Scalar rhs) { add_row(std::move(row), rhs, true); }

  /// Minimizes c over the accumulated rows. On kOptimal, solution() and
  /// objective() are valid.
  LpStatus minimize(const std::vector<Scalar>& c) {
    build_tableau();
    if (!run_phase(phase1_costs(), true)) throw Error("simplex iteration cap hit in phase 1");
    // Feasibility residue scales with the data; keep the test relative.
    if (obj_value() > tol_ * rhs_scale_) return LpStatus::kInfeasible;
    std::vector<Scalar> full_costs(total_cols(), Scalar(0));
    for (std::size_t j = 0; j < n_; ++j) full_costs[j] = c[j];
    if (!run_phase(full_costs, false)) return LpStatus::kUnbounded;
    extract_solution(c);
    return LpStatus::kOptimal;
  }

  const std::vector<Scalar>& solution() const { return x_; }
  Scalar objective() const { return objective_; }

 private:
  void add_row(std::vector<Scalar> row, Scalar rhs, bool eq) {
    if (row.size() != n_) throw Error("lp row width mismatch");
    rows_.push_back(std::move(row));
    rhs_.push_back(rhs);
    eq_.push_back(eq);
  }

  std::size_t total_cols() const { return n_ + num_slack_ + num_art_; }

  static Scalar sabs(const Scalar& v) { return v < Scalar(0) ? Scalar(-v) : v; }

  void build_tableau() {
    const std::size_t m = rows_.size();
    // Normalize signs so every rhs is nonnegative; a <= row keeps its slack
    // (coefficient flips with the row), an == row always takes an artificial.
    num_slack_ = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (!eq_[i]) ++num_slack_;
    std::vector<int> slack_col(m, -1), art_col(m, -1);
    flip_.assign(m, false);
    needs_art_.assign(m, false);
    num_art_ = 0;
    std::size_t slack_at = n_;
    for (std::size_t i = 0; i < m; ++i) {
      const bool flip = rhs_[i] < Scalar(0);
      if (!eq_[i]) slack_col[i] = static_cast<int>(slack_at++);
      const bool needs_art = eq_[i] || flip;
      if (needs_art) ++num_art_;
      flip_[i] = flip;
      needs_art_[i] = needs_art;
    }
    std::size_t art_at = n_ + num_slack_;
    for (std::size_t i = 0; i < m; ++i)
      if (needs_art_[i]) art_col[i] = static_cast<int>(art_at++);

    rhs_scale_ = Scalar(1);
    for (std::size_t i = 0; i < m; ++i)
      if (sabs(rhs_[i]) > rhs_scale_) rhs_scale_ = sabs(rhs_[i]);

    tab_.assign(m, std::vector<Scalar>(total_cols() + 1, Scalar(0)));
    basis_.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const Scalar sign = flip_[i] ? Scalar(-1) : Scalar(1);
      for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = sign * rows_[i][j];
      if (slack_col[i] >= 0) tab_[i][static_cast<std::size_t>(slack_col[i])] = sign;
      if (art_col[i] >= 0) tab_[i][static_cast<std::size_t>(art_col[i])] = Scalar(1);
      tab_[i].back() = sign * rhs_[i];
      basis_[i] = needs_art_[i] ? static_cast<std::size_t>(art_col[i])
                                : static_cast<std::size_t>(slack_col[i]);
    }
  }

  std::vector<Scalar> phase1_costs() const {
    std::vector<Scalar> c(total_cols(), Scalar(0));
    for (std::size_t j = n_ + num_slack_; j < total_cols(); ++j) c[j] = Scalar(1);
    return c;
  }

  Scalar obj_value() const { return -obj_.back(); }

  /// Rebuilds the reduced-cost row for `costs` and pivots to optimality.
  /// Returns false on unbounded (phase 2) or iteration overrun (phase 1).
  bool run_phase(const std::vector<Scalar>& costs, bool phase1) {
    const std::size_t m = tab_.size();
    obj_.assign(total_cols() + 1, Scalar(0));
    for (std::size_t j = 0; j < total_cols(); ++j) obj_[j] = costs[j];
    for (std::size_t i = 0; i < m; ++i) {
      const Scalar cb = costs[basis_[i]];
      if (cb != Scalar(0))
        for (std::size_t j = 0; j <= total_cols(); ++j) obj_[j] -= cb * tab_[i][j];
    }
    const std::size_t enter_limit = phase1 ? total_cols() : n_ + num_slack_;
    const std::size_t max_iter = 2000 + 200 * (m + total_cols());
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      // Bland: smallest improving column.
      std::size_t enter = enter_limit;
      for (std::size_t j = 0; j < enter_limit; ++j) {
        if (obj_[j] < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter == enter_limit) return true;  // optimal
      std::size_t leave = m;
      Scalar best_ratio(0);
      for (std::size_t i = 0; i < m; ++i) {
        if (tab_[i][enter] > tol_) {
          const Scalar ratio = tab_[i].back() / tab_[i][enter];
          if (leave == m || ratio < best_ratio ||
              (ratio == best_ratio && basis_[i] < basis_[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave == m) return phase1 ? true : false;  // unbounded
      pivot(leave, enter);
    }
    return false;
  }

  void pivot(std::size_t row, std::size_t col) {
    const Scalar p = tab_[row][col];
    for (auto& v : tab_[row]) v = v / p;
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      if (i == row) continue;
      const Scalar f = tab_[i][col];
      if (f != Scalar(0))
        for (std::size_t j = 0; j <= total_cols(); ++j) tab_[i][j] -= f * tab_[row][j];
    }
    const Scalar f = obj_[col];
    if (f != Scalar(0))
      for (std::size_t j = 0; j <= total_cols(); ++j) obj_[j] -= f * tab_[row][j];
    basis_[row] = col;
  }

  void extract_solution(const std::vector<Scalar>& c) {
    x_.assign(n_, Scalar(0));
    for (std::size_t i = 0; i < tab_.size(); ++i)
      if (basis_[i] < n_) x_[basis_[i]] = tab_[i].back();
    objective_ = Scalar(0);
    for (std::size_t j = 0; j < n_; ++j) objective_ += c[j] * x_[j];
  }

  std::size_t n_;
  Scalar tol_;
  std::vector<std::vector<Scalar>> rows_;
  std::vector<Scalar> rhs_;
  std::vector<bool> eq_;
  std::vector<bool> flip_;
  std::vector<bool> needs_art_;
  std::size_t num_slack_ = 0, num_art_ = 0;
  std::vector<std::vector<Scalar>> tab_;
  std::vector<Scalar> obj_;
  std::vector<std::size_t> basis_;
  std::vector<Scalar> x_;
  Scalar objective_{};
  Scalar rhs_scale_{1};
};

}  // namespace surplex

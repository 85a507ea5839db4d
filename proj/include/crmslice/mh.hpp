#pragma once

// Clamped uniform random-walk Metropolis-Hastings kernels for the arrival and
// mark updates. Proposals are uniform windows of fixed width centered at a
// clamp of the current point; when a clamp binds, the move can be
// irreversible, which the Hastings term turns into a rejection.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "crmslice/rng.hpp"

namespace crmslice {

struct RwConfig {
  int n_gamma = 10;       // interval divisor for arrival proposals
  double delta_v = 0.3;   // mark step, in (0, 0.5)
  bool hastings = true;   // false reproduces the uncorrected clamped walk

  void validate() const {
    if (n_gamma < 1) throw std::invalid_argument("RwConfig: n_gamma must be >= 1");
    if (!(delta_v > 0.0 && delta_v < 0.5))
      throw std::invalid_argument("RwConfig: delta_v must be in (0, 0.5)");
  }
};

struct Proposal {
  double value = 0.0;
  double log_ratio = 0.0;  // log q(cur | prop) - log q(prop | cur)
};

struct MhOutcome {
  double value = 0.0;
  bool accepted = false;
  double log_alpha = 0.0;
};

namespace detail {

inline double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

// Both windows have width 2*delta, so the Hastings term is 0 when the move is
// reversible and -inf when it is not.
inline double uniform_walk_log_ratio(double cur, double prop, double center_of_prop,
                                     double delta) {
  return std::abs(cur - center_of_prop) <= delta ? 0.0
                                                 : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Interval-constrained arrival proposal: window width 2*delta with
// delta = (hi - lo) / n_gamma, centered at the two-sided clamp of cur.
inline Proposal propose_gamma_bounded(double cur, double lo, double hi, int n_gamma, Rng& rng,
                                      bool hastings = true) {
  if (!(lo < hi)) throw std::invalid_argument("propose_gamma_bounded: empty interval");
  if (n_gamma < 2) throw std::invalid_argument("propose_gamma_bounded: n_gamma must be >= 2");
  const double delta = (hi - lo) / n_gamma;
  const double center = detail::clamp(cur, lo + delta, hi - delta);
  Proposal p;
  p.value = center + rng.uniform(-delta, delta);
  if (hastings) {
    const double rev_center = detail::clamp(p.value, lo + delta, hi - delta);
    p.log_ratio = detail::uniform_walk_log_ratio(cur, p.value, rev_center, delta);
  }
  return p;
}

// Tail arrival proposal: fixed width delta = 1 / n_gamma, lower clamp only.
inline Proposal propose_gamma_tail(double cur, double lo, int n_gamma, Rng& rng,
                                   bool hastings = true) {
  if (n_gamma < 1) throw std::invalid_argument("propose_gamma_tail: n_gamma must be >= 1");
  const double delta = 1.0 / n_gamma;
  const double center = std::max(cur, lo + delta);
  Proposal p;
  p.value = center + rng.uniform(-delta, delta);
  if (hastings) {
    const double rev_center = std::max(p.value, lo + delta);
    p.log_ratio = detail::uniform_walk_log_ratio(cur, p.value, rev_center, delta);
  }
  return p;
}

// Mark proposal on (0, 1): two-sided clamp at delta_v and 1 - delta_v.
inline Proposal propose_v(double cur, double delta_v, Rng& rng, bool hastings = true) {
  if (!(delta_v > 0.0 && delta_v < 0.5))
    throw std::invalid_argument("propose_v: delta_v must be in (0, 0.5)");
  const double center = detail::clamp(cur, delta_v, 1.0 - delta_v);
  Proposal p;
  p.value = center + rng.uniform(-delta_v, delta_v);
  if (hastings) {
    const double rev_center = detail::clamp(p.value, delta_v, 1.0 - delta_v);
    p.log_ratio = detail::uniform_walk_log_ratio(cur, p.value, rev_center, delta_v);
  }
  return p;
}

// Accept/reject given precomputed log-densities. The current point must be in
// the support of the target.
inline bool mh_accept(double log_target_cur, double log_target_prop, double log_proposal_ratio,
                      Rng& rng, double* log_alpha_out = nullptr) {
  if (std::isnan(log_target_cur) || log_target_cur == -std::numeric_limits<double>::infinity())
    throw std::logic_error("mh_accept: current state has zero target density");
  double log_alpha = log_target_prop - log_target_cur + log_proposal_ratio;
  if (log_alpha_out) *log_alpha_out = log_alpha;
  if (log_alpha >= 0.0) return true;
  if (log_alpha == -std::numeric_limits<double>::infinity()) return false;
  return std::log(rng.uniform_pos()) < log_alpha;
}

// One MH step for a scalar target with a caller-supplied proposal.
template <class LogTarget>
MhOutcome mh_step(const LogTarget& log_target, double cur, const Proposal& prop, Rng& rng) {
  MhOutcome out;
  bool acc = mh_accept(log_target(cur), log_target(prop.value), prop.log_ratio, rng,
                       &out.log_alpha);
  out.accepted = acc;
  out.value = acc ? prop.value : cur;
  return out;
}

}  // namespace crmslice

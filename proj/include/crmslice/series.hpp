#pragma once

// Series representations of completely random measures: atoms are built from
// ordered unit-rate Poisson arrivals gamma_1 < gamma_2 < ... and i.i.d. marks
// V_k, with weight theta_k = tau(V_k, gamma_k). Also houses the deterministic
// truncation sequence xi.

#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>
#include <vector>

#include "crmslice/rng.hpp"

namespace crmslice {

// xi(k) = exp(-k / delta); strictly decreasing from xi(0) = 1.
class XiSequence {
 public:
  explicit XiSequence(double delta) : delta_(delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("XiSequence: delta must be positive");
  }

  double delta() const { return delta_; }

  double operator()(int k) const { return std::exp(-static_cast<double>(k) / delta_); }

  double log_xi(int k) const { return -static_cast<double>(k) / delta_; }

  // max{k >= 0 : xi(k) >= u} for u in (0, 1]. The floating-point boundary is
  // resolved by direct comparison so that u = xi(k) exactly maps to k.
  int max_index_for(double u) const {
    if (!(u > 0.0)) throw std::invalid_argument("XiSequence: u must be positive");
    if (u >= 1.0) return 0;
    int k = static_cast<int>(std::floor(-delta_ * std::log(u)));
    if (k < 0) k = 0;
    while ((*this)(k + 1) >= u) ++k;
    while (k > 0 && (*this)(k) < u) --k;
    return k;
  }

 private:
  double delta_;
};

// A series representation plugin: how to draw marks and turn (mark, arrival)
// pairs into weights.
template <class R>
concept SeriesRep = requires(const R r, Rng& g, double v, double gamma) {
  { r.degenerate_mark() } -> std::convertible_to<bool>;
  { r.sample_mark(g) } -> std::convertible_to<double>;
  { r.mark_logdensity(v) } -> std::convertible_to<double>;
  { r.tau(v, gamma) } -> std::convertible_to<double>;
};

// Bondesson representation of the beta process with mass alpha and shape
// lambda: tau(v, gamma) = v * exp(-gamma / (lambda * alpha)), V ~ Beta(1, lambda-1).
// lambda = 1 makes the mark distribution degenerate at 1.
class BondessonBetaRep {
 public:
  BondessonBetaRep(double alpha, double lambda) : alpha_(alpha), lambda_(lambda) {
    if (!(alpha > 0.0)) throw std::invalid_argument("BondessonBetaRep: alpha must be positive");
    if (!(lambda >= 1.0)) throw std::invalid_argument("BondessonBetaRep: lambda must be >= 1");
    c_ = lambda * alpha;
  }

  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  double c() const { return c_; }

  bool degenerate_mark() const { return lambda_ == 1.0; }

  double sample_mark(Rng& g) const {
    if (degenerate_mark()) return 1.0;
    // Beta(1, lambda-1) via inverse CDF; rounding can hit the endpoints,
    // which are outside the support of the log-density.
    double v = 1.0 - std::pow(g.uniform_pos(), 1.0 / (lambda_ - 1.0));
    if (v >= 1.0) v = std::nextafter(1.0, 0.0);
    if (v <= 0.0) v = std::nextafter(0.0, 1.0);
    return v;
  }

  double mark_logdensity(double v) const {
    if (degenerate_mark()) return 0.0;
    if (!(v > 0.0) || !(v < 1.0)) return -std::numeric_limits<double>::infinity();
    return std::log(lambda_ - 1.0) + (lambda_ - 2.0) * std::log1p(-v);
  }

  double tau(double v, double gamma) const { return v * std::exp(-gamma / c_); }

 private:
  double alpha_, lambda_, c_;
};

inline double bondesson_tau(double v, double gamma, double c) { return v * std::exp(-gamma / c); }

struct PriorAtoms {
  std::vector<double> gammas;
  std::vector<double> marks;
  std::vector<double> weights;
};

// Ancestral simulation of the first `count` atoms of the series.
template <SeriesRep R>
PriorAtoms simulate_prior_atoms(const R& rep, int count, Rng& rng) {
  PriorAtoms out;
  out.gammas.reserve(count);
  out.marks.reserve(count);
  out.weights.reserve(count);
  double gamma = 0.0;
  for (int k = 0; k < count; ++k) {
    gamma += rng.exponential();
    double v = rep.sample_mark(rng);
    out.gammas.push_back(gamma);
    out.marks.push_back(v);
    out.weights.push_back(rep.tau(v, gamma));
  }
  return out;
}

}  // namespace crmslice

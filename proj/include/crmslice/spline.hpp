#pragma once

// Natural cubic spline through strictly increasing knots.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace crmslice {

class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;

  NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("spline: need >= 2 matching knots");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i] < x_[i + 1])) throw std::invalid_argument("spline: knots must increase");
    // Second derivatives from the tridiagonal system, natural boundary
    // conditions M_0 = M_{n-1} = 0. Thomas algorithm.
    m_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> diag(n - 2), rhs(n - 2), upper(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      double h0 = x_[i] - x_[i - 1];
      double h1 = x_[i + 1] - x_[i];
      diag[i - 1] = 2.0 * (h0 + h1);
      upper[i - 1] = h1;
      rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < diag.size(); ++i) {
      double h0 = x_[i + 1] - x_[i];  // sub-diagonal entry of row i
      double w = h0 / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = diag.size(); i-- > 0;) {
      double t = rhs[i];
      if (i + 1 < diag.size()) t -= upper[i] * m_[i + 2];
      m_[i + 1] = t / diag[i];
    }
  }

  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }

  // Evaluate at q; q is clamped to the knot range.
  double operator()(double q) const {
    if (q <= x_.front()) return y_.front();
    if (q >= x_.back()) return y_.back();
    std::size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      (x_[mid] <= q ? lo : hi) = mid;
    }
    double h = x_[hi] - x_[lo];
    double a = (x_[hi] - q) / h;
    double b = (q - x_[lo]) / h;
    return a * y_[lo] + b * y_[hi] +
           ((a * a * a - a) * m_[lo] + (b * b * b - b) * m_[hi]) * h * h / 6.0;
  }

 private:
  std::vector<double> x_, y_, m_;
};

}  // namespace crmslice

#pragma once

// Adaptive quadrature on finite intervals: Gauss-Kronrod 7-15 panels with
// bisection driven by the embedded error estimate.

#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace crmslice {

namespace detail {

// Nodes/weights for the Kronrod-15 rule on [-1, 1]; the odd-indexed nodes are
// the embedded Gauss-7 points.
inline constexpr double kGk15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};

inline constexpr double kGk15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};

inline constexpr double kGauss7Weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

template <class F>
void gk15_panel(const F& f, double a, double b, double& value, double& err) {
  const double h = 0.5 * (b - a);
  const double m = 0.5 * (a + b);
  double k = 0.0, g = 0.0;
  for (int i = 0; i < 15; ++i) {
    double y = f(m + h * kGk15Nodes[i]);
    k += kGk15Weights[i] * y;
    if (i % 2 == 1) g += kGauss7Weights[i / 2] * y;
  }
  value = k * h;
  err = std::abs((k - g) * h);
}

}  // namespace detail

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Integrate f over [a, b] to tolerance tol (absolute + relative, whichever is
// looser). Throws QuadratureError when the panel budget is exhausted without
// meeting the tolerance.
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-8, int max_panels = 4000,
                 const char* what = "integrand") {
  if (a == b) return 0.0;
  struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
  };
  std::priority_queue<Panel> q;
  Panel p0{a, b, 0.0, 0.0};
  detail::gk15_panel(f, a, b, p0.value, p0.err);
  q.push(p0);
  double total = p0.value, total_err = p0.err;
  int used = 1;
  while (total_err > tol * std::max(1.0, std::abs(total))) {
    if (used >= max_panels || q.empty())
      throw QuadratureError(std::string("quadrature failed to converge for ") + what);
    Panel p = q.top();
    q.pop();
    double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b))
      throw QuadratureError(std::string("quadrature interval collapsed for ") + what);
    Panel l{p.a, m, 0.0, 0.0}, r{m, p.b, 0.0, 0.0};
    detail::gk15_panel(f, l.a, l.b, l.value, l.err);
    detail::gk15_panel(f, r.a, r.b, r.value, r.err);
    total += l.value + r.value - p.value;
    total_err += l.err + r.err - p.err;
    q.push(l);
    q.push(r);
    ++used;
  }
  return total;
}

}  // namespace crmslice

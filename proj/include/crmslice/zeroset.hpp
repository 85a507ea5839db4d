#pragma once

// The zero-set exponent I(gamma): the rate of the Poisson void probability
// that every assignment beyond an atom at arrival gamma is zero,
//
//   I(gamma) = integral over gamma' >= gamma of
//              E_V[ 1 - h(0 | tau(V, gamma'))^N ] dgamma'.
//
// All evaluation happens in the transformed coordinate u = exp(-gamma/c),
// which maps the unbounded tail to (0, u(gamma)] and keeps the integrand
// smooth and bounded. Tables are precomputed on an even u-grid and queried
// through a natural cubic spline.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crmslice/parallel.hpp"
#include "crmslice/quadrature.hpp"
#include "crmslice/spline.hpp"

namespace crmslice {

// Exact tail exponent. `integrand_over_u` is the mark-averaged zero-deficit
// divided by u, i.e. g(u) = E_V[1 - h(0|tau(V, gamma(u)))^N] / u, which must
// stay bounded as u -> 0.
template <class F>
double zeroset_exponent(double gamma, double c, const F& integrand_over_u, double tol = 1e-8,
                        const char* what = "zero-set integrand") {
  if (!(gamma >= 0.0)) throw std::domain_error("zeroset_exponent: gamma must be >= 0");
  const double u = std::exp(-gamma / c);
  double val = c * integrate(integrand_over_u, 0.0, u, tol, 4000, what);
  return val < 0.0 ? 0.0 : val;
}

// Beta-Bernoulli zero-deficit over u, 1 - exp(-N u), divided by u.
inline auto bb_zeroset_integrand_over_u(double n_obs) {
  return [n_obs](double u) {
    if (u <= 0.0) return n_obs;
    return -std::expm1(-n_obs * u) / u;
  };
}

// Exact Bernoulli form 1 - (1-u)^N over u, kept for cross-checks.
inline auto bb_zeroset_integrand_exact_over_u(double n_obs) {
  return [n_obs](double u) {
    if (u <= 0.0) return n_obs;
    if (u >= 1.0) return 1.0 / u;
    return -std::expm1(n_obs * std::log1p(-u)) / u;
  };
}

struct BnbZerosetParams {
  double alpha;            // mass, in (0, 1]
  double lambda;           // shape, > 1
  std::vector<double> r;   // per-document failure parameters, all > 0
};

// Beta-negative-binomial zero-deficit averaged over V ~ Beta(1, lambda-1),
// divided by u. Uses log BNB(0; r, a, b) = log B(a, b+r) - log B(a, b) with
// a = alpha*lambda*v*u and b = lambda*(1 - alpha*v*u); note a + b = lambda.
inline auto bnb_zeroset_integrand_over_u(const BnbZerosetParams& p, double inner_tol = 1e-9) {
  if (!(p.lambda > 1.0)) throw std::invalid_argument("bnb zero-set: lambda must be > 1");
  if (!(p.alpha > 0.0) || p.alpha > 1.0)
    throw std::invalid_argument("bnb zero-set: alpha must be in (0, 1]");
  for (double rd : p.r)
    if (!(rd > 0.0)) throw std::invalid_argument("bnb zero-set: r must be positive");
  double const_part = 0.0;  // sum_d [lgamma(lambda) - lgamma(lambda + r_d)]
  for (double rd : p.r) const_part += std::lgamma(p.lambda) - std::lgamma(p.lambda + rd);
  return [p, const_part, inner_tol](double u) {
    if (u <= 0.0) u = 1e-300;
    // Mark average via the Beta(1, lambda-1) inverse CDF: v = 1 - w^{1/(lambda-1)}.
    const double inv_shape = 1.0 / (p.lambda - 1.0);
    auto deficit_w = [&](double w) {
      double v = 1.0 - std::pow(w, inv_shape);
      double vu = v * u;
      double b = p.lambda * (1.0 - p.alpha * vu);
      if (!(b > 0.0)) return 1.0;  // boundary of the parameter domain
      double logf = const_part;
      for (double rd : p.r) logf += std::lgamma(b + rd) - std::lgamma(b);
      return -std::expm1(logf);
    };
    double avg = integrate(deficit_w, 0.0, 1.0, inner_tol, 2000, "bnb mark average");
    return avg / u;
  };
}

// Precomputed grid + spline of I in the u coordinate.
class InterpTable {
 public:
  InterpTable() = default;

  InterpTable(std::string key, double c, double epsilon, std::vector<double> grid_u,
              std::vector<double> values)
      : key_(std::move(key)),
        c_(c),
        epsilon_(epsilon),
        grid_u_(std::move(grid_u)),
        values_(std::move(values)),
        spline_(grid_u_, values_) {}

  const std::string& key() const { return key_; }
  double c() const { return c_; }
  double epsilon() const { return epsilon_; }
  const std::vector<double>& grid_u() const { return grid_u_; }
  const std::vector<double>& values() const { return values_; }

  // I(gamma); zero beyond the epsilon cutoff, error for negative gamma.
  double operator()(double gamma) const {
    if (!(gamma >= 0.0)) throw std::domain_error("InterpTable: gamma must be >= 0");
    double u = std::exp(-gamma / c_);
    if (u < epsilon_) return 0.0;
    double val = spline_(u);
    return val < 0.0 ? 0.0 : val;
  }

  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("InterpTable: cannot write " + path);
    out.precision(17);
    out << "# crmslice-zeroset-table v1\n";
    out << "# key " << key_ << "\n";
    out << "# c " << c_ << " epsilon " << epsilon_ << " n " << grid_u_.size() << "\n";
    for (std::size_t i = 0; i < grid_u_.size(); ++i)
      out << grid_u_[i] << "," << values_[i] << "\n";
  }

  static InterpTable load_csv(const std::string& path, const std::string& expected_key) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("InterpTable: cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != "# crmslice-zeroset-table v1")
      throw std::runtime_error("InterpTable: bad header in " + path);
    if (!std::getline(in, line) || line.rfind("# key ", 0) != 0)
      throw std::runtime_error("InterpTable: missing key in " + path);
    std::string key = line.substr(6);
    if (key != expected_key) throw std::runtime_error("InterpTable: key mismatch in " + path);
    double c = 0.0, eps = 0.0;
    std::size_t n = 0;
    {
      std::string tag;
      if (!std::getline(in, line)) throw std::runtime_error("InterpTable: truncated " + path);
      std::istringstream hdr(line);
      std::string hash;
      hdr >> hash >> tag >> c >> tag >> eps >> tag >> n;
    }
    std::vector<double> u, v;
    u.reserve(n);
    v.reserve(n);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::size_t comma = line.find(',');
      if (comma == std::string::npos) throw std::runtime_error("InterpTable: bad row in " + path);
      u.push_back(std::stod(line.substr(0, comma)));
      v.push_back(std::stod(line.substr(comma + 1)));
    }
    if (u.size() != n) throw std::runtime_error("InterpTable: row count mismatch in " + path);
    return InterpTable(key, c, eps, std::move(u), std::move(v));
  }

 private:
  std::string key_;
  double c_ = 1.0;
  double epsilon_ = 1e-30;
  std::vector<double> grid_u_;
  std::vector<double> values_;
  NaturalCubicSpline spline_;
};

// Build a table on n_points evenly spaced u in [epsilon, 1].
template <class F>
InterpTable build_zeroset_table(const std::string& key, const F& integrand_over_u, double c,
                                int n_points = 1000, double epsilon = 1e-30, int workers = 1,
                                double tol = 1e-8, const char* what = "zero-set integrand") {
  if (n_points < 4) throw std::invalid_argument("build_zeroset_table: need >= 4 points");
  std::vector<double> grid(n_points), values(n_points);
  for (int i = 0; i < n_points; ++i)
    grid[i] = epsilon + (1.0 - epsilon) * static_cast<double>(i) / (n_points - 1);
  parallel_for(n_points, workers, [&](int i, int) {
    values[i] = c * integrate(integrand_over_u, 0.0, grid[i], tol, 4000, what);
    if (values[i] < 0.0) values[i] = 0.0;
  });
  return InterpTable(key, c, epsilon, std::move(grid), std::move(values));
}

}  // namespace crmslice

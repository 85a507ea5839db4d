#pragma once

// Trace diagnostics: batch-means effective sample size, the parity test
// statistic, log-log scaling fits, and held-out 2-norm error for the latent
// feature model.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "crmslice/state.hpp"

namespace crmslice {

struct Trace {
  std::vector<double> values;      // test-function evaluations
  std::vector<double> wall_times;  // per-iteration seconds
  std::vector<int> K;
  std::vector<double> acc_sub1;
  std::vector<double> acc_sub2;
};

// 1 iff the number of nonzero assignment entries is even (zero is even).
inline int parity_statistic(const ChainState& st) {
  std::size_t nnz = 0;
  for (const SparseRow& row : st.rows) nnz += row.nnz();
  return nnz % 2 == 0 ? 1 : 0;
}

struct EssResult {
  double value = 0.0;
  bool degenerate = false;  // zero sample variance
};

// Batch-means ESS with batch size floor(sqrt(T)) by default. Clamped to
// [1, T]; a constant trace reports T with the degenerate flag set.
inline EssResult ess_batch_means(const std::vector<double>& values, int batch_size = 0) {
  const std::size_t t = values.size();
  if (t < 100) throw std::invalid_argument("ess_batch_means: need at least 100 values");
  const std::size_t b =
      batch_size > 0 ? static_cast<std::size_t>(batch_size)
                     : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(t))));
  const std::size_t a = t / b;  // number of batches; the tail remainder is dropped
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(t);
  double s2 = 0.0;
  for (double v : values) s2 += (v - mean) * (v - mean);
  s2 /= static_cast<double>(t);
  if (s2 == 0.0) return {static_cast<double>(t), true};
  const double used = static_cast<double>(a * b);
  double used_mean = 0.0;
  for (std::size_t i = 0; i < a * b; ++i) used_mean += values[i];
  used_mean /= used;
  double bm = 0.0;
  for (std::size_t j = 0; j < a; ++j) {
    double m = 0.0;
    for (std::size_t i = j * b; i < (j + 1) * b; ++i) m += values[i];
    m /= static_cast<double>(b);
    bm += (m - used_mean) * (m - used_mean);
  }
  const double var_bm = bm / static_cast<double>(a > 1 ? a - 1 : 1);
  const double sigma2 = static_cast<double>(b) * var_bm;
  if (sigma2 <= 0.0) return {static_cast<double>(t), true};
  double ess = static_cast<double>(t) * s2 / sigma2;
  if (ess < 1.0) ess = 1.0;
  if (ess > static_cast<double>(t)) ess = static_cast<double>(t);
  return {ess, false};
}

// Least-squares slope of log10(y) against log10(n).
inline double scaling_fit(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("scaling_fit: need at least 3 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (auto& [n, y] : pairs) {
    if (!(n > 0.0) || !(y > 0.0)) throw std::invalid_argument("scaling_fit: nonpositive input");
    double lx = std::log10(n), ly = std::log10(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(pairs.size());
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("scaling_fit: degenerate abscissae");
  return (m * sxy - sx * sy) / denom;
}

namespace detail {

// Exhaustive search over binary combinations with Gray-code residual updates.
inline double heldout_best_exhaustive(const Eigen::VectorXd& y, const Eigen::MatrixXd& psi) {
  const int k = static_cast<int>(psi.rows());
  Eigen::VectorXd resid = y;
  double best = resid.squaredNorm();
  unsigned long code = 0;
  const unsigned long total = 1UL << k;
  for (unsigned long i = 1; i < total; ++i) {
    unsigned long gray = i ^ (i >> 1);
    unsigned long flipped = gray ^ code;
    int bit = 0;
    while (!((flipped >> bit) & 1UL)) ++bit;
    if ((gray >> bit) & 1UL)
      resid -= psi.row(bit).transpose();
    else
      resid += psi.row(bit).transpose();
    code = gray;
    best = std::min(best, resid.squaredNorm());
  }
  return std::sqrt(best);
}

// Greedy forward selection: add the feature that most reduces the residual
// until no feature improves it.
inline double heldout_best_greedy(const Eigen::VectorXd& y, const Eigen::MatrixXd& psi) {
  const int k = static_cast<int>(psi.rows());
  Eigen::VectorXd resid = y;
  std::vector<bool> used(k, false);
  double best = resid.squaredNorm();
  while (true) {
    int pick = -1;
    double pick_val = best;
    for (int j = 0; j < k; ++j) {
      if (used[j]) continue;
      double val = (resid - psi.row(j).transpose()).squaredNorm();
      if (val < pick_val) {
        pick_val = val;
        pick = j;
      }
    }
    if (pick < 0) break;
    resid -= psi.row(pick).transpose();
    used[pick] = true;
    best = pick_val;
  }
  return std::sqrt(best);
}

}  // namespace detail

// Mean over test rows of min_X ||y - psi^T X||_2, X in {0,1}^K, for one trait
// sample. Exhaustive below `exhaustive_limit` features, greedy above.
inline double heldout_l2(const Eigen::MatrixXd& test_y, const Eigen::MatrixXd& psi,
                         int exhaustive_limit = 15) {
  const int n = static_cast<int>(test_y.rows());
  if (n == 0) throw std::invalid_argument("heldout_l2: empty test set");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd y = test_y.row(i).transpose();
    if (psi.rows() == 0)
      total += y.norm();
    else if (psi.rows() <= exhaustive_limit)
      total += detail::heldout_best_exhaustive(y, psi);
    else
      total += detail::heldout_best_greedy(y, psi);
  }
  return total / n;
}

// Per-sample errors averaged across trait samples.
inline double heldout_l2_mean(const Eigen::MatrixXd& test_y,
                              const std::vector<Eigen::MatrixXd>& psi_samples,
                              int exhaustive_limit = 15) {
  if (psi_samples.empty()) throw std::invalid_argument("heldout_l2_mean: no samples");
  double total = 0.0;
  for (const auto& psi : psi_samples) total += heldout_l2(test_y, psi, exhaustive_limit);
  return total / static_cast<double>(psi_samples.size());
}

}  // namespace crmslice

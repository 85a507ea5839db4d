#pragma once

// Beta-Bernoulli linear-Gaussian latent feature model:
//   X_{nk} ~ Bern(exp(-gamma_k / c)),  psi_k ~ Norm(0, sigma0^2 I),
//   y_n ~ Norm(sum_k X_{nk} psi_k, sigma^2 I).
// Marks are degenerate at 1 (Bondesson representation with lambda = 1), so
// only the arrivals are sampled. Traits are drawn jointly from their
// matrix-normal full conditional; assignment entries are drawn through the
// engine's generic entrywise scan with O(D) work per entry via cached row
// residuals.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "crmslice/engine.hpp"
#include "crmslice/state.hpp"
#include "crmslice/zeroset.hpp"

namespace crmslice {

struct BbParams {
  double sigma = 0.5;   // observation noise
  double sigma0 = 1.0;  // feature prior scale
  double c = 1.0;       // beta-process scale
  int dim = 1;          // observation dimension D

  void validate() const {
    if (!(sigma > 0.0) || !(sigma0 > 0.0) || !(c > 0.0) || dim < 1)
      throw std::invalid_argument("BbParams: all parameters must be positive");
  }
};

// Bern(x; exp(-gamma/c)).
inline double bb_count_pmf(int x, double gamma, double c) {
  if (x != 0 && x != 1) throw std::invalid_argument("bb_count_pmf: x must be 0 or 1");
  double theta = std::exp(-gamma / c);
  return x == 1 ? theta : 1.0 - theta;
}

// Occupied-column log target: m*log(theta) + (N-m)*log(1-theta) on
// [lo, hi], -inf outside.
inline double bb_gamma_logtarget_sub1(double gamma, long m, long n_obs, double c, double lo,
                                      double hi) {
  if (gamma < lo || gamma > hi) return -std::numeric_limits<double>::infinity();
  double ll = -static_cast<double>(m) * gamma / c;
  if (n_obs > m) {
    if (!(gamma > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(n_obs - m) * std::log(-std::expm1(-gamma / c));
  }
  return ll;
}

// Tail log target: prior increment, zero-set exponent, and the column
// likelihood, supported on gamma >= lo.
inline double bb_gamma_logtarget_sub2(double gamma, long m, long n_obs, double c, double lo,
                                      const InterpTable& table) {
  if (gamma < lo) return -std::numeric_limits<double>::infinity();
  double ll = -(1.0 + static_cast<double>(m) / c) * gamma - table(gamma);
  if (n_obs > m) {
    if (!(gamma > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(n_obs - m) * std::log(-std::expm1(-gamma / c));
  }
  return ll;
}

class BbModel {
 public:
  BbModel(BbParams params, Eigen::MatrixXd y, std::shared_ptr<const InterpTable> table)
      : p_(params), y_(std::move(y)), table_(std::move(table)) {
    p_.validate();
    if (y_.cols() != p_.dim) throw std::invalid_argument("BbModel: data dimension mismatch");
    if (!table_) throw std::invalid_argument("BbModel: missing zero-set table");
    resid_ = y_;
    psi_.resize(0, p_.dim);
  }

  static std::string table_key(long n_obs, double c) {
    return "bb:n=" + std::to_string(n_obs) + ":c=" + std::to_string(c);
  }

  static std::shared_ptr<const InterpTable> build_table(long n_obs, double c,
                                                        int n_points = 1000,
                                                        double epsilon = 1e-30, int workers = 1) {
    auto g = bb_zeroset_integrand_over_u(static_cast<double>(n_obs));
    return std::make_shared<InterpTable>(build_zeroset_table(
        table_key(n_obs, c), g, c, n_points, epsilon, workers, 1e-8, "beta-bernoulli zero-set"));
  }

  const BbParams& params() const { return p_; }
  long n_obs() const { return y_.rows(); }
  const Eigen::MatrixXd& data() const { return y_; }
  const Eigen::MatrixXd& traits() const { return psi_; }
  const std::vector<long>& column_counts() const { return m_; }

  // Install trait values directly (chain initialization).
  void set_traits(Eigen::MatrixXd psi) {
    if (psi.cols() != p_.dim) throw std::invalid_argument("BbModel: trait dimension mismatch");
    psi_ = std::move(psi);
  }

  // Swap in regenerated observations (same shape); residual cache follows.
  void set_data(const Eigen::MatrixXd& y, const ChainState& st) {
    if (y.rows() != y_.rows() || y.cols() != y_.cols())
      throw std::invalid_argument("BbModel: set_data shape mismatch");
    y_ = y;
    resid_ = y_;
    for (int n = 0; n < st.num_rows(); ++n)
      for (const auto& [k, c] : st.rows[n].entries())
        resid_.row(n) -= static_cast<double>(c) * psi_.row(k - 1);
  }

  // --- engine hooks ---------------------------------------------------

  // Joint matrix-normal draw of all trait rows given X:
  //   Q = X^T X + (sigma^2/sigma0^2) I, mean Q^{-1} X^T y,
  //   among-row covariance Q^{-1}, among-column covariance sigma^2 I.
  void sample_traits(ChainState& st, Rng& rng) {
    const int k = st.K;
    psi_.resize(k, p_.dim);
    if (k == 0) return;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(k, p_.dim);
    for (int n = 0; n < st.num_rows(); ++n) {
      const auto& entries = st.rows[n].entries();
      for (const auto& [k1, c1] : entries) {
        xty.row(k1 - 1) += static_cast<double>(c1) * y_.row(n);
        for (const auto& [k2, c2] : entries)
          q(k1 - 1, k2 - 1) += static_cast<double>(c1) * static_cast<double>(c2);
      }
    }
    q.diagonal().array() += p_.sigma * p_.sigma / (p_.sigma0 * p_.sigma0);
    Eigen::LLT<Eigen::MatrixXd> llt(q);
    if (llt.info() != Eigen::Success) throw std::runtime_error("BbModel: trait system not SPD");
    Eigen::MatrixXd mean = llt.solve(xty);
    Eigen::MatrixXd z(k, p_.dim);
    for (int i = 0; i < k; ++i)
      for (int d = 0; d < p_.dim; ++d) z(i, d) = rng.normal();
    psi_ = mean + p_.sigma * llt.matrixU().solve(z);
  }

  double col_count_loglik(int k, double gamma, double /*v*/) const {
    long m = k <= static_cast<int>(m_.size()) ? m_[k - 1] : 0;
    return bb_gamma_logtarget_sub1(gamma, m, n_obs(), p_.c, -std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity());
  }

  double col_count_loglik_zero(double gamma, double /*v*/) const {
    return bb_gamma_logtarget_sub1(gamma, 0, n_obs(), p_.c,
                                   -std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity());
  }

  double zeroset_I(double gamma) const { return (*table_)(gamma); }

  void sample_assignments(ChainState& st, const AssignContext& ctx) {
    psi_sq_.resize(st.K);
    for (int k = 0; k < st.K; ++k) psi_sq_[k] = psi_.row(k).squaredNorm();
    entrywise_assignments(st, *this, ctx);
    rebuild_column_counts(st);
  }

  void discard_traits(int k) {
    if (psi_.rows() > k) psi_.conservativeResize(k, p_.dim);
  }

  // Rebuild the cached column counts from the assignment rows.
  void refresh_counts(const ChainState& st) { rebuild_column_counts(st); }

  void check_consistency(const ChainState& st) const {
    std::vector<long> m(st.K, 0);
    for (int n = 0; n < st.num_rows(); ++n)
      for (const auto& [k, c] : st.rows[n].entries()) {
        if (c != 1) throw InvariantViolation("bb: counts must be binary");
        m[k - 1] += c;
      }
    if (m != m_) throw InvariantViolation("bb: cached column counts disagree");
    for (int n = 0; n < st.num_rows(); ++n) {
      Eigen::VectorXd r = y_.row(n).transpose();
      for (const auto& [k, c] : st.rows[n].entries()) r -= c * psi_.row(k - 1).transpose();
      if ((r - resid_.row(n).transpose()).norm() > 1e-8 * (1.0 + r.norm()))
        throw InvariantViolation("bb: cached residual disagrees");
    }
  }

  // --- entrywise hooks -------------------------------------------------

  void prepare_row(int n, const ChainState& st, int /*worker*/) {
    Eigen::VectorXd r = y_.row(n).transpose();
    for (const auto& [k, c] : st.rows[n].entries()) r -= c * psi_.row(k - 1).transpose();
    resid_.row(n) = r.transpose();
  }

  // log-odds of x=1 over x=0 for one entry; resid must include the current
  // entry's contribution.
  static double entry_log_odds(double resid_dot_psi, double psi_sq, int cur, double theta,
                               double sigma, double slice_log_delta) {
    double dll = (2.0 * resid_dot_psi + (2.0 * cur - 1.0) * psi_sq) / (2.0 * sigma * sigma);
    double prior;
    if (theta >= 1.0)
      prior = std::numeric_limits<double>::infinity();
    else if (theta <= 0.0)
      prior = -std::numeric_limits<double>::infinity();
    else
      prior = std::log(theta) - std::log1p(-theta);
    return dll + prior + slice_log_delta;
  }

  int sample_entry(int n, int k, double theta, int cur, const EntryChoice& ch, Rng& rng) {
    double rdp = resid_.row(n).dot(psi_.row(k - 1));
    double logit =
        entry_log_odds(rdp, psi_sq_[k - 1], cur, theta, p_.sigma, ch.logslice_pos - ch.logslice_zero);
    double p1;
    if (logit == std::numeric_limits<double>::infinity())
      p1 = 1.0;
    else if (logit == -std::numeric_limits<double>::infinity())
      p1 = 0.0;
    else
      p1 = 1.0 / (1.0 + std::exp(-logit));
    return rng.uniform() < p1 ? 1 : 0;
  }

  void entry_cleared(int /*n*/, int /*k*/, int /*old*/, int /*worker*/) {
    // column counts are rebuilt after the scan
  }

  void entry_changed(int n, int k, int oldv, int newv, int /*worker*/) {
    resid_.row(n) -= static_cast<double>(newv - oldv) * psi_.row(k - 1);
  }

 private:
  void rebuild_column_counts(const ChainState& st) {
    m_.assign(st.K, 0);
    for (int n = 0; n < st.num_rows(); ++n)
      for (const auto& [k, c] : st.rows[n].entries()) m_[k - 1] += c;
  }

  BbParams p_;
  Eigen::MatrixXd y_;      // N x D
  Eigen::MatrixXd psi_;    // K x D
  Eigen::MatrixXd resid_;  // N x D, y - X psi
  std::vector<double> psi_sq_;
  std::vector<long> m_;  // column sums of X
  std::shared_ptr<const InterpTable> table_;
};

}  // namespace crmslice

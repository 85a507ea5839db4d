#pragma once

// Beta-negative-binomial topic model:
//   V_k ~ Beta(1, lambda-1), arrivals gamma_k, tau = V_k exp(-gamma_k/c),
//   theta_{dk} ~ Beta(a_k, b_k) with a_k = alpha*lambda*tau_k,
//   b_k = lambda*(1 - alpha*tau_k), pi_{dk} ~ Gamma(r_d, (1-theta)/theta),
//   Z_{dn} ~ Cat(pi_d / sum pi_d), y_{dn} ~ Cat(psi_{Z_dn}).
//
// Engine rows are words; a word's assignment row is one-hot at its topic, so
// k_n is the word's topic and k'_n = 0. The (theta, pi) pairs are auxiliary:
// the (V, gamma) substeps target the collapsed beta-negative-binomial
// likelihood of the doc-topic counts, and (theta, pi) are redrawn from their
// conjugate conditionals before each Z pass.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "crmslice/data.hpp"
#include "crmslice/engine.hpp"
#include "crmslice/parallel.hpp"
#include "crmslice/state.hpp"
#include "crmslice/zeroset.hpp"

namespace crmslice {

struct BnbParams {
  double alpha = 1.0;              // mass, in (0, 1]
  double lambda = 1.1;             // shape, > 1
  std::vector<double> beta;        // Dirichlet concentration over words
  std::vector<double> r;           // per-document failure parameters

  double c() const { return lambda * alpha; }

  void validate() const {
    if (!(alpha > 0.0) || alpha > 1.0)
      throw std::invalid_argument("BnbParams: alpha must be in (0, 1]");
    if (!(lambda > 1.0)) throw std::invalid_argument("BnbParams: lambda must be > 1");
    if (beta.empty()) throw std::invalid_argument("BnbParams: empty topic prior");
    for (double b : beta)
      if (!(b > 0.0)) throw std::invalid_argument("BnbParams: beta must be positive");
    for (double rd : r)
      if (!(rd > 0.0)) throw std::invalid_argument("BnbParams: r must be positive");
  }

  // r_d = N_d (lambda-1) / (alpha lambda); empty documents get the average.
  static std::vector<double> auto_r(const Corpus& corpus, double alpha, double lambda) {
    std::vector<double> r(corpus.docs.size());
    double scale = (lambda - 1.0) / (alpha * lambda);
    double fallback = 0.0;
    long nonempty = 0;
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
      r[d] = static_cast<double>(corpus.docs[d].size()) * scale;
      if (r[d] > 0.0) {
        fallback += r[d];
        ++nonempty;
      }
    }
    fallback = nonempty > 0 ? fallback / static_cast<double>(nonempty) : 1.0;
    for (double& rd : r)
      if (!(rd > 0.0)) rd = fallback;
    return r;
  }
};

// log BNB(x; r, a, b) via log B(a+x, b+r) - log B(a, b) and the binomial
// coefficient in r; uses a + b = lambda.
inline double bnb_log_pmf(long x, double r, double a, double b) {
  if (x < 0) return -std::numeric_limits<double>::infinity();
  if (!(a > 0.0) || !(b > 0.0)) return -std::numeric_limits<double>::infinity();
  double ab = a + b;
  double ll = std::lgamma(static_cast<double>(x) + r) - std::lgamma(r) -
              std::lgamma(static_cast<double>(x) + 1.0);
  ll += std::lgamma(a + static_cast<double>(x)) + std::lgamma(b + r) -
        std::lgamma(ab + r + static_cast<double>(x));
  ll -= std::lgamma(a) + std::lgamma(b) - std::lgamma(ab);
  return ll;
}

class BnbModel {
 public:
  BnbModel(BnbParams params, Corpus corpus, std::shared_ptr<const InterpTable> table)
      : p_(std::move(params)), table_(std::move(table)) {
    if (p_.r.empty()) throw std::invalid_argument("BnbModel: r must be set per document");
    p_.validate();
    if (!table_) throw std::invalid_argument("BnbModel: missing zero-set table");
    set_corpus_impl(std::move(corpus));
  }

  static std::string table_key(const BnbParams& p, int n_docs) {
    double r_sum = 0.0;
    for (double rd : p.r) r_sum += rd;
    return "bnb:d=" + std::to_string(n_docs) + ":alpha=" + std::to_string(p.alpha) +
           ":lambda=" + std::to_string(p.lambda) + ":rsum=" + std::to_string(r_sum);
  }

  static std::shared_ptr<const InterpTable> build_table(const BnbParams& p, int n_docs,
                                                        int n_points = 1000,
                                                        double epsilon = 1e-30, int workers = 1) {
    BnbZerosetParams zp{p.alpha, p.lambda, p.r};
    auto g = bnb_zeroset_integrand_over_u(zp);
    return std::make_shared<InterpTable>(build_zeroset_table(table_key(p, n_docs), g, p.c(),
                                                             n_points, epsilon, workers, 1e-8,
                                                             "bnb zero-set"));
  }

  const BnbParams& params() const { return p_; }
  int n_docs() const { return n_docs_; }
  int vocab() const { return vocab_; }
  long n_words() const { return static_cast<long>(word_doc_.size()); }
  int word_doc(long w) const { return word_doc_[w]; }
  int word_id(long w) const { return word_id_[w]; }
  const Eigen::MatrixXd& topics() const { return psi_; }
  const std::vector<std::vector<double>>& theta() const { return theta_; }
  const std::vector<std::vector<double>>& pi() const { return pi_; }
  const std::vector<std::vector<long>>& doc_topic_counts() const { return doc_topic_; }

  // Replace the corpus mid-chain (same document count and vocabulary):
  // topics, theta and pi survive, rows in `st` reset to unassigned words.
  void reset_words(ChainState& st, const Corpus& corpus) {
    if (static_cast<int>(corpus.docs.size()) != n_docs_ || corpus.vocab != vocab_)
      throw std::invalid_argument("reset_words: document count and vocabulary must match");
    rebuild_word_index(corpus);
    st.reset_rows(static_cast<int>(word_doc_.size()));
    refresh_counts(st);
  }

  // Rebuild the cached doc-topic counts from the assignment rows.
  void refresh_counts(const ChainState& st) {
    doc_topic_.assign(n_docs_, std::vector<long>(std::max(st.atom_count(), st.K), 0));
    for (long w = 0; w < n_words(); ++w) {
      int z = st.k_max[w];
      if (z > 0) ++doc_topic_[word_doc_[w]][z - 1];
    }
  }

  // Beta/Gamma conjugate pair for one (document, topic) cell.
  std::pair<double, double> sample_theta_pi(long x_dk, double rd, double tau_k, Rng& rng) const {
    double a = p_.alpha * p_.lambda * tau_k;
    double b = p_.lambda * (1.0 - p_.alpha * tau_k);
    if (!(a > 0.0) || !(b > 0.0))
      throw std::domain_error("sample_theta_pi: beta parameters out of domain");
    double theta = rng.beta(a + static_cast<double>(x_dk), b + rd);
    theta = std::clamp(theta, 1e-300, std::nextafter(1.0, 0.0));
    double pi = rng.gamma(rd + static_cast<double>(x_dk), 1.0 / theta);
    if (pi < 1e-300) pi = 1e-300;
    return {theta, pi};
  }

  // --- engine hooks ---------------------------------------------------

  // psi_k ~ Dirichlet(beta + word-topic counts), for every k <= K.
  void sample_traits(ChainState& st, Rng& rng) {
    const int k = st.K;
    psi_.resize(k, vocab_);
    if (k == 0) return;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, vocab_);
    for (long w = 0; w < n_words(); ++w) {
      int z = st.k_max[w];
      if (z > 0 && z <= k) counts(z - 1, word_id_[w] - 1) += 1.0;
    }
    for (int t = 0; t < k; ++t) {
      double tot = 0.0;
      for (int w = 0; w < vocab_; ++w) {
        double g = rng.gamma(p_.beta[w] + counts(t, w));
        psi_(t, w) = g;
        tot += g;
      }
      psi_.row(t) /= tot;
    }
  }

  double col_count_loglik(int k, double gamma, double v) const {
    double tau = v * std::exp(-gamma / p_.c());
    double a = p_.alpha * p_.lambda * tau;
    double b = p_.lambda * (1.0 - p_.alpha * tau);
    if (!(a > 0.0) || !(b > 0.0)) return -std::numeric_limits<double>::infinity();
    double ll = 0.0;
    for (int d = 0; d < n_docs_; ++d) {
      long x = k <= static_cast<int>(doc_topic_[d].size()) ? doc_topic_[d][k - 1] : 0;
      ll += bnb_log_pmf(x, p_.r[d], a, b);
    }
    return ll;
  }

  double col_count_loglik_zero(double gamma, double v) const {
    double tau = v * std::exp(-gamma / p_.c());
    double a = p_.alpha * p_.lambda * tau;
    double b = p_.lambda * (1.0 - p_.alpha * tau);
    if (!(a > 0.0) || !(b > 0.0)) return -std::numeric_limits<double>::infinity();
    // log BNB(0; r, a, b) = log B(a, b+r) - log B(a, b), with a + b = lambda
    double ll = 0.0;
    for (int d = 0; d < n_docs_; ++d)
      ll += std::lgamma(b + p_.r[d]) + std::lgamma(p_.lambda) -
            std::lgamma(p_.lambda + p_.r[d]) - std::lgamma(b);
    return ll;
  }

  double zeroset_I(double gamma) const { return (*table_)(gamma); }

  // (theta, pi) redraw followed by the thresholded categorical Z pass,
  // parallel across documents; the count caches are rebuilt afterwards.
  void sample_assignments(ChainState& st, const AssignContext& ctx) {
    const XiSequence& xi = *ctx.xi;
    const std::vector<double>& taus = *ctx.thetas;
    const int k_cap = st.K;
    for (auto& dt : doc_topic_) dt.resize(std::max<std::size_t>(dt.size(), k_cap), 0);
    theta_.assign(n_docs_, {});
    pi_.assign(n_docs_, {});
    for (auto& v : theta_) v.resize(k_cap);
    for (auto& v : pi_) v.resize(k_cap);

    parallel_for(n_docs_, ctx.workers, [&](int d, int) {
      Rng rng = Rng::stream(ctx.seed, static_cast<std::uint64_t>(ctx.iteration),
                            1 + static_cast<std::uint64_t>(d));
      for (int k = 1; k <= k_cap; ++k) {
        auto [theta, pi] = sample_theta_pi(doc_topic_[d][k - 1], p_.r[d], taus[k - 1], rng);
        theta_[d][k - 1] = theta;
        pi_[d][k - 1] = pi;
      }
      std::vector<double> weights(k_cap);
      for (long w = doc_begin_[d]; w < doc_begin_[d + 1]; ++w) {
        int bound = k_cap;
        if (ctx.slice_on) bound = std::min(bound, xi.max_index_for(st.U[w]));
        if (bound < 1) continue;  // unassigned word stays unassigned this pass
        const int y = word_id_[w] - 1;
        double total = 0.0;
        for (int k = 1; k <= bound; ++k) {
          double wt = pi_[d][k - 1] * psi_(k - 1, y);
          if (ctx.slice_on) wt *= std::exp(static_cast<double>(k) / xi.delta());
          weights[k - 1] = wt;
          total += wt;
        }
        int z_new;
        if (total <= 0.0 || !std::isfinite(total)) {
          if (st.k_max[w] > 0)
            throw InvariantViolation("bnb: no positive topic weight for an assigned word");
          continue;
        }
        double u = rng.uniform() * total;
        double acc = 0.0;
        z_new = bound;
        for (int k = 1; k <= bound; ++k) {
          acc += weights[k - 1];
          if (u < acc) {
            z_new = k;
            break;
          }
        }
        int z_old = st.k_max[w];
        if (z_old != z_new) {
          if (z_old > 0) st.rows[w].set(z_old, 0);
          st.rows[w].set(z_new, 1);
          st.k_max[w] = z_new;
        }
      }
    });
    refresh_counts(st);
  }

  void discard_traits(int k) {
    if (psi_.rows() > k) psi_.conservativeResize(k, vocab_);
    for (auto& dt : doc_topic_)
      if (static_cast<int>(dt.size()) > k) dt.resize(k);
    for (auto& v : theta_)
      if (static_cast<int>(v.size()) > k) v.resize(k);
    for (auto& v : pi_)
      if (static_cast<int>(v.size()) > k) v.resize(k);
  }

  void check_consistency(const ChainState& st) const {
    std::vector<std::vector<long>> counts(n_docs_, std::vector<long>(st.K, 0));
    for (long w = 0; w < n_words(); ++w) {
      const SparseRow& row = st.rows[w];
      if (row.nnz() > 1 || (row.nnz() == 1 && row.entries()[0].second != 1))
        throw InvariantViolation("bnb: word rows must be one-hot");
      int z = row.max1();
      if (z > 0) ++counts[word_doc_[w]][z - 1];
    }
    for (int d = 0; d < n_docs_; ++d)
      for (int k = 0; k < st.K; ++k) {
        long cached = k < static_cast<int>(doc_topic_[d].size()) ? doc_topic_[d][k] : 0;
        if (counts[d][k] != cached)
          throw InvariantViolation("bnb: cached doc-topic counts disagree");
      }
  }

 private:
  void set_corpus_impl(Corpus corpus) {
    n_docs_ = static_cast<int>(corpus.docs.size());
    vocab_ = corpus.vocab;
    if (static_cast<int>(p_.r.size()) != n_docs_)
      throw std::invalid_argument("BnbModel: r size must match document count");
    if (static_cast<int>(p_.beta.size()) != vocab_)
      throw std::invalid_argument("BnbModel: beta size must match vocabulary");
    rebuild_word_index(corpus);
    doc_topic_.assign(n_docs_, {});
    theta_.assign(n_docs_, {});
    pi_.assign(n_docs_, {});
    psi_.resize(0, vocab_);
  }

  void rebuild_word_index(const Corpus& corpus) {
    word_doc_.clear();
    word_id_.clear();
    doc_begin_.assign(n_docs_ + 1, 0);
    for (int d = 0; d < n_docs_; ++d) {
      doc_begin_[d] = static_cast<long>(word_doc_.size());
      for (int token : corpus.docs[d]) {
        if (token < 1 || token > vocab_) throw std::invalid_argument("BnbModel: word id range");
        word_doc_.push_back(d);
        word_id_.push_back(token);
      }
    }
    doc_begin_[n_docs_] = static_cast<long>(word_doc_.size());
  }

  BnbParams p_;
  int n_docs_ = 0;
  int vocab_ = 0;
  std::vector<int> word_doc_;
  std::vector<int> word_id_;
  std::vector<long> doc_begin_;  // flattened word ranges per document
  Eigen::MatrixXd psi_;          // K x W
  std::vector<std::vector<double>> theta_, pi_;  // D x K
  std::vector<std::vector<long>> doc_topic_;     // D x K counts
  std::shared_ptr<const InterpTable> table_;
};

// Cumulative held-out predictive: p_hat(w | d) is the running mean over
// samples of sum_k (pi_dk / sum_j pi_dj) psi_kw.
class BnbPerplexity {
 public:
  explicit BnbPerplexity(const Corpus& test) {
    n_docs_ = static_cast<int>(test.docs.size());
    for (int d = 0; d < n_docs_; ++d) {
      const auto& tokens = test.docs[d];
      std::size_t i = 0;
      while (i < tokens.size()) {
        std::size_t j = i;
        while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
        cells_.push_back({d, tokens[i], static_cast<long>(j - i), 0.0});
        total_words_ += static_cast<long>(j - i);
        i = j;
      }
    }
  }

  long total_words() const { return total_words_; }

  void add_sample(const BnbModel& model) {
    if (static_cast<int>(model.pi().size()) != n_docs_)
      throw std::invalid_argument("BnbPerplexity: document count mismatch");
    ++samples_;
    for (Cell& cell : cells_) {
      const auto& pi = model.pi()[cell.doc];
      double tot = 0.0;
      for (double p : pi) tot += p;
      double prob = 0.0;
      if (tot > 0.0)
        for (std::size_t k = 0; k < pi.size(); ++k)
          prob += pi[k] / tot * model.topics()(k, cell.word - 1);
      cell.accum += prob;
    }
  }

  // exp(-(sum over test words of log p_hat) / #test words)
  double perplexity() const {
    if (samples_ == 0 || total_words_ == 0)
      throw std::logic_error("BnbPerplexity: no samples or empty test set");
    double ll = 0.0;
    for (const Cell& cell : cells_) {
      double p = cell.accum / static_cast<double>(samples_);
      ll += static_cast<double>(cell.mult) * std::log(std::max(p, 1e-300));
    }
    return std::exp(-ll / static_cast<double>(total_words_));
  }

 private:
  struct Cell {
    int doc;
    int word;
    long mult;
    double accum;
  };
  std::vector<Cell> cells_;
  int n_docs_ = 0;
  long samples_ = 0;
  long total_words_ = 0;
};

}  // namespace crmslice

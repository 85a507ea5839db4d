#pragma once

// Synthetic data generation, sparse bag-of-words corpus I/O, and train/test
// word splits.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crmslice/rng.hpp"
#include "crmslice/series.hpp"

namespace crmslice {

struct SyntheticSpec {
  long n = 1000;
  int k_true = 0;  // 0: derive 2*ceil(log n)
  int dim = 0;     // 0: derive 2*ceil(n log n / (n - log n))
  double sigma = 0.2;
  double sigma0 = 0.5;
  double c = 1.0;
  std::uint64_t seed = 0;

  // natural logs throughout
  int derived_k() const {
    return k_true > 0 ? k_true : 2 * static_cast<int>(std::ceil(std::log(static_cast<double>(n))));
  }
  int derived_dim() const {
    if (dim > 0) return dim;
    double ln = std::log(static_cast<double>(n));
    return 2 * static_cast<int>(std::ceil(static_cast<double>(n) * ln /
                                          (static_cast<double>(n) - ln)));
  }
};

struct BbSynthetic {
  Eigen::MatrixXd y;
  Eigen::MatrixXd psi;                  // K_true x D ground truth
  std::vector<std::vector<int>> x;      // active columns per row (1-based)
  std::vector<double> thetas;           // ground-truth rates
};

// Ancestral draw from the truncated beta-Bernoulli model.
inline BbSynthetic gen_bb_synthetic(const SyntheticSpec& spec) {
  const int k = spec.derived_k();
  const int d = spec.derived_dim();
  Rng rng(spec.seed);
  BondessonBetaRep rep(spec.c, 1.0);
  PriorAtoms atoms = simulate_prior_atoms(rep, k, rng);
  BbSynthetic out;
  out.thetas = atoms.weights;
  out.psi.resize(k, d);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) out.psi(i, j) = rng.normal(0.0, spec.sigma0);
  out.y.resize(spec.n, d);
  out.x.resize(spec.n);
  for (long n = 0; n < spec.n; ++n) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < k; ++i) {
      if (rng.uniform() < out.thetas[i]) {
        out.x[n].push_back(i + 1);
        mean += out.psi.row(i).transpose();
      }
    }
    for (int j = 0; j < d; ++j) out.y(n, j) = mean(j) + rng.normal(0.0, spec.sigma);
  }
  return out;
}

struct Corpus {
  std::vector<std::vector<int>> docs;  // word ids in [1, W]
  int vocab = 0;

  long total_words() const {
    long t = 0;
    for (const auto& d : docs) t += static_cast<long>(d.size());
    return t;
  }
};

// Sparse bag-of-words text format: header "D W NNZ", then "doc word count"
// triples (1-based ids). Counts expand into word tokens sorted by word id.
inline Corpus load_bow_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_bow_corpus: cannot read " + path);
  long d = 0, w = 0, nnz = 0;
  if (!(in >> d >> w >> nnz) || d < 0 || w < 0 || nnz < 0)
    throw std::runtime_error("load_bow_corpus: malformed header in " + path);
  Corpus corpus;
  corpus.vocab = static_cast<int>(w);
  corpus.docs.assign(d, {});
  for (long i = 0; i < nnz; ++i) {
    long doc = 0, word = 0, count = 0;
    if (!(in >> doc >> word >> count))
      throw std::runtime_error("load_bow_corpus: malformed entry in " + path);
    if (doc < 1 || doc > d || word < 1 || word > w || count < 1)
      throw std::runtime_error("load_bow_corpus: entry out of range in " + path);
    for (long c = 0; c < count; ++c) corpus.docs[doc - 1].push_back(static_cast<int>(word));
  }
  for (auto& tokens : corpus.docs) std::sort(tokens.begin(), tokens.end());
  return corpus;
}

inline void save_bow_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_bow_corpus: cannot write " + path);
  std::ostringstream body;
  long nnz = 0;
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& tokens = corpus.docs[d];
    std::size_t i = 0;
    while (i < tokens.size()) {
      std::size_t j = i;
      while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
      body << (d + 1) << " " << tokens[i] << " " << (j - i) << "\n";
      ++nnz;
      i = j;
    }
  }
  out << corpus.docs.size() << " " << corpus.vocab << " " << nnz << "\n" << body.str();
}

// Per-document uniform partition of token positions; the test share per
// document is round-to-nearest with ties down.
inline std::pair<Corpus, Corpus> split_words(const Corpus& corpus, double test_frac,
                                             std::uint64_t seed) {
  if (!(test_frac >= 0.0 && test_frac < 1.0))
    throw std::invalid_argument("split_words: test_frac must be in [0, 1)");
  Corpus train, test;
  train.vocab = test.vocab = corpus.vocab;
  train.docs.resize(corpus.docs.size());
  test.docs.resize(corpus.docs.size());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& tokens = corpus.docs[d];
    const std::size_t n = tokens.size();
    const std::size_t n_test =
        static_cast<std::size_t>(std::ceil(test_frac * static_cast<double>(n) - 0.5));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng::stream(seed, 0x5114ULL /*split tag*/, d);
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng.uniform() * i);
      if (j >= i) j = i - 1;
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t i = 0; i < n; ++i)
      (i < n_test ? test.docs[d] : train.docs[d]).push_back(tokens[order[i]]);
    std::sort(train.docs[d].begin(), train.docs[d].end());
    std::sort(test.docs[d].begin(), test.docs[d].end());
  }
  return {std::move(train), std::move(test)};
}

struct BnbSyntheticSpec {
  int docs = 20;
  int vocab = 50;
  int topics = 5;
  double words_per_doc = 120.0;
  double topic_concentration = 0.1;  // Dirichlet over words
  double mix_concentration = 1.0;    // Dirichlet over topics per doc
  std::uint64_t seed = 0;
};

// Topic-mixture corpus with a known number of true topics.
inline Corpus gen_bnb_synthetic(const BnbSyntheticSpec& spec) {
  Rng rng(spec.seed);
  std::vector<std::vector<double>> topics(spec.topics);
  std::vector<double> beta(spec.vocab, spec.topic_concentration);
  for (auto& t : topics) rng.dirichlet(beta, t);
  Corpus corpus;
  corpus.vocab = spec.vocab;
  corpus.docs.resize(spec.docs);
  std::vector<double> mix_alpha(spec.topics, spec.mix_concentration);
  std::vector<double> mix;
  for (int d = 0; d < spec.docs; ++d) {
    rng.dirichlet(mix_alpha, mix);
    long n = rng.poisson(spec.words_per_doc);
    for (long i = 0; i < n; ++i) {
      std::size_t z = rng.categorical(mix);
      std::size_t w = rng.categorical(topics[z]);
      corpus.docs[d].push_back(static_cast<int>(w) + 1);
    }
    std::sort(corpus.docs[d].begin(), corpus.docs[d].end());
  }
  return corpus;
}

}  // namespace crmslice

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crmslice/data.hpp"
#include "crmslice/model_bnb.hpp"
#include "crmslice/quadrature.hpp"
#include "geweke.hpp"

using namespace crmslice;

namespace {

BnbModel small_model(int docs, int vocab, double r, Corpus corpus) {
  BnbParams p;
  p.alpha = 1.0;
  p.lambda = 1.1;
  p.beta.assign(vocab, 0.5);
  p.r.assign(docs, r);
  auto table = BnbModel::build_table(p, docs, 200, 1e-30, 2);
  return BnbModel(p, std::move(corpus), table);
}

Corpus tiny_corpus(int docs, int vocab, std::initializer_list<std::initializer_list<int>> words) {
  Corpus c;
  c.vocab = vocab;
  for (auto& d : words) c.docs.emplace_back(d);
  while (static_cast<int>(c.docs.size()) < docs) c.docs.emplace_back();
  return c;
}

}  // namespace

TEST_CASE("auto r follows the document lengths", "[model_bnb]") {
  Corpus c = tiny_corpus(2, 3, {{1, 2, 3, 1}, {2, 2}});
  auto r = BnbParams::auto_r(c, 1.0, 1.1);
  CHECK_THAT(r[0], Catch::Matchers::WithinRel(4.0 * 0.1 / 1.1, 1e-12));
  CHECK_THAT(r[1], Catch::Matchers::WithinRel(2.0 * 0.1 / 1.1, 1e-12));
}

TEST_CASE("bnb pmf against a quadrature oracle", "[model_bnb]") {
  // integral of NB(x; r, theta) against Beta(theta; a, b)
  Rng rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    double r = 0.5 + 4.0 * rng.uniform();
    double a = 0.2 + 2.0 * rng.uniform();
    double b = 0.3 + 2.0 * rng.uniform();
    long x = static_cast<long>(rng.uniform() * 5);
    auto integrand = [&](double th) {
      double nb = std::lgamma(x + r) - std::lgamma(r) - std::lgamma(x + 1.0) +
                  r * std::log1p(-th) + x * std::log(th);
      double beta_d = (a - 1.0) * std::log(th) + (b - 1.0) * std::log1p(-th) -
                      (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
      return std::exp(nb + beta_d);
    };
    double oracle = integrate(integrand, 1e-12, 1.0 - 1e-12, 1e-10, 20000);
    CHECK_THAT(bnb_log_pmf(x, r, a, b), Catch::Matchers::WithinAbs(std::log(oracle), 1e-5));
  }
}

TEST_CASE("bnb zero pmf via beta functions", "[model_bnb]") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    double r = 0.5 + 4.0 * rng.uniform();
    double a = 0.2 + 2.0 * rng.uniform();
    double b = 0.3 + 2.0 * rng.uniform();
    double direct = (std::lgamma(a) + std::lgamma(b + r) - std::lgamma(a + b + r)) -
                    (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    CHECK_THAT(bnb_log_pmf(0, r, a, b), Catch::Matchers::WithinAbs(direct, 1e-12));
  }
}

TEST_CASE("rate identity for the pi conditional", "[model_bnb]") {
  // (1-theta)/theta + 1 = 1/theta
  for (double theta : {0.1, 0.5, 0.93})
    CHECK_THAT((1.0 - theta) / theta + 1.0, Catch::Matchers::WithinRel(1.0 / theta, 1e-14));
}

TEST_CASE("theta conditional with no counts is the tilted prior", "[model_bnb]") {
  BnbModel model = small_model(1, 2, 3.0, tiny_corpus(1, 2, {{1}}));
  Rng rng(7);
  const double tau = 0.4;
  double a = 1.0 * 1.1 * tau;
  double b = 1.1 * (1.0 - 1.0 * tau);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += model.sample_theta_pi(0, 3.0, tau, rng).first;
  double expect = (a) / (a + b + 3.0);
  CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(expect, 4.0 * 0.5 / std::sqrt(double(n))));
}

TEST_CASE("pi conditional has the gamma moments", "[model_bnb]") {
  BnbModel model = small_model(1, 2, 2.0, tiny_corpus(1, 2, {{1}}));
  Rng rng(8);
  const double tau = 0.3;
  const long x = 3;
  const int n = 200000;
  double sum = 0.0, cond_sum = 0.0;
  long kept = 0;
  for (int i = 0; i < n; ++i) {
    auto [theta, pi] = model.sample_theta_pi(x, 2.0, tau, rng);
    sum += pi;
    // E[pi | theta] = (r + x) * theta
    if (theta > 0.45 && theta < 0.55) {
      cond_sum += pi;
      ++kept;
    }
  }
  REQUIRE(kept > 100);
  CHECK_THAT(cond_sum / kept, Catch::Matchers::WithinRel((2.0 + x) * 0.5, 0.05));
  (void)sum;
}

TEST_CASE("topic rows are dirichlet draws", "[model_bnb]") {
  // doc with 4 copies of word 1 assigned to topic 1
  Corpus c = tiny_corpus(1, 3, {{1, 1, 1, 1}});
  BnbModel model = small_model(1, 3, 2.0, c);
  ChainState st = ChainState::initial(4);
  st.K = 1;
  st.resize_atoms(1, 0.5, 0.9);
  for (int w = 0; w < 4; ++w) {
    st.rows[w].set(1, 1);
    st.k_max[w] = 1;
  }
  model.refresh_counts(st);
  Rng rng(9);
  const int n = 50000;
  double mean1 = 0.0;
  for (int i = 0; i < n; ++i) {
    model.sample_traits(st, rng);
    mean1 += model.topics()(0, 0);
  }
  // Dirichlet(0.5 + 4, 0.5, 0.5) mean for word 1
  double expect = 4.5 / 5.5;
  CHECK_THAT(mean1 / n, Catch::Matchers::WithinAbs(expect, 4.0 * 0.2 / std::sqrt(double(n))));

  // with no words in a topic the row is the prior Dirichlet
  ChainState empty = ChainState::initial(4);
  empty.K = 1;
  empty.resize_atoms(1, 0.5, 0.9);
  model.refresh_counts(empty);
  double mean_prior = 0.0;
  for (int i = 0; i < n; ++i) {
    model.sample_traits(empty, rng);
    mean_prior += model.topics()(0, 0);
  }
  CHECK_THAT(mean_prior / n, Catch::Matchers::WithinAbs(1.0 / 3.0, 4.0 * 0.3 / std::sqrt(double(n))));
}

TEST_CASE("word assignment matches the thresholded categorical weights", "[model_bnb]") {
  // Martingale check: across passes with varying (theta, pi), the realized
  // topic frequency must match the average of the exact per-pass weights
  // pi_k psi(k, y) exp(k/delta) over in-slice topics.
  XiSequence xi(1.0);
  Corpus c = tiny_corpus(1, 2, {{1}});
  BnbParams p;
  p.alpha = 1.0;
  p.lambda = 1.1;
  p.beta.assign(2, 0.5);
  p.r.assign(1, 2.0);
  auto table = BnbModel::build_table(p, 1, 100, 1e-30, 1);
  BnbModel model(p, c, table);
  Rng init(2);

  ChainState st = ChainState::initial(1);
  st.K = 2;
  st.resize_atoms(2);
  st.gammas = {0.4, 1.1};
  st.marks = {0.9, 0.8};
  model.refresh_counts(st);
  std::vector<double> taus{0.9 * std::exp(-0.4 / p.c()), 0.8 * std::exp(-1.1 / p.c())};

  const int trials = 60000;
  double hits = 0.0, expect_sum = 0.0, var_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    st.U[0] = xi(2) * 0.5;  // both topics in-slice
    st.rows[0].clear();
    st.k_max[0] = 0;
    st.k_max2[0] = 0;
    Rng rng(1000 + t);
    model.sample_traits(st, rng);
    AssignContext ctx;
    ctx.xi = &xi;
    ctx.thetas = &taus;
    ctx.seed = 505;
    ctx.iteration = t;
    model.sample_assignments(st, ctx);
    double w1 = model.pi()[0][0] * model.topics()(0, 0) * std::exp(1.0);
    double w2 = model.pi()[0][1] * model.topics()(1, 0) * std::exp(2.0);
    double p2 = w2 / (w1 + w2);
    expect_sum += p2;
    var_sum += p2 * (1.0 - p2);
    hits += st.k_max[0] == 2 ? 1.0 : 0.0;
  }
  double se = std::sqrt(var_sum);
  CHECK_THAT(hits, Catch::Matchers::WithinAbs(expect_sum, 4.0 * se));
}

TEST_CASE("generic khat slice factor coincides with the per-word rule", "[model_bnb]") {
  // a one-hot row at topic k has k_n = k and k'_n = 0, so the generic
  // xi(khat)^{-1} factor of that configuration is exactly the per-word
  // 1/xi(k); emptying the row falls back to xi(0).
  for (int k = 1; k <= 12; ++k) {
    CHECK(khat(k, 1, k, 0) == k);
    CHECK(khat(k, 0, k, 0) == 0);
  }
}

TEST_CASE("tail conditional with no documents is the prior increment", "[model_bnb]") {
  Corpus c;
  c.vocab = 2;
  BnbParams p;
  p.alpha = 1.0;
  p.lambda = 1.1;
  p.beta.assign(2, 0.5);
  p.r.clear();
  auto table = BnbModel::build_table(p, 0, 100, 1e-30, 1);
  BnbModel model(p, c, table);
  BondessonBetaRep rep(p.alpha, p.lambda);
  Rng rng(11);
  const double lo = 0.8;
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = 0.0, v = 0.0;
    crmslice::detail::draw_tail_pair_exact(model, rep, lo, rng, g, v);
    sum += g - lo;
  }
  CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(1.0, 4.0 / std::sqrt(double(n))));
}

TEST_CASE("sweeps keep counts and slices consistent", "[model_bnb]") {
  BnbSyntheticSpec spec;
  spec.docs = 4;
  spec.vocab = 6;
  spec.topics = 2;
  spec.words_per_doc = 12.0;
  spec.seed = 12;
  Corpus corpus = gen_bnb_synthetic(spec);
  BnbParams p;
  p.alpha = 1.0;
  p.lambda = 1.1;
  p.beta.assign(spec.vocab, 0.3);
  p.r = BnbParams::auto_r(corpus, p.alpha, p.lambda);
  auto table = BnbModel::build_table(p, spec.docs, 300, 1e-30, 2);
  BnbModel model(p, corpus, table);
  BondessonBetaRep rep(p.alpha, p.lambda);
  XiSequence xi(3.0);
  ChainState st = ChainState::initial(static_cast<int>(model.n_words()));
  for (int it = 0; it < 250; ++it) {
    sweep(st, model, rep, xi, RwConfig{}, 31, it, 1);
    check_state(st, xi);
    model.check_consistency(st);
  }
  // after burn-in every word should be assigned
  long assigned = 0;
  for (long w = 0; w < model.n_words(); ++w) assigned += st.k_max[w] > 0 ? 1 : 0;
  CHECK(assigned == model.n_words());
}

TEST_CASE("bnb sweeps are bit-identical across worker counts", "[model_bnb]") {
  BnbSyntheticSpec spec;
  spec.docs = 6;
  spec.vocab = 8;
  spec.topics = 2;
  spec.words_per_doc = 15.0;
  spec.seed = 21;
  Corpus corpus = gen_bnb_synthetic(spec);
  BnbParams p;
  p.alpha = 1.0;
  p.lambda = 1.1;
  p.beta.assign(spec.vocab, 0.3);
  p.r = BnbParams::auto_r(corpus, p.alpha, p.lambda);
  auto table = BnbModel::build_table(p, spec.docs, 200, 1e-30, 2);
  BondessonBetaRep rep(p.alpha, p.lambda);
  XiSequence xi(3.0);
  auto run = [&](int workers) {
    BnbModel model(p, corpus, table);
    ChainState st = ChainState::initial(static_cast<int>(model.n_words()));
    for (int it = 0; it < 40; ++it) sweep(st, model, rep, xi, RwConfig{}, 17, it, workers);
    return st;
  };
  ChainState a = run(1);
  ChainState b = run(3);
  REQUIRE(a.K == b.K);
  CHECK(a.gammas == b.gammas);
  CHECK(a.marks == b.marks);
  for (long w = 0; w < a.num_rows(); ++w) CHECK(a.k_max[w] == b.k_max[w]);
}

TEST_CASE("perplexity limits", "[model_bnb]") {
  // single topic with uniform psi: perplexity = vocabulary size
  const int vocab = 5;
  Corpus test = tiny_corpus(1, vocab, {{1, 2, 3}});
  BnbPerplexity perp(test);
  Corpus train = tiny_corpus(1, vocab, {{1}});
  BnbModel model = small_model(1, vocab, 2.0, train);
  ChainState st = ChainState::initial(1);
  st.K = 1;
  st.resize_atoms(1, 0.5, 0.9);
  model.refresh_counts(st);
  // install uniform topics and positive pi through one assignment pass
  XiSequence xi(3.0);
  // force psi uniform by using a huge symmetric prior
  BnbParams p_uniform;
  p_uniform.alpha = 1.0;
  p_uniform.lambda = 1.1;
  p_uniform.beta.assign(vocab, 1e9);
  p_uniform.r.assign(1, 2.0);
  auto table = BnbModel::build_table(p_uniform, 1, 100, 1e-30, 1);
  BnbModel uniform_model(p_uniform, train, table);
  Rng rng(3);
  uniform_model.refresh_counts(st);
  uniform_model.sample_traits(st, rng);
  std::vector<double> taus{0.4};
  AssignContext ctx;
  ctx.xi = &xi;
  ctx.thetas = &taus;
  ctx.seed = 1;
  ctx.iteration = 0;
  uniform_model.sample_assignments(st, ctx);
  BnbPerplexity perp_uniform(test);
  perp_uniform.add_sample(uniform_model);
  CHECK_THAT(perp_uniform.perplexity(), Catch::Matchers::WithinRel(double(vocab), 1e-3));
  CHECK(perp_uniform.total_words() == 3);
  // empty test set errors
  Corpus empty_test = tiny_corpus(1, vocab, {{}});
  BnbPerplexity empty(empty_test);
  CHECK_THROWS_AS(empty.perplexity(), std::logic_error);
  (void)perp;
}

TEST_CASE("geweke smoke test for the bnb slice sampler", "[model_bnb][geweke]") {
  geweke::BnbGewekeConfig cfg;
  cfg.n_samples = 20000;
  cfg.seed = 99;
  auto anc = geweke::bnb_ancestral(cfg);
  auto chain = geweke::bnb_chain(cfg);
  auto rows = geweke::compare(anc, chain);
  for (const auto& r : rows) {
    INFO(r.name << ": anc=" << r.mean_anc << " chain=" << r.mean_chain << " z=" << r.z);
    CHECK(std::abs(r.z) < 6.0);
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crmslice/series.hpp"

using namespace crmslice;

TEST_CASE("xi sequence values", "[series]") {
  XiSequence xi1(1.0);
  CHECK(xi1(0) == 1.0);
  CHECK_THAT(xi1(2), Catch::Matchers::WithinAbs(std::exp(-2.0), 1e-15));
  XiSequence xi3(3.0);
  CHECK_THAT(xi3(3), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-15));
  CHECK_THROWS_AS(XiSequence(0.0), std::invalid_argument);
}

TEST_CASE("xi is strictly decreasing and vanishes", "[series]") {
  for (double delta : {0.3, 1.0, 3.0}) {
    XiSequence xi(delta);
    for (int k = 0; k < 200; ++k) CHECK(xi(k + 1) < xi(k));
    CHECK(xi(4000) < 1e-300);
  }
}

TEST_CASE("xi max_index_for boundaries", "[series]") {
  XiSequence xi1(1.0);
  CHECK(xi1.max_index_for(1.0) == 0);
  CHECK(xi1.max_index_for(std::exp(-3.5)) == 3);
  XiSequence xi3(3.0);
  CHECK(xi3.max_index_for(std::exp(-2.0)) == 6);
  // equality at a knot maps to that index
  for (int k : {1, 5, 17}) CHECK(xi3.max_index_for(xi3(k)) == k);
}

TEST_CASE("bondesson tau", "[series]") {
  CHECK(bondesson_tau(1.0, 0.0, 2.0) == 1.0);
  CHECK_THAT(bondesson_tau(0.5, 2.0 * std::log(2.0), 2.0),
             Catch::Matchers::WithinAbs(0.25, 1e-15));
  CHECK(bondesson_tau(1.0, 1e8, 2.0) < 1e-300);
  BondessonBetaRep rep(1.0, 1.0);
  CHECK(rep.degenerate_mark());
  CHECK(rep.c() == 1.0);
  // tau decays below any tolerance for large arrivals
  CHECK(rep.tau(1.0, 100.0) < 1e-40);
}

TEST_CASE("simulate_prior_atoms basic structure", "[series]") {
  Rng rng(42);
  BondessonBetaRep rep(1.0, 1.0);
  auto atoms = simulate_prior_atoms(rep, 0, rng);
  CHECK(atoms.gammas.empty());
  CHECK(atoms.weights.empty());

  atoms = simulate_prior_atoms(rep, 50, rng);
  REQUIRE(atoms.gammas.size() == 50);
  CHECK(atoms.gammas.front() > 0.0);
  for (std::size_t i = 0; i + 1 < atoms.gammas.size(); ++i)
    CHECK(atoms.gammas[i] < atoms.gammas[i + 1]);
  for (std::size_t i = 0; i < atoms.gammas.size(); ++i) {
    CHECK(atoms.marks[i] == 1.0);  // degenerate marks
    CHECK_THAT(atoms.weights[i], Catch::Matchers::WithinAbs(std::exp(-atoms.gammas[i]), 1e-15));
  }
}

TEST_CASE("prior atoms total weight has mean alpha", "[series]") {
  // E[sum_k theta_k] = alpha; truncation chosen so the geometric tail is
  // below 1e-6.
  struct Case {
    double alpha, lambda;
  };
  for (Case cs : {Case{1.0, 1.0}, Case{1.5, 2.0}}) {
    BondessonBetaRep rep(cs.alpha, cs.lambda);
    double c = rep.c();
    int depth = 1;
    while ((c + 1.0) * std::pow(c / (c + 1.0), depth + 1) / cs.lambda > 1e-6) ++depth;
    Rng rng(7);
    const int n_sims = 20000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < n_sims; ++s) {
      auto atoms = simulate_prior_atoms(rep, depth, rng);
      double tot = 0.0;
      for (double w : atoms.weights) tot += w;
      sum += tot;
      sum_sq += tot * tot;
    }
    double mean = sum / n_sims;
    double sd = std::sqrt((sum_sq / n_sims - mean * mean) / n_sims);
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(cs.alpha, 4.0 * sd));
  }
}

TEST_CASE("bondesson marks follow Beta(1, lambda-1)", "[series]") {
  BondessonBetaRep rep(0.5, 3.0);
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rep.sample_mark(rng);
  // Beta(1, 2) has mean 1/3
  CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(1.0 / 3.0, 4.0 * 0.25 / std::sqrt(double(n))));
  CHECK_THAT(std::exp(rep.mark_logdensity(0.5)), Catch::Matchers::WithinRel(2.0 * 0.5, 1e-12));
}

#pragma once

// Fixed-truncation Gibbs baseline: the finite model with exactly K_fixed
// columns, no slice variables and no zero-set exponent. Assignment
// conditionals are the slice conditionals with every slice factor stripped.
// The last arrival keeps its prior-increment tail density.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "crmslice/engine.hpp"
#include "crmslice/mh.hpp"
#include "crmslice/series.hpp"
#include "crmslice/state.hpp"

namespace crmslice {

struct TruncConfig {
  int K_fixed = 1;

  void validate() const {
    if (K_fixed < 1) throw std::invalid_argument("TruncConfig: K_fixed must be >= 1");
  }
};

// State with K_fixed prior atoms and empty assignment rows.
template <SeriesRep Rep>
ChainState truncated_initial(int n_rows, int k_fixed, const Rep& rep, Rng& rng) {
  TruncConfig{k_fixed}.validate();
  ChainState st = ChainState::initial(n_rows);
  PriorAtoms atoms = simulate_prior_atoms(rep, k_fixed, rng);
  st.gammas = std::move(atoms.gammas);
  st.marks = std::move(atoms.marks);
  st.K = k_fixed;
  st.K_prev = k_fixed;
  return st;
}

template <class Model, SeriesRep Rep>
SweepStats trunc_sweep(ChainState& st, Model& model, const Rep& rep, const XiSequence& xi,
                       const RwConfig& cfg, std::uint64_t seed, std::int64_t iteration,
                       int workers = 1) {
  if (st.K != st.atom_count() || st.K < 1)
    throw std::invalid_argument("trunc_sweep: state must carry exactly K_fixed atoms");
  SweepStats stats;
  stats.K = st.K;
  stats.K_prev = st.K;
  st.K_prev = st.K;
  Rng g = Rng::stream(seed, static_cast<std::uint64_t>(iteration), 0);

  model.sample_traits(st, g);

  const bool joint_mark = !rep.degenerate_mark();
  for (int k = 1; k <= st.K; ++k) {
    const bool last = k == st.K;
    const double lo = st.gamma_at(k - 1);
    const double g_cur = st.gammas[k - 1];
    const double v_cur = st.marks[k - 1];
    Proposal pg = last ? propose_gamma_tail(g_cur, lo, cfg.n_gamma, g, cfg.hastings)
                       : propose_gamma_bounded(g_cur, lo, st.gamma_at(k + 1), cfg.n_gamma, g,
                                               cfg.hastings);
    double v_prop = v_cur;
    double log_ratio = pg.log_ratio;
    if (joint_mark) {
      Proposal pv = propose_v(v_cur, cfg.delta_v, g, cfg.hastings);
      v_prop = pv.value;
      log_ratio += pv.log_ratio;
    }
    auto logtarget = [&](double gamma, double v) {
      if (gamma < lo) return -std::numeric_limits<double>::infinity();
      double lt = model.col_count_loglik(k, gamma, v) + rep.mark_logdensity(v);
      if (last) lt -= gamma - lo;  // prior increment of the final arrival
      return lt;
    };
    if (last)
      ++stats.sub2_proposals;
    else
      ++stats.sub1_proposals;
    if (mh_accept(logtarget(g_cur, v_cur), logtarget(pg.value, v_prop), log_ratio, g)) {
      st.gammas[k - 1] = pg.value;
      st.marks[k - 1] = v_prop;
      if (last)
        ++stats.sub2_accepts;
      else
        ++stats.sub1_accepts;
    }
  }

  std::vector<double> thetas(st.K);
  for (int k = 1; k <= st.K; ++k) thetas[k - 1] = rep.tau(st.mark_at(k), st.gamma_at(k));

  AssignContext ctx;
  ctx.xi = &xi;
  ctx.thetas = &thetas;
  ctx.seed = seed;
  ctx.iteration = iteration;
  ctx.workers = workers;
  ctx.slice_on = false;
  model.sample_assignments(st, ctx);

  update_local_truncation(st);
  return stats;
}

}  // namespace crmslice

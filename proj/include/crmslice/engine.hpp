#pragma once

// One Gibbs sweep of the adaptive slice sampler. Per sweep, in this order:
// slice variables, truncation bookkeeping, atom-array resize, traits,
// (mark, arrival) updates in two substeps, discard beyond K, assignments,
// local truncation refresh. The order is load-bearing.
//
// Substep 2 walks k = K_prev..K in increasing order. The first index carries
// assignment counts and keeps its stored value, so it moves by MH with the
// tail proposal; every later index has zero counts and is redrawn exactly by
// rejection from its sequential conditional (prior increment proposal,
// acceptance = h(0|tau)^N * exp(-I)). Redrawing the later indices exactly is
// what keeps the whole block update invariant even though the first index
// only takes an MH step.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "crmslice/mh.hpp"
#include "crmslice/parallel.hpp"
#include "crmslice/rng.hpp"
#include "crmslice/series.hpp"
#include "crmslice/state.hpp"

namespace crmslice {

struct SweepStats {
  int K = 0;
  int K_prev = 0;
  long sub1_proposals = 0, sub1_accepts = 0;
  long sub2_proposals = 0, sub2_accepts = 0;
  long fresh_draws = 0;
};

// What k_n becomes when X_{nk} is set to proposed_x, given the current first
// and second maximum active indices.
inline int khat(int k, int proposed_x, int kn, int kn2) {
  if (proposed_x == 0 && k == kn) return kn2;
  if (proposed_x > 0 && k > kn) return k;
  return kn;
}

inline int khat(const ChainState& st, int n, int k, int proposed_x) {
  return khat(k, proposed_x, st.k_max[n], st.k_max2[n]);
}

// U_n ~ Unif(0, xi(k_n)] for every row, from the sweep's global stream.
inline void sample_slices(ChainState& st, const XiSequence& xi, Rng& rng) {
  for (int n = 0; n < st.num_rows(); ++n) st.U[n] = xi(st.k_max[n]) * rng.uniform_pos();
}

// K_prev = max_n k_n; K = max{k : xi(k) >= min_n U_n}.
inline void update_truncation(ChainState& st, const XiSequence& xi) {
  st.K_prev = 0;
  for (int kn : st.k_max) st.K_prev = std::max(st.K_prev, kn);
  if (st.num_rows() == 0) {
    st.K = 0;
    return;
  }
  double u_min = *std::min_element(st.U.begin(), st.U.end());
  st.K = xi.max_index_for(u_min);
}

inline void update_local_truncation(ChainState& st) {
  for (int n = 0; n < st.num_rows(); ++n) {
    st.k_max[n] = st.rows[n].max1();
    st.k_max2[n] = st.rows[n].max2();
  }
}

struct EntryChoice {
  double logslice_zero = 0.0;  // -log xi(khat(0))
  double logslice_pos = 0.0;   // -log xi(khat(x)) for any x > 0
};

struct AssignContext {
  const XiSequence* xi = nullptr;
  const std::vector<double>* thetas = nullptr;  // tau(V_k, gamma_k), k = 1..K
  std::uint64_t seed = 0;
  std::int64_t iteration = 0;
  int workers = 1;
  bool slice_on = true;
};

// Generic entrywise assignment scan for models whose count conditional can be
// drawn one entry at a time (EntryModel):
//   prepare_row(n, st, worker)
//   int sample_entry(n, k, theta, cur, EntryChoice, Rng&)
//   entry_cleared(n, k, old, worker)   -- forced zero beyond the slice bound
//   entry_changed(n, k, old, new, worker)
// Rows are scanned in increasing k; entries whose column lies beyond the
// row's slice bound are forced to zero first.
template <class EntryModel>
void entrywise_assignments(ChainState& st, EntryModel& model, const AssignContext& ctx) {
  const XiSequence& xi = *ctx.xi;
  const std::vector<double>& thetas = *ctx.thetas;
  const double inv_delta = 1.0 / xi.delta();
  parallel_for(st.num_rows(), ctx.workers, [&](int n, int worker) {
    Rng rng = Rng::stream(ctx.seed, static_cast<std::uint64_t>(ctx.iteration),
                          1 + static_cast<std::uint64_t>(n));
    SparseRow& row = st.rows[n];
    int bound = st.K;
    if (ctx.slice_on) bound = std::min(bound, xi.max_index_for(st.U[n]));
    while (row.max1() > bound) {
      int k = row.max1();
      model.entry_cleared(n, k, row.get(k), worker);
      row.set(k, 0);
    }
    model.prepare_row(n, st, worker);
    for (int k = 1; k <= bound; ++k) {
      const int kn = row.max1();
      const int kn2 = row.max2();
      const int cur = row.get(k);
      EntryChoice ch;
      if (ctx.slice_on) {
        ch.logslice_zero = khat(k, 0, kn, kn2) * inv_delta;
        ch.logslice_pos = khat(k, 1, kn, kn2) * inv_delta;
      }
      int nxt = model.sample_entry(n, k, thetas[k - 1], cur, ch, rng);
      if (nxt < 0) throw std::logic_error("sample_entry returned a negative count");
      if (nxt != cur) {
        row.set(k, nxt);
        model.entry_changed(n, k, cur, nxt, worker);
      }
    }
    st.k_max[n] = row.max1();
    st.k_max2[n] = row.max2();
  });
}

namespace detail {

// Exact draw of a tail pair from its sequential conditional,
//   p(gamma, v) ~ Exp(gamma - lo) G(dv) h(0|tau(v,gamma))^N exp(-I(gamma)),
// valid only for columns with zero assignment counts.
template <class Model, SeriesRep Rep>
void draw_tail_pair_exact(const Model& model, const Rep& rep, double lo, Rng& rng, double& gamma,
                          double& v) {
  for (long guard = 0;; ++guard) {
    gamma = lo + rng.exponential();
    v = rep.sample_mark(rng);
    double log_acc = model.col_count_loglik_zero(gamma, v) - model.zeroset_I(gamma);
    if (std::log(rng.uniform_pos()) < log_acc) return;
    if (guard > 200000000L) throw std::runtime_error("tail atom rejection sampler stalled");
  }
}

}  // namespace detail

// Substep 1 (interval-constrained MH for occupied columns 1..K_prev-1) and
// substep 2 (tail expansion for K_prev..K). `old_atoms` is the array length
// before this sweep's resize.
template <class Model, SeriesRep Rep>
void sample_weights(ChainState& st, Model& model, const Rep& rep, const RwConfig& cfg,
                    int old_atoms, Rng& rng, SweepStats& stats) {
  const bool joint_mark = !rep.degenerate_mark();
  for (int k = 1; k <= st.K_prev - 1; ++k) {
    const double lo = st.gamma_at(k - 1);
    const double hi = st.gamma_at(k + 1);
    const double g_cur = st.gammas[k - 1];
    const double v_cur = st.marks[k - 1];
    Proposal pg = propose_gamma_bounded(g_cur, lo, hi, cfg.n_gamma, rng, cfg.hastings);
    double v_prop = v_cur;
    double log_ratio = pg.log_ratio;
    if (joint_mark) {
      Proposal pv = propose_v(v_cur, cfg.delta_v, rng, cfg.hastings);
      v_prop = pv.value;
      log_ratio += pv.log_ratio;
    }
    double lt_cur = model.col_count_loglik(k, g_cur, v_cur) + rep.mark_logdensity(v_cur);
    double lt_prop = model.col_count_loglik(k, pg.value, v_prop) + rep.mark_logdensity(v_prop);
    ++stats.sub1_proposals;
    if (mh_accept(lt_cur, lt_prop, log_ratio, rng)) {
      st.gammas[k - 1] = pg.value;
      st.marks[k - 1] = v_prop;
      ++stats.sub1_accepts;
    }
  }
  const int first = std::max(st.K_prev, 1);
  for (int k = first; k <= st.K; ++k) {
    const double lo = st.gamma_at(k - 1);
    if (k == first && k <= old_atoms) {
      const double g_cur = st.gammas[k - 1];
      const double v_cur = st.marks[k - 1];
      Proposal pg = propose_gamma_tail(g_cur, lo, cfg.n_gamma, rng, cfg.hastings);
      double v_prop = v_cur;
      double log_ratio = pg.log_ratio;
      if (joint_mark) {
        Proposal pv = propose_v(v_cur, cfg.delta_v, rng, cfg.hastings);
        v_prop = pv.value;
        log_ratio += pv.log_ratio;
      }
      auto tail_logtarget = [&](double g, double v) {
        if (g < lo) return -std::numeric_limits<double>::infinity();
        return model.col_count_loglik(k, g, v) + rep.mark_logdensity(v) - (g - lo) -
               model.zeroset_I(g);
      };
      ++stats.sub2_proposals;
      if (mh_accept(tail_logtarget(g_cur, v_cur), tail_logtarget(pg.value, v_prop), log_ratio,
                    rng)) {
        st.gammas[k - 1] = pg.value;
        st.marks[k - 1] = v_prop;
        ++stats.sub2_accepts;
      }
    } else {
      double g = 0.0, v = 0.0;
      detail::draw_tail_pair_exact(model, rep, lo, rng, g, v);
      st.gammas[k - 1] = g;
      st.marks[k - 1] = v;
      ++stats.fresh_draws;
    }
  }
}

// Model requirements beyond the EntryModel hooks used by its own assignment
// step: sample_traits, col_count_loglik, col_count_loglik_zero, zeroset_I,
// sample_assignments, discard_traits, check_consistency.
template <class Model, SeriesRep Rep>
SweepStats sweep(ChainState& st, Model& model, const Rep& rep, const XiSequence& xi,
                 const RwConfig& cfg, std::uint64_t seed, std::int64_t iteration,
                 int workers = 1) {
  SweepStats stats;
  Rng g = Rng::stream(seed, static_cast<std::uint64_t>(iteration), 0);

  sample_slices(st, xi, g);
  update_truncation(st, xi);
  stats.K = st.K;
  stats.K_prev = st.K_prev;

  const int old_atoms = st.atom_count();
  if (st.K > old_atoms)
    st.resize_atoms(st.K, std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN());

  model.sample_traits(st, g);
  sample_weights(st, model, rep, cfg, old_atoms, g, stats);

  if (st.atom_count() > st.K) st.resize_atoms(st.K);
  model.discard_traits(st.K);

  std::vector<double> thetas(st.K);
  for (int k = 1; k <= st.K; ++k) thetas[k - 1] = rep.tau(st.mark_at(k), st.gamma_at(k));

  AssignContext ctx;
  ctx.xi = &xi;
  ctx.thetas = &thetas;
  ctx.seed = seed;
  ctx.iteration = iteration;
  ctx.workers = workers;
  ctx.slice_on = true;
  model.sample_assignments(st, ctx);

  update_local_truncation(st);
  return stats;
}

}  // namespace crmslice

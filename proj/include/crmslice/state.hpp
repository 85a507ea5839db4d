#pragma once

// Mutable sampler state shared by the slice engine and the fixed-truncation
// baseline. Assignment rows are sparse: sorted (column, count) pairs with
// positive counts, so the first and second maximum active indices are O(1).

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "crmslice/series.hpp"

namespace crmslice {

class SparseRow {
 public:
  int get(int k) const {
    auto it = find(k);
    return it != e_.end() && it->first == k ? it->second : 0;
  }

  void set(int k, int count) {
    if (count < 0) throw std::invalid_argument("SparseRow: negative count");
    auto it = find(k);
    const bool present = it != e_.end() && it->first == k;
    if (count == 0) {
      if (present) e_.erase(it);
    } else if (present) {
      it->second = count;
    } else {
      e_.insert(it, {k, count});
    }
  }

  // Largest active column, 0 when empty.
  int max1() const { return e_.empty() ? 0 : e_.back().first; }
  // Second largest active column, 0 when fewer than two.
  int max2() const { return e_.size() < 2 ? 0 : e_[e_.size() - 2].first; }

  std::size_t nnz() const { return e_.size(); }
  long total() const {
    long t = 0;
    for (auto& [k, c] : e_) t += c;
    return t;
  }
  void clear() { e_.clear(); }

  const std::vector<std::pair<int, int>>& entries() const { return e_; }

 private:
  std::vector<std::pair<int, int>>::iterator find(int k) {
    return std::lower_bound(e_.begin(), e_.end(), k,
                            [](const auto& e, int key) { return e.first < key; });
  }
  std::vector<std::pair<int, int>>::const_iterator find(int k) const {
    return std::lower_bound(e_.begin(), e_.end(), k,
                            [](const auto& e, int key) { return e.first < key; });
  }

  std::vector<std::pair<int, int>> e_;
};

struct ChainState {
  // Atom arrays, one entry per instantiated column 1..K (0-based storage).
  std::vector<double> gammas;
  std::vector<double> marks;

  // Per-row slice state.
  std::vector<SparseRow> rows;
  std::vector<double> U;
  std::vector<int> k_max;   // k_n
  std::vector<int> k_max2;  // k'_n

  int K = 0;
  int K_prev = 0;

  int num_rows() const { return static_cast<int>(rows.size()); }
  int atom_count() const { return static_cast<int>(gammas.size()); }

  double gamma_at(int k) const { return k == 0 ? 0.0 : gammas[k - 1]; }
  double mark_at(int k) const { return marks[k - 1]; }

  // Fresh state with n empty rows: X = 0, K = K_prev = 0, k = k' = 0.
  static ChainState initial(int n) {
    ChainState st;
    st.reset_rows(n);
    return st;
  }

  void reset_rows(int n) {
    rows.assign(n, SparseRow());
    U.assign(n, 1.0);
    k_max.assign(n, 0);
    k_max2.assign(n, 0);
    K = atom_count();
    K_prev = 0;
  }

  void resize_atoms(int k, double gamma_fill = -1.0, double mark_fill = -1.0) {
    gammas.resize(k, gamma_fill);
    marks.resize(k, mark_fill);
  }
};

struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Structural invariants; model-specific consistency lives with the models.
// `with_slices` is false for fixed-truncation states, which carry no slice
// variables.
inline void check_state(const ChainState& st, const XiSequence& xi, bool with_slices = true) {
  auto fail = [](const std::string& msg) { throw InvariantViolation("chain state: " + msg); };
  if (st.atom_count() != st.K || static_cast<int>(st.marks.size()) != st.K)
    fail("atom arrays must have exactly K entries");
  for (int k = 1; k <= st.K; ++k) {
    if (!(st.gamma_at(k) > st.gamma_at(k - 1))) fail("gammas must be strictly increasing");
  }
  const int n = st.num_rows();
  if (static_cast<int>(st.U.size()) != n || static_cast<int>(st.k_max.size()) != n ||
      static_cast<int>(st.k_max2.size()) != n)
    fail("row array sizes disagree");
  for (int i = 0; i < n; ++i) {
    const SparseRow& row = st.rows[i];
    if (row.max1() != st.k_max[i]) fail("cached k_n disagrees with row");
    if (row.max2() != st.k_max2[i]) fail("cached k'_n disagrees with row");
    if (st.k_max2[i] != 0 && !(st.k_max2[i] < st.k_max[i])) fail("k'_n must be below k_n");
    if (row.max1() > st.K) fail("active column beyond K");
    for (auto& [k, c] : row.entries()) {
      if (k < 1 || c <= 0) fail("invalid sparse entry");
    }
    if (with_slices && (!(st.U[i] > 0.0) || st.U[i] > xi(st.k_max[i])))
      fail("slice variable outside (0, xi(k_n)]");
  }
}

}  // namespace crmslice

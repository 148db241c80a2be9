#pragma once

// Markov moves: integer vectors b with A b = 0, applied to tables as long as
// every cell stays nonnegative (and, for simple graphs, every dyad keeps
// exactly one observation).

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include <json.hpp>

#include "fibergof/checked.hpp"
#include "fibergof/design_matrix.hpp"
#include "fibergof/errors.hpp"
#include "fibergof/graph_tables.hpp"
#include "fibergof/model_zoo.hpp"

namespace fibergof {

struct MoveEntry {
  std::size_t cell;
  std::int64_t delta;

  friend bool operator==(const MoveEntry&, const MoveEntry&) = default;
};

inline bool is_move(const DesignMatrix& a, std::span<const MoveEntry> sparse) {
  std::vector<std::int64_t> image(a.rows(), 0);
  for (const auto& e : sparse) {
    if (e.cell >= a.cols()) throw DimensionMismatch("move touches a cell outside the design matrix");
    for (const auto& m : a.column(e.cell))
      image[m.index] = checked_add(image[m.index], checked_mul(m.value, e.delta));
  }
  return std::all_of(image.begin(), image.end(), [](std::int64_t v) { return v == 0; });
}

/// True iff A * delta == 0 exactly.
inline bool is_move(const DesignMatrix& a, std::span<const std::int64_t> delta) {
  if (delta.size() != a.cols()) throw DimensionMismatch("move length does not match design matrix columns");
  std::vector<MoveEntry> sparse;
  for (std::size_t c = 0; c < delta.size(); ++c)
    if (delta[c] != 0) sparse.push_back({c, delta[c]});
  return is_move(a, sparse);
}

/// A sparse lattice move. Every Move is an element of ker A for the matrix
/// it was constructed against; negation and integer combinations of moves
/// stay in the kernel, so those are the only unchecked ways to make one.
class Move {
 public:
  /// The zero move.
  Move() = default;

  Move(const DesignMatrix& a, std::vector<MoveEntry> entries) : entries_(normalize(std::move(entries))) {
    if (!is_move(a, entries_)) throw InvalidInput("vector is not in the kernel of the design matrix");
  }

  static Move from_dense(const DesignMatrix& a, std::span<const std::int64_t> delta) {
    if (delta.size() != a.cols()) throw DimensionMismatch("move length does not match design matrix columns");
    std::vector<MoveEntry> e;
    for (std::size_t c = 0; c < delta.size(); ++c)
      if (delta[c] != 0) e.push_back({c, delta[c]});
    return Move(a, std::move(e));
  }

  /// sum_i coeffs[i] * moves[i]
  static Move combine(std::span<const Move> moves, std::span<const std::int64_t> coeffs) {
    std::vector<MoveEntry> acc;
    for (std::size_t i = 0; i < moves.size(); ++i) {
      if (coeffs[i] == 0) continue;
      for (const auto& e : moves[i].entries_) acc.push_back({e.cell, checked_mul(e.delta, coeffs[i])});
    }
    Move m;
    m.entries_ = normalize(std::move(acc));
    return m;
  }

  Move negated() const {
    Move m = *this;
    for (auto& e : m.entries_) e.delta = -e.delta;
    return m;
  }

  std::span<const MoveEntry> entries() const { return entries_; }
  bool is_zero() const { return entries_.empty(); }

  /// Exponent vector of the leading monomial (cells with positive delta).
  std::vector<MoveEntry> positive_part() const {
    std::vector<MoveEntry> out;
    for (const auto& e : entries_)
      if (e.delta > 0) out.push_back(e);
    return out;
  }

  /// Exponent vector of the trailing monomial, as positive counts.
  std::vector<MoveEntry> negative_part() const {
    std::vector<MoveEntry> out;
    for (const auto& e : entries_)
      if (e.delta < 0) out.push_back({e.cell, -e.delta});
    return out;
  }

  std::vector<std::int64_t> dense(std::size_t length) const {
    std::vector<std::int64_t> out(length, 0);
    for (const auto& e : entries_) out.at(e.cell) = e.delta;
    return out;
  }

  std::int64_t l1_norm() const {
    std::int64_t s = 0;
    for (const auto& e : entries_) s += std::abs(e.delta);
    return s;
  }

  friend bool operator==(const Move&, const Move&) = default;
  friend bool operator<(const Move& a, const Move& b) {
    return std::lexicographical_compare(a.entries_.begin(), a.entries_.end(), b.entries_.begin(), b.entries_.end(),
                                        [](const MoveEntry& x, const MoveEntry& y) {
                                          return x.cell != y.cell ? x.cell < y.cell : x.delta < y.delta;
                                        });
  }

 private:
  static std::vector<MoveEntry> normalize(std::vector<MoveEntry> e) {
    std::sort(e.begin(), e.end(), [](const MoveEntry& x, const MoveEntry& y) { return x.cell < y.cell; });
    std::vector<MoveEntry> out;
    for (const auto& x : e) {
      if (!out.empty() && out.back().cell == x.cell) out.back().delta = checked_add(out.back().delta, x.delta);
      else out.push_back(x);
      if (out.back().delta == 0) out.pop_back();
    }
    return out;
  }

  std::vector<MoveEntry> entries_;
};

/// Lattice basis of ker_Z(A): every integer vector in the kernel is an
/// integer combination of `moves`.
struct LatticeBasis {
  std::vector<Move> moves;
  std::size_t rank = 0;  // columns minus rank(A)
};

namespace detail {

using WideColumn = std::vector<wide_int>;

inline wide_int wide_abs(wide_int v) { return v < 0 ? -v : v; }

inline wide_int round_div(wide_int num, wide_int den) {
  // nearest integer to num/den, den > 0
  wide_int q = num / den, r = num % den;
  if (r < 0) {
    r += den;
    q -= 1;
  }
  if (2 * r > den) q += 1;
  return q;
}

inline wide_int dot(const WideColumn& a, const WideColumn& b) {
  wide_int s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0 && b[i] != 0) s = checked_add(s, checked_mul(a[i], b[i]));
  return s;
}

// Pairwise size reduction: b_i -= round(<b_i,b_j>/<b_j,b_j>) b_j while it
// shortens b_i. Unimodular, so the lattice is unchanged.
inline void size_reduce(std::vector<WideColumn>& basis, int max_passes) {
  std::vector<wide_int> norms(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) norms[i] = dot(basis[i], basis[i]);
  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t j = 0; j < basis.size(); ++j) {
        if (i == j || norms[j] == 0) continue;
        const auto mu = round_div(dot(basis[i], basis[j]), norms[j]);
        if (mu == 0) continue;
        WideColumn reduced = basis[i];
        for (std::size_t k = 0; k < reduced.size(); ++k)
          if (basis[j][k] != 0) reduced[k] = checked_sub(reduced[k], checked_mul(mu, basis[j][k]));
        const auto nn = dot(reduced, reduced);
        if (nn < norms[i]) {
          basis[i] = std::move(reduced);
          norms[i] = nn;
          changed = true;
        }
      }
    if (!changed) break;
  }
}

}  // namespace detail

/// Lattice basis of the integer kernel by fraction-free unimodular column
/// elimination (column echelon form of A, tracking the transform U). The
/// trailing columns of U span ker_Z(A). Arithmetic is 128-bit and checked;
/// overflow throws. `reduce_passes` bounds an optional size-reduction step.
inline LatticeBasis integer_kernel(const DesignMatrix& a, int reduce_passes = 2) {
  const std::size_t m = a.rows(), l = a.cols();
  using detail::WideColumn;
  std::vector<WideColumn> work(l, WideColumn(m, 0));
  std::vector<WideColumn> transform(l, WideColumn(l, 0));
  for (std::size_t c = 0; c < l; ++c) {
    for (const auto& e : a.column(c)) work[c][e.index] = e.value;
    transform[c][c] = 1;
  }

  auto axpy = [&](std::size_t target, std::size_t source, wide_int q, std::size_t from_row) {
    for (std::size_t r = from_row; r < m; ++r)
      if (work[source][r] != 0) work[target][r] = checked_sub(work[target][r], checked_mul(q, work[source][r]));
    for (std::size_t r = 0; r < l; ++r)
      if (transform[source][r] != 0)
        transform[target][r] = checked_sub(transform[target][r], checked_mul(q, transform[source][r]));
  };

  std::size_t pivot = 0;
  for (std::size_t r = 0; r < m && pivot < l; ++r) {
    while (true) {
      std::size_t best = l;
      for (std::size_t c = pivot; c < l; ++c)
        if (work[c][r] != 0 && (best == l || detail::wide_abs(work[c][r]) < detail::wide_abs(work[best][r])))
          best = c;
      if (best == l) break;
      std::swap(work[best], work[pivot]);
      std::swap(transform[best], transform[pivot]);
      bool clean = true;
      for (std::size_t c = pivot + 1; c < l; ++c) {
        if (work[c][r] == 0) continue;
        const wide_int q = work[c][r] / work[pivot][r];
        if (q != 0) axpy(c, pivot, q, r);
        if (work[c][r] != 0) clean = false;
      }
      if (clean) {
        ++pivot;
        break;
      }
    }
  }

  std::vector<WideColumn> kernel(transform.begin() + static_cast<std::ptrdiff_t>(pivot), transform.end());
  if (reduce_passes > 0) detail::size_reduce(kernel, reduce_passes);

  LatticeBasis basis;
  basis.rank = kernel.size();
  for (const auto& col : kernel) {
    std::vector<MoveEntry> e;
    for (std::size_t c = 0; c < l; ++c)
      if (col[c] != 0) e.push_back({c, narrow_checked(col[c])});
    basis.moves.emplace_back(a, std::move(e));
  }
  return basis;
}

/// All 2x2 swaps of a d1 x d2 table: +1 at (i,j),(i',j'), -1 at (i,j'),(i',j)
/// for i<i', j<j'.
inline std::vector<Move> independence_basic_moves(std::size_t d1, std::size_t d2) {
  if (d1 < 2 || d2 < 2) throw InvalidInput("basic moves need d1, d2 >= 2");
  const auto a = independence_design(d1, d2);
  std::vector<Move> out;
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t i2 = i + 1; i2 < d1; ++i2)
      for (std::size_t j = 0; j < d2; ++j)
        for (std::size_t j2 = j + 1; j2 < d2; ++j2)
          out.emplace_back(a, std::vector<MoveEntry>{{i * d2 + j, 1}, {i * d2 + j2, -1}, {i2 * d2 + j, -1}, {i2 * d2 + j2, 1}});
  return out;
}

/// True iff t + delta is a valid table in t's mode.
inline bool applicable(const Move& move, const DyadTable& t) {
  for (const auto& e : move.entries()) {
    if (e.cell >= t.size()) throw DimensionMismatch("move touches a cell outside the table");
    if (t[e.cell] + e.delta < 0) return false;
  }
  if (t.mode() == Mode::simple) {
    // Entries are sorted by cell, hence grouped by dyad.
    const auto entries = move.entries();
    for (std::size_t k = 0; k < entries.size();) {
      const auto dyad = t.dyad_of(entries[k].cell);
      std::int64_t net = 0;
      for (; k < entries.size() && t.dyad_of(entries[k].cell) == dyad; ++k) net += entries[k].delta;
      if (net != 0) return false;
    }
  }
  return true;
}

inline std::vector<Move> prune(std::span<const Move> moves, const DyadTable& t) {
  std::vector<Move> out;
  for (const auto& m : moves)
    if (applicable(m, t)) out.push_back(m);
  return out;
}

/// Applies a move without checking applicability.
inline void apply_move(DyadTable& t, const Move& move) {
  for (const auto& e : move.entries()) t.add(e.cell, e.delta);
}

inline nlohmann::json move_to_json(const Move& m) {
  auto out = nlohmann::json::array();
  for (const auto& e : m.entries()) out.push_back({e.cell, e.delta});
  return out;
}

inline Move move_from_json(const DesignMatrix& a, const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidInput("move must be a JSON array of [cell, increment] pairs");
  std::vector<MoveEntry> e;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer())
      throw InvalidInput("move entry must be [cell, increment]");
    const auto cell = pair[0].get<std::int64_t>();
    if (cell < 0) throw InvalidInput("negative cell index in move");
    e.push_back({static_cast<std::size_t>(cell), pair[1].get<std::int64_t>()});
  }
  return Move(a, std::move(e));
}

}  // namespace fibergof

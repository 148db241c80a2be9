#pragma once

// Curated move families used as MCMC proposals.
//
// A family is either an explicit list (drawn uniformly, with a uniform sign)
// or a generator that builds a move from the current state. Every generator
// here is a symmetric kernel on the fiber: the probability of proposing
// x -> y equals that of y -> x. Moves that would leave ker A are replaced by
// the zero move, which keeps the kernel symmetric.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fibergof/design_matrix.hpp"
#include "fibergof/graph_tables.hpp"
#include "fibergof/lattice_moves.hpp"
#include "fibergof/model_zoo.hpp"

namespace fibergof {

using Rng = std::mt19937_64;

class CuratedMoves {
 public:
  using Generator = std::function<Move(const DyadTable&, Rng&)>;

  CuratedMoves() = default;

  static CuratedMoves from_list(std::vector<Move> moves, std::string name = "list") {
    CuratedMoves c;
    c.list_ = std::move(moves);
    c.name_ = std::move(name);
    return c;
  }

  static CuratedMoves from_generator(std::string name, Generator g) {
    CuratedMoves c;
    c.generator_ = std::move(g);
    c.name_ = std::move(name);
    return c;
  }

  bool empty() const { return list_.empty() && !generator_; }
  bool is_generator() const { return static_cast<bool>(generator_); }
  const std::vector<Move>& list() const { return list_; }
  const std::string& name() const { return name_; }

  Move draw(const DyadTable& state, Rng& rng) const {
    if (generator_) return generator_(state, rng);
    if (list_.empty()) return {};
    std::uniform_int_distribution<std::size_t> pick(0, list_.size() - 1);
    const auto& m = list_[pick(rng)];
    return std::bernoulli_distribution(0.5)(rng) ? m : m.negated();
  }

 private:
  std::vector<Move> list_;
  Generator generator_;
  std::string name_;
};

/// Edge-level view of a simple graph table that records edits as dyad state
/// changes. Each operation either succeeds completely or leaves the view
/// untouched.
class EdgeEdit {
 public:
  struct Arc {
    std::size_t from, to;
    friend bool operator==(const Arc&, const Arc&) = default;
  };

  explicit EdgeEdit(const DyadTable& t) : table_(t), directed_(t.layout() == Layout::directed) {
    const auto n = t.nodes();
    for (std::size_t d = 0; d < t.dyads(); ++d) {
      auto [i, j] = dyad_nodes(n, d);
      const auto s = state_of(d);
      if (directed_) {
        if (s & state::forward) edges_.push_back({i, j});
        if (s & state::backward) edges_.push_back({j, i});
      } else if (s == 1) {
        edges_.push_back({i, j});
      }
    }
  }

  const std::vector<Arc>& edges() const { return edges_; }
  std::size_t nodes() const { return table_.nodes(); }

  bool has(std::size_t a, std::size_t b) const {
    if (a == b) return false;
    const auto d = dyad_index(nodes(), a, b);
    return (current_state(d) & bit(a, b)) != 0;
  }

  /// Removes every arc in `removed` and adds every arc in `added`, or does
  /// nothing if that is not a valid simple-graph edit.
  bool replace(std::initializer_list<Arc> removed, std::initializer_list<Arc> added) {
    const auto saved_changes = changes_;
    const auto saved_edges = edges_;
    for (const auto& e : removed)
      if (!toggle(e, false)) return rollback(saved_changes, saved_edges);
    for (const auto& e : added)
      if (!toggle(e, true)) return rollback(saved_changes, saved_edges);
    return true;
  }

  /// The accumulated edit as a move, or the zero move if it is not in ker A.
  Move finish(const DesignMatrix& a) const {
    const auto k = table_.states();
    std::vector<MoveEntry> entries;
    for (const auto& c : changes_) {
      if (c.before == c.after) continue;
      entries.push_back({c.dyad * k + c.before, -1});
      entries.push_back({c.dyad * k + c.after, +1});
    }
    if (entries.empty() || !is_move(a, entries)) return {};
    return Move(a, std::move(entries));
  }

 private:
  struct Change {
    std::size_t dyad;
    std::size_t before;
    std::size_t after;
  };

  std::size_t state_of(std::size_t d) const {
    const auto k = table_.states();
    for (std::size_t s = 0; s < k; ++s)
      if (table_[d * k + s] == 1) return s;
    return 0;
  }

  std::size_t current_state(std::size_t d) const {
    for (const auto& c : changes_)
      if (c.dyad == d) return c.after;
    return state_of(d);
  }

  std::size_t bit(std::size_t a, std::size_t b) const {
    if (!directed_) return 1;
    return a < b ? state::forward : state::backward;
  }

  bool toggle(const Arc& e, bool present) {
    if (e.from == e.to || e.from >= nodes() || e.to >= nodes()) return false;
    const auto d = dyad_index(nodes(), e.from, e.to);
    const auto s = current_state(d);
    const auto b = bit(e.from, e.to);
    if (((s & b) != 0) == present) return false;
    const auto next = s ^ b;
    auto it = std::find_if(changes_.begin(), changes_.end(), [d](const Change& c) { return c.dyad == d; });
    if (it == changes_.end()) changes_.push_back({d, s, next});
    else it->after = next;
    const Arc canon = directed_ || e.from < e.to ? e : Arc{e.to, e.from};
    if (present) {
      edges_.push_back(canon);
    } else {
      auto pos = std::find(edges_.begin(), edges_.end(), canon);
      *pos = edges_.back();
      edges_.pop_back();
    }
    return true;
  }

  bool rollback(const std::vector<Change>& changes, const std::vector<Arc>& edges) {
    changes_ = changes;
    edges_ = edges;
    return false;
  }

  const DyadTable& table_;
  bool directed_;
  std::vector<Arc> edges_;
  std::vector<Change> changes_;
};

namespace detail {

template <typename T>
const T& pick_uniform(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

// Two distinct positions of a container of size >= 2, uniformly.
inline std::pair<std::size_t, std::size_t> pick_two(std::size_t size, Rng& rng) {
  const auto a = std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
  auto b = std::uniform_int_distribution<std::size_t>(0, size - 2)(rng);
  if (b >= a) ++b;
  return {a, b};
}

// a->b, c->d  =>  a->d, c->b. Preserves every in- and out-degree.
inline void directed_swap(EdgeEdit& edit, Rng& rng) {
  if (edit.edges().size() < 2) return;
  auto [x, y] = pick_two(edit.edges().size(), rng);
  const auto e1 = edit.edges()[x], e2 = edit.edges()[y];
  edit.replace({e1, e2}, {{e1.from, e2.to}, {e2.from, e1.to}});
}

// a->b->c->a  =>  a->c->b->a. Preserves degrees; not reachable by swaps.
inline void reverse_triangle(EdgeEdit& edit, Rng& rng) {
  const auto n = edit.nodes();
  if (n < 3) return;
  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  const auto a = node(rng), b = node(rng), c = node(rng);
  if (a == b || b == c || a == c) return;
  edit.replace({{a, b}, {b, c}, {c, a}}, {{a, c}, {c, b}, {b, a}});
}

// a->b  =>  a'->b' with a' in the block of a and b' in the block of b.
inline void relocate_within_blocks(EdgeEdit& edit, const std::vector<std::vector<std::size_t>>& members,
                                   const BlockPartition& partition, Rng& rng) {
  if (edit.edges().empty()) return;
  const auto e = pick_uniform(edit.edges(), rng);
  const auto a2 = pick_uniform(members[partition[e.from]], rng);
  const auto b2 = pick_uniform(members[partition[e.to]], rng);
  edit.replace({e}, {{a2, b2}});
}

// {a,b}, {c,d}  =>  {a,c},{b,d} or {a,d},{b,c}.
inline void undirected_swap(EdgeEdit& edit, Rng& rng) {
  if (edit.edges().size() < 2) return;
  auto [x, y] = pick_two(edit.edges().size(), rng);
  const auto e1 = edit.edges()[x], e2 = edit.edges()[y];
  if (std::bernoulli_distribution(0.5)(rng))
    edit.replace({e1, e2}, {{e1.from, e2.from}, {e1.to, e2.to}});
  else
    edit.replace({e1, e2}, {{e1.from, e2.to}, {e1.to, e2.from}});
}

}  // namespace detail

/// Degree-preserving double-edge swaps for simple undirected graphs.
inline CuratedMoves undirected_swap_moves(std::shared_ptr<const DesignMatrix> a) {
  return CuratedMoves::from_generator("degree-swap", [a](const DyadTable& t, Rng& rng) {
    EdgeEdit edit(t);
    detail::undirected_swap(edit, rng);
    return edit.finish(*a);
  });
}

/// Edge-level moves for simple directed graphs: one or two steps of a kernel
/// mixing directed swaps, triangle reversals and (with a partition)
/// within-block relocations; the composite is kept only if it lies in ker A.
/// Two steps of the same symmetric kernel is again symmetric, and lets the
/// walk exchange reciprocated and one-way edges in a single move.
inline CuratedMoves directed_edge_moves(std::shared_ptr<const DesignMatrix> a,
                                        std::shared_ptr<const BlockPartition> partition = nullptr) {
  std::vector<std::vector<std::size_t>> members;
  if (partition)
    for (std::size_t b = 0; b < partition->blocks(); ++b) members.push_back(partition->members(b));
  const int kinds = partition ? 3 : 2;

  return CuratedMoves::from_generator(
      partition ? "block-edge-moves" : "degree-edge-moves",
      [a, partition, members, kinds](const DyadTable& t, Rng& rng) {
        EdgeEdit edit(t);
        const int rounds = std::bernoulli_distribution(0.5)(rng) ? 2 : 1;
        for (int r = 0; r < rounds; ++r) {
          switch (std::uniform_int_distribution<int>(0, kinds - 1)(rng)) {
            case 0: detail::directed_swap(edit, rng); break;
            case 1: detail::reverse_triangle(edit, rng); break;
            default: detail::relocate_within_blocks(edit, members, *partition, rng); break;
          }
        }
        return edit.finish(*a);
      });
}

/// Basis members plus pairwise sums and differences, capped.
inline std::vector<Move> basis_with_pairs(const LatticeBasis& basis, std::size_t cap = 5000) {
  std::vector<Move> out = basis.moves;
  const std::int64_t plus_minus[][2] = {{1, 1}, {1, -1}};
  for (std::size_t i = 0; i < basis.moves.size() && out.size() < cap; ++i)
    for (std::size_t j = i + 1; j < basis.moves.size() && out.size() < cap; ++j)
      for (const auto& c : plus_minus) {
        const Move pair[] = {basis.moves[i], basis.moves[j]};
        auto m = Move::combine(pair, c);
        if (!m.is_zero() && out.size() < cap) out.push_back(std::move(m));
      }
  return out;
}

/// Default curated family for a model.
inline CuratedMoves curated_moves(const ModelSpec& spec, std::shared_ptr<const DesignMatrix> a,
                                  const LatticeBasis& basis) {
  if (const auto* f = std::get_if<IndependenceFamily>(&spec.family)) {
    if (f->d1 < 2 || f->d2 < 2) return {};
    return CuratedMoves::from_list(independence_basic_moves(f->d1, f->d2), "basic-swaps");
  }
  if (spec.mode == Mode::multigraph) return CuratedMoves::from_list(basis_with_pairs(basis), "basis-pairs");
  if (std::holds_alternative<BetaFamily>(spec.family)) return undirected_swap_moves(std::move(a));
  if (const auto* f = std::get_if<SbmFamily>(&spec.family))
    return directed_edge_moves(std::move(a), std::make_shared<const BlockPartition>(f->partition));
  return directed_edge_moves(std::move(a));
}

}  // namespace fibergof

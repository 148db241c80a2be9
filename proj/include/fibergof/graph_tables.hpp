#pragma once

// Graphs as vectorized dyadic contingency tables.
//
// A directed graph on n nodes is stored as C(n,2) blocks of four cells, one
// block per dyad (i<j, lexicographic), states ordered 00, 10, 01, 11 where
// 10 means i->j only, 01 means j->i only and 11 a reciprocated pair.
// Undirected graphs use two states per dyad (00, 11). Plain two-way
// contingency tables use the same container with a d1 x d2 row-major layout.
//
// Node ids are 0-based in the API; edge-list files carry arbitrary labels.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fibergof/errors.hpp"

namespace fibergof {

enum class Mode { simple, multigraph };
enum class Layout { directed, undirected, plain };

inline const char* to_string(Mode m) { return m == Mode::simple ? "simple" : "multigraph"; }

inline constexpr std::size_t dyad_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

/// Position of dyad {i,j} (i != j) in lexicographic order of pairs i<j.
inline constexpr std::size_t dyad_index(std::size_t n, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

inline std::pair<std::size_t, std::size_t> dyad_nodes(std::size_t n, std::size_t d) {
  std::size_t i = 0;
  while (d >= n - i - 1) {
    d -= n - i - 1;
    ++i;
  }
  return {i, i + 1 + d};
}

inline constexpr std::size_t states_per_dyad(Layout layout) {
  switch (layout) {
    case Layout::directed: return 4;
    case Layout::undirected: return 2;
    case Layout::plain: return 1;
  }
  return 1;
}

namespace state {
// Directed states; bit 0 is i->j, bit 1 is j->i for the dyad (i<j).
inline constexpr int none = 0;
inline constexpr int forward = 1;
inline constexpr int backward = 2;
inline constexpr int mutual = 3;
}  // namespace state

inline const char* state_name(Layout layout, std::size_t s) {
  static const char* directed[] = {"00", "10", "01", "11"};
  static const char* undirected[] = {"00", "11"};
  return layout == Layout::directed ? directed[s] : undirected[s];
}

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::int64_t count = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// A graph with edge multiplicities. Edges are canonicalized on construction:
/// duplicates merged, zero counts dropped, undirected pairs stored with
/// from < to, sorted by (from, to).
class GraphData {
 public:
  GraphData() = default;

  GraphData(std::size_t n, bool directed, std::vector<Edge> edges) : n_(n), directed_(directed) {
    std::map<std::pair<std::size_t, std::size_t>, std::int64_t> merged;
    for (auto e : edges) {
      if (e.from >= n || e.to >= n) throw InvalidInput("edge endpoint out of range");
      if (e.from == e.to) throw InvalidInput("self-loop on node " + std::to_string(e.from));
      if (e.count < 0) throw InvalidInput("negative edge multiplicity");
      if (!directed && e.from > e.to) std::swap(e.from, e.to);
      merged[{e.from, e.to}] += e.count;
    }
    for (const auto& [key, count] : merged)
      if (count > 0) edges_.push_back({key.first, key.second, count});
  }

  std::size_t nodes() const { return n_; }
  bool directed() const { return directed_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::int64_t edge_units() const {
    std::int64_t total = 0;
    for (const auto& e : edges_) total += e.count;
    return total;
  }

  bool is_simple() const {
    return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.count <= 1; });
  }

  friend bool operator==(const GraphData&, const GraphData&) = default;

 private:
  std::size_t n_ = 0;
  bool directed_ = true;
  std::vector<Edge> edges_;
};

/// Cell-count vector with its layout. Plain tables are always in multigraph
/// mode (nonnegative counts, no per-dyad constraint).
class DyadTable {
 public:
  DyadTable() = default;

  DyadTable(Layout layout, Mode mode, std::size_t nodes, std::vector<std::int64_t> cells)
      : layout_(layout), mode_(layout == Layout::plain ? Mode::multigraph : mode), nodes_(nodes),
        cols_(0), cells_(std::move(cells)) {
    if (layout == Layout::plain) throw InvalidInput("use DyadTable::plain for contingency tables");
    if (cells_.size() != dyad_count(nodes_) * states_per_dyad(layout_))
      throw DimensionMismatch("table length does not match node count");
    validate();
  }

  static DyadTable plain(std::size_t d1, std::size_t d2, std::vector<std::int64_t> cells) {
    if (d1 == 0 || d2 == 0) throw InvalidInput("table dimensions must be positive");
    if (cells.size() != d1 * d2) throw DimensionMismatch("table length does not match d1*d2");
    DyadTable t;
    t.layout_ = Layout::plain;
    t.mode_ = Mode::multigraph;
    t.nodes_ = d1;
    t.cols_ = d2;
    t.cells_ = std::move(cells);
    t.validate();
    return t;
  }

  Layout layout() const { return layout_; }
  Mode mode() const { return mode_; }
  /// Node count for graph layouts; row count d1 for plain tables.
  std::size_t nodes() const { return nodes_; }
  /// Column count d2 for plain tables; 0 otherwise.
  std::size_t plain_cols() const { return cols_; }
  std::size_t size() const { return cells_.size(); }
  std::size_t states() const { return states_per_dyad(layout_); }
  std::size_t dyads() const { return layout_ == Layout::plain ? 0 : dyad_count(nodes_); }

  std::span<const std::int64_t> cells() const { return cells_; }
  std::int64_t operator[](std::size_t c) const { return cells_[c]; }

  /// Group of a cell: its dyad for graph layouts, the cell itself for plain.
  std::size_t dyad_of(std::size_t cell) const { return cell / states(); }

  std::int64_t dyad_sum(std::size_t d) const {
    std::int64_t s = 0;
    for (std::size_t k = 0; k < states(); ++k) s += cells_[d * states() + k];
    return s;
  }

  /// Unchecked in-place increment; callers keep the invariants.
  void add(std::size_t cell, std::int64_t delta) { cells_[cell] += delta; }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto v : cells_) s += v;
    return s;
  }

  std::string cell_label(std::size_t c) const {
    if (layout_ == Layout::plain)
      return "cell(" + std::to_string(c / cols_ + 1) + "," + std::to_string(c % cols_ + 1) + ")";
    auto [i, j] = dyad_nodes(nodes_, dyad_of(c));
    return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "):" +
           state_name(layout_, c % states());
  }

  friend bool operator==(const DyadTable&, const DyadTable&) = default;

 private:
  void validate() const {
    for (auto v : cells_)
      if (v < 0) throw InvalidInput("negative cell count");
    if (mode_ == Mode::simple) {
      for (std::size_t d = 0; d < dyads(); ++d)
        if (dyad_sum(d) != 1)
          throw InvalidInput("dyad " + std::to_string(d) + " does not hold exactly one observation");
    }
  }

  Layout layout_ = Layout::plain;
  Mode mode_ = Mode::multigraph;
  std::size_t nodes_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::int64_t> cells_;
};

/// Encodes a graph. In multigraph mode each dyad holds `trials` observations
/// (0 picks the smallest value that fits every dyad); a directed dyad with a
/// i->j units and b j->i units puts min(a,b) in state 11, the excess in 10 or
/// 01, and the remaining observations in 00.
inline DyadTable encode_graph(const GraphData& g, Mode mode, std::int64_t trials = 0) {
  const std::size_t n = g.nodes();
  const Layout layout = g.directed() ? Layout::directed : Layout::undirected;
  const std::size_t k = states_per_dyad(layout);
  const std::size_t nd = dyad_count(n);

  std::vector<std::int64_t> forward(nd, 0), backward(nd, 0);
  for (const auto& e : g.edges()) {
    const auto d = dyad_index(n, e.from, e.to);
    if (!g.directed() || e.from < e.to) forward[d] += e.count;
    else backward[d] += e.count;
  }

  std::vector<std::int64_t> need(nd);
  for (std::size_t d = 0; d < nd; ++d) need[d] = std::max(forward[d], backward[d]);
  if (mode == Mode::simple) {
    for (auto v : need)
      if (v > 1) throw InvalidInput("edge multiplicity above 1 in simple mode");
    trials = 1;
  } else {
    const auto most = nd == 0 ? 0 : *std::max_element(need.begin(), need.end());
    if (trials == 0) trials = std::max<std::int64_t>(most, 1);
    if (trials < most) throw InvalidInput("dyad observation count smaller than edge multiplicity");
  }

  std::vector<std::int64_t> cells(nd * k, 0);
  for (std::size_t d = 0; d < nd; ++d) {
    auto* block = cells.data() + d * k;
    if (layout == Layout::undirected) {
      block[1] = forward[d];
      block[0] = trials - forward[d];
    } else {
      const auto mutual = std::min(forward[d], backward[d]);
      block[state::mutual] = mutual;
      block[state::forward] = forward[d] - mutual;
      block[state::backward] = backward[d] - mutual;
      block[state::none] = trials - need[d];
    }
  }
  return DyadTable(layout, mode, n, std::move(cells));
}

inline GraphData decode_table(const DyadTable& t) {
  if (t.layout() == Layout::plain) throw InvalidInput("plain tables do not encode graphs");
  const std::size_t n = t.nodes();
  std::vector<Edge> edges;
  for (std::size_t d = 0; d < t.dyads(); ++d) {
    auto [i, j] = dyad_nodes(n, d);
    const auto* block = t.cells().data() + d * t.states();
    if (t.layout() == Layout::undirected) {
      if (block[1] > 0) edges.push_back({i, j, block[1]});
    } else {
      const auto fwd = block[state::forward] + block[state::mutual];
      const auto bwd = block[state::backward] + block[state::mutual];
      if (fwd > 0) edges.push_back({i, j, fwd});
      if (bwd > 0) edges.push_back({j, i, bwd});
    }
  }
  return GraphData(n, t.layout() == Layout::directed, std::move(edges));
}

// ---------------------------------------------------------------------------
// File formats

/// Graph read from an edge list together with the label of every node
/// (labels[i] names node i; ids assigned by first appearance).
struct LabeledGraph {
  GraphData graph;
  std::vector<std::string> labels;
};

class LabelMap {
 public:
  std::size_t id(const std::string& label) {
    auto [it, inserted] = ids_.emplace(label, labels_.size());
    if (inserted) labels_.push_back(label);
    return it->second;
  }
  bool contains(const std::string& label) const { return ids_.count(label) > 0; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::unordered_map<std::string, std::size_t> ids_;
  std::vector<std::string> labels_;
};

namespace detail {
inline bool skip_line(const std::string& line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}
}  // namespace detail

/// Edge list: "a b [count]" per line, '#' comments. A line holding a single
/// label declares an isolated node. Directedness comes from the caller.
inline LabeledGraph read_edge_list(std::istream& in, bool directed, LabelMap labels = {}) {
  struct RawEdge {
    std::size_t a, b;
    std::int64_t count;
  };
  std::vector<RawEdge> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skip_line(line)) continue;
    std::istringstream fields(line);
    std::string a, b, extra;
    fields >> a;
    if (!(fields >> b)) {
      labels.id(a);
      continue;
    }
    std::int64_t count = 1;
    if (fields >> extra) {
      try {
        std::size_t used = 0;
        count = std::stoll(extra, &used);
        if (used != extra.size()) throw std::invalid_argument(extra);
      } catch (const std::exception&) {
        throw InvalidInput("line " + std::to_string(lineno) + ": bad multiplicity '" + extra + "'");
      }
      if (fields >> extra) throw InvalidInput("line " + std::to_string(lineno) + ": too many fields");
    }
    if (a == b) throw InvalidInput("line " + std::to_string(lineno) + ": self-loop on '" + a + "'");
    raw.push_back({labels.id(a), labels.id(b), count});
  }
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& r : raw) edges.push_back({r.a, r.b, r.count});
  const auto n = labels.labels().size();
  return {GraphData(n, directed, std::move(edges)), labels.labels()};
}

/// Whitespace-separated integer matrix, one table row per line.
inline DyadTable read_plain_table(std::istream& in) {
  std::vector<std::int64_t> cells;
  std::size_t cols = 0, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::skip_line(line)) continue;
    std::istringstream fields(line);
    std::size_t here = 0;
    std::int64_t v;
    while (fields >> v) {
      cells.push_back(v);
      ++here;
    }
    if (!fields.eof()) throw InvalidInput("non-integer entry in table row " + std::to_string(rows + 1));
    if (rows == 0) cols = here;
    else if (here != cols) throw InvalidInput("ragged table rows");
    ++rows;
  }
  if (rows == 0) throw InvalidInput("empty table");
  return DyadTable::plain(rows, cols, std::move(cells));
}

template <typename Reader>
auto read_file(const std::string& path, Reader&& reader) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return reader(in);
}

}  // namespace fibergof

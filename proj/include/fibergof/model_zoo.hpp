#pragma once

// Design matrices for the supported log-linear model families.
//
// Row order is fixed: dyad normalizers first, then global statistics, then
// per-node or per-block statistics, then reciprocity.

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fibergof/design_matrix.hpp"
#include "fibergof/errors.hpp"
#include "fibergof/graph_tables.hpp"

namespace fibergof {

enum class Reciprocity { zero, constant, differential };
enum class SbmVariant { full, restricted };

/// Known assignment of nodes to K blocks (0-based block ids).
class BlockPartition {
 public:
  BlockPartition() = default;

  explicit BlockPartition(std::vector<std::size_t> assignment) : assignment_(std::move(assignment)) {
    if (assignment_.empty()) throw InvalidInput("block partition has no nodes");
    blocks_ = 0;
    for (auto b : assignment_) blocks_ = std::max(blocks_, b + 1);
    std::vector<std::size_t> sizes(blocks_, 0);
    for (auto b : assignment_) ++sizes[b];
    for (std::size_t b = 0; b < blocks_; ++b)
      if (sizes[b] == 0) throw InvalidInput("block " + std::to_string(b + 1) + " is empty");
  }

  std::size_t nodes() const { return assignment_.size(); }
  std::size_t blocks() const { return blocks_; }
  std::size_t operator[](std::size_t node) const { return assignment_[node]; }
  const std::vector<std::size_t>& assignment() const { return assignment_; }

  std::vector<std::size_t> members(std::size_t block) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment_.size(); ++i)
      if (assignment_[i] == block) out.push_back(i);
    return out;
  }

  friend bool operator==(const BlockPartition&, const BlockPartition&) = default;

 private:
  std::vector<std::size_t> assignment_;
  std::size_t blocks_ = 0;
};

/// Block file: "label block_id" per line. Block ids are numbered by first
/// appearance. Labels not yet in `labels` are appended, so isolated nodes can
/// be declared here.
inline BlockPartition read_block_file(std::istream& in, LabelMap& labels) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  LabelMap block_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skip_line(line)) continue;
    std::istringstream fields(line);
    std::string node, block, extra;
    if (!(fields >> node >> block) || (fields >> extra))
      throw InvalidInput("block file line " + std::to_string(lineno) + ": expected 'label block_id'");
    pairs.emplace_back(labels.id(node), block_ids.id(block));
  }
  std::vector<std::size_t> assignment(labels.labels().size(), SIZE_MAX);
  for (auto [node, block] : pairs) {
    if (assignment[node] != SIZE_MAX && assignment[node] != block)
      throw InvalidInput("node '" + labels.labels()[node] + "' assigned to two blocks");
    assignment[node] = block;
  }
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == SIZE_MAX) throw InvalidInput("node '" + labels.labels()[i] + "' has no block");
  return BlockPartition(std::move(assignment));
}

struct IndependenceFamily {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
};
struct BetaFamily {
  std::size_t n = 0;
};
struct P1Family {
  std::size_t n = 0;
  Reciprocity reciprocity = Reciprocity::constant;
};
struct SbmFamily {
  BlockPartition partition;
  SbmVariant variant = SbmVariant::restricted;
};

struct ModelSpec {
  std::variant<IndependenceFamily, BetaFamily, P1Family, SbmFamily> family;
  Mode mode = Mode::simple;
};

inline std::string model_name(const ModelSpec& spec) {
  struct {
    std::string operator()(const IndependenceFamily&) const { return "independence"; }
    std::string operator()(const BetaFamily&) const { return "beta"; }
    std::string operator()(const P1Family& f) const {
      switch (f.reciprocity) {
        case Reciprocity::zero: return "p1-zero";
        case Reciprocity::constant: return "p1-constant";
        case Reciprocity::differential: return "p1-differential";
      }
      return "p1";
    }
    std::string operator()(const SbmFamily& f) const {
      return f.variant == SbmVariant::full ? "sbm-full" : "sbm-restricted";
    }
  } visitor;
  return std::visit(visitor, spec.family);
}

inline Layout model_layout(const ModelSpec& spec) {
  if (std::holds_alternative<IndependenceFamily>(spec.family)) return Layout::plain;
  if (std::holds_alternative<BetaFamily>(spec.family)) return Layout::undirected;
  return Layout::directed;
}

namespace detail {

class MatrixBuilder {
 public:
  explicit MatrixBuilder(std::size_t cols) : cols_(cols) {}

  std::size_t add_row(std::string label) {
    entries_.resize(entries_.size() + cols_, 0);
    labels_.push_back(std::move(label));
    return labels_.size() - 1;
  }
  void add(std::size_t row, std::size_t col, std::int64_t v) { entries_[row * cols_ + col] += v; }

  DesignMatrix build(std::vector<std::string> col_labels) {
    const auto rows = labels_.size();
    return DesignMatrix(rows, cols_, std::move(entries_), std::move(labels_), std::move(col_labels));
  }

 private:
  std::size_t cols_;
  std::vector<std::int64_t> entries_;
  std::vector<std::string> labels_;
};

inline std::string pair_label(const char* name, std::size_t a, std::size_t b) {
  return std::string(name) + "(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")";
}
inline std::string one_label(const char* name, std::size_t a) {
  return std::string(name) + "(" + std::to_string(a + 1) + ")";
}

inline std::vector<std::string> graph_col_labels(std::size_t n, Layout layout) {
  std::vector<std::string> out;
  const auto k = states_per_dyad(layout);
  for (std::size_t d = 0; d < dyad_count(n); ++d) {
    auto [i, j] = dyad_nodes(n, d);
    for (std::size_t s = 0; s < k; ++s)
      out.push_back("(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "):" + state_name(layout, s));
  }
  return out;
}

inline void add_dyad_rows(MatrixBuilder& m, std::size_t n, std::size_t states) {
  for (std::size_t d = 0; d < dyad_count(n); ++d) {
    auto [i, j] = dyad_nodes(n, d);
    const auto r = m.add_row(pair_label("dyad", i, j));
    for (std::size_t s = 0; s < states; ++s) m.add(r, d * states + s, 1);
  }
}

inline std::size_t cell(std::size_t d, int s) { return d * 4 + static_cast<std::size_t>(s); }

}  // namespace detail

/// Two-way independence: d1 row-margin rows then d2 column-margin rows over
/// the row-major d1 x d2 table.
inline DesignMatrix independence_design(std::size_t d1, std::size_t d2) {
  if (d1 < 1 || d2 < 1) throw InvalidInput("independence model needs d1, d2 >= 1");
  detail::MatrixBuilder m(d1 * d2);
  for (std::size_t i = 0; i < d1; ++i) {
    const auto r = m.add_row(detail::one_label("row", i));
    for (std::size_t j = 0; j < d2; ++j) m.add(r, i * d2 + j, 1);
  }
  for (std::size_t j = 0; j < d2; ++j) {
    const auto r = m.add_row(detail::one_label("col", j));
    for (std::size_t i = 0; i < d1; ++i) m.add(r, i * d2 + j, 1);
  }
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t j = 0; j < d2; ++j) cols.push_back(detail::pair_label("cell", i, j));
  return m.build(std::move(cols));
}

/// Undirected beta model: dyad normalizers then one degree row per node.
inline DesignMatrix beta_design(std::size_t n) {
  if (n < 2) throw InvalidInput("beta model needs n >= 2");
  detail::MatrixBuilder m(dyad_count(n) * 2);
  detail::add_dyad_rows(m, n, 2);
  std::vector<std::size_t> degree(n);
  for (std::size_t i = 0; i < n; ++i) degree[i] = m.add_row(detail::one_label("degree", i));
  for (std::size_t d = 0; d < dyad_count(n); ++d) {
    auto [i, j] = dyad_nodes(n, d);
    m.add(degree[i], d * 2 + 1, 1);
    m.add(degree[j], d * 2 + 1, 1);
  }
  return m.build(detail::graph_col_labels(n, Layout::undirected));
}

/// p1 model: dyad normalizers, edge count, in-degrees, out-degrees, then
/// reciprocity (none, one total, or one indicator per dyad).
inline DesignMatrix p1_design(std::size_t n, Reciprocity reciprocity) {
  using namespace state;
  using detail::cell;
  if (n < 2) throw InvalidInput("p1 model needs n >= 2");
  detail::MatrixBuilder m(dyad_count(n) * 4);
  detail::add_dyad_rows(m, n, 4);
  const auto edges = m.add_row("edges");
  std::vector<std::size_t> in(n), out(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = m.add_row(detail::one_label("in", i));
  for (std::size_t i = 0; i < n; ++i) out[i] = m.add_row(detail::one_label("out", i));
  std::size_t total_recip = 0;
  if (reciprocity == Reciprocity::constant) total_recip = m.add_row("reciprocity");

  for (std::size_t d = 0; d < dyad_count(n); ++d) {
    auto [i, j] = dyad_nodes(n, d);
    m.add(edges, cell(d, forward), 1);
    m.add(out[i], cell(d, forward), 1);
    m.add(in[j], cell(d, forward), 1);

    m.add(edges, cell(d, backward), 1);
    m.add(out[j], cell(d, backward), 1);
    m.add(in[i], cell(d, backward), 1);

    m.add(edges, cell(d, mutual), 2);
    for (auto node : {i, j}) {
      m.add(in[node], cell(d, mutual), 1);
      m.add(out[node], cell(d, mutual), 1);
    }
    if (reciprocity == Reciprocity::constant) m.add(total_recip, cell(d, mutual), 1);
  }
  if (reciprocity == Reciprocity::differential) {
    for (std::size_t d = 0; d < dyad_count(n); ++d) {
      auto [i, j] = dyad_nodes(n, d);
      const auto r = m.add_row(detail::pair_label("reciprocity", i, j));
      m.add(r, cell(d, mutual), 1);
    }
  }
  return m.build(detail::graph_col_labels(n, Layout::directed));
}

/// Directed stochastic blockmodel with known blocks.
///
/// restricted: dyad normalizers, edges, block out-degrees (edges sent from
/// each block), block in-degrees (edges received), total reciprocated dyads.
/// full: dyad normalizers, one choice row per ordered block pair (r,s)
/// counting edges r->s, one reciprocity row per unordered block pair.
inline DesignMatrix sbm_design(const BlockPartition& partition, SbmVariant variant) {
  using namespace state;
  using detail::cell;
  const auto n = partition.nodes();
  const auto k = partition.blocks();
  if (n < 2) throw InvalidInput("blockmodel needs n >= 2");
  detail::MatrixBuilder m(dyad_count(n) * 4);
  detail::add_dyad_rows(m, n, 4);

  if (variant == SbmVariant::restricted) {
    const auto edges = m.add_row("edges");
    std::vector<std::size_t> out(k), in(k);
    for (std::size_t b = 0; b < k; ++b) out[b] = m.add_row(detail::one_label("block_out", b));
    for (std::size_t b = 0; b < k; ++b) in[b] = m.add_row(detail::one_label("block_in", b));
    const auto recip = m.add_row("reciprocity");
    for (std::size_t d = 0; d < dyad_count(n); ++d) {
      auto [i, j] = dyad_nodes(n, d);
      const auto bi = partition[i], bj = partition[j];
      m.add(edges, cell(d, forward), 1);
      m.add(out[bi], cell(d, forward), 1);
      m.add(in[bj], cell(d, forward), 1);
      m.add(edges, cell(d, backward), 1);
      m.add(out[bj], cell(d, backward), 1);
      m.add(in[bi], cell(d, backward), 1);
      m.add(edges, cell(d, mutual), 2);
      m.add(out[bi], cell(d, mutual), 1);
      m.add(out[bj], cell(d, mutual), 1);
      m.add(in[bi], cell(d, mutual), 1);
      m.add(in[bj], cell(d, mutual), 1);
      m.add(recip, cell(d, mutual), 1);
    }
  } else {
    std::vector<std::size_t> choice(k * k);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t s = 0; s < k; ++s) choice[r * k + s] = m.add_row(detail::pair_label("choice", r, s));
    std::vector<std::size_t> recip(k * k);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t s = r; s < k; ++s) recip[r * k + s] = m.add_row(detail::pair_label("reciprocity", r, s));
    for (std::size_t d = 0; d < dyad_count(n); ++d) {
      auto [i, j] = dyad_nodes(n, d);
      const auto bi = partition[i], bj = partition[j];
      m.add(choice[bi * k + bj], cell(d, forward), 1);
      m.add(choice[bj * k + bi], cell(d, backward), 1);
      m.add(choice[bi * k + bj], cell(d, mutual), 1);
      m.add(choice[bj * k + bi], cell(d, mutual), 1);
      m.add(recip[std::min(bi, bj) * k + std::max(bi, bj)], cell(d, mutual), 1);
    }
  }
  return m.build(detail::graph_col_labels(n, Layout::directed));
}

inline DesignMatrix build_design(const ModelSpec& spec) {
  struct {
    DesignMatrix operator()(const IndependenceFamily& f) const { return independence_design(f.d1, f.d2); }
    DesignMatrix operator()(const BetaFamily& f) const { return beta_design(f.n); }
    DesignMatrix operator()(const P1Family& f) const { return p1_design(f.n, f.reciprocity); }
    DesignMatrix operator()(const SbmFamily& f) const { return sbm_design(f.partition, f.variant); }
  } visitor;
  return std::visit(visitor, spec.family);
}

/// Checks that a table has the shape and mode a model expects.
inline void check_compatible(const ModelSpec& spec, const DyadTable& t) {
  if (t.layout() != model_layout(spec))
    throw InvalidInput("table layout does not match model " + model_name(spec));
  if (t.layout() != Layout::plain && t.mode() != spec.mode)
    throw InvalidInput("table mode does not match model mode");
  struct {
    const DyadTable& t;
    void operator()(const IndependenceFamily& f) const {
      if (t.nodes() != f.d1 || t.plain_cols() != f.d2) throw InvalidInput("table shape does not match d1 x d2");
    }
    void operator()(const BetaFamily& f) const { check(f.n); }
    void operator()(const P1Family& f) const { check(f.n); }
    void operator()(const SbmFamily& f) const { check(f.partition.nodes()); }
    void check(std::size_t n) const {
      if (t.nodes() != n) throw InvalidInput("graph has " + std::to_string(t.nodes()) + " nodes, model expects " + std::to_string(n));
    }
  } visitor{t};
  std::visit(visitor, spec.family);
}

}  // namespace fibergof

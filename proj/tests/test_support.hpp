#pragma once

// Independent reference computations used by the tests. Nothing here goes
// through design matrices or the library's encoders.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fibergof/fibergof.hpp"

namespace oracle {

using Adjacency = std::vector<std::vector<int>>;  // adj[i][j] = 1 iff i->j (or i--j)

inline std::string one(const char* name, std::size_t a) { return std::string(name) + "(" + std::to_string(a + 1) + ")"; }
inline std::string two(const char* name, std::size_t a, std::size_t b) {
  return std::string(name) + "(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")";
}

inline Adjacency random_digraph(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  Adjacency adj(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) adj[i][j] = coin(rng);
  return adj;
}

inline Adjacency random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  Adjacency adj(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) adj[i][j] = adj[j][i] = coin(rng);
  return adj;
}

inline fibergof::GraphData to_graph(const Adjacency& adj, bool directed) {
  std::vector<fibergof::Edge> edges;
  const auto n = adj.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj[i][j] && (directed || i < j)) edges.push_back({i, j, 1});
  return fibergof::GraphData(n, directed, edges);
}

/// Sufficient statistics by direct counting on an adjacency matrix, keyed by
/// the row labels the library documents.
inline std::map<std::string, std::int64_t> directed_counts(const Adjacency& adj, const std::string& model,
                                                           const std::vector<std::size_t>& blocks = {}) {
  const auto n = adj.size();
  std::map<std::string, std::int64_t> s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s[two("dyad", i, j)] = 1;
  std::int64_t edges = 0, mutual = 0;
  std::vector<std::int64_t> in(n, 0), out(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj[i][j]) {
        ++edges;
        ++out[i];
        ++in[j];
      }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) mutual += adj[i][j] && adj[j][i];

  if (model.rfind("p1", 0) == 0) {
    s["edges"] = edges;
    for (std::size_t i = 0; i < n; ++i) {
      s[one("in", i)] = in[i];
      s[one("out", i)] = out[i];
    }
    if (model == "p1-constant") s["reciprocity"] = mutual;
    if (model == "p1-differential")
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) s[two("reciprocity", i, j)] = adj[i][j] && adj[j][i];
    return s;
  }

  const auto k = blocks.empty() ? 0 : *std::max_element(blocks.begin(), blocks.end()) + 1;
  if (model == "sbm-restricted") {
    s["edges"] = edges;
    for (std::size_t b = 0; b < k; ++b) s[one("block_out", b)] = s[one("block_in", b)] = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (adj[i][j]) {
          ++s[one("block_out", blocks[i])];
          ++s[one("block_in", blocks[j])];
        }
    s["reciprocity"] = mutual;
    return s;
  }
  // sbm-full
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t t = 0; t < k; ++t) {
      s[two("choice", r, t)] = 0;
      if (r <= t) s[two("reciprocity", r, t)] = 0;
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj[i][j]) ++s[two("choice", blocks[i], blocks[j])];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (adj[i][j] && adj[j][i]) ++s[two("reciprocity", std::min(blocks[i], blocks[j]), std::max(blocks[i], blocks[j]))];
  return s;
}

inline std::map<std::string, std::int64_t> undirected_counts(const Adjacency& adj) {
  const auto n = adj.size();
  std::map<std::string, std::int64_t> s;
  for (std::size_t i = 0; i < n; ++i) {
    s[one("degree", i)] = 0;
    for (std::size_t j = i + 1; j < n; ++j) s[two("dyad", i, j)] = 1;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s[one("degree", i)] += adj[i][j];
  return s;
}

inline std::map<std::string, std::int64_t> table_margins(std::size_t d1, std::size_t d2,
                                                          const std::vector<std::int64_t>& cells) {
  std::map<std::string, std::int64_t> s;
  for (std::size_t i = 0; i < d1; ++i) s[one("row", i)] = 0;
  for (std::size_t j = 0; j < d2; ++j) s[one("col", j)] = 0;
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t j = 0; j < d2; ++j) {
      s[one("row", i)] += cells[i * d2 + j];
      s[one("col", j)] += cells[i * d2 + j];
    }
  return s;
}

/// Library statistics keyed by row label, for comparison with the maps above.
inline std::map<std::string, std::int64_t> labeled(const fibergof::DesignMatrix& a, const fibergof::DyadTable& t) {
  const auto v = fibergof::matrix_vector(a, t.cells());
  std::map<std::string, std::int64_t> s;
  for (std::size_t r = 0; r < a.rows(); ++r) s[a.row_labels()[r]] = v[r];
  return s;
}

/// Number of d1 x d2 nonnegative integer tables with the given margins, by
/// row-by-row dynamic programming over remaining column sums.
inline std::uint64_t count_tables(const std::vector<std::int64_t>& rows, const std::vector<std::int64_t>& cols) {
  std::map<std::pair<std::size_t, std::vector<std::int64_t>>, std::uint64_t> memo;
  std::function<std::uint64_t(std::size_t, std::vector<std::int64_t>&)> count_from;
  std::function<std::uint64_t(std::size_t, std::size_t, std::int64_t, std::vector<std::int64_t>&)> fill;
  fill = [&](std::size_t row, std::size_t col, std::int64_t left, std::vector<std::int64_t>& rem) -> std::uint64_t {
    if (col + 1 == rem.size()) {
      if (left > rem[col]) return 0;
      rem[col] -= left;
      const auto r = count_from(row + 1, rem);
      rem[col] += left;
      return r;
    }
    std::uint64_t total = 0;
    for (std::int64_t v = 0; v <= std::min(left, rem[col]); ++v) {
      rem[col] -= v;
      total += fill(row, col + 1, left - v, rem);
      rem[col] += v;
    }
    return total;
  };
  count_from = [&](std::size_t row, std::vector<std::int64_t>& rem) -> std::uint64_t {
    if (row == rows.size()) return std::all_of(rem.begin(), rem.end(), [](auto v) { return v == 0; }) ? 1 : 0;
    auto key = std::make_pair(row, rem);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const auto r = fill(row, 0, rows[row], rem);
    memo.emplace(std::move(key), r);
    return r;
  };
  auto rem = cols;
  return count_from(0, rem);
}

/// All 0/1 tables d1 x d2 with the given margins, by brute force over 2^(d1 d2).
inline std::vector<std::vector<std::int64_t>> zero_one_tables(std::size_t d1, std::size_t d2,
                                                              const std::vector<std::int64_t>& rows,
                                                              const std::vector<std::int64_t>& cols) {
  std::vector<std::vector<std::int64_t>> out;
  const auto cells = d1 * d2;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cells); ++mask) {
    std::vector<std::int64_t> t(cells);
    for (std::size_t c = 0; c < cells; ++c) t[c] = (mask >> c) & 1;
    const auto m = table_margins(d1, d2, t);
    bool ok = true;
    for (std::size_t i = 0; i < d1; ++i) ok = ok && m.at(one("row", i)) == rows[i];
    for (std::size_t j = 0; j < d2; ++j) ok = ok && m.at(one("col", j)) == cols[j];
    if (ok) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Calls f on every simple directed graph on n nodes.
inline void for_each_digraph(std::size_t n, const std::function<void(const Adjacency&)>& f) {
  std::vector<std::pair<std::size_t, std::size_t>> arcs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) arcs.emplace_back(i, j);
  Adjacency adj(n, std::vector<int>(n, 0));
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << arcs.size()); ++mask) {
    for (std::size_t a = 0; a < arcs.size(); ++a) adj[arcs[a].first][arcs[a].second] = (mask >> a) & 1;
    f(adj);
  }
}

/// Two-sided one-sample Kolmogorov-Smirnov test against U(0,1): returns the
/// asymptotic p-value (Stephens' small-sample correction).
inline double ks_uniform_pvalue(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double q = 0;
  for (int k = 1; k <= 100; ++k) q += 2 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace oracle

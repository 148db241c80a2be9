#pragma once

// Ground truth for desk-sized instances: full fiber enumeration, move-set
// connectivity and exact conditional p-values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fibergof/design_matrix.hpp"
#include "fibergof/errors.hpp"
#include "fibergof/fiber_sampler.hpp"
#include "fibergof/graph_tables.hpp"
#include "fibergof/lattice_moves.hpp"

namespace fibergof {

struct FiberEnumeration {
  std::vector<DyadTable> members;  // lexicographic order of cell vectors
  bool truncated = false;

  std::size_t size() const { return members.size(); }
};

namespace detail {

class FiberSearch {
 public:
  FiberSearch(const DesignMatrix& a, const DyadTable& u, std::size_t cap)
      : a_(a), u_(u), cap_(cap), budget_(matrix_vector(a, u.cells())), cells_(u.size(), 0),
        rows_done_at_(u.size()) {
    std::vector<std::size_t> last(a.rows(), 0);
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (const auto& e : a.row(r)) last[r] = std::max(last[r], e.index);
    for (std::size_t r = 0; r < a.rows(); ++r) rows_done_at_[last[r]].push_back(r);
  }

  FiberEnumeration run() {
    descend(0);
    return std::move(result_);
  }

 private:
  bool descend(std::size_t c) {
    if (c == cells_.size()) {
      if (result_.members.size() == cap_) {
        result_.truncated = true;
        return false;
      }
      result_.members.push_back(make_table());
      return true;
    }
    std::int64_t bound = std::numeric_limits<std::int64_t>::max();
    for (const auto& e : a_.column(c)) bound = std::min(bound, budget_[e.index] / e.value);
    if (u_.mode() == Mode::simple) bound = std::min<std::int64_t>(bound, 1);
    for (std::int64_t v = 0; v <= bound; ++v) {
      cells_[c] = v;
      for (const auto& e : a_.column(c)) budget_[e.index] -= e.value * v;
      bool ok = std::all_of(rows_done_at_[c].begin(), rows_done_at_[c].end(),
                            [&](std::size_t r) { return budget_[r] == 0; });
      if (ok && u_.mode() == Mode::simple && (c + 1) % u_.states() == 0)
        ok = dyad_total(c / u_.states()) == 1;
      const bool keep_going = !ok || descend(c + 1);
      for (const auto& e : a_.column(c)) budget_[e.index] += e.value * v;
      cells_[c] = 0;
      if (!keep_going) return false;
    }
    return true;
  }

  std::int64_t dyad_total(std::size_t d) const {
    std::int64_t s = 0;
    for (std::size_t k = 0; k < u_.states(); ++k) s += cells_[d * u_.states() + k];
    return s;
  }

  DyadTable make_table() const {
    if (u_.layout() == Layout::plain) return DyadTable::plain(u_.nodes(), u_.plain_cols(), cells_);
    return DyadTable(u_.layout(), u_.mode(), u_.nodes(), cells_);
  }

  const DesignMatrix& a_;
  const DyadTable& u_;
  std::size_t cap_;
  std::vector<std::int64_t> budget_;
  std::vector<std::int64_t> cells_;
  std::vector<std::vector<std::size_t>> rows_done_at_;
  FiberEnumeration result_;
};

}  // namespace detail

/// All v >= 0 with Av = Au (and one observation per dyad in simple mode), by
/// depth-first search over cells with the remaining row budgets bounding
/// each cell. Stops with `truncated` set once more than `cap` members exist.
inline FiberEnumeration enumerate_fiber(const DesignMatrix& a, const DyadTable& u, std::size_t cap = 1000000) {
  if (cap == 0) throw InvalidInput("enumeration cap must be positive");
  if (u.size() != a.cols()) throw DimensionMismatch("table length does not match design matrix columns");
  return detail::FiberSearch(a, u, cap).run();
}

struct ConnectivityReport {
  std::size_t components = 0;
  std::vector<std::size_t> component_of;  // per fiber member
  /// Members 0 and the first member outside its component, if disconnected.
  std::optional<std::pair<std::size_t, std::size_t>> witness;

  bool connected() const { return components <= 1; }
};

/// Components of the graph on fiber members joined by single applicable
/// moves (each move is used with both signs).
inline ConnectivityReport connectivity_check(std::span<const Move> moves, const FiberEnumeration& fiber) {
  if (fiber.truncated) throw InvalidInput("connectivity needs a complete fiber enumeration");
  const auto size = fiber.size();
  std::map<std::vector<std::int64_t>, std::size_t> index;
  for (std::size_t k = 0; k < size; ++k) {
    const auto cells = fiber.members[k].cells();
    index.emplace(std::vector<std::int64_t>(cells.begin(), cells.end()), k);
  }

  std::vector<std::size_t> parent(size);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  for (std::size_t k = 0; k < size; ++k) {
    const auto& member = fiber.members[k];
    for (const auto& m : moves)
      for (const auto& signed_move : {m, m.negated()}) {
        if (signed_move.is_zero() || !applicable(signed_move, member)) continue;
        auto next = std::vector<std::int64_t>(member.cells().begin(), member.cells().end());
        for (const auto& e : signed_move.entries()) next[e.cell] += e.delta;
        auto it = index.find(next);
        if (it == index.end()) continue;  // move not in ker A for this fiber
        parent[find(k)] = find(it->second);
      }
  }

  ConnectivityReport report;
  report.component_of.resize(size);
  std::map<std::size_t, std::size_t> label;
  for (std::size_t k = 0; k < size; ++k) {
    const auto root = find(k);
    auto [it, inserted] = label.emplace(root, label.size());
    report.component_of[k] = it->second;
  }
  report.components = label.size();
  for (std::size_t k = 1; k < size && !report.witness; ++k)
    if (report.component_of[k] != report.component_of[0]) report.witness = std::make_pair<std::size_t, std::size_t>(0, std::size_t{k});
  return report;
}

/// log pi(v) up to a constant.
inline double log_weight(const DyadTable& v, Target target) {
  if (target == Target::uniform) return 0.0;
  double s = 0;
  for (auto x : v.cells()) s -= std::lgamma(static_cast<double>(x) + 1.0);
  return s;
}

/// sum_{v : stat(v) >= stat(u)} pi(v) / sum_v pi(v) over a complete fiber.
inline double exact_pvalue(const FiberEnumeration& fiber, double observed, const StatFn& stat_fn, Target target) {
  if (fiber.truncated) throw InvalidInput("exact p-value needs a complete fiber enumeration");
  if (fiber.members.empty()) throw InvalidInput("empty fiber");
  std::vector<double> logw;
  for (const auto& v : fiber.members) logw.push_back(log_weight(v, target));
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0, extreme = 0;
  for (std::size_t k = 0; k < fiber.size(); ++k) {
    const double w = std::exp(logw[k] - top);
    total += w;
    if (at_least_as_extreme(stat_fn(fiber.members[k]), observed)) extreme += w;
  }
  return extreme / total;
}

inline double exact_pvalue_small(const DesignMatrix& a, const DyadTable& u, const StatFn& stat_fn, Target target,
                                 std::size_t cap = 1000000) {
  return exact_pvalue(enumerate_fiber(a, u, cap), stat_fn(u), stat_fn, target);
}

}  // namespace fibergof

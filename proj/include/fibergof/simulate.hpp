#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fibergof/errors.hpp"
#include "fibergof/graph_tables.hpp"
#include "fibergof/mle_ipf.hpp"
#include "fibergof/model_zoo.hpp"

namespace fibergof {

inline std::size_t model_nodes(const ModelSpec& spec) {
  if (const auto* f = std::get_if<IndependenceFamily>(&spec.family)) return f->d1;
  if (const auto* f = std::get_if<BetaFamily>(&spec.family)) return f->n;
  if (const auto* f = std::get_if<P1Family>(&spec.family)) return f->n;
  return std::get<SbmFamily>(spec.family).partition.nodes();
}

/// Draws `count` tables from the fitted model: each dyad independently
/// multinomial over its states with probabilities proportional to the
/// fitted means and as many observations as its fitted total (one in simple
/// mode). Plain tables draw the whole table as one multinomial.
inline std::vector<DyadTable> simulate(const ModelSpec& spec, const FitResult& fitted, std::size_t count,
                                       std::uint64_t seed) {
  if (!fitted.converged) throw InvalidInput("cannot simulate from a fit that did not converge");
  const auto layout = model_layout(spec);
  const auto& m = fitted.fitted_means;
  std::mt19937_64 rng(seed);

  auto draw_block = [&rng](const double* means, std::size_t k, std::int64_t trials, std::int64_t* out) {
    if (trials == 0) return;
    std::discrete_distribution<std::size_t> pick(means, means + k);
    for (std::int64_t t = 0; t < trials; ++t) ++out[pick(rng)];
  };

  std::vector<DyadTable> out;
  out.reserve(count);
  if (layout == Layout::plain) {
    const auto& f = std::get<IndependenceFamily>(spec.family);
    if (m.size() != f.d1 * f.d2) throw DimensionMismatch("fit does not match model size");
    double total = 0;
    for (auto v : m) total += v;
    for (std::size_t r = 0; r < count; ++r) {
      std::vector<std::int64_t> cells(m.size(), 0);
      draw_block(m.data(), m.size(), std::llround(total), cells.data());
      out.push_back(DyadTable::plain(f.d1, f.d2, std::move(cells)));
    }
    return out;
  }

  const auto n = model_nodes(spec);
  const auto k = states_per_dyad(layout);
  if (m.size() != dyad_count(n) * k) throw DimensionMismatch("fit does not match model size");
  for (std::size_t r = 0; r < count; ++r) {
    std::vector<std::int64_t> cells(m.size(), 0);
    for (std::size_t d = 0; d < dyad_count(n); ++d) {
      double total = 0;
      for (std::size_t s = 0; s < k; ++s) total += m[d * k + s];
      const auto trials = spec.mode == Mode::simple ? 1 : std::llround(total);
      draw_block(m.data() + d * k, k, trials, cells.data() + d * k);
    }
    out.emplace_back(layout, spec.mode, n, std::move(cells));
  }
  return out;
}

}  // namespace fibergof

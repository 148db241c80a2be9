#pragma once

// Metropolis-Hastings walk on the fiber F_A(u) = {v >= 0 : Av = Au} and the
// Monte Carlo estimate of the exact conditional p-value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fibergof/design_matrix.hpp"
#include "fibergof/errors.hpp"
#include "fibergof/graph_tables.hpp"
#include "fibergof/lattice_moves.hpp"
#include "fibergof/proposals.hpp"

namespace fibergof {

/// Stationary law on the fiber: uniform (simple graphs) or proportional to
/// prod_c 1/v_c! (multinomial and product-multinomial sampling).
enum class Target { uniform, hypergeometric };

inline const char* to_string(Target t) { return t == Target::uniform ? "uniform" : "hypergeometric"; }

inline Target default_target(Mode mode) { return mode == Mode::simple ? Target::uniform : Target::hypergeometric; }

struct ChainConfig {
  std::uint64_t steps = 100000;  // total iterations, burn-in included
  std::uint64_t burn_in = 10000;
  std::uint64_t thin = 10;
  std::uint64_t seed = 0;
  double proposal_mix = 0.8;  // probability of a curated proposal
  double geometric_p = 0.5;   // P(coefficient == 0) in lattice combinations
  Target target = Target::uniform;
  // Full Au check interval; 0 means every step in debug builds and every
  // 1000 steps otherwise.
  std::uint64_t verify_every = 0;

  void validate() const {
    if (steps == 0) throw InvalidInput("steps must be positive");
    if (steps <= burn_in) throw InvalidInput("steps must exceed burn-in");
    if (thin == 0) throw InvalidInput("thin must be positive");
    if (!(proposal_mix >= 0.0 && proposal_mix <= 1.0)) throw InvalidInput("proposal_mix must lie in [0,1]");
    if (!(geometric_p > 0.0 && geometric_p < 1.0)) throw InvalidInput("geometric_p must lie in (0,1)");
  }

  std::uint64_t kept() const { return (steps - burn_in) / thin; }

  std::uint64_t verify_interval() const {
    if (verify_every > 0) return verify_every;
#ifdef NDEBUG
    return 1000;
#else
    return 1;
#endif
  }
};

struct PValue {
  double p = 1.0;
  double se = 0.0;
};

struct ChainResult {
  std::uint64_t samples_kept = 0;
  std::vector<double> stat_stream;
  double observed_stat = 0.0;
  double p_value = 1.0;
  double mc_standard_error = 0.0;
  double acceptance_rate = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t accepted = 0;
  std::uint64_t verified_states = 0;
  DyadTable final_state;
};

using StatFn = std::function<double(const DyadTable&)>;

/// v counts as at least as extreme as the observed value, with a relative
/// slack of 1e-9 so equal tables evaluated in a different order still tie.
/// +inf ranks above every finite value.
inline bool at_least_as_extreme(double v, double observed) {
  if (std::isinf(observed)) return std::isinf(v) && v > 0;
  return v >= observed - 1e-9 * std::max(1.0, std::abs(observed));
}

/// Add-one estimate (1 + #{s >= observed}) / (1 + M) with a batch-means
/// standard error over (up to) 50 batches of the exceedance indicator.
inline PValue estimate_pvalue(double observed, std::span<const double> stream) {
  if (stream.empty()) throw InvalidInput("empty statistic stream");
  const auto m = stream.size();
  std::size_t hits = 0;
  for (auto v : stream) hits += at_least_as_extreme(v, observed);

  PValue out;
  out.p = (1.0 + static_cast<double>(hits)) / (1.0 + static_cast<double>(m));

  const std::size_t batches = std::min<std::size_t>(50, m);
  if (batches < 2) return out;
  const std::size_t size = m / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto begin = b * size, end = b + 1 == batches ? m : begin + size;
    std::size_t h = 0;
    for (auto k = begin; k < end; ++k) h += at_least_as_extreme(stream[k], observed);
    means[b] = static_cast<double>(h) / static_cast<double>(end - begin);
  }
  double mean = 0;
  for (auto v : means) mean += v;
  mean /= static_cast<double>(batches);
  double ss = 0;
  for (auto v : means) ss += (v - mean) * (v - mean);
  out.se = std::sqrt(ss / static_cast<double>(batches * (batches - 1)));
  return out;
}

/// sum_i c_i b_i with c_i = s_i * G_i, s_i a fair sign and G_i ~ Geometric(p)
/// on {0,1,2,...}, conditioned on some c_i != 0. Every nonzero integer
/// coefficient vector has positive probability and c, -c are equally likely.
inline Move lattice_combination(const LatticeBasis& basis, double geometric_p, Rng& rng) {
  if (basis.moves.empty()) return {};
  std::geometric_distribution<std::int64_t> magnitude(geometric_p);
  std::bernoulli_distribution sign(0.5);
  std::vector<std::int64_t> coeffs(basis.moves.size());
  bool any = false;
  while (!any) {
    for (auto& c : coeffs) {
      c = magnitude(rng);
      if (sign(rng)) c = -c;
      any = any || c != 0;
    }
  }
  return Move::combine(basis.moves, coeffs);
}

/// Curated move with probability proposal_mix (when a family exists),
/// otherwise a random lattice combination. Symmetric: q(m) == q(-m).
inline Move propose(const DyadTable& state, const CuratedMoves& curated, const LatticeBasis& basis,
                    const ChainConfig& cfg, Rng& rng) {
  const bool curated_only = basis.moves.empty();
  if (!curated.empty() && (curated_only || std::bernoulli_distribution(cfg.proposal_mix)(rng)))
    return curated.draw(state, rng);
  return lattice_combination(basis, cfg.geometric_p, rng);
}

/// One Metropolis-Hastings step in place. Inapplicable proposals leave the
/// state unchanged. Returns true iff a nonzero move was applied.
inline bool mh_step(DyadTable& state, const Move& move, Target target, Rng& rng) {
  if (move.is_zero() || !applicable(move, state)) return false;
  if (target == Target::hypergeometric) {
    // pi(y)/pi(x) = prod_c x_c! / y_c!
    double log_ratio = 0;
    for (const auto& e : move.entries()) {
      const auto x = static_cast<double>(state[e.cell]);
      log_ratio += std::lgamma(x + 1.0) - std::lgamma(x + static_cast<double>(e.delta) + 1.0);
    }
    if (log_ratio < 0) {
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      if (!(std::log(u) < log_ratio)) return false;
    }
  }
  apply_move(state, move);
  return true;
}

/// Runs one chain from t0. Every visited state is checked against A t0 at
/// the configured interval (an exact integer comparison); a mismatch is a
/// logic error.
inline ChainResult run_chain(const DyadTable& t0, const DesignMatrix& a, const CuratedMoves& curated,
                             const LatticeBasis& basis, const StatFn& stat_fn, const ChainConfig& cfg) {
  cfg.validate();
  const auto reference = matrix_vector(a, t0.cells());
  const auto interval = cfg.verify_interval();

  ChainResult result;
  result.observed_stat = stat_fn(t0);
  result.stat_stream.reserve(cfg.kept());

  Rng rng(cfg.seed);
  DyadTable state = t0;
  for (std::uint64_t step = 1; step <= cfg.steps; ++step) {
    const auto move = propose(state, curated, basis, cfg, rng);
    if (mh_step(state, move, cfg.target, rng)) ++result.accepted;
    if (step % interval == 0) {
      if (matrix_vector(a, state.cells()) != reference)
        throw std::logic_error("chain left the fiber at step " + std::to_string(step));
      ++result.verified_states;
    }
    if (step > cfg.burn_in && (step - cfg.burn_in) % cfg.thin == 0) result.stat_stream.push_back(stat_fn(state));
  }

  result.steps = cfg.steps;
  result.samples_kept = result.stat_stream.size();
  result.acceptance_rate = static_cast<double>(result.accepted) / static_cast<double>(cfg.steps);
  const auto pv = estimate_pvalue(result.observed_stat, result.stat_stream);
  result.p_value = pv.p;
  result.mc_standard_error = pv.se;
  result.final_state = std::move(state);
  return result;
}

/// Seed of chain k: splitmix64 of (seed, k).
inline std::uint64_t chain_seed(std::uint64_t seed, std::uint64_t chain) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (chain + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent chains on separate threads, seeded by chain_seed(cfg.seed, k).
/// Kept samples are pooled in chain order, so the result depends only on
/// the seed and the chain count. stat_fn must be safe to call concurrently.
inline ChainResult run_chains(const DyadTable& t0, const DesignMatrix& a, const CuratedMoves& curated,
                              const LatticeBasis& basis, const StatFn& stat_fn, const ChainConfig& cfg,
                              std::size_t chains = 1) {
  cfg.validate();
  if (chains == 0) throw InvalidInput("chain count must be positive");
  std::vector<ChainResult> results(chains);
  std::vector<std::exception_ptr> errors(chains);
  auto work = [&](std::size_t k) {
    try {
      auto c = cfg;
      c.seed = chain_seed(cfg.seed, k);
      results[k] = run_chain(t0, a, curated, basis, stat_fn, c);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (chains == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t k = 0; k < chains; ++k) threads.emplace_back(work, k);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ChainResult pooled = std::move(results[0]);
  for (std::size_t k = 1; k < chains; ++k) {
    auto& r = results[k];
    pooled.stat_stream.insert(pooled.stat_stream.end(), r.stat_stream.begin(), r.stat_stream.end());
    pooled.steps += r.steps;
    pooled.accepted += r.accepted;
    pooled.verified_states += r.verified_states;
  }
  pooled.samples_kept = pooled.stat_stream.size();
  pooled.acceptance_rate = static_cast<double>(pooled.accepted) / static_cast<double>(pooled.steps);
  const auto pv = estimate_pvalue(pooled.observed_stat, pooled.stat_stream);
  pooled.p_value = pv.p;
  pooled.mc_standard_error = pv.se;
  return pooled;
}

/// Linear-interpolated quantile of a sample (q in [0,1]).
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (std::isinf(values[lo]) || std::isinf(values[hi])) return values[frac > 0 ? hi : lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace fibergof

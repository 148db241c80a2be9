#pragma once

// Goodness-of-fit statistics and the exact conditional test pipeline:
// encode -> design matrix -> IPF fit -> moves -> fiber walk -> report.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fibergof/design_matrix.hpp"
#include "fibergof/errors.hpp"
#include "fibergof/fiber_sampler.hpp"
#include "fibergof/graph_tables.hpp"
#include "fibergof/lattice_moves.hpp"
#include "fibergof/mle_ipf.hpp"
#include "fibergof/model_zoo.hpp"
#include "fibergof/proposals.hpp"

namespace fibergof {

enum class StatKind { chi2, g2 };

inline const char* to_string(StatKind k) { return k == StatKind::chi2 ? "chi2" : "g2"; }

/// Pearson chi-square. Cells with m = 0 and u = 0 contribute nothing; m = 0
/// with u > 0 makes the statistic +inf.
inline double chi_square(std::span<const std::int64_t> u, std::span<const double> fitted) {
  if (u.size() != fitted.size()) throw DimensionMismatch("table and fitted means differ in length");
  double s = 0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    const double m = fitted[c];
    if (m < 0) throw InvalidInput("negative fitted mean");
    if (m == 0) {
      if (u[c] > 0) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double diff = static_cast<double>(u[c]) - m;
    s += diff * diff / m;
  }
  return s;
}

/// Deviance 2 * sum_{u_c > 0} u_c log(u_c / m_c).
inline double deviance_g2(std::span<const std::int64_t> u, std::span<const double> fitted) {
  if (u.size() != fitted.size()) throw DimensionMismatch("table and fitted means differ in length");
  double s = 0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    if (u[c] == 0) continue;
    if (fitted[c] <= 0) return std::numeric_limits<double>::infinity();
    const double x = static_cast<double>(u[c]);
    s += x * std::log(x / fitted[c]);
  }
  return 2.0 * s;
}

inline double gof_statistic(StatKind kind, std::span<const std::int64_t> u, std::span<const double> fitted) {
  return kind == StatKind::chi2 ? chi_square(u, fitted) : deviance_g2(u, fitted);
}

struct TestOptions {
  StatKind stat = StatKind::chi2;
  std::size_t chains = 1;
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  double eps = 1e-8;
};

struct GofReport {
  ModelSpec model;
  StatKind stat_kind = StatKind::chi2;
  ChainConfig config;
  std::size_t chains = 1;
  double observed_stat = 0;
  bool observed_infinite = false;
  double p_value = 1;
  double se = 0;
  double acceptance_rate = 0;
  std::uint64_t samples_kept = 0;
  std::size_t lattice_rank = 0;
  std::string curated_family;
  FitResult fit;
  MleReport mle;
  std::string data_fingerprint;
  std::vector<std::string> warnings;
  std::vector<double> stat_stream;
};

/// FNV-1a over the table's layout, mode and cells.
inline std::string table_fingerprint(const DyadTable& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(t.layout()));
  mix(static_cast<std::uint64_t>(t.mode()));
  mix(t.nodes());
  mix(t.plain_cols());
  for (auto v : t.cells()) mix(static_cast<std::uint64_t>(v));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Exact conditional goodness-of-fit test of `u` under `spec`.
///
/// The fit is computed once at u and reused for every fiber member: A m
/// depends only on Au, which the walk never changes.
inline GofReport exact_test(const DyadTable& u, const ModelSpec& spec, const ChainConfig& cfg,
                            const TestOptions& options = {}) {
  check_compatible(spec, u);
  cfg.validate();
  auto a = std::make_shared<const DesignMatrix>(build_design(spec));

  GofReport report;
  report.model = spec;
  report.stat_kind = options.stat;
  report.config = cfg;
  report.chains = options.chains;
  report.data_fingerprint = table_fingerprint(u);

  report.fit = ipf_fit(*a, u, options.tol, options.max_iter, options.eps);
  report.mle = mle_existence_heuristic(report.fit, options.eps);
  if (!report.fit.converged)
    report.warnings.push_back("IPF did not converge; max margin gap " + std::to_string(report.fit.max_margin_gap));
  if (report.mle.suspect) report.warnings.push_back("MLE existence suspect");

  const auto basis = integer_kernel(*a);
  const auto curated = curated_moves(spec, a, basis);
  report.lattice_rank = basis.rank;
  report.curated_family = curated.empty() ? "none" : curated.name();

  const auto fitted = report.fit.fitted_means;
  const auto kind = options.stat;
  const StatFn stat_fn = [fitted, kind](const DyadTable& v) { return gof_statistic(kind, v.cells(), fitted); };

  auto chain = run_chains(u, *a, curated, basis, stat_fn, cfg, options.chains);
  report.observed_stat = chain.observed_stat;
  report.observed_infinite = std::isinf(chain.observed_stat);
  if (report.observed_infinite) report.warnings.push_back("observed statistic is infinite (data in a zero-mean cell)");
  report.p_value = chain.p_value;
  report.se = chain.mc_standard_error;
  report.acceptance_rate = chain.acceptance_rate;
  report.samples_kept = chain.samples_kept;
  report.stat_stream = std::move(chain.stat_stream);
  return report;
}

inline GofReport exact_test(const GraphData& g, const ModelSpec& spec, const ChainConfig& cfg,
                            const TestOptions& options = {}) {
  return exact_test(encode_graph(g, spec.mode), spec, cfg, options);
}

namespace detail {
inline nlohmann::ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}
}  // namespace detail

/// Stable JSON rendering of a report. No timestamps, so equal inputs and
/// seeds give byte-identical output.
inline nlohmann::ordered_json report_to_json(const GofReport& r, const std::vector<std::string>& node_labels = {}) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["model"] = model_name(r.model);
  j["mode"] = to_string(r.model.mode);
  j["seed"] = r.config.seed;
  j["config"] = {{"steps", r.config.steps},
                 {"burn_in", r.config.burn_in},
                 {"thin", r.config.thin},
                 {"chains", r.chains},
                 {"proposal_mix", r.config.proposal_mix},
                 {"geometric_p", r.config.geometric_p},
                 {"target", to_string(r.config.target)}};
  j["stat_kind"] = to_string(r.stat_kind);
  j["observed_stat"] = detail::finite_or_null(r.observed_stat);
  j["observed_stat_infinite"] = r.observed_infinite;
  j["p_value"] = r.p_value;
  j["se"] = r.se;
  j["acceptance_rate"] = r.acceptance_rate;
  j["samples_kept"] = r.samples_kept;
  ordered_json q;
  if (!r.stat_stream.empty()) {
    const std::pair<const char*, double> levels[] = {{"min", 0.0},  {"q05", 0.05}, {"q25", 0.25}, {"median", 0.5},
                                                     {"q75", 0.75}, {"q95", 0.95}, {"max", 1.0}};
    for (const auto& [name, level] : levels) q[name] = detail::finite_or_null(quantile(r.stat_stream, level));
  }
  j["stat_quantiles"] = q;
  j["fit"] = {{"converged", r.fit.converged},
              {"iterations", r.fit.iterations},
              {"max_margin_gap", detail::finite_or_null(r.fit.max_margin_gap)},
              {"zero_cells", r.fit.zero_flag.size()},
              {"structural_zeros", r.fit.structural_zeros.size()},
              {"mle", r.mle.verdict},
              {"mle_reasons", r.mle.reasons}};
  j["moves"] = {{"lattice_rank", r.lattice_rank}, {"curated", r.curated_family}};
  j["data_fingerprint"] = r.data_fingerprint;
  if (!node_labels.empty()) j["node_labels"] = node_labels;
  j["warnings"] = r.warnings;
  return j;
}

inline void write_stream_csv(std::ostream& out, std::span<const double> stream) {
  out << "index,statistic\n";
  char buf[64];
  for (std::size_t k = 0; k < stream.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", stream[k]);
    out << k << ',' << buf << '\n';
  }
}

}  // namespace fibergof

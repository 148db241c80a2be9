#pragma once

// Maximum likelihood cell means by iterative proportional scaling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fibergof/design_matrix.hpp"
#include "fibergof/errors.hpp"
#include "fibergof/graph_tables.hpp"

namespace fibergof {

struct FitResult {
  std::vector<double> fitted_means;
  bool converged = false;
  std::size_t iterations = 0;  // completed sweeps over the rows of A
  double max_margin_gap = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> zero_flag;         // cells with fitted mean < eps
  std::vector<std::size_t> structural_zeros;  // cells forced to 0 by zero margins
  std::vector<double> gap_history;            // max margin gap after each sweep
};

namespace detail {

inline std::vector<double> margins(const DesignMatrix& a, const std::vector<double>& m) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (const auto& e : a.row(r)) out[r] += static_cast<double>(e.value) * m[e.index];
  return out;
}

inline double max_gap(const std::vector<double>& fitted, const std::vector<std::int64_t>& observed) {
  double g = 0;
  for (std::size_t r = 0; r < fitted.size(); ++r) g = std::max(g, std::abs(fitted[r] - static_cast<double>(observed[r])));
  return g;
}

}  // namespace detail

/// Cyclic scaling: for each row r with target t_r = (Au)_r > 0,
///   m_c <- m_c * (t_r / (A m)_r)^(A_rc / M_r),   M_r = max_c A_rc.
/// On 0/1 rows this matches the row margin exactly (classical IPF); rows
/// with larger entries take a damped step that still increases the
/// likelihood. Rows with t_r = 0 zero their support up front and are
/// skipped. Start: each dyad's observed total split evenly across its
/// states; all ones for plain tables.
inline FitResult ipf_fit(const DesignMatrix& a, const DyadTable& u, double tol = 1e-10, std::size_t max_iter = 10000,
                         double eps = 1e-8) {
  if (u.size() != a.cols()) throw DimensionMismatch("table length does not match design matrix columns");
  if (!(tol > 0)) throw InvalidInput("tolerance must be positive");
  const auto target = matrix_vector(a, u.cells());

  FitResult fit;
  auto& m = fit.fitted_means;
  m.assign(u.size(), 1.0);
  if (u.layout() != Layout::plain) {
    const auto k = u.states();
    for (std::size_t d = 0; d < u.dyads(); ++d)
      for (std::size_t s = 0; s < k; ++s) m[d * k + s] = static_cast<double>(u.dyad_sum(d)) / static_cast<double>(k);
  }

  std::vector<bool> active(a.rows(), true);
  std::vector<bool> forced(u.size(), false);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    if (target[r] != 0) continue;
    active[r] = false;
    for (const auto& e : a.row(r)) forced[e.index] = true;
  }
  for (std::size_t c = 0; c < u.size(); ++c)
    if (forced[c]) {
      m[c] = 0.0;
      fit.structural_zeros.push_back(c);
    }

  std::vector<double> exponent_scale(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) exponent_scale[r] = static_cast<double>(a.max_in_row(r));

  fit.max_margin_gap = detail::max_gap(detail::margins(a, m), target);
  fit.converged = fit.max_margin_gap <= tol;
  while (!fit.converged && fit.iterations < max_iter) {
    for (std::size_t r = 0; r < a.rows(); ++r) {
      if (!active[r]) continue;
      double current = 0;
      for (const auto& e : a.row(r)) current += static_cast<double>(e.value) * m[e.index];
      if (current <= 0) continue;
      const double ratio = static_cast<double>(target[r]) / current;
      if (ratio == 1.0) continue;
      for (const auto& e : a.row(r)) {
        if (m[e.index] == 0.0) continue;
        m[e.index] *= e.value == exponent_scale[r] ? ratio
                                                   : std::pow(ratio, static_cast<double>(e.value) / exponent_scale[r]);
      }
    }
    ++fit.iterations;
    fit.max_margin_gap = detail::max_gap(detail::margins(a, m), target);
    fit.gap_history.push_back(fit.max_margin_gap);
    fit.converged = fit.max_margin_gap <= tol;
  }

  for (std::size_t c = 0; c < m.size(); ++c)
    if (m[c] < eps) fit.zero_flag.push_back(c);
  return fit;
}

struct MleReport {
  bool suspect = false;
  std::string verdict;  // "exists: likely" or "exists: suspect"
  std::vector<std::string> reasons;
  std::vector<std::size_t> boundary_cells;  // small fitted cells not forced by zero margins
};

/// Advisory check for a fit sitting on (or drifting to) the boundary of the
/// mean space, where the MLE of the natural parameters does not exist.
inline MleReport mle_existence_heuristic(const FitResult& fit, double eps = 1e-8) {
  MleReport report;
  if (!fit.converged) {
    report.suspect = true;
    report.reasons.push_back("no convergence after " + std::to_string(fit.iterations) +
                             " sweeps (max margin gap " + std::to_string(fit.max_margin_gap) + ")");
  }
  for (std::size_t c = 0; c < fit.fitted_means.size(); ++c) {
    if (fit.fitted_means[c] >= eps) continue;
    if (std::binary_search(fit.structural_zeros.begin(), fit.structural_zeros.end(), c)) continue;
    report.boundary_cells.push_back(c);
  }
  if (!report.boundary_cells.empty()) {
    report.suspect = true;
    report.reasons.push_back(std::to_string(report.boundary_cells.size()) +
                             " fitted cells below eps without a zero margin forcing them");
  }
  report.verdict = report.suspect ? "exists: suspect" : "exists: likely";
  return report;
}

}  // namespace fibergof

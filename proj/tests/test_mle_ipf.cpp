#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace fibergof;

namespace {

// The MLE is the unique positive m with Am = Au and log m in the row space
// of A, i.e. orthogonal to every kernel vector.
double max_log_residual(const DesignMatrix& a, const std::vector<double>& m) {
  double worst = 0;
  for (const auto& b : integer_kernel(a).moves) {
    double s = 0;
    for (const auto& e : b.entries()) s += static_cast<double>(e.delta) * std::log(m[e.cell]);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

double margin_gap(const DesignMatrix& a, const DyadTable& u, const std::vector<double>& m) {
  const auto target = matrix_vector(a, u.cells());
  double g = 0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0;
    for (const auto& e : a.row(r)) s += static_cast<double>(e.value) * m[e.index];
    g = std::max(g, std::abs(s - static_cast<double>(target[r])));
  }
  return g;
}

DyadTable random_multigraph(std::size_t n, bool directed, std::int64_t trials, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> count(0, trials);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = directed ? 0 : i + 1; j < n; ++j)
      if (i != j) edges.push_back({i, j, count(rng)});
  return encode_graph(GraphData(n, directed, edges), Mode::multigraph, trials);
}

}  // namespace

TEST(Ipf, ClosedFormIndependence) {
  const auto fit = ipf_fit(independence_design(2, 2), DyadTable::plain(2, 2, {1, 2, 3, 4}));
  ASSERT_TRUE(fit.converged);
  const std::vector<double> expected = {1.2, 1.8, 2.8, 4.2};
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(fit.fitted_means[c], expected[c], 1e-8);
}

TEST(Ipf, ClosedFormLargerTables) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::int64_t> cell(1, 9);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t d1 = 2 + rep % 3, d2 = 2 + rep % 4;
    std::vector<std::int64_t> u(d1 * d2);
    for (auto& v : u) v = cell(rng);
    const auto fit = ipf_fit(independence_design(d1, d2), DyadTable::plain(d1, d2, u));
    const auto margins = oracle::table_margins(d1, d2, u);
    double total = 0;
    for (auto v : u) total += static_cast<double>(v);
    for (std::size_t i = 0; i < d1; ++i)
      for (std::size_t j = 0; j < d2; ++j)
        EXPECT_NEAR(fit.fitted_means[i * d2 + j],
                    static_cast<double>(margins.at(oracle::one("row", i)) * margins.at(oracle::one("col", j))) / total,
                    1e-8);
  }
}

TEST(Ipf, ZeroRowMarginForcesZeros) {
  const auto fit = ipf_fit(independence_design(3, 2), DyadTable::plain(3, 2, {1, 2, 0, 0, 3, 1}));
  ASSERT_TRUE(fit.converged);
  EXPECT_EQ(fit.fitted_means[2], 0.0);
  EXPECT_EQ(fit.fitted_means[3], 0.0);
  EXPECT_EQ(fit.structural_zeros, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(mle_existence_heuristic(fit).verdict, "exists: likely");
}

TEST(Ipf, ProductTableIsAFixedPoint) {
  const auto u = DyadTable::plain(2, 2, {1, 2, 2, 4});
  const auto fit = ipf_fit(independence_design(2, 2), u);
  ASSERT_TRUE(fit.converged);
  EXPECT_LE(fit.iterations, 2u);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(fit.fitted_means[c], static_cast<double>(u[c]), 1e-12);
}

TEST(Mle, LikelyWhenInterior) {
  const auto fit = ipf_fit(independence_design(2, 2), DyadTable::plain(2, 2, {1, 2, 3, 4}));
  const auto report = mle_existence_heuristic(fit);
  EXPECT_FALSE(report.suspect);
  EXPECT_EQ(report.verdict, "exists: likely");
}

TEST(Mle, SuspectWhenNotConverged) {
  const auto a = beta_design(4);
  const auto star = encode_graph(GraphData(4, false, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}}), Mode::simple);
  const auto fit = ipf_fit(a, star, 1e-10, 5);
  EXPECT_FALSE(fit.converged);
  const auto report = mle_existence_heuristic(fit);
  EXPECT_TRUE(report.suspect);
  EXPECT_EQ(report.verdict, "exists: suspect");
}

TEST(Mle, StarGraphIsOnTheBoundary) {
  // Degrees (3,1,1,1): every leaf-leaf dyad must be empty and every hub
  // dyad full, so fitted probabilities drift to 0 and 1.
  const auto star = encode_graph(GraphData(4, false, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}}), Mode::simple);
  const auto fit = ipf_fit(beta_design(4), star);
  const auto report = mle_existence_heuristic(fit);
  EXPECT_TRUE(report.suspect);
  // Leaf-leaf edge probabilities head to zero across sweeps.
  const auto leaf_leaf = dyad_index(4, 1, 2) * 2 + 1;
  EXPECT_LT(fit.fitted_means[leaf_leaf], 1e-3);
}

TEST(Property, ConvergedFitsReproduceMargins) {
  std::mt19937_64 rng(42);
  int converged = 0, attempts = 0;
  while (converged < 100 && attempts < 400) {
    const int rep = attempts++;
    const std::size_t n = 3 + rep % 3;
    std::vector<std::size_t> blocks(n);
    for (std::size_t i = 0; i < n; ++i) blocks[i] = i % 2;
    const std::vector<ModelSpec> specs = {
        {BetaFamily{n}, Mode::multigraph},
        {P1Family{n, Reciprocity::zero}, Mode::multigraph},
        {P1Family{n, Reciprocity::constant}, Mode::multigraph},
        {P1Family{n, Reciprocity::differential}, Mode::multigraph},
        {SbmFamily{BlockPartition(blocks), SbmVariant::restricted}, Mode::multigraph},
        {SbmFamily{BlockPartition(blocks), SbmVariant::full}, Mode::multigraph},
    };
    const auto& spec = specs[rep % specs.size()];
    const auto a = build_design(spec);
    const auto u = random_multigraph(n, model_layout(spec) == Layout::directed, 4, rng);
    const auto fit = ipf_fit(a, u);
    if (!fit.converged) {
      // Nonconvergence must come with the boundary flag.
      EXPECT_TRUE(mle_existence_heuristic(fit).suspect);
      continue;
    }
    ++converged;
    EXPECT_LE(margin_gap(a, u, fit.fitted_means), 1e-10) << model_name(spec);
    double total = 0, observed = 0;
    for (auto v : fit.fitted_means) total += v;
    for (auto v : u.cells()) observed += static_cast<double>(v);
    EXPECT_NEAR(total, observed, 1e-9);
    if (fit.zero_flag.empty()) {
      EXPECT_LT(max_log_residual(a, fit.fitted_means), 1e-6) << model_name(spec);
    }
  }
  EXPECT_EQ(converged, 100);
}

// Cyclic scaling raises the Poisson log-likelihood every sweep. The max
// margin gap can rise during the first few sweeps, so it is only required
// to be non-increasing after a short transient.
TEST(Property, LikelihoodAndGapAreMonotone) {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<std::int64_t> cell(1, 6);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + rep % 3;
    std::vector<std::int64_t> u(dyad_count(n) * 4);
    for (auto& v : u) v = cell(rng);
    const DyadTable t(Layout::directed, Mode::multigraph, n, u);
    const auto a = p1_design(n, Reciprocity::constant);
    const auto fit = ipf_fit(a, t);
    ASSERT_TRUE(fit.converged);
    for (std::size_t k = 20; k < fit.gap_history.size(); ++k)
      EXPECT_LE(fit.gap_history[k], fit.gap_history[k - 1] * (1 + 1e-9) + 1e-12) << "sweep " << k;
    double previous = -std::numeric_limits<double>::infinity();
    for (std::size_t sweeps = 1; sweeps <= 30; ++sweeps) {
      const auto partial = ipf_fit(a, t, 1e-10, sweeps);
      double ll = 0;
      for (std::size_t c = 0; c < u.size(); ++c)
        ll += static_cast<double>(u[c]) * std::log(partial.fitted_means[c]) - partial.fitted_means[c];
      EXPECT_GE(ll, previous - 1e-9 * std::abs(previous)) << "sweep " << sweeps;
      previous = ll;
    }
  }
}

TEST(Ipf, Validation) {
  EXPECT_THROW(ipf_fit(independence_design(2, 2), DyadTable::plain(2, 3, {1, 1, 1, 1, 1, 1})), DimensionMismatch);
  EXPECT_THROW(ipf_fit(independence_design(2, 2), DyadTable::plain(2, 2, {1, 1, 1, 1}), 0.0), InvalidInput);
}

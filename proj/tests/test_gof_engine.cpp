#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace fibergof;

namespace {

ChainConfig config(std::uint64_t steps, std::uint64_t seed, Target target) {
  ChainConfig c;
  c.steps = steps;
  c.burn_in = steps / 10;
  c.thin = 5;
  c.seed = seed;
  c.target = target;
  return c;
}

const double inf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(ChiSquare, Values) {
  const std::vector<std::int64_t> u = {1, 2, 3, 4};
  EXPECT_NEAR(chi_square(u, std::vector<double>{1, 2, 3, 4}), 0.0, 1e-15);
  const double expected = 0.04 / 1.2 + 0.04 / 1.8 + 0.04 / 2.8 + 0.04 / 4.2;
  EXPECT_NEAR(chi_square(u, std::vector<double>{1.2, 1.8, 2.8, 4.2}), expected, 1e-12);
  EXPECT_NEAR(expected, 0.07937, 1e-5);
  EXPECT_EQ(chi_square(u, std::vector<double>{0, 2, 3, 5}), inf);
  EXPECT_EQ(chi_square(std::vector<std::int64_t>{0, 1}, std::vector<double>{0, 1}), 0.0);
  EXPECT_THROW(chi_square(u, std::vector<double>{1, 2}), DimensionMismatch);
}

TEST(Deviance, Values) {
  EXPECT_NEAR(deviance_g2(std::vector<std::int64_t>{1, 2, 3}, std::vector<double>{1, 2, 3}), 0.0, 1e-15);
  EXPECT_NEAR(deviance_g2(std::vector<std::int64_t>{2, 0}, std::vector<double>{1, 1}), 4 * std::log(2.0), 1e-12);
  EXPECT_NEAR(4 * std::log(2.0), 2.7726, 1e-4);
  EXPECT_EQ(deviance_g2(std::vector<std::int64_t>{0, 0}, std::vector<double>{1, 1}), 0.0);
}

TEST(Property, StatisticsNonNegativeAndZeroOnlyAtFit) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::int64_t> cell(0, 8);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::int64_t> u(9);
    for (auto& v : u) v = cell(rng);
    if (std::all_of(u.begin(), u.end(), [](auto v) { return v == 0; })) continue;
    const auto t = DyadTable::plain(3, 3, u);
    const auto fit = ipf_fit(independence_design(3, 3), t);
    const auto x2 = chi_square(u, fit.fitted_means), g2 = deviance_g2(u, fit.fitted_means);
    EXPECT_GE(x2, 0.0);
    EXPECT_GE(g2, -1e-12);
    bool equal = true;
    for (std::size_t c = 0; c < 9; ++c) equal = equal && std::abs(static_cast<double>(u[c]) - fit.fitted_means[c]) < 1e-12;
    if (!equal) {
      EXPECT_GT(x2, 1e-12);
    }
  }
}

TEST(ExactTest, SingletonFiber) {
  const ModelSpec spec{IndependenceFamily{2, 2}, Mode::multigraph};
  const auto r = exact_test(DyadTable::plain(2, 2, {4, 0, 0, 0}), spec, config(5000, 1, Target::hypergeometric));
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_EQ(r.se, 0.0);
  EXPECT_EQ(r.lattice_rank, 1u);
}

TEST(ExactTest, SmallIndependenceMatchesEnumeration) {
  const ModelSpec spec{IndependenceFamily{2, 2}, Mode::multigraph};
  const std::vector<std::vector<std::int64_t>> tables = {{2, 0, 0, 3}, {1, 1, 2, 0}, {3, 0, 1, 1}, {0, 2, 2, 1}};
  const auto a = independence_design(2, 2);
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const auto u = DyadTable::plain(2, 2, tables[k]);
    const auto r = exact_test(u, spec, config(210000, 10 + k, Target::hypergeometric));
    const auto m = r.fit.fitted_means;
    const StatFn stat = [m](const DyadTable& t) { return chi_square(t.cells(), m); };
    EXPECT_NEAR(r.p_value, exact_pvalue_small(a, u, stat, Target::hypergeometric), 0.02);
  }
}

TEST(ExactTest, G2OnGraphModel) {
  const ModelSpec spec{P1Family{5, Reciprocity::constant}, Mode::simple};
  const GraphData g(5, true, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}, {4, 0, 1}, {2, 0, 1}});
  TestOptions options;
  options.stat = StatKind::g2;
  const auto r = exact_test(g, spec, config(100000, 3, Target::uniform), options);
  const auto a = build_design(spec);
  const auto m = r.fit.fitted_means;
  const StatFn stat = [m](const DyadTable& t) { return deviance_g2(t.cells(), m); };
  const double exact = exact_pvalue_small(a, encode_graph(g, Mode::simple), stat, Target::uniform);
  EXPECT_NEAR(r.p_value, exact, 0.02);
  EXPECT_GT(r.acceptance_rate, 0.0);
}

TEST(Property, FitIsConstantOverTheFiber) {
  // Refit at chain states: margins match the same Au and the fitted means
  // agree with the fit at the observed table.
  const std::size_t n = 6;
  auto a = std::make_shared<const DesignMatrix>(p1_design(n, Reciprocity::constant));
  const auto basis = integer_kernel(*a);
  const ModelSpec spec{P1Family{n, Reciprocity::constant}, Mode::simple};
  const auto curated = curated_moves(spec, a, basis);
  std::mt19937_64 graph_rng(52);
  const auto u = encode_graph(oracle::to_graph(oracle::random_digraph(n, 0.35, graph_rng), true), Mode::simple);
  const auto fit = ipf_fit(*a, u);
  ASSERT_TRUE(fit.converged);
  const auto target = matrix_vector(*a, u.cells());
  Rng rng(53);
  auto state = u;
  const auto cfg = config(10000, 53, Target::uniform);
  for (int k = 0; k < 10; ++k) {
    for (int s = 0; s < 500; ++s) mh_step(state, propose(state, curated, basis, cfg, rng), cfg.target, rng);
    EXPECT_EQ(matrix_vector(*a, state.cells()), target);
    const auto refit = ipf_fit(*a, state);
    ASSERT_TRUE(refit.converged);
    EXPECT_LE(refit.max_margin_gap, 1e-10);
    for (std::size_t c = 0; c < u.size(); ++c) EXPECT_NEAR(refit.fitted_means[c], fit.fitted_means[c], 1e-7);
  }
}

TEST(Property, CalibrationOnIndependence) {
  // Tables drawn from a fitted independence model give p-values that pass a
  // KS uniformity check.
  std::mt19937_64 rng(54);
  const double rows[] = {0.2, 0.5, 0.3}, cols[] = {0.3, 0.3, 0.4};
  std::vector<double> probs;
  for (double r : rows)
    for (double c : cols) probs.push_back(r * c);
  std::discrete_distribution<std::size_t> draw(probs.begin(), probs.end());
  const ModelSpec spec{IndependenceFamily{3, 3}, Mode::multigraph};
  std::vector<double> pvalues;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::int64_t> u(9, 0);
    for (int k = 0; k < 40; ++k) ++u[draw(rng)];
    const auto r = exact_test(DyadTable::plain(3, 3, u), spec, config(20000, 1000 + rep, Target::hypergeometric));
    pvalues.push_back(r.p_value);
  }
  EXPECT_GT(oracle::ks_uniform_pvalue(pvalues), 0.01);
}

TEST(Report, JsonIsDeterministicAndComplete) {
  const ModelSpec spec{IndependenceFamily{3, 3}, Mode::multigraph};
  const auto u = DyadTable::plain(3, 3, {3, 1, 0, 1, 2, 1, 0, 1, 3});
  const auto cfg = config(30000, 77, Target::hypergeometric);
  TestOptions options;
  options.chains = 2;
  const auto j1 = report_to_json(exact_test(u, spec, cfg, options)).dump(2);
  const auto j2 = report_to_json(exact_test(u, spec, cfg, options)).dump(2);
  EXPECT_EQ(j1, j2);
  const auto j = nlohmann::json::parse(j1);
  for (const char* key : {"model", "mode", "seed", "config", "stat_kind", "observed_stat", "p_value", "se",
                          "acceptance_rate", "samples_kept", "stat_quantiles", "fit", "moves", "data_fingerprint",
                          "warnings"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["seed"], 77);
  EXPECT_EQ(j["samples_kept"], 2 * cfg.kept());
  EXPECT_EQ(j["model"], "independence");
  const auto other = report_to_json(exact_test(u, spec, config(30000, 78, Target::hypergeometric), options)).dump(2);
  EXPECT_NE(j1, other);
}

TEST(Report, InfiniteObservedIsFlagged) {
  GofReport r;
  r.observed_stat = inf;
  r.observed_infinite = true;
  r.stat_stream = {1.0, inf};
  const auto j = report_to_json(r);
  EXPECT_TRUE(j["observed_stat"].is_null());
  EXPECT_TRUE(j["observed_stat_infinite"].get<bool>());
  EXPECT_TRUE(j["stat_quantiles"]["max"].is_null());
}

TEST(Report, StreamCsv) {
  std::ostringstream out;
  write_stream_csv(out, std::vector<double>{1.5, 2.0});
  EXPECT_EQ(out.str(), "index,statistic\n0,1.5\n1,2\n");
}

TEST(Fingerprint, DistinguishesTables) {
  EXPECT_EQ(table_fingerprint(DyadTable::plain(2, 2, {1, 2, 3, 4})), table_fingerprint(DyadTable::plain(2, 2, {1, 2, 3, 4})));
  EXPECT_NE(table_fingerprint(DyadTable::plain(2, 2, {1, 2, 3, 4})), table_fingerprint(DyadTable::plain(2, 2, {2, 1, 3, 4})));
  EXPECT_NE(table_fingerprint(DyadTable::plain(2, 2, {1, 2, 3, 4})), table_fingerprint(DyadTable::plain(1, 4, {1, 2, 3, 4})));
  EXPECT_EQ(table_fingerprint(DyadTable::plain(1, 1, {0})).size(), 16u);
}

// Exact test of independence on a 3x3 table, then p1 on a small digraph.

#include <iostream>

#include "fibergof/fibergof.hpp"

int main() {
  using namespace fibergof;

  const auto table = DyadTable::plain(3, 3, {3, 1, 0, 1, 2, 1, 0, 1, 3});
  ChainConfig cfg;
  cfg.seed = 7;
  cfg.target = Target::hypergeometric;
  const ModelSpec independence{IndependenceFamily{3, 3}, Mode::multigraph};
  const auto r1 = exact_test(table, independence, cfg);
  std::cout << "independence: chi2 = " << r1.observed_stat << ", p = " << r1.p_value << " (se " << r1.se << ")\n";

  const GraphData g(5, true, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}, {4, 0, 1}, {2, 0, 1}});
  const ModelSpec p1{P1Family{5, Reciprocity::constant}, Mode::simple};
  cfg.target = Target::uniform;
  const auto r2 = exact_test(g, p1, cfg);
  std::cout << "p1-constant: chi2 = " << r2.observed_stat << ", p = " << r2.p_value
            << ", acceptance = " << r2.acceptance_rate << "\n";
  std::cout << report_to_json(r2).dump(2) << "\n";
}

#pragma once

// Command-line front end: argument parsing into a RunSpec and execution of
// the fit / test / fiber / moves / simulate subcommands.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fibergof/fiber_oracle.hpp"
#include "fibergof/fiber_sampler.hpp"
#include "fibergof/gof_engine.hpp"
#include "fibergof/graph_tables.hpp"
#include "fibergof/lattice_moves.hpp"
#include "fibergof/mle_ipf.hpp"
#include "fibergof/model_zoo.hpp"
#include "fibergof/proposals.hpp"
#include "fibergof/simulate.hpp"

namespace fibergof::cli {

enum ExitCode : int { ok = 0, failure = 1, nonconverged = 2, usage = 64, io = 66 };

enum class Command { fit, test, fiber, moves, simulate };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::fit: return "fit";
    case Command::test: return "test";
    case Command::fiber: return "fiber";
    case Command::moves: return "moves";
    case Command::simulate: return "simulate";
  }
  return "?";
}

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"independence", "beta",           "p1-zero",  "p1-constant",
                                                 "p1-differential", "sbm-restricted", "sbm-full"};
  return names;
}

struct RunSpec {
  Command command = Command::test;
  std::string model;
  std::string input;
  bool directed = false;
  bool multigraph = false;
  std::int64_t trials = 0;
  std::string blocks;

  ChainConfig chain;
  std::string seed_source;  // "flag", "env" or "generated"
  std::size_t chains = 1;
  StatKind stat = StatKind::chi2;
  double tol = 1e-10;
  std::size_t max_iter = 10000;

  std::string out;
  std::string csv;
  bool strict = false;

  // fiber
  std::string margins;
  std::size_t cap = 1000000;
  bool dump = false;
  std::string move_set = "default";
  std::string moves_file;

  // moves / simulate
  bool prune = false;
  std::size_t count = 20;
};

struct ParseResult {
  std::optional<RunSpec> spec;
  int exit_code = ExitCode::ok;
  std::string message;
};

inline bool is_graph_model(const std::string& m) { return m != "independence"; }
inline bool is_directed_model(const std::string& m) { return m.rfind("p1", 0) == 0 || m.rfind("sbm", 0) == 0; }
inline bool is_sbm_model(const std::string& m) { return m.rfind("sbm", 0) == 0; }

/// Parses argv. `env_seed` is the value of FIBERGOF_SEED, if set.
inline ParseResult parse_args(int argc, const char* const* argv, std::optional<std::string> env_seed = std::nullopt) {
  RunSpec spec;
  std::optional<std::uint64_t> seed;
  std::string stat = "chi2";

  CLI::App app{"Exact conditional goodness-of-fit tests for log-linear network models", "fibergof"};
  app.require_subcommand(1, 1);

  auto add_model = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--model", spec.model, "Model family")->check(CLI::IsMember(model_names()));
    if (required) opt->required();
    sub->add_option("--input", spec.input, "Edge list (graph models) or count matrix (independence)");
    sub->add_flag("--directed", spec.directed, "Treat edges as directed (implied by p1 and sbm models)");
    sub->add_flag("--multigraph", spec.multigraph, "Allow edge multiplicities; hypergeometric fiber target");
    sub->add_option("--trials", spec.trials, "Observations per dyad in multigraph mode (default: smallest fitting)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--blocks", spec.blocks, "Block assignment file, lines 'label block_id'");
  };
  auto add_fit = [&](CLI::App* sub) {
    sub->add_option("--tol", spec.tol, "IPF margin tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", spec.max_iter, "IPF sweep limit")->check(CLI::PositiveNumber);
  };
  auto add_chain = [&](CLI::App* sub) {
    sub->add_option("--steps", spec.chain.steps, "Total chain steps, burn-in included");
    sub->add_option("--burn-in", spec.chain.burn_in, "Burn-in steps");
    sub->add_option("--thin", spec.chain.thin, "Keep every k-th post-burn-in state");
    sub->add_option("--seed", seed, "RNG seed (fallback: FIBERGOF_SEED, then random)");
    sub->add_option("--chains", spec.chains, "Independent chains")->check(CLI::PositiveNumber);
    sub->add_option("--proposal-mix", spec.chain.proposal_mix, "Probability of a curated proposal");
    sub->add_option("--geometric-p", spec.chain.geometric_p, "Zero probability of lattice coefficients");
  };

  auto* fit = app.add_subcommand("fit", "Fit cell means by iterative proportional scaling (CSV output)");
  add_model(fit, true);
  add_fit(fit);
  fit->add_option("--out", spec.out, "Output CSV (default: stdout)");
  fit->add_flag("--strict", spec.strict, "Exit 2 if the fit does not converge");

  auto* test = app.add_subcommand("test", "Run the exact conditional goodness-of-fit test (JSON report)");
  add_model(test, true);
  add_fit(test);
  add_chain(test);
  test->add_option("--stat", stat, "Statistic")->check(CLI::IsMember({"chi2", "g2"}));
  test->add_option("--out", spec.out, "Report JSON (default: stdout)");
  test->add_option("--csv", spec.csv, "Write the sampled statistic stream as CSV");
  test->add_flag("--strict", spec.strict, "Exit 2 if the fit does not converge");

  auto* fiber = app.add_subcommand("fiber", "Enumerate a small fiber and check move-set connectivity");
  add_model(fiber, true);
  fiber->add_option("--margins", spec.margins, "Independence margins 'r1,r2,.../c1,c2,...'");
  std::size_t d1 = 0, d2 = 0;
  fiber->add_option("--d1", d1, "Independence row count (checked against --margins)");
  fiber->add_option("--d2", d2, "Independence column count (checked against --margins)");
  fiber->add_option("--cap", spec.cap, "Maximum members to enumerate")->check(CLI::PositiveNumber);
  fiber->add_flag("--dump", spec.dump, "Include every member in the output");
  fiber->add_option("--move-set", spec.move_set, "Moves for the connectivity check")
      ->check(CLI::IsMember({"default", "basic", "basis", "none"}));
  fiber->add_option("--moves", spec.moves_file, "JSON file with an array of moves (overrides --move-set)");
  fiber->add_option("--out", spec.out, "Output JSON (default: stdout)");

  auto* moves = app.add_subcommand("moves", "Print the lattice basis and curated moves as JSON");
  add_model(moves, true);
  moves->add_flag("--prune", spec.prune, "Keep only moves applicable at the input table");
  moves->add_option("--count", spec.count, "Curated proposals to draw when the family is generated");
  moves->add_option("--seed", seed, "RNG seed for drawn proposals");
  moves->add_option("--out", spec.out, "Output JSON (default: stdout)");

  auto* sim = app.add_subcommand("simulate", "Draw replicate tables from the fitted model");
  add_model(sim, true);
  add_fit(sim);
  sim->add_option("--count", spec.count, "Number of replicates")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out", spec.out, "Output JSON (default: stdout)");

  ParseResult result;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    result.message = app.help();
    return result;
  } catch (const CLI::CallForAllHelp&) {
    result.message = app.help("", CLI::AppFormatMode::All);
    return result;
  } catch (const CLI::ParseError& e) {
    result.exit_code = ExitCode::usage;
    result.message = std::string(e.what()) + "\nRun with --help for usage.";
    return result;
  }

  auto fail = [&](const std::string& msg) {
    result.exit_code = ExitCode::usage;
    result.message = msg;
    return result;
  };

  if (*fit) spec.command = Command::fit;
  else if (*test) spec.command = Command::test;
  else if (*fiber) spec.command = Command::fiber;
  else if (*moves) spec.command = Command::moves;
  else spec.command = Command::simulate;
  spec.stat = stat == "g2" ? StatKind::g2 : StatKind::chi2;

  if (is_sbm_model(spec.model) && spec.blocks.empty()) return fail("--model " + spec.model + " requires --blocks");
  if (!is_sbm_model(spec.model) && !spec.blocks.empty()) return fail("--blocks only applies to sbm models");
  if (is_directed_model(spec.model)) spec.directed = true;
  if (!is_directed_model(spec.model) && spec.directed) return fail("--model " + spec.model + " is undirected");
  if (spec.model == "independence" && (spec.multigraph || spec.trials != 0))
    return fail("--multigraph and --trials do not apply to contingency tables");
  if (spec.trials != 0 && !spec.multigraph) return fail("--trials requires --multigraph");

  if (spec.command == Command::fiber) {
    if (spec.model == "independence") {
      if (spec.margins.empty() == spec.input.empty()) return fail("fiber needs exactly one of --margins or --input");
      if (!spec.margins.empty()) {
        const auto slash = spec.margins.find('/');
        if (slash == std::string::npos) return fail("--margins must look like 'r1,r2/c1,c2'");
        auto count_parts = [](const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), ',')) + 1; };
        const auto rows = count_parts(spec.margins.substr(0, slash));
        const auto cols = count_parts(spec.margins.substr(slash + 1));
        if ((d1 != 0 && d1 != rows) || (d2 != 0 && d2 != cols)) return fail("--d1/--d2 disagree with --margins");
      }
    } else {
      if (!spec.margins.empty()) return fail("--margins only applies to the independence model");
      if (spec.input.empty()) return fail("fiber needs --input for graph models");
    }
    if (spec.move_set == "basic" && spec.model != "independence")
      return fail("--move-set basic only exists for the independence model");
  } else if (spec.input.empty()) {
    return fail(std::string(to_string(spec.command)) + " requires --input");
  }

  if (spec.command == Command::test) {
    spec.chain.target = spec.model == "independence" || spec.multigraph ? Target::hypergeometric : Target::uniform;
    try {
      spec.chain.validate();
    } catch (const InvalidInput& e) {
      return fail(e.what());
    }
  }

  if (seed) {
    spec.chain.seed = *seed;
    spec.seed_source = "flag";
  } else if (env_seed) {
    try {
      std::size_t used = 0;
      spec.chain.seed = std::stoull(*env_seed, &used);
      if (used != env_seed->size()) throw std::invalid_argument(*env_seed);
    } catch (const std::exception&) {
      return fail("FIBERGOF_SEED is not an unsigned integer: '" + *env_seed + "'");
    }
    spec.seed_source = "env";
  } else {
    std::random_device rd;
    spec.chain.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    spec.seed_source = "generated";
  }

  result.spec = spec;
  return result;
}

// ---------------------------------------------------------------------------

/// Writes through a temporary file and renames it into place.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into '" + path + "'");
  }
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) out << content;
  else write_atomic(path, content);
}

/// Data and model assembled from a RunSpec.
struct LoadedInput {
  ModelSpec model;
  DyadTable table;
  std::vector<std::string> labels;  // node labels, graph models only
};

inline std::vector<std::int64_t> parse_int_list(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidInput("bad integer '" + item + "' in --margins");
    }
    if (out.back() < 0) throw InvalidInput("negative margin");
  }
  return out;
}

/// Some table with the given row and column sums (northwest-corner rule).
inline DyadTable table_with_margins(const std::vector<std::int64_t>& rows, const std::vector<std::int64_t>& cols) {
  std::int64_t rsum = 0, csum = 0;
  for (auto v : rows) rsum += v;
  for (auto v : cols) csum += v;
  if (rsum != csum) throw InvalidInput("row and column margins have different totals");
  auto r = rows;
  auto c = cols;
  std::vector<std::int64_t> cells(rows.size() * cols.size(), 0);
  for (std::size_t i = 0, j = 0; i < r.size() && j < c.size();) {
    const auto v = std::min(r[i], c[j]);
    cells[i * cols.size() + j] = v;
    r[i] -= v;
    c[j] -= v;
    if (r[i] == 0) ++i;
    else ++j;
  }
  return DyadTable::plain(rows.size(), cols.size(), std::move(cells));
}

inline LoadedInput load_input(const RunSpec& run) {
  LoadedInput in;
  if (run.model == "independence") {
    if (!run.margins.empty()) {
      const auto slash = run.margins.find('/');
      in.table = table_with_margins(parse_int_list(run.margins.substr(0, slash)),
                                    parse_int_list(run.margins.substr(slash + 1)));
    } else {
      in.table = read_file(run.input, [](std::istream& s) { return read_plain_table(s); });
    }
    in.model.family = IndependenceFamily{in.table.nodes(), in.table.plain_cols()};
    in.model.mode = Mode::multigraph;
    return in;
  }

  // With a block file, its order fixes the node ids; the edge list may not
  // introduce nodes the block file does not assign.
  std::optional<BlockPartition> partition;
  LabelMap labels;
  if (!run.blocks.empty()) partition = read_file(run.blocks, [&](std::istream& s) { return read_block_file(s, labels); });
  auto graph = read_file(run.input, [&](std::istream& s) { return read_edge_list(s, run.directed, labels); });
  if (partition && graph.labels.size() != partition->nodes())
    throw InvalidInput("node '" + graph.labels[partition->nodes()] + "' has no block");
  const auto mode = run.multigraph ? Mode::multigraph : Mode::simple;
  in.table = encode_graph(graph.graph, mode, run.trials);
  in.labels = graph.labels;
  in.model.mode = mode;
  const auto n = graph.graph.nodes();
  if (run.model == "beta") in.model.family = BetaFamily{n};
  else if (run.model == "p1-zero") in.model.family = P1Family{n, Reciprocity::zero};
  else if (run.model == "p1-constant") in.model.family = P1Family{n, Reciprocity::constant};
  else if (run.model == "p1-differential") in.model.family = P1Family{n, Reciprocity::differential};
  else
    in.model.family = SbmFamily{*partition, run.model == "sbm-full" ? SbmVariant::full : SbmVariant::restricted};
  return in;
}

inline nlohmann::ordered_json table_to_json(const DyadTable& t) { return std::vector<std::int64_t>(t.cells().begin(), t.cells().end()); }

inline nlohmann::ordered_json graph_to_json(const DyadTable& t, const std::vector<std::string>& labels) {
  auto edges = nlohmann::ordered_json::array();
  const auto graph = decode_table(t);
  for (const auto& e : graph.edges()) {
    auto item = nlohmann::ordered_json::array({labels.at(e.from), labels.at(e.to)});
    if (e.count != 1) item.push_back(e.count);
    edges.push_back(item);
  }
  return edges;
}

inline int run_fit(const RunSpec& run, const LoadedInput& in, std::ostream& out, std::ostream& err) {
  const auto a = build_design(in.model);
  const auto fit = ipf_fit(a, in.table, run.tol, run.max_iter);
  const auto mle = mle_existence_heuristic(fit);
  std::ostringstream csv;
  csv << "cell,label,observed,fitted\n";
  char buf[64];
  for (std::size_t c = 0; c < in.table.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%.17g", fit.fitted_means[c]);
    csv << c << ',' << a.col_labels()[c] << ',' << in.table[c] << ',' << buf << '\n';
  }
  emit(run.out, csv.str(), out);
  err << "model: " << model_name(in.model) << "\nconverged: " << (fit.converged ? "yes" : "no")
      << "\niterations: " << fit.iterations << "\nmax_margin_gap: " << fit.max_margin_gap << "\nmle: " << mle.verdict
      << '\n';
  return !fit.converged && run.strict ? ExitCode::nonconverged : ExitCode::ok;
}

inline int run_test(const RunSpec& run, const LoadedInput& in, std::ostream& out, std::ostream& err) {
  TestOptions options;
  options.stat = run.stat;
  options.chains = run.chains;
  options.tol = run.tol;
  options.max_iter = run.max_iter;
  const auto report = exact_test(in.table, in.model, run.chain, options);
  auto j = report_to_json(report, in.labels);
  emit(run.out, j.dump(2) + "\n", out);
  if (!run.csv.empty()) {
    std::ostringstream csv;
    write_stream_csv(csv, report.stat_stream);
    write_atomic(run.csv, csv.str());
  }
  err << "seed: " << run.chain.seed << " (" << run.seed_source << ")\np_value: " << report.p_value
      << "\nacceptance_rate: " << report.acceptance_rate << '\n';
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  return !report.fit.converged && run.strict ? ExitCode::nonconverged : ExitCode::ok;
}

inline std::vector<Move> read_moves_file(const std::string& path, const DesignMatrix& a) {
  const auto j = read_file(path, [&](std::istream& s) {
    try {
      return nlohmann::json::parse(s);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("moves file '" + path + "': " + e.what());
    }
  });
  if (!j.is_array()) throw InvalidInput("moves file must hold a JSON array of moves");
  std::vector<Move> moves;
  for (const auto& m : j) moves.push_back(move_from_json(a, m));
  return moves;
}

inline int run_fiber(const RunSpec& run, const LoadedInput& in, std::ostream& out, std::ostream&) {
  const auto a = build_design(in.model);
  const auto fiber = enumerate_fiber(a, in.table, run.cap);

  nlohmann::ordered_json j;
  j["model"] = model_name(in.model);
  j["size"] = fiber.size();
  j["truncated"] = fiber.truncated;

  std::vector<Move> moves;
  std::string set_name = run.move_set;
  if (!run.moves_file.empty()) {
    moves = read_moves_file(run.moves_file, a);
    set_name = "file";
  } else {
    if (set_name == "default") set_name = std::holds_alternative<IndependenceFamily>(in.model.family) ? "basic" : "basis";
    if (set_name == "basic") {
      const auto& f = std::get<IndependenceFamily>(in.model.family);
      if (f.d1 >= 2 && f.d2 >= 2) moves = independence_basic_moves(f.d1, f.d2);
    } else if (set_name == "basis") {
      moves = integer_kernel(a).moves;
    }
  }
  if (set_name != "none") {
    j["move_set"] = set_name;
    j["move_count"] = moves.size();
    if (fiber.truncated) {
      j["connectivity"] = "skipped: fiber truncated";
    } else {
      const auto report = connectivity_check(moves, fiber);
      j["components"] = report.components;
      j["connected"] = report.connected();
      if (report.witness)
        j["witness"] = {table_to_json(fiber.members[report.witness->first]),
                        table_to_json(fiber.members[report.witness->second])};
    }
  }
  if (run.dump) {
    auto members = nlohmann::ordered_json::array();
    for (const auto& m : fiber.members) members.push_back(table_to_json(m));
    j["members"] = members;
  }
  emit(run.out, j.dump(2) + "\n", out);
  return ExitCode::ok;
}

inline int run_moves(const RunSpec& run, const LoadedInput& in, std::ostream& out, std::ostream& err) {
  auto a = std::make_shared<const DesignMatrix>(build_design(in.model));
  const auto basis = integer_kernel(*a);
  const auto curated = curated_moves(in.model, a, basis);

  std::vector<Move> drawn;
  if (curated.is_generator()) {
    Rng rng(run.chain.seed);
    std::set<Move> seen;
    for (std::size_t attempt = 0; attempt < 1000 * run.count && drawn.size() < run.count; ++attempt) {
      auto m = curated.draw(in.table, rng);
      if (!m.is_zero() && seen.insert(m).second) drawn.push_back(std::move(m));
    }
  } else {
    drawn = curated.list();
  }
  auto basis_moves = basis.moves;
  if (run.prune) {
    basis_moves = prune(basis_moves, in.table);
    drawn = prune(drawn, in.table);
  }

  auto to_array = [](const std::vector<Move>& ms) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& m : ms) {
      auto move = nlohmann::ordered_json::array();
      for (const auto& e : m.entries()) move.push_back({e.cell, e.delta});
      arr.push_back(std::move(move));
    }
    return arr;
  };
  nlohmann::ordered_json j;
  j["model"] = model_name(in.model);
  j["pruned"] = run.prune;
  j["lattice_rank"] = basis.rank;
  j["basis"] = to_array(basis_moves);
  j["curated_family"] = curated.empty() ? "none" : curated.name();
  j["curated"] = to_array(drawn);
  emit(run.out, j.dump(2) + "\n", out);
  if (curated.is_generator()) err << "seed: " << run.chain.seed << " (" << run.seed_source << ")\n";
  return ExitCode::ok;
}

inline int run_simulate(const RunSpec& run, const LoadedInput& in, std::ostream& out, std::ostream& err) {
  const auto a = build_design(in.model);
  const auto fit = ipf_fit(a, in.table, run.tol, run.max_iter);
  if (!fit.converged) {
    err << "error: fit did not converge (max margin gap " << fit.max_margin_gap << "); cannot simulate\n";
    return ExitCode::nonconverged;
  }
  const auto tables = simulate(in.model, fit, run.count, run.chain.seed);
  nlohmann::ordered_json j;
  j["model"] = model_name(in.model);
  j["seed"] = run.chain.seed;
  auto reps = nlohmann::ordered_json::array();
  for (const auto& t : tables)
    reps.push_back(t.layout() == Layout::plain ? table_to_json(t) : graph_to_json(t, in.labels));
  j["replicates"] = reps;
  emit(run.out, j.dump(2) + "\n", out);
  err << "seed: " << run.chain.seed << " (" << run.seed_source << ")\n";
  return ExitCode::ok;
}

/// Executes a parsed RunSpec; returns the process exit code.
inline int run(const RunSpec& run, std::ostream& out, std::ostream& err) {
  try {
    const auto in = load_input(run);
    switch (run.command) {
      case Command::fit: return run_fit(run, in, out, err);
      case Command::test: return run_test(run, in, out, err);
      case Command::fiber: return run_fiber(run, in, out, err);
      case Command::moves: return run_moves(run, in, out, err);
      case Command::simulate: return run_simulate(run, in, out, err);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::io;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::io;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::failure;
  }
  return ExitCode::failure;
}

/// Full entry point used by the executable.
inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<std::string> env_seed;
  if (const char* s = std::getenv("FIBERGOF_SEED")) env_seed = s;
  auto parsed = parse_args(argc, argv, env_seed);
  if (!parsed.spec) {
    (parsed.exit_code == ExitCode::ok ? out : err) << parsed.message << '\n';
    return parsed.exit_code;
  }
  return run(*parsed.spec, out, err);
}

}  // namespace fibergof::cli

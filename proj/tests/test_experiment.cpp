#include "idnc/experiment.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace idnc;

namespace {

const std::filesystem::path data_dir = IDNC_DATA_DIR;

ExperimentSpec load(const char* name) { return load_experiment(data_dir / name); }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST(GraphDump, GoldenListing) {
  const std::string want =
      "vertices 4\n"
      "v(1,2,3)\n"
      "v(2,1,1)\n"
      "v(3,2,2)\n"
      "v(3,4,1)\n"
      "edges 4\n"
      "v(1,2,3) -- v(2,1,1) C5\n"
      "v(1,2,3) -- v(3,2,2) C3\n"
      "v(1,2,3) -- v(3,4,1) C4\n"
      "v(2,1,1) -- v(3,2,2) C5\n"
      "maximal_independent_sets 3\n"
      "k1 = {v(1,2,3)}\n"
      "k2 = {v(2,1,1), v(3,4,1)}\n"
      "k3 = {v(3,2,2), v(3,4,1)}\n";
  EXPECT_EQ(graph_dump(load("golden.json")), want);
}

TEST(GraphDump, EmptyAndMalformed) {
  EXPECT_EQ(graph_dump(load("absorbing.json")), "empty graph\n");
  try {
    load("asymmetric_scm.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("(R1, R2)"), std::string::npos) << e.what();
  }
}

TEST(Config, SyntaxErrorsCarryPosition) {
  try {
    load("syntax_error.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("syntax_error.json:4:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_experiment(data_dir / "no_such_file.json"), ConfigError);
}

TEST(Config, FieldErrors) {
  EXPECT_THROW(experiment_from_json(parse_json(R"({"scenario": {"theta": "seven"}})")), ConfigError);
  EXPECT_THROW(experiment_from_json(parse_json(R"({"selection": "fastest"})")), ConfigError);
  EXPECT_THROW(experiment_from_json(parse_json(R"({"sweep": {"axis": "speed", "values": [1]}})")), ConfigError);
  EXPECT_THROW(experiment_from_json(parse_json(R"([1, 2])")), ConfigError);
  auto spec = experiment_from_json(parse_json(R"({"schedulers": ["tsmis", "greedy"]})"));
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = experiment_from_json(parse_json(R"({"sweep": {"axis": "theta", "values": [5, 3]}})"));
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = experiment_from_json(parse_json(R"({"sweep": {"axis": "devices", "values": []}})"));
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = load("line4.json");
  spec.sweep = parse_sweep_flag("devices=4,5");
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Config, RoundTripsMatrices) {
  const auto y = ConnectivityMatrix::from_rows({{1, 0.25}, {0.25, 1}});
  EXPECT_EQ(connectivity_from_json(to_json_value(y)), y);
  const auto f = StatusMatrix::from_rows({{1, 0, 1}, {0, 1, 0}});
  EXPECT_EQ(status_from_json(to_json_value(f)), f);
  const auto d = ImportanceMatrix::from_rows({{1.5, 0}, {0.25, 3}});
  EXPECT_EQ(importance_from_json(to_json_value(d)).rows(), d.rows());
  const auto g = default_gop();
  const auto back = gop_from_json(to_json_value(g));
  EXPECT_EQ(back.packets_per_layer(), g.packets_per_layer());
  EXPECT_EQ(back.psnr_table(), g.psnr_table());
  EXPECT_THROW(status_from_json(parse_json(R"({"m": 3, "f": [[0, 1], [1, 0]]})")), ConfigError);
}

TEST(SweepFlag, Parsing) {
  const auto s = parse_sweep_flag("connectivity=0.3,0.5,0.8");
  EXPECT_EQ(s.axis, SweepAxis::connectivity);
  EXPECT_EQ(s.values, (std::vector<double>{0.3, 0.5, 0.8}));
  EXPECT_THROW(parse_sweep_flag("theta"), ConfigError);
  EXPECT_THROW(parse_sweep_flag("theta=3,x"), ConfigError);
  EXPECT_EQ(split_names("tsmis,pcb"), (std::vector<std::string>{"tsmis", "pcb"}));
}

TEST(RunSweep, OneRowPerScheduler) {
  auto spec = load("line4.json");
  spec.sweep = parse_sweep_flag("theta=7");
  spec.runs = 50;
  const auto csv = run_sweep(spec);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), csv_header());
  EXPECT_EQ(count_lines(csv), 5u);
  EXPECT_NE(csv.find("\n7,tsmis,50,"), std::string::npos);
  EXPECT_NE(csv.find("\n7,mdp,50,"), std::string::npos);
}

TEST(RunSweep, DeterministicAndSeedSensitive) {
  auto spec = load("sweep_connectivity.json");
  spec.runs = 20;
  const auto a = run_sweep(spec);
  EXPECT_EQ(a, run_sweep(spec));
  EXPECT_EQ(count_lines(a), 1u + 3u * 3u);
  spec.scenario.seed += 1;
  EXPECT_NE(a, run_sweep(spec));
}

TEST(RunSweep, NoSweepUsesDash) {
  auto spec = load("golden.json");
  spec.runs = 10;
  spec.schedulers = {"pcb"};
  const auto csv = run_sweep(spec);
  EXPECT_NE(csv.find("\n-,pcb,10,"), std::string::npos);
}

TEST(RunSweep, TranscriptsGoToTheGivenStream) {
  auto spec = load("golden.json");
  spec.runs = 2;
  spec.schedulers = {"tsmis"};
  std::ostringstream log;
  run_sweep(spec, &log);
  EXPECT_NE(log.str().find("# cell - scheduler tsmis run 1"), std::string::npos);
  EXPECT_NE(log.str().find("slot 1:"), std::string::npos);
}

TEST(MdpSolve, Fixtures) {
  EXPECT_NE(mdp_solve(load("absorbing.json")).find("value 0\n"), std::string::npos);

  const auto spec = load("small_mdp.json");
  const auto report = mdp_solve(spec);
  const auto& sc = spec.scenario;
  const double want = oracle::policy_tree_value(*sc.scm, *sc.gsm,
                                                importance_matrix(sc.gop, sc.m).rows(), sc.theta);
  const auto pos = report.find("value ") + 6;
  EXPECT_NEAR(std::stod(report.substr(pos)), want, 1e-9);
  EXPECT_NE(report.find("reachable_states "), std::string::npos);
  EXPECT_NE(report.find("first_action {"), std::string::npos);

  try {
    mdp_solve(load("oversized.json"));
    FAIL();
  } catch (const GuardExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("200"), std::string::npos) << e.what();
  }
}

TEST(Schedulers, FactoryNames) {
  ExperimentSpec spec;
  for (const auto& name : scheduler_names()) EXPECT_EQ(make_scheduler(name, spec)->name(), name);
  EXPECT_THROW(make_scheduler("random", spec), ConfigError);
}

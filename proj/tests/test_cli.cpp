#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "abmhedge/calibration.hpp"
#include "abmhedge/data_io.hpp"
#include "abmhedge/scenario_set.hpp"
#include "abmhedge/simulator.hpp"
#include "abmhedge/stylized_facts.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace abmhedge;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("abmhedge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(ABMHEDGE_CLI) + " " + args + " >" + path("stdout.txt") +
                            " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string err() const { return io::read_text(path("stderr.txt")); }

  // 700 trading days of a seeded GBM with calendar dates.
  std::string write_history(std::size_t days = 700) const {
    const auto set = sim::simulate_gbm({0.0002, 0.012, 1000.0}, days - 1, 1, 5);
    std::string csv = "date,close\n";
    std::chrono::sys_days d = std::chrono::year{2001} / std::chrono::January / 1;
    for (const double p : set.path(0)) {
      csv += io::format_iso_date(std::chrono::year_month_day{d}) + "," + std::to_string(p) + "\n";
      d += std::chrono::days{1};
    }
    io::write_text(path("hist.csv"), csv);
    return path("hist.csv");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateShapeAndDeterminism) {
  ASSERT_EQ(run("simulate --model gbm --paths 10 --steps 30 --seed 7 --out " + path("a.scn")), 0) << err();
  ASSERT_EQ(run("simulate --model gbm --paths 10 --steps 30 --seed 7 --threads 3 --out " + path("b.scn")), 0);
  const auto set = read_scenarios(path("a.scn"));
  EXPECT_EQ(set.n_paths(), 10u);
  EXPECT_EQ(set.path_length(), 31u);
  EXPECT_EQ(set.model_tag(), "gbm");
  EXPECT_EQ(io::read_text(path("a.scn")), io::read_text(path("b.scn")));
  const auto m = json::parse(io::read_text(path("a.scn.manifest.json")));
  EXPECT_EQ(m["subcommand"], "simulate");
  EXPECT_EQ(m["seeds"]["root"], 7);
  EXPECT_TRUE(m.contains("duration_seconds"));
  EXPECT_TRUE(m.contains("config"));
  EXPECT_EQ(m["outputs"][0], path("a.scn"));
}

TEST_F(Cli, SimulateFromCalibrationResult) {
  calib::CalibrationResult r;
  r.model = sim::ModelKind::chiarella_heston;
  r.best_params = sim::to_named(sim::default_model(sim::ModelKind::chiarella_heston));
  r.best_params["kappa"] = 0.07;
  r.best_distance = 0.1;
  io::write_text(path("calib.json"), calib::to_json(r));
  ASSERT_EQ(run("simulate --params " + path("calib.json") + " --paths 3 --steps 40 --seed 2 --out " +
                path("c.scn")),
            0)
      << err();
  const auto set = read_scenarios(path("c.scn"));
  const auto expect = sim::simulate(r.best_model(), 40, 3, set.seed());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t <= 40; ++t) EXPECT_EQ(set.path(i)[t], expect.path(i)[t]);
}

TEST_F(Cli, UsageAndParameterErrors) {
  EXPECT_NE(run("simulate --model gbm --paths 2 --steps 3 --bogus 1 --out " + path("x.scn")), 0);
  EXPECT_FALSE(fs::exists(path("x.scn")));
  EXPECT_NE(run("frobnicate"), 0);
  io::write_text(path("bad.json"), "{\"rho\": 2.0}");
  EXPECT_NE(run("simulate --model chiarella-heston --params " + path("bad.json") +
                " --paths 2 --steps 3 --out " + path("y.scn")),
            0);
  EXPECT_NE(err().find("rho"), std::string::npos) << err();
  EXPECT_FALSE(fs::exists(path("y.scn")));
  io::write_text(path("typo.json"), "{\"kapa\": 0.1}");
  EXPECT_NE(run("simulate --model chiarella-heston --params " + path("typo.json") +
                " --paths 2 --steps 3 --out " + path("z.scn")),
            0);
  EXPECT_NE(err().find("kapa"), std::string::npos) << err();
}

TEST_F(Cli, ExportTrainingSet) {
  ASSERT_EQ(run("export-training-set --model gbm --paths 10 --out " + path("t.scn")), 0) << err();
  const auto set = read_scenarios(path("t.scn"));
  EXPECT_EQ(set.n_paths(), 10u);
  EXPECT_EQ(set.path_length(), 31u);
  EXPECT_EQ(set.model_tag(), "gbm");
}

TEST_F(Cli, StatsOnHistoryAndScenarios) {
  const auto hist = write_history();
  ASSERT_EQ(run("stats --data " + hist + " --out " + path("s.json") + " --acf-csv " + path("acf.csv")), 0)
      << err();
  const auto stats = facts::stats_from_json(io::read_text(path("s.json")));
  const auto h = io::ingest_csv(hist);
  EXPECT_EQ(stats, facts::reference_stats(h.closes, 0.05, 20));
  EXPECT_EQ(io::read_text(path("acf.csv")), facts::acf_csv(stats));

  ASSERT_EQ(run("simulate --model heston --paths 2 --steps 600 --out " + path("h.scn")), 0);
  ASSERT_EQ(run("stats --scenarios " + path("h.scn") + " --out " + path("hs.json")), 0) << err();
  EXPECT_NE(run("stats --data " + hist + " --scenarios " + path("h.scn") + " --out " + path("q.json")), 0);
}

TEST_F(Cli, CalibrateValidateAndReplay) {
  const auto hist = write_history(1200);
  io::write_text(path("grid.toml"), "replications = 1\npaths = 2\nsteps = 800\nsigma = [0.008, 0.012, 0.016]\n");
  const std::string args = "calibrate --model gbm --data " + hist + " --grid " + path("grid.toml") +
                           " --window all --seed 3 --out " + path("cal.json") + " --table " + path("cal.csv");
  ASSERT_EQ(run(args), 0) << err();
  const auto res = calib::calibration_from_json(io::read_text(path("cal.json")));
  EXPECT_EQ(res.table.size(), 3u);
  EXPECT_EQ(res.best_params.at("sigma"), 0.012);
  const auto first = io::read_text(path("cal.json"));
  const auto table = io::read_text(path("cal.csv"));

  ASSERT_EQ(run("replay " + path("cal.json.manifest.json")), 0) << err();
  EXPECT_EQ(io::read_text(path("cal.json")), first);
  EXPECT_EQ(io::read_text(path("cal.csv")), table);

  ASSERT_EQ(run("validate --a " + path("cal.json") + " --b heston --ref " + hist +
                " --n-scenarios 5 --out " + path("v.json")),
            0)
      << err();
  const auto v = json::parse(io::read_text(path("v.json")));
  for (const char* k : {"mean_a", "mean_b", "t", "df", "p"}) EXPECT_TRUE(v.contains(k)) << k;
  EXPECT_EQ(v["samples_a"].size(), 5u);
  EXPECT_EQ(v["samples_b"].size(), 5u);
  EXPECT_GE(v["p"].get<double>(), 0.0);
  EXPECT_LE(v["p"].get<double>(), 1.0);

  // A modified input must block the replay.
  io::write_text(hist, io::read_text(hist) + "2010-01-01,1000\n");
  EXPECT_NE(run("replay " + path("cal.json.manifest.json")), 0);
  EXPECT_NE(err().find("changed"), std::string::npos);
}

TEST_F(Cli, HedgeEvalSixCostLevels) {
  ASSERT_EQ(run("simulate --model gbm --paths 200 --steps 30 --seed 1 --out " + path("g.scn")), 0);
  const std::string args = "hedge-eval --scenarios " + path("g.scn") +
                           " --policy delta --costs 0.0001,0.001,0.002,0.004,0.006,0.01 --out " +
                           path("r.json") + " --pnl-csv " + path("pnl.csv");
  ASSERT_EQ(run(args), 0) << err();
  const auto r = json::parse(io::read_text(path("r.json")));
  ASSERT_EQ(r["costs"].size(), 6u);
  EXPECT_EQ(r["n_episodes"], 200);
  for (std::size_t c = 1; c < 6; ++c)
    EXPECT_LT(r["costs"][c]["mean_pnl"].get<double>(), r["costs"][c - 1]["mean_pnl"].get<double>());
  const auto first = io::read_text(path("pnl.csv"));
  ASSERT_EQ(run("replay " + path("r.json.manifest.json")), 0) << err();
  EXPECT_EQ(io::read_text(path("pnl.csv")), first);

  const auto hist = write_history(400);
  EXPECT_NE(run("hedge-eval --data " + hist + " --policy never --out " + path("d.json")), 0);
  EXPECT_NE(err().find("shorter than the requested split"), std::string::npos);
  io::write_text(path("split.toml"), "[data]\ncalibration_len = 200\ntest_len = 200\n");
  ASSERT_EQ(run("hedge-eval --config " + path("split.toml") + " --data " + hist + " --policy never --out " +
                path("d.json")),
            0)
      << err();
  const auto d = json::parse(io::read_text(path("d.json")));
  EXPECT_EQ(d["n_episodes"], 200 - 30);
  EXPECT_EQ(d["costs"].size(), 6u);

  ASSERT_EQ(run("hedge-eval --model heston --paths 20 --steps 10 --out " + path("m.json")), 0) << err();
  EXPECT_EQ(json::parse(io::read_text(path("m.json")))["maturity_days"], 10);
}

TEST_F(Cli, ConfigFileIsApplied) {
  io::write_text(path("c.toml"), "[hedge]\ncosts = [0.0, 0.01]\nes_confidence = 0.9\n");
  ASSERT_EQ(run("simulate --model gbm --paths 50 --steps 30 --out " + path("g.scn")), 0);
  ASSERT_EQ(run("hedge-eval --config " + path("c.toml") + " --scenarios " + path("g.scn") + " --out " +
                path("r.json")),
            0)
      << err();
  const auto r = json::parse(io::read_text(path("r.json")));
  EXPECT_EQ(r["costs"].size(), 2u);
  EXPECT_EQ(r["es_confidence"], 0.9);
  io::write_text(path("bad.toml"), "[hedge]\ncost = [0.0]\n");
  EXPECT_NE(run("hedge-eval --config " + path("bad.toml") + " --scenarios " + path("g.scn") + " --out " +
                path("r2.json")),
            0);
  EXPECT_NE(err().find("cost"), std::string::npos);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "leap/harness/cli.hpp"
#include "leap/harness/config.hpp"
#include "leap/harness/experiment.hpp"

using namespace leap;
namespace fs = std::filesystem;

namespace {

// scripted router that reaches any below-wall goal by leaving the pocket
// upward and circling the left leg
planner::PolicyFn oracle_policy(const env::EnvConfig& e) {
  return [e](const env::NavState& s, const env::NavState& goal, int) {
    const auto& p = s.position;
    Eigen::Vector2d target = goal.position;
    const bool in_pocket_x = p.x() > 3.0 && p.x() < 5.0;
    if (p.y() >= 2.0) {            // still on the wrong side of the wall
      if (in_pocket_x && p.y() < 6.6) {
        target = {p.x(), 6.8};     // climb out of the pocket
      } else if (p.x() > 1.2 && p.y() > 6.4) {
        target = {1.0, 6.8};       // slide left above the U
      } else {
        target = {1.0, 1.0};       // descend the left corridor
      }
    }
    Eigen::Vector2d d = target - p;
    return env::Action{d.cwiseMax(-e.max_step).cwiseMin(e.max_step)};
  };
}

planner::PlanScorers zero_scorers() {
  planner::PlanScorers s;
  s.decode_batch = [](const Eigen::MatrixXd& z) -> Eigen::Matrix2Xd { return z; };
  s.value_batch = [](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd&, int) {
    return Eigen::VectorXd::Zero(from.cols()).eval();
  };
  s.log_prior = [](const Eigen::VectorXd&) { return 0.0; };
  return s;
}

harness::ExperimentConfig mock_eval_config() {
  auto cfg = harness::nav2d_preset();
  cfg.planner.k = 0;  // pure policy execution, no planner calls
  cfg.planner.latent_dim = cfg.vae.latent_dim;
  cfg.eval_episodes = 8;
  cfg.env.horizon = 200;  // generous budget for the scripted router
  return cfg;
}

}  // namespace

TEST_CASE("config: presets validate; planner/vae latent dims must agree") {
  auto cfg = harness::nav2d_preset();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.tdm.batch_size == 128);
  CHECK(cfg.tdm.tau == doctest::Approx(0.005));
  CHECK(cfg.tdm.epsilon_greedy == doctest::Approx(0.1));
  CHECK(cfg.planner.cem.population == 1000);
  CHECK(cfg.planner.cem.iterations == 15);
  CHECK(cfg.planner.lambda == doctest::Approx(0.1));
  cfg.planner.latent_dim = 5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(harness::preset_by_name("nope"), std::invalid_argument);
}

TEST_CASE("config: json round-trip and merge-patch overrides") {
  auto cfg = harness::nav2d_preset();
  nlohmann::json j = cfg;
  auto back = j.get<harness::ExperimentConfig>();
  CHECK(back.tdm.batch_size == cfg.tdm.batch_size);
  CHECK(back.planner.lambda == cfg.planner.lambda);

  const auto dir = fs::temp_directory_path() / "leap_cfg_test";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "override.json");
    out << R"({"planner": {"k": 1, "lambda": 0.01}, "budget_steps": 777, "eval_interval": 7})";
  }
  auto merged = harness::resolve_config("nav2d", (dir / "override.json").string());
  CHECK(merged.planner.k == 1);
  CHECK(merged.planner.lambda == doctest::Approx(0.01));
  CHECK(merged.budget_steps == 777);
  CHECK(merged.tdm.batch_size == 128);  // untouched keys keep preset values
  fs::remove_all(dir);
}

TEST_CASE("method_tag: K = 0 is the TDM-T_max baseline row") {
  auto cfg = harness::nav2d_preset();
  cfg.planner.k = 0;
  CHECK(harness::method_tag(cfg) == "tdm-100");
  cfg.planner.k = 3;
  CHECK(harness::method_tag(cfg) == "leap-k3");
  cfg.planner.norm = planner::PlanNorm::L1;
  CHECK(harness::method_tag(cfg) == "leap-k3-l1");
}

TEST_CASE("evaluate: oracle policy scores 1.0 on the hard configuration") {
  auto cfg = mock_eval_config();
  auto scorers = zero_scorers();
  auto result = harness::evaluate_with(oracle_policy(cfg.env), scorers, nullptr, cfg, 0, 0);
  CHECK(result.hard.success_rate == doctest::Approx(1.0));
  CHECK(result.hard.method == "tdm-200/hard");
  CHECK(result.hard.final_distance_mean < 1.0);
}

TEST_CASE("evaluate: stationary policy scores 0.0 from the center start") {
  auto cfg = mock_eval_config();
  auto scorers = zero_scorers();
  planner::PolicyFn stay = [](const env::NavState&, const env::NavState&, int) {
    return env::Action{{0.0, 0.0}};
  };
  auto result = harness::evaluate_with(stay, scorers, nullptr, cfg, 0, 0);
  CHECK(result.hard.success_rate == doctest::Approx(0.0));
}

TEST_CASE("evaluate: identical config and seed give byte-identical metrics CSV") {
  auto cfg = mock_eval_config();
  auto scorers = zero_scorers();
  auto policy = oracle_policy(cfg.env);
  auto r1 = harness::evaluate_with(policy, scorers, nullptr, cfg, 3, 42);
  auto r2 = harness::evaluate_with(policy, scorers, nullptr, cfg, 3, 42);
  CHECK(harness::metrics_csv({r1.hard, r1.uniform}) == harness::metrics_csv({r2.hard, r2.uniform}));
  auto r3 = harness::evaluate_with(policy, scorers, nullptr, cfg, 4, 42);
  CHECK(harness::metrics_csv({r1.hard}) != harness::metrics_csv({r3.hard}));
}

TEST_CASE("hard_probes: deterministic per seed, starts in the pocket, goals below the wall") {
  auto cfg = harness::nav2d_preset();
  auto a = harness::hard_probes(cfg, 20, 9);
  auto b = harness::hard_probes(cfg, 20, 9);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].start.position == b[i].start.position);
    CHECK(cfg.env.center_box.contains(a[i].start.position));
    CHECK(a[i].goal.position.y() < cfg.env.wall_bottom_y);
  }
}

TEST_CASE("metrics csv: schema and formatting") {
  std::vector<harness::MetricsRow> rows{{7, 1000, 0.523, 0.85, "leap-k3/hard"}};
  auto csv = harness::metrics_csv(rows);
  CHECK(csv.rfind("seed,step,final_distance_mean,success_rate,method\n", 0) == 0);
  CHECK(csv.find("7,1000,0.523,0.85,leap-k3/hard\n") != std::string::npos);
}

TEST_CASE("manifest: records command, full config, and extras") {
  const auto dir = fs::temp_directory_path() / "leap_manifest_test";
  fs::create_directories(dir);
  auto cfg = harness::nav2d_preset();
  harness::write_manifest((dir / "manifest.json").string(), "evaluate", cfg,
                          {{"seed", 3}, {"outputs", {"metrics.csv"}}});
  std::ifstream in(dir / "manifest.json");
  nlohmann::json j;
  in >> j;
  CHECK(j.at("command") == "evaluate");
  CHECK(j.at("seed") == 3);
  CHECK(j.at("config").at("tdm").at("batch_size") == 128);
  CHECK(j.at("config").at("planner").at("cem").at("population") == 1000);
  fs::remove_all(dir);
}

TEST_CASE("cli: malformed config exits nonzero without partial outputs") {
  const auto dir = fs::temp_directory_path() / "leap_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "bad.json");
    out << "{ not json";
  }
  const auto out_dir = (dir / "should_not_exist").string();
  const auto cfg_path = (dir / "bad.json").string();
  const char* argv[] = {"leap",     "collect-data", "--config", cfg_path.c_str(),
                        "--out",    out_dir.c_str()};
  CHECK(harness::run_cli(6, argv) != 0);
  CHECK_FALSE(fs::exists(out_dir));

  // unknown flag is a usage error
  const char* argv2[] = {"leap", "collect-data", "--definitely-not-a-flag"};
  CHECK(harness::run_cli(3, argv2) != 0);
  fs::remove_all(dir);
}

TEST_CASE("cli: collect-data writes dataset, manifest, and is reproducible") {
  const auto dir = (fs::temp_directory_path() / "leap_cli_collect").string();
  fs::remove_all(dir);
  auto run = [&](const std::string& out) {
    const char* argv[] = {"leap", "collect-data", "--seed", "5", "--n", "1200", "--out",
                          out.c_str()};
    return harness::run_cli(8, argv);
  };
  REQUIRE(run(dir + "/a") == 0);
  REQUIRE(run(dir + "/b") == 0);
  std::ifstream fa(dir + "/a/states.csv"), fb(dir + "/b/states.csv");
  std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);  // identical seed, identical bytes
  CHECK(sa.rfind("x,y\n", 0) == 0);
  CHECK(fs::exists(dir + "/a/manifest.json"));
  fs::remove_all(dir);
}

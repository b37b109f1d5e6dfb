#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "marlob/util/config.hpp"

using namespace marlob;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

std::string cli_path() {
  const char* p = std::getenv("MARLOB_CLI");
  REQUIRE(p != nullptr);
  return p;
}

RunResult run_cli(const std::string& cli_args) {
  static int counter = 0;
  const auto log = std::filesystem::temp_directory_path() /
                   ("marlob_cli_out_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++) + ".log");
  const std::string cmd = cli_path() + " " + cli_args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  std::filesystem::remove(log);
  return result;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small synthetic session: 4+ short episodes, two agent types.
std::string small_overrides() {
  return "--override env.steps_per_episode=8 --override env.messages_per_step=25 "
         "--override env.start_stride_steps=8 --override data.synthetic.n_messages=1200 "
         "--override train.n_envs=4 --override train.rollout_len=8 "
         "--override train.updates=2 --override train.hidden=8 "
         "--override train.eval_every=1 --override train.max_eval_episodes=2 "
         "--override evaluate.episodes=2 "
         "--override env.agents.1.task_size=40";
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("marlob_cli_dir_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("config machinery") {
  SECTION("defaults parse and validate") {
    const auto cfg = util::default_config();
    const auto env_cfg = util::parse_env_config(cfg);
    CHECK(env_cfg.steps_per_episode == 64);
    CHECK(env_cfg.messages_per_step == 100);
    CHECK(env_cfg.book_capacity == 100);
    REQUIRE(env_cfg.specs.size() == 2);
    CHECK(env_cfg.specs[0].params.rho == 50.0);
    CHECK(env_cfg.specs[0].params.order_size == 10);
    CHECK(env_cfg.specs[1].params.task_size == 600);
    CHECK(env_cfg.specs[1].params.unfilled_penalty_coef == 0.1);
    CHECK(env::action_arity(env_cfg.specs[1]) == 12);
    const auto train_cfg = util::parse_train_config(cfg, 0, 1);
    CHECK(train_cfg.rollout_len == 64);
  }

  SECTION("override parsing") {
    auto cfg = util::default_config();
    util::apply_override(cfg, "train.updates=7");
    util::apply_override(cfg, "env.agents.0.order_size=5");
    util::apply_override(cfg, "evaluate.type0=[\"noop\",\"avst\"]");
    CHECK(cfg["train"]["updates"] == 7);
    CHECK(cfg["env"]["agents"][0]["order_size"] == 5);
    CHECK(cfg["evaluate"]["type0"].size() == 2);
    CHECK_THROWS_AS(util::apply_override(cfg, "nonsense"), std::invalid_argument);
    CHECK_THROWS_AS(util::apply_override(cfg, "env.agents.7.count=2"),
                    std::invalid_argument);
  }

  SECTION("field errors name the field") {
    auto cfg = util::default_config();
    cfg["env"].erase("steps_per_episode");
    CHECK_THROWS_WITH(util::parse_env_config(cfg),
                      Catch::Matchers::ContainsSubstring("env.steps_per_episode"));
    auto cfg2 = util::default_config();
    cfg2["train"]["clip_eps"] = "not_a_number";
    CHECK_THROWS_WITH(util::parse_train_config(cfg2, 0, 1),
                      Catch::Matchers::ContainsSubstring("train.clip_eps"));
    auto cfg3 = util::default_config();
    cfg3["data"]["source"] = "lobster";
    CHECK_THROWS_WITH(util::build_store(cfg3),
                      Catch::Matchers::ContainsSubstring("data.lobster.messages"));
  }

  SECTION("hash is stable and input-sensitive") {
    const auto a = util::config_hash(util::default_config());
    const auto b = util::config_hash(util::default_config());
    CHECK(a == b);
    auto cfg = util::default_config();
    cfg["train"]["updates"] = 12345;
    CHECK(util::config_hash(cfg) != a);
  }
}

TEST_CASE("cli inspect and config errors") {
  const auto ok = run_cli("inspect");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("config_hash=") != std::string::npos);
  CHECK(ok.output.find("inventory_frac") != std::string::npos);

  const auto bad = run_cli("train --override data.source=lobster");
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("data.lobster.messages") != std::string::npos);

  const auto bad_value = run_cli("train --override train.clip_eps=7.5");
  CHECK(bad_value.exit_code == 1);
  CHECK(bad_value.output.find("clip_eps") != std::string::npos);
}

TEST_CASE("cli train is reproducible per seed") {
  TempDir a, b, c;
  const auto ra = run_cli("train --seed 1 --out " + a.path.string() + " " + small_overrides());
  REQUIRE(ra.exit_code == 0);
  const auto rb = run_cli("train --seed 1 --out " + b.path.string() + " " + small_overrides());
  REQUIRE(rb.exit_code == 0);
  const auto rc = run_cli("train --seed 2 --out " + c.path.string() + " " + small_overrides());
  REQUIRE(rc.exit_code == 0);

  CHECK(std::filesystem::exists(a.path / "checkpoint.bin"));
  CHECK(std::filesystem::exists(a.path / "resolved_config.json"));
  const auto ma = slurp(a.path / "metrics.jsonl");
  CHECK(!ma.empty());
  CHECK(ma == slurp(b.path / "metrics.jsonl"));
  CHECK(ma != slurp(c.path / "metrics.jsonl"));
  CHECK(slurp(a.path / "checkpoint.bin") == slurp(b.path / "checkpoint.bin"));
}

TEST_CASE("cli replay is deterministic and bounds-checked") {
  TempDir dir;
  const std::string base = "replay " + small_overrides();
  const auto r1 = run_cli(base + " --episode 0 --out " + (dir.path / "r1.txt").string());
  REQUIRE(r1.exit_code == 0);
  const auto r2 = run_cli(base + " --episode 0 --out " + (dir.path / "r2.txt").string());
  REQUIRE(r2.exit_code == 0);
  const auto text = slurp(dir.path / "r1.txt");
  CHECK(text == slurp(dir.path / "r2.txt"));
  CHECK(text.find("replay episode=0") != std::string::npos);
  CHECK(text.find("end trades_total=") != std::string::npos);

  const auto bad = run_cli(base + " --episode 9999");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("out of range") != std::string::npos);
}

TEST_CASE("cli evaluate builds matrices and validates checkpoints") {
  TempDir train_dir, eval_dir;
  REQUIRE(run_cli("train --seed 3 --out " + train_dir.path.string() + " " +
                  small_overrides())
              .exit_code == 0);
  const std::string ckpt = (train_dir.path / "checkpoint.bin").string();

  SECTION("baseline-only 1x1 cell") {
    const auto r = run_cli("evaluate --out " + eval_dir.path.string() + " " +
                           small_overrides());
    REQUIRE(r.exit_code == 0);
    const auto doc = util::json::parse(slurp(eval_dir.path / "crossplay.json"));
    CHECK(doc["row_labels"] == util::json::array({"avst"}));
    CHECK(doc["col_labels"] == util::json::array({"twap"}));
    CHECK(doc["cells"].size() == 1);
  }

  SECTION("2x2 learned-plus-baseline grid on a shared episode set") {
    const auto r = run_cli(
        "evaluate --out " + eval_dir.path.string() + " " + small_overrides() +
        " --override 'evaluate.type0=[\"avst\",\"learned:" + ckpt + "\"]'" +
        " --override 'evaluate.type1=[\"twap\",\"learned:" + ckpt + "\"]'");
    REQUIRE(r.exit_code == 0);
    const auto doc = util::json::parse(slurp(eval_dir.path / "crossplay.json"));
    CHECK(doc["cells"].size() == 4);
    for (const auto& cell : doc["cells"]) {
      CHECK(cell["episodes"] == 2);
      CHECK(cell["type1"].contains("slippage_mean"));
    }
  }

  SECTION("mismatched checkpoint dimensions are rejected") {
    const auto r = run_cli("evaluate --out " + eval_dir.path.string() + " " +
                           small_overrides() +
                           " --override env.agents.1.action_space=simple" +
                           " --override 'evaluate.type1=[\"learned:" + ckpt + "\"]'");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("does not match") != std::string::npos);
  }

  SECTION("missing checkpoint file is an error") {
    const auto r = run_cli("evaluate --out " + eval_dir.path.string() + " " +
                           small_overrides() +
                           " --override 'evaluate.type1=[\"learned:/nonexistent.bin\"]'");
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("cli bench writes the grid report") {
  TempDir dir;
  const auto r = run_cli(
      "bench --out " + dir.path.string() +
      " --override env.steps_per_episode=8 --override env.messages_per_step=20"
      " --override env.start_stride_steps=8 --override data.synthetic.n_messages=1000"
      " --override bench.n_envs=4 --override bench.n_steps=8 --override bench.warmup_steps=1"
      " --override bench.messages_grid=[1,20] --override bench.agents_grid=[1,2]");
  REQUIRE(r.exit_code == 0);
  const auto csv = slurp(dir.path / "throughput.csv");
  CHECK(csv.find("steps_per_sec") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

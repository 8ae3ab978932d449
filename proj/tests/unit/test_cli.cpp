#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "climadapt/cli.hpp"
#include "climadapt/core.hpp"
#include "climadapt/text_io.hpp"
#include "climadapt/training.hpp"

using namespace climadapt;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / "climadapt_unit" / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small city and a tiny PPO setup so commands finish in well under a second.
fs::path tiny_config(const fs::path& dir) {
  const auto path = dir / "tiny.json";
  write_text_file(path, R"({
  "city": {"zones": 2, "width": 8, "height": 8, "trips": 40},
  "policy": {"hidden": 8, "layers": 1},
  "train": {"parallel_envs": 2, "rollout_steps_per_update": 32, "batch_size": 16, "epochs_per_update": 2,
            "checkpoint_every": 1},
  "eval": {"seeds": [0, 1]}
})");
  return path;
}

}  // namespace

TEST_CASE("seed lists accept single values, ranges and mixtures") {
  CHECK(parse_seed_list("3") == std::vector<std::uint64_t>{3});
  CHECK(parse_seed_list("0-3") == std::vector<std::uint64_t>{0, 1, 2, 3});
  CHECK(parse_seed_list("1,4,7-9") == std::vector<std::uint64_t>{1, 4, 7, 8, 9});
  CHECK_THROWS_AS(parse_seed_list("5-2"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("a"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
}

TEST_CASE("invalid input exits with code 1 and a named error") {
  const auto dir = scratch("invalid");
  CHECK(cli({}).code == kExitInvalid);
  CHECK(cli({"frobnicate"}).code == kExitInvalid);
  auto r = cli({"generate", "--zones", "1", "--out", (dir / "c").string()});
  CHECK(r.code == kExitInvalid);
  CHECK(r.err.find("--zones") != std::string::npos);
  r = cli({"eval", "--config", tiny_config(dir).string(), "--baseline", "NoControl", "--reality", "RCP9.9", "--out",
           (dir / "e").string()});
  CHECK(r.code == kExitInvalid);
  CHECK(r.err.find("RCP4.5") != std::string::npos);
  r = cli({"eval", "--config", (dir / "missing.json").string(), "--baseline", "NoControl", "--out",
           (dir / "e").string()});
  CHECK(r.code == kExitInvalid);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("generate is reproducible under the seed") {
  const auto dir = scratch("generate");
  REQUIRE(cli({"generate", "--seed", "5", "--zones", "3", "--out", (dir / "a").string()}).code == kExitOk);
  REQUIRE(cli({"generate", "--seed", "5", "--zones", "3", "--out", (dir / "b").string()}).code == kExitOk);
  REQUIRE(cli({"generate", "--seed", "6", "--zones", "3", "--out", (dir / "c").string()}).code == kExitOk);
  auto artifacts = [](const fs::path& d) {
    const auto line = read_text_file(d / "manifest.jsonl");
    return nlohmann::json::parse(line.substr(0, line.find('\n'))).at("artifacts");
  };
  CHECK(artifacts(dir / "a") == artifacts(dir / "b"));
  CHECK(artifacts(dir / "a") != artifacts(dir / "c"));
  CHECK(cli({"inspect", "--city", (dir / "a").string()}).code == kExitOk);
}

TEST_CASE("eval outputs are byte-identical across runs") {
  const auto dir = scratch("eval");
  const auto cfg = tiny_config(dir).string();
  for (const char* sub : {"a", "b"}) {
    const auto r = cli({"eval", "--config", cfg, "--baseline", "RandomControl", "--reality", "RCP8.5", "--seeds",
                        "0-2", "--out", (dir / sub).string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("EUR") != std::string::npos);
  }
  for (const char* f : {"trace.csv", "pathways.csv", "components.csv", "summary.csv", "components.svg"}) {
    CAPTURE(f);
    CHECK(read_text_file(dir / "a" / f) == read_text_file(dir / "b" / f));
  }
}

TEST_CASE("train writes checkpoints, resumes, and feeds eval and the matrix") {
  const auto dir = scratch("train");
  const auto cfg = tiny_config(dir).string();
  const auto out = (dir / "run").string();
  auto r = cli({"train", "--config", cfg, "--scenario", "RCP2.6", "--max-env-steps", "64", "--out", out});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir / "run" / "checkpoints" / "update_000001.json"));
  const auto ck = (dir / "run" / "checkpoint.json").string();

  r = cli({"train", "--config", cfg, "--checkpoint", ck, "--max-env-steps", "128", "--out", out});
  REQUIRE(r.code == kExitOk);
  CHECK(load_checkpoint(ck).progress.updates == 2);
  const auto log = read_text_file(dir / "run" / "train_log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);

  r = cli({"eval", "--config", cfg, "--checkpoint", ck, "--reality", "RCP4.5", "--out", (dir / "eval").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir / "eval" / "trace.csv"));

  r = cli({"eval", "--config", cfg, "--matrix", "--checkpoint", "RCP2.6=" + ck, "--checkpoint",
           "RCP4.5=" + (dir / "nowhere.json").string(), "--seeds", "0-1", "--out", (dir / "matrix").string()});
  REQUIRE(r.code == kExitOk);
  const auto table = read_text_file(dir / "matrix" / "matrix.txt");
  CHECK(table.find("absent") != std::string::npos);

  CHECK(cli({"inspect", "--checkpoint", ck}).code == kExitOk);
}

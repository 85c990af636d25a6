#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "iois/cli.hpp"
#include "iois/config.hpp"
#include "iois/dataset.hpp"
#include "iois/error.hpp"
#include "iois/text_io.hpp"

using namespace iois;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "iois");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

}  // namespace

TEST_CASE("gen-data writes the default imbalanced counts") {
  TempDir tmp("iois_cli_gen");
  const auto r = cli({"gen-data", "--out", tmp / "d.csv", "--seed", "3"});
  REQUIRE(r.code == 0);
  CHECK(load_dataset(tmp / "d.csv").class_counts() == std::vector<std::size_t>{500, 150, 50});

  REQUIRE(cli({"gen-data", "--out", tmp / "b.csv", "--ratio", "1", "--n-max", "40"}).code == 0);
  CHECK(load_dataset(tmp / "b.csv").class_counts() == std::vector<std::size_t>{40, 40, 40});

  REQUIRE(cli({"gen-data", "--out", tmp / "c.csv", "--counts", "9,8"}).code == 1);
  REQUIRE(cli({"gen-data", "--out", tmp / "c.csv", "--classes", "2", "--counts", "9,8"}).code == 0);
  CHECK(load_dataset(tmp / "c.csv").class_counts() == std::vector<std::size_t>{9, 8});
}

TEST_CASE("usage and configuration errors exit with status 1") {
  TempDir tmp("iois_cli_err");
  CHECK(cli({"gen-data", "--out", tmp / "d.csv", "--ratio", "0.5"}).code == 1);
  const auto typo = cli({"gen-data", "--out", tmp / "d.csv", "--set", "data.raduis=2"});
  CHECK(typo.code == 1);
  CHECK(typo.err.find("data.raduis") != std::string::npos);
  CHECK(cli({"no-such-command"}).code == 1);
  CHECK(cli({"train", "--data", tmp / "missing.csv", "--out", tmp / "run"}).code == 1);
}

TEST_CASE("config text round trips and rejects unknown keys") {
  RunConfig cfg = default_run_config();
  apply_override(cfg, "guidance.scale=0.25");
  apply_override(cfg, "classifier.hidden=16,8");
  apply_override(cfg, "data.counts=30,20,10");
  const auto text = format_config(cfg);
  const auto back = parse_config(text);
  CHECK(format_config(back) == text);
  CHECK(back.loop.guidance.scale == 0.25);
  CHECK(back.loop.hidden == std::vector<std::size_t>{16, 8});
  CHECK_THROWS_AS(parse_config("[data]\nwidth = 3\n"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "nonsense"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "run.seed=abc"), ConfigError);
}

TEST_CASE("end-to-end baseline run and report") {
  TempDir tmp("iois_cli_run");
  REQUIRE(cli({"gen-data", "--out", tmp / "d.csv", "--counts", "60,30,20"}).code == 0);
  for (const char* seed : {"1", "2"}) {
    const auto r = cli({"train", "--data", tmp / "d.csv", "--mode", "ce_baseline", "--out",
                        tmp / (std::string("run") + seed), "--seed", seed, "--set", "classifier.epochs=3"});
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"config.ini", "report.csv", "allocations.csv", "test_metrics.csv", "timing.csv",
                        "classifier_best.ckpt", "classifier_last.ckpt"}) {
    CHECK(fs::exists(tmp.path / "run1" / f));
  }
  const auto rep = cli({"report", tmp / "run1", tmp / "run2", tmp / "absent"});
  REQUIRE(rep.code == 0);
  CHECK(rep.err.find("absent") != std::string::npos);
  CHECK(rep.out.find("ce_baseline,mean,") != std::string::npos);
  CHECK(rep.out.rfind("mode,seed,", 0) == 0);

  const auto again = cli({"train", "--data", tmp / "d.csv", "--mode", "ce_baseline", "--out", tmp / "again",
                          "--seed", "1", "--set", "classifier.epochs=3"});
  REQUIRE(again.code == 0);
  CHECK(read_file(tmp.path / "again" / "report.csv") == read_file(tmp.path / "run1" / "report.csv"));
}

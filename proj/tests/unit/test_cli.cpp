#include <cstdlib>
#include <sys/wait.h>

#include "helpers.hpp"

using nlohmann::json;

namespace {

const std::filesystem::path kRepo = std::filesystem::path(WMAUDIT_REPO_DATA).parent_path();

int run(const std::string& args, const std::filesystem::path& log) {
  std::string cmd = std::string(WMAUDIT_CLI) + " " + args + " >" + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// The sample config with paths pinned to a scratch directory.
std::filesystem::path sample_config(const wmtest::TempDir& dir, double emission) {
  json cfg = json::parse(wmtest::slurp(kRepo / "samples" / "acronym_audit.json"));
  cfg["index"] = (dir / "index.jsonl").string();
  cfg["corpus"] = (kRepo / "data" / "watermarks" / "acronym_corpus.json").string();
  cfg["out"] = (dir / "out").string();
  cfg["generator"]["rules"][0]["emission_probability"] = emission;
  wmtest::spit(dir / "audit.json", cfg.dump(2));
  return dir / "audit.json";
}

}  // namespace

TEST(Cli, SampleAuditEndToEnd) {
  wmtest::TempDir dir;
  std::string c = "--config " + sample_config(dir, 0.85).string();
  std::filesystem::path log = dir / "cli.log";
  ASSERT_EQ(run(c + " index --assets " + (kRepo / "samples" / "assets").string(), log), 0) << wmtest::slurp(log);
  ASSERT_EQ(run(c + " inject --output " + (dir / "index.jsonl").string(), log), 0) << wmtest::slurp(log);
  ASSERT_EQ(run(c + " probe", log), 0) << wmtest::slurp(log);
  EXPECT_EQ(run(c + " verify", log), 2) << wmtest::slurp(log);
  EXPECT_NE(wmtest::slurp(log).find("uses-watermarked-data"), std::string::npos);
  EXPECT_EQ(run(c + " report --report " + (dir / "out" / "report.json").string(), log), 0) << wmtest::slurp(log);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "per_spec.csv"));
  EXPECT_EQ(run(c + " sequential --max-queries 30", log), 2) << wmtest::slurp(log);
}

TEST(Cli, CleanServiceExitsZero) {
  wmtest::TempDir dir;
  std::string c = "--config " + sample_config(dir, 0.0).string();
  std::filesystem::path log = dir / "cli.log";
  ASSERT_EQ(run(c + " index --assets " + (kRepo / "samples" / "assets").string(), log), 0) << wmtest::slurp(log);
  ASSERT_EQ(run(c + " inject --output " + (dir / "index.jsonl").string(), log), 0) << wmtest::slurp(log);
  ASSERT_EQ(run(c + " probe", log), 0) << wmtest::slurp(log);
  EXPECT_EQ(run(c + " verify", log), 0) << wmtest::slurp(log);
}

TEST(Cli, ErrorsExitOne) {
  wmtest::TempDir dir;
  std::filesystem::path log = dir / "cli.log";
  EXPECT_EQ(run("--config " + (dir / "missing.json").string() + " probe", log), 1);
  EXPECT_NE(wmtest::slurp(log).find("error [io]"), std::string::npos) << wmtest::slurp(log);
  EXPECT_EQ(run("frobnicate", log), 1);
  EXPECT_EQ(run("index", log), 1);
  EXPECT_EQ(run("--help", log), 0);
}

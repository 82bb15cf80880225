#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "gtest/gtest.h"
#include "support/test_util.h"

namespace resmia {
namespace {

using testing::TempDir;

// Exit status of the CLI run with `args`; stdout and stderr are discarded.
int RunCli(const std::string& args) {
  const std::string cmd = std::string(RESMIA_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void WriteTinyConfig(const std::filesystem::path& path) {
  std::ofstream(path) << R"({
  "schema_version": 1,
  "seed": 3,
  "dataset": {"kind": "synthetic", "test_per_class": 4,
              "synthetic": {"classes": 3, "per_class": 6, "shape": [3, 16, 16]}},
  "fed": {"num_clients": 3, "rounds": 1, "local_epochs": 1, "batch_size": 4},
  "erosion": {"steps": 4},
  "eval": {"members_per_client": 2, "non_members": 6},
  "timing": {"samples": 2, "warmup": 1}
})";
}

TEST(CliTest, HelpSucceeds) {
  EXPECT_EQ(RunCli("--help"), 0);
  EXPECT_EQ(RunCli("train --help"), 0);
}

TEST(CliTest, ConfigErrorsExitTwo) {
  TempDir dir("cli_cfg");
  EXPECT_EQ(RunCli("train --workers 0"), 2);
  EXPECT_EQ(RunCli("bogus"), 2);
  EXPECT_EQ(RunCli("train --config " + (dir.path() / "absent.json").string()), 2);
  std::ofstream(dir.path() / "bad.json") << R"({"schema_version": 1, "unknown": 1})";
  EXPECT_EQ(RunCli("train --config " + (dir.path() / "bad.json").string()), 2);
  WriteTinyConfig(dir.path() / "tiny.json");
  EXPECT_EQ(RunCli("attack --config " + (dir.path() / "tiny.json").string() +
                " --upsample cubic"),
            2);
}

TEST(CliTest, FullRunThenRuntimeErrors) {
  TempDir dir("cli_run");
  const std::string cfg = "--config " + (dir.path() / "tiny.json").string();
  const std::string out = " --out " + (dir.path() / "run").string();
  WriteTinyConfig(dir.path() / "tiny.json");
  ASSERT_EQ(RunCli("train " + cfg + out), 0);
  EXPECT_EQ(RunCli("attack " + cfg + out + " --workers 2"), 0);
  EXPECT_EQ(RunCli("ablate " + cfg + out), 0);
  EXPECT_EQ(RunCli("report" + out), 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "run" / "summary.txt"));
  // A checkpoint trained under another seed is a config mismatch.
  EXPECT_EQ(RunCli("attack " + cfg + out + " --seed 4"), 2);
  EXPECT_EQ(RunCli("attack " + cfg + out + " --checkpoint " +
                (dir.path() / "missing.bin").string()),
            3);
  EXPECT_EQ(RunCli("report --out " + (dir.path() / "empty").string()), 3);
}

}  // namespace
}  // namespace resmia

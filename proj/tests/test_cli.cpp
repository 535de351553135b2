#include "cli_harness.hpp"

#include <gtest/gtest.h>

using namespace advpath::testing;

namespace {

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("advpath_cli_" + name); }

} // namespace

TEST(Cli, MalformedConfigurationExitsWithTwo)
{
    const auto dir = scratch("config");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_EQ(run_cli("gen-data --config " + (dir / "bad.json").string() + " --out " + dir.string(), dir).status, 2);
    EXPECT_EQ(run_cli("gen-data --set corpus.bag_size_min=0 --out " + dir.string(), dir).status, 2);
    EXPECT_EQ(run_cli("gen-data --set novalue --out " + dir.string(), dir).status, 2);
    auto r = run_cli("gen-data --config " + (dir / "missing.json").string(), dir);
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.stderr_text.find("missing.json"), std::string::npos) << r.stderr_text;
}

TEST(Cli, MissingPrerequisiteNamesTheStepToRun)
{
    const auto dir = scratch("prereq");
    auto r = run_cli("train-autoencoder --out " + dir.string(), dir);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.stderr_text.find("gen-data"), std::string::npos) << r.stderr_text;
    r = run_cli("attack --out " + dir.string() + " --autoencoder /nonexistent.ckpt", dir);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.stderr_text.find("train-autoencoder"), std::string::npos) << r.stderr_text;
    EXPECT_NE(r.stderr_text.find("/nonexistent.ckpt"), std::string::npos) << r.stderr_text;
}

TEST(Cli, UnknownSubcommandIsRejected)
{
    const auto dir = scratch("usage");
    EXPECT_NE(run_cli("frobnicate", dir).status, 0);
    EXPECT_NE(run_cli("", dir).status, 0);
}

TEST(Cli, EveryRunReplaysBitForBitFromItsManifest)
{
    auto check = run_and_replay(scratch("replay"), 1, 2);
    for (const auto& f : check.failures) ADD_FAILURE() << f;
    for (const auto& m : check.mismatches) ADD_FAILURE() << "differs on replay: " << m;
    EXPECT_GT(check.files_compared, 20u);
}

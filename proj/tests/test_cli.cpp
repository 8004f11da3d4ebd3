#include "cli.hpp"

#include "setid/config.hpp"
#include "setid/csv.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using setid::cli::run_cli;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("setid_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path dir;
    const fs::path configs = SETID_CONFIG_DIR;
};

} // namespace

TEST_F(Cli, CrlbOnOrthonormalExample)
{
    const Result r = run({"crlb", (configs / "crlb_orthonormal.ini").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("crlb_trace = 78.5398"), std::string::npos) << r.out;
}

TEST_F(Cli, PecheckOnZeroDitherInputs)
{
    const Result r = run({"pecheck", (configs / "pe_zero_dither.ini").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("delta = 1\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("N = 3\n"), std::string::npos) << r.out;
    const auto m = r.out.find("M = ");
    ASSERT_NE(m, std::string::npos);
    EXPECT_NEAR(std::stod(r.out.substr(m + 4)), std::sqrt(5.0), 1e-12);
}

TEST_F(Cli, EmitConfigRoundTrips)
{
    const Result r = run({"mc", "--paper-v", "--emit-config", "--seed", "9", "--runs", "12"});
    ASSERT_EQ(r.code, 0) << r.err;
    const setid::Config parsed = setid::Config::parse(r.out);
    EXPECT_EQ(parsed.get_long("mc.runs", 0), 12);
    EXPECT_EQ(parsed.get_long("mc.seed", 0), 9);
    EXPECT_EQ(setid::Config::parse(parsed.emit()), parsed);

    std::ofstream(dir / "dumped.ini") << r.out;
    const Result again = run({"mc", (dir / "dumped.ini").string(), "--emit-config"});
    EXPECT_EQ(again.out, r.out);
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run({"mc"}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"mc", "--paper-v", "--set", "est.beta=-3"}).code, 2);
    const Result unknown = run({"mc", "--paper-v", "--set", "est.gamma=1"});
    EXPECT_EQ(unknown.code, 2);
    EXPECT_NE(unknown.err.find("est.gamma"), std::string::npos);
    // adaptive gain with a compactly supported density: the floor hits zero at k0 + 1
    std::ofstream(dir / "table.csv") << "x,F\n-1,0\n0,0.5\n1,1\n";
    const Result fault = run({"identify", "--paper-v", "--horizon", "100", "--out", dir.string(),
                              "--set", "noise.family=custom", "--set",
                              "noise.table_path=" + (dir / "table.csv").string(), "--set",
                              "est.policy=adaptive", "--set", "est.init=5,5"});
    EXPECT_EQ(fault.code, 3) << fault.err;
    EXPECT_NE(fault.err.find("k = 21"), std::string::npos) << fault.err;
    // rank-deficient information: one observation, two parameters
    EXPECT_EQ(run({"crlb", (configs / "crlb_orthonormal.ini").string(), "--horizon", "1"}).code, 3);
    EXPECT_EQ(run({"mc", "--help"}).code, 0);
}

TEST_F(Cli, CommandsWriteTheirFiles)
{
    const std::string out = dir.string();
    ASSERT_EQ(run({"simulate", "--paper-v", "--horizon", "500", "--out", out}).code, 0);
    EXPECT_EQ(setid::read_csv(dir / "trace.csv").header,
              (std::vector<std::string>{"k", "phi_1", "phi_2", "y", "s"}));
    ASSERT_EQ(run({"identify", "--paper-v", "--horizon", "500", "--out", out}).code, 0);
    EXPECT_EQ(setid::read_csv(dir / "estimates.csv").rows.size(), 500u - 20u + 1u);
    ASSERT_EQ(run({"spao", "--paper-v", "--horizon", "500", "--out", out}).code, 0);
    EXPECT_EQ(setid::read_csv(dir / "spao.csv").header.size(), 7u);
    ASSERT_EQ(run({"rates", "--paper-v", "--horizon", "3000", "--runs", "5", "--out", out}).code, 0);
    EXPECT_TRUE(fs::exists(dir / "rates.csv"));
    EXPECT_TRUE(fs::exists(dir / "rates_summary.json"));
    ASSERT_EQ(run({"mc", "--paper-v", "--horizon", "3000", "--runs", "5", "--out", out}).code, 0);
    for (const char* f : {"trace_run0.csv", "ensemble.csv", "summary.txt"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST_F(Cli, OutputsAreIdempotent)
{
    const auto a = dir / "a", b = dir / "b";
    for (const auto& d : {a, b})
        ASSERT_EQ(run({"mc", "--paper-v", "--horizon", "2000", "--runs", "8", "--jobs", "2",
                       "--out", d.string()})
                      .code,
                  0);
    for (const char* f : {"trace_run0.csv", "ensemble.csv", "rates.csv", "summary.txt"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;

    for (const auto& d : {a, b})
        ASSERT_EQ(run({"simulate", "--paper-v", "--horizon", "300", "--seed", "4", "--out",
                       d.string()})
                      .code,
                  0);
    EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
}

TEST_F(Cli, EnvironmentOverridesConfigButNotFlag)
{
    const auto env_dir = dir / "env";
    const auto flag_dir = dir / "flag";
    ::setenv("SETVALUED_ID_OUT", env_dir.string().c_str(), 1);
    EXPECT_EQ(run({"simulate", "--paper-v", "--horizon", "50"}).code, 0);
    EXPECT_TRUE(fs::exists(env_dir / "trace.csv"));
    EXPECT_EQ(run({"simulate", "--paper-v", "--horizon", "50", "--out", flag_dir.string()}).code, 0);
    EXPECT_TRUE(fs::exists(flag_dir / "trace.csv"));
    ::unsetenv("SETVALUED_ID_OUT");
}

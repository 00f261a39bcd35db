#include "momentlab/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "momentlab");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = momentlab::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("momentlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string scenario(const json& doc, const std::string& name = "s.json")
    {
        json d = doc;
        if (!d.contains("output_dir"))
            d["output_dir"] = (dir_ / "out").string();
        const auto path = dir_ / name;
        std::ofstream(path) << d.dump(2);
        return path.string();
    }

    static json heat()
    {
        return json::parse(R"({
          "system": {"kind": "heat", "params": {}, "n_max": 20},
          "horizon": 0.5, "modes": 10, "n_check": 20, "q": 1, "y0": [1.0],
          "t_grid": {"lo": 0.1, "hi": 0.8, "points": 6}, "samples": 11})");
    }

    fs::path dir_;
};

std::map<std::string, std::string> snapshot(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[e.path().filename().string()] = ss.str();
    }
    return files;
}

} // namespace

TEST_F(Cli, CheckHeatPassesAll)
{
    const auto r = run({"check", "--scenario", scenario(heat())});
    EXPECT_EQ(r.code, 0) << r.err;
    std::size_t passes = 0;
    for (std::size_t p = r.out.find("PASS"); p != std::string::npos; p = r.out.find("PASS", p + 1))
        ++passes;
    EXPECT_EQ(passes, 7u);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "hypotheses.json"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "sequence.csv"));
}

TEST_F(Cli, NegativeHorizonIsValidationError)
{
    json d = heat();
    d["horizon"] = -1.0;
    const auto r = run({"verify", "--scenario", scenario(d)});
    EXPECT_EQ(r.code, 2);
    const json e = json::parse(r.err);
    EXPECT_EQ(e["error"]["field"], "horizon");
    EXPECT_EQ(e["exit_code"], 2);
}

TEST_F(Cli, StrictRefusesFailingHypotheses)
{
    json d = heat();
    d["system"] = json::parse(R"({"kind": "condensing", "params": {"gamma": 0.5}, "n_max": 200})");
    const auto path = scenario(d);
    const auto loose = run({"check", "--scenario", path, "--q", "1"});
    EXPECT_EQ(loose.code, 0);
    EXPECT_NE(loose.out.find("FAIL"), std::string::npos);
    const auto strict = run({"check", "--scenario", path, "--q", "1", "--strict"});
    EXPECT_EQ(strict.code, 4);
    EXPECT_EQ(json::parse(strict.err)["error"]["kind"], "HypothesisFailure");
    const auto sweep = run({"cost-sweep", "--scenario", path, "--q", "1", "--strict"});
    EXPECT_EQ(sweep.code, 4);
    EXPECT_FALSE(fs::exists(dir_ / "out" / "cost.csv"));
}

TEST_F(Cli, PrecisionCapIsNumericalFailure)
{
    json d = heat();
    d["precision_bits"] = 64;
    d["max_precision_bits"] = 64;
    d["horizon"] = 0.05;
    const auto r = run({"biorthogonal", "--scenario", scenario(d), "--n", "20"});
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(json::parse(r.err)["error"]["kind"], "PrecisionTooLow");
}

TEST_F(Cli, UsageErrors)
{
    EXPECT_EQ(run({"frobnicate", "--scenario", "x.json"}).code, 2);
    EXPECT_EQ(run({"check"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    const auto missing = run({"check", "--scenario", (dir_ / "nope.json").string()});
    EXPECT_EQ(missing.code, 2);
    EXPECT_EQ(json::parse(missing.err)["error"]["field"], "scenario");
}

TEST_F(Cli, OverridesReachTheRun)
{
    const auto r = run({"biorthogonal", "--scenario", scenario(heat()), "--n", "7", "--out",
                        (dir_ / "alt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir_ / "alt" / "family.json");
    const json fam = json::parse(in);
    EXPECT_EQ(fam["lambda"].size(), 7u);
}

TEST_F(Cli, PipelineWritesEveryArtifact)
{
    const auto r = run({"pipeline", "--scenario", scenario(heat())});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"sequence.csv", "hypotheses.json", "family.csv", "family.json", "control.csv",
                          "control.json", "verify.csv", "verify.json", "cost.csv", "fit.json", "cost.gp"})
        EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    std::ifstream in(dir_ / "out" / "verify.json");
    const json v = json::parse(in);
    EXPECT_LE(v["relative_controlled_residual"].get<double>(), 1e-12);
    std::ifstream fin(dir_ / "out" / "fit.json");
    const json fit = json::parse(fin);
    EXPECT_EQ(fit["selected"], "A");
    EXPECT_GT(fit["fits"][0]["b"].get<double>(), 0.0);
}

TEST_F(Cli, FitReusesCostCsv)
{
    const auto path = scenario(heat());
    ASSERT_EQ(run({"cost-sweep", "--scenario", path}).code, 0);
    const auto r = run({"fit", "--scenario", path});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("model A"), std::string::npos);
    EXPECT_EQ(r.out.find("cost.csv"), std::string::npos);
}

TEST_F(Cli, CondensingFitsBothModels)
{
    json d = heat();
    d["system"] = json::parse(R"({"kind": "condensing", "params": {"gamma": 0.75}, "n_max": 20})");
    d["q"] = 2;
    const auto r = run({"fit", "--scenario", scenario(d)});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir_ / "out" / "fit.json");
    const json fit = json::parse(in);
    EXPECT_EQ(fit["selected"], "B");
    EXPECT_EQ(fit["fits"].size(), 2u);
    EXPECT_DOUBLE_EQ(fit["fits"][1]["exponent"].get<double>(), 3.0);
}

TEST_F(Cli, PipelineDeterministic)
{
    const auto path = scenario(heat());
    ASSERT_EQ(run({"pipeline", "--scenario", path}).code, 0);
    const auto first = snapshot(dir_ / "out");
    ASSERT_EQ(run({"pipeline", "--scenario", path}).code, 0);
    EXPECT_EQ(snapshot(dir_ / "out"), first);
}

TEST_F(Cli, ExecutableReportsExitCodes)
{
    const std::string exe = MOMENTLAB_CLI_PATH;
    const auto ok = std::system((exe + " eigs --scenario " + scenario(heat()) + " > /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(ok), 0);
    json d = heat();
    d["horizon"] = -1.0;
    const auto bad = std::system((exe + " eigs --scenario " + scenario(d, "bad.json") + " 2> /dev/null").c_str());
    EXPECT_EQ(WEXITSTATUS(bad), 2);
}

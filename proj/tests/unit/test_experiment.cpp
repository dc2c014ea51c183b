#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "anderson/errors.hpp"
#include "anderson/experiment.hpp"

namespace fs = std::filesystem;
using namespace anderson;
using nlohmann::json;

namespace {

ExperimentConfig tiny()
{
    ExperimentConfig c;
    c.L_list = {50, 100};
    c.poisson_L = 100;
    c.gamma_log = 8.0;
    c.n_realizations = 60;
    c.remainder_realizations = 500;
    c.poisson_realizations = 1000;
    c.decay.n_realizations = 100;
    c.ids.box_side = 100;
    c.ids.n_realizations = 10;
    return c;
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("anderson_lab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Config, DefaultsValidateAndRoundTrip)
{
    const ExperimentConfig c;
    EXPECT_NO_THROW(c.validate());
    const json j = c;
    const ExperimentConfig back = j.get<ExperimentConfig>();
    EXPECT_EQ(json(back), j);
}

TEST(Config, RejectsInvalidSettings)
{
    ExperimentConfig c;
    c.lambda = 2.0; // outside the localized window
    EXPECT_THROW(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.L_list.clear();
    EXPECT_THROW(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.L_list = {200, 100};
    EXPECT_THROW(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.alpha = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.a_exponent = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    json j = ExperimentConfig{};
    j["no_such_key"] = 1;
    EXPECT_THROW(j.get<ExperimentConfig>(), ConfigError);
}

TEST(Config, Overrides)
{
    json j = ExperimentConfig{};
    apply_override(j, "decay.s=0.25");
    apply_override(j, "L_list.1=300");
    apply_override(j, "output_dir=elsewhere");
    const auto c = j.get<ExperimentConfig>();
    EXPECT_EQ(c.decay.s, 0.25);
    EXPECT_EQ(c.L_list[1], 300);
    EXPECT_EQ(c.output_dir, "elsewhere");
    EXPECT_THROW(apply_override(j, "decay.nope=1"), ConfigError);
    EXPECT_THROW(apply_override(j, "missing_equals"), ConfigError);
}

TEST(Config, LoadFromFile)
{
    const fs::path dir = scratch("load");
    std::ofstream(dir / "c.json") << R"({"lambda": 0.1, "L_list": [100, 200]})";
    const auto c = load_config(dir / "c.json", {"master_seed=5"});
    EXPECT_EQ(c.lambda, 0.1);
    EXPECT_EQ(c.master_seed, 5u);
    EXPECT_EQ(c.L_list.size(), 2u);
    EXPECT_THROW(load_config(dir / "absent.json"), ConfigError);
    std::ofstream(dir / "bad.json") << R"({"lambda": 5.0})";
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
}

TEST(Config, StageSeedsDistinct)
{
    const ExperimentConfig c;
    EXPECT_NE(seed_for(c, Stage::Decay), seed_for(c, Stage::Ids));
    EXPECT_NE(seed_for(c, Stage::Sweep), seed_for(c, Stage::Stats));
    EXPECT_EQ(seed_for(c, Stage::Sweep), seed_for(c, Stage::Sweep));
}

TEST(Experiment, GapTrendRule)
{
    const std::vector<GapLevel> down{{100, {0.30, 0.01, 100}}, {200, {0.25, 0.01, 100}}, {400, {0.20, 0.01, 100}}};
    EXPECT_TRUE(gap_trend(down, 1.0).decreasing);
    EXPECT_FALSE(gap_trend(down, 5.0).decreasing);
    const std::vector<GapLevel> flat{{100, {0.30, 0.01, 100}}, {200, {0.30, 0.01, 100}}};
    EXPECT_FALSE(gap_trend(flat, 1.0).decreasing);
}

TEST(Experiment, StreamIdenticalAcrossWorkers)
{
    const auto c = tiny();
    const std::string one = sample_stream(c, 50, 40, 1);
    EXPECT_FALSE(one.empty());
    EXPECT_EQ(one, sample_stream(c, 50, 40, 3));
    EXPECT_EQ(one, sample_stream(c, 50, 40, 8));
    auto other = c;
    other.master_seed += 1;
    EXPECT_NE(one, sample_stream(other, 50, 40, 1));
}

TEST(Experiment, StreamRecordsParse)
{
    std::istringstream lines(sample_stream(tiny(), 50, 5, 1));
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const json j = json::parse(line);
        EXPECT_TRUE(j.contains("kind"));
        EXPECT_TRUE(j.contains("value"));
        ++n;
    }
    EXPECT_GE(n, 15u);
}

TEST(Experiment, PipelineSmokeAndReproducible)
{
    const auto c = tiny();
    const fs::path a = scratch("pipeline_a"), b = scratch("pipeline_b");
    EXPECT_EQ(run_pipeline(c, RunOptions{1, a}), kExitOk);
    EXPECT_EQ(run_pipeline(c, RunOptions{2, b}), kExitOk);
    for (const char* name : {"samples_L50.jsonl", "samples_L100.jsonl", "poisson_L100.jsonl", "cells_L50.jsonl",
                             "decay.csv", "ids.csv", "poisson_fit.json", "gap.json", "remainder.json"}) {
        ASSERT_TRUE(fs::exists(a / name)) << name;
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    }
    const json manifest = json::parse(slurp(a / "manifest.json"));
    EXPECT_EQ(manifest.at("version"), kVersion);
    EXPECT_EQ(manifest.at("sha256").at("samples_L50.jsonl"), file_digest(a / "samples_L50.jsonl"));

    const auto figures = render_report(a);
    EXPECT_TRUE(fs::exists(a / "summary.txt"));
    EXPECT_GE(figures.size(), 5u);
}

TEST(Experiment, DecayStageRejectsSmallGammaLog)
{
    auto c = tiny();
    c.gamma_log = 0.5;
    const fs::path dir = scratch("decay_gamma");
    EXPECT_THROW(run_decay_stage(c, RunOptions{1, dir}), ConfigError);
    try {
        run_pipeline(c, RunOptions{1, dir});
        FAIL() << "pipeline accepted gamma_log below the decay threshold";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "decay");
        EXPECT_EQ(e.exit_code(), kExitValidation);
    }
}

TEST(Experiment, ReportNeedsResults)
{
    EXPECT_THROW(render_report(scratch("empty")), ConfigError);
}

TEST(Experiment, FreeModelVerifySubset)
{
    auto c = tiny();
    c.disorder = uniform_disorder(-0.5, 0.5, 0.0);
    const auto results = verify_suite(c, 1, {8, 9});
    ASSERT_EQ(results.size(), 2u);
    EXPECT_EQ(results[0].id, 8);
    EXPECT_TRUE(results[0].pass) << results[0].detail;
    EXPECT_TRUE(results[1].pass) << results[1].detail;
    EXPECT_NE(format_criterion(results[0]).find("PASS"), std::string::npos);
}

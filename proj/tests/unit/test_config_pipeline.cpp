#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "landis/pipeline.hpp"

using namespace landis;
namespace fs = std::filesystem;

namespace {

std::vector<ConfigKey> small_schema() {
    return {{"a", "x", "1.5", ""}, {"a", "flag", "false", ""}, {"a", "list", "1,2", ""}, {"b", "name", "", ""}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("landis-test-" + name);
    fs::remove_all(p);
    return p;
}

Config small_run(const fs::path& dir) {
    Config c = pipeline_config();
    c.set("input.source", "harmonic-Rezn");
    c.set("geometry.grid", "129");
    c.set("puncture.epsilon", "0.3");
    c.set("output.dir", dir.string());
    return c;
}

}  // namespace

TEST(Config, DefaultsAndTypedAccess) {
    Config c(small_schema());
    EXPECT_DOUBLE_EQ(c.num("a.x"), 1.5);
    EXPECT_FALSE(c.flag("a.flag"));
    EXPECT_EQ(c.list("a.list"), (std::vector<double>{1.0, 2.0}));
    EXPECT_TRUE(c.empty("b.name"));
    EXPECT_THROW(c.integer("a.x"), ConfigError);
    EXPECT_THROW(c.str("a.missing"), ConfigError);
}

TEST(Config, ParsesSectionsAndComments) {
    Config c(small_schema());
    c.parse("# comment\n[a]\nx = 2.25 ; trailing\nflag = yes\n\n[b]\nname = disk\n");
    EXPECT_DOUBLE_EQ(c.num("a.x"), 2.25);
    EXPECT_TRUE(c.flag("a.flag"));
    EXPECT_EQ(c.str("b.name"), "disk");
    c.set_override("a.list = 3, 4 ,5");
    EXPECT_EQ(c.list("a.list"), (std::vector<double>{3.0, 4.0, 5.0}));
}

TEST(Config, ErrorsCarryLocation) {
    auto message = [](const std::string& text) {
        Config c(small_schema());
        try {
            c.parse(text, "run.ini");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("[a]\ny = 1\n").find("run.ini:2"), std::string::npos);
    EXPECT_NE(message("[a]\nx = 1\n[c]\n").find("run.ini:3"), std::string::npos);
    EXPECT_NE(message("x = 1\n").find("outside any section"), std::string::npos);
    EXPECT_NE(message("[a\n").find("unterminated"), std::string::npos);
    EXPECT_NE(message("[a]\nx 1\n").find("key = value"), std::string::npos);
    Config c(small_schema());
    EXPECT_THROW(c.set_override("a.x"), ConfigError);
    EXPECT_THROW(c.set_override("a.nope=1"), ConfigError);
    c.set("a.flag", "maybe");
    EXPECT_THROW(c.flag("a.flag"), ConfigError);
    c.set("a.list", "1,x");
    EXPECT_THROW(c.list("a.list"), ConfigError);
}

TEST(Config, PipelineSchemaHasUniqueKeys) {
    std::set<std::string> seen;
    for (const ConfigKey& k : pipeline_schema()) EXPECT_TRUE(seen.insert(k.section + "." + k.key).second) << k.key;
    Config c = pipeline_config();
    EXPECT_EQ(c.str("input.source"), "bessel-disk");
    EXPECT_DOUBLE_EQ(epsilon_rule(0.05, std::exp(4.0)), 0.025);
    EXPECT_THROW(epsilon_rule(0.05, 1.5), ConfigError);
}

TEST(Report, ChecksAndJson) {
    Report r;
    r.value("s", "a", 1.0, "one");
    EXPECT_TRUE(r.check("s", "le", 1.0, "<=", 1.0));
    EXPECT_FALSE(r.check("s", "ge", 0.5, ">=", 1.0));
    EXPECT_THROW(r.check("s", "bad", 0.0, "<", 1.0), ConfigError);
    r.stage("s", "ok");
    EXPECT_FALSE(r.all_pass());
    EXPECT_FALSE(r.has_error());
    EXPECT_DOUBLE_EQ(r.get("s", "a"), 1.0);
    EXPECT_THROW(r.get("s", "b"), ConfigError);
    ojson j = r.to_json();
    EXPECT_EQ(j["s"]["status"], "ok");
    EXPECT_EQ(j["s"]["values"]["a"]["formula"], "one");
    EXPECT_EQ(r.assertions_json().size(), 2u);
    EXPECT_EQ(json_num(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(fmt_num(0.1), "0.10000000000000001");
}

TEST(Svg, RenderIsDeterministic) {
    svg::LineChart c{"t", "x", "y", {{"s", {0, 1, 2}, {1, 4, 9}, true, false}}};
    EXPECT_EQ(svg::render(c), svg::render(c));
    EXPECT_NE(svg::render(c).find("<polyline"), std::string::npos);
    svg::Scatter s;
    s.extent = 2;
    s.disks = {Disk(0.5, 0.5, 0.1)};
    EXPECT_NE(svg::render(s).find("<circle"), std::string::npos);
}

TEST(Pipeline, SmallRunPasses) {
    fs::path dir = scratch("pass");
    PipelineResult r = run_pipeline(small_run(dir));
    EXPECT_EQ(r.exit_code, 0) << r.error_stage << ": " << r.error_message;
    EXPECT_NEAR(r.report.get("vanishing", "order"), 3.0, 1e-3);
    for (const char* f : {"report.json", "values.csv", "assertions.csv", "puncture.csv", "puncture.json", "poincare.csv",
                          "corrector.csv", "mori.csv", "decay.csv", "diagnostics.jsonl"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    ojson j = ojson::parse(slurp(dir / "report.json"));
    EXPECT_EQ(j["schema_version"], kSchemaVersion);
    EXPECT_EQ(j["status"], "pass");
    EXPECT_FALSE(j["config"].contains("output.dir"));
}

TEST(Pipeline, FailedAssertionGivesExitOne) {
    fs::path dir = scratch("fail");
    Config c = small_run(dir);
    c.set("three_balls.C_acc", "0");
    PipelineResult r = run_pipeline(c);
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_TRUE(r.error_stage.empty());
}

TEST(Pipeline, ResolutionErrorGivesExitTwo) {
    fs::path dir = scratch("coarse");
    Config c = small_run(dir);
    c.set("puncture.epsilon", "0.1");
    PipelineResult r = run_pipeline(c);
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_EQ(r.error_stage, "input");
    EXPECT_NE(r.error_message.find("ResolutionError"), std::string::npos);
    ojson j = ojson::parse(slurp(dir / "report.json"));
    EXPECT_EQ(j["status"], "error");
    EXPECT_EQ(j["error"]["stage"], "input");
}

TEST(Pipeline, ActOneOnlyStillReports) {
    fs::path dir = scratch("act1");
    Config c = small_run(dir);
    c.set("stages.act2", "false");
    PipelineResult r = run_pipeline(c);
    EXPECT_EQ(r.exit_code, 0);
    ojson j = r.report.to_json();
    EXPECT_EQ(j["corrector"]["status"], "skipped");
    EXPECT_EQ(j["poincare"]["status"], "ok");
    EXPECT_FALSE(j.contains("beltrami"));
}

TEST(Pipeline, StopAfterEndsTheRun) {
    fs::path dir = scratch("stop");
    Config c = small_run(dir);
    c.set("stages.stop_after", "puncture");
    PipelineResult r = run_pipeline(c);
    EXPECT_EQ(r.exit_code, 0);
    ojson j = r.report.to_json();
    EXPECT_EQ(j["puncture"]["status"], "ok");
    EXPECT_FALSE(j.contains("mask"));
    EXPECT_TRUE(fs::exists(dir / "report.json"));
}

TEST(Pipeline, FieldsAreWrittenOnRequest) {
    fs::path dir = scratch("fields");
    Config c = small_run(dir);
    c.set("output.fields", "true");
    c.set("stages.stop_after", "input");
    run_pipeline(c);
    ScalarField u = read_scalar_field((dir / "u.field").string());
    EXPECT_EQ(u.grid().nx(), 129);
}

TEST(Pipeline, RepeatedRunsAreByteIdentical) {
    fs::path a = scratch("det-a"), b = scratch("det-b");
    run_pipeline(small_run(a));
    run_pipeline(small_run(b));
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().extension() == ".jsonl") continue;
        fs::path other = b / e.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
        ++compared;
    }
    EXPECT_GE(compared, 5u);
}

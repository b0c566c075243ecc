#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <thinobs/harness.hpp>

using namespace thinobs;

namespace {

std::string config_error(const json& config) {
    try {
        run(config);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "expected ConfigError";
    return {};
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("thinobs_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Runs the CLI, returning its exit status and stdout.
std::pair<int, std::string> cli(const std::string& args) {
    const std::string cmd = std::string(THINOBS_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, {}};
    std::string out;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) out += buf.data();
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

} // namespace

TEST(Config, EmptyScenarioListGivesEmptyBundle) {
    const auto bundle = run(json::parse(R"({"scenarios": []})"));
    EXPECT_TRUE(bundle.scenarios.empty());
    EXPECT_TRUE(bundle.all_pass());
    EXPECT_EQ(bundle.manifest["tool"], kToolVersion);
    EXPECT_TRUE(run(json::object()).scenarios.empty());
}

TEST(Config, ErrorsNameTheOffendingKey) {
    EXPECT_NE(config_error(json::parse(R"({"scenarioz": []})")).find("scenarioz"), std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"scenarios": [{"kind": "count", "epss": [0.25]}]})")).find("scenarios[0].epss"),
              std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"scenarios": [{"kind": "count", "eps": "x"}]})")).find("scenarios[0].eps"),
              std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"scenarios": [{"kind": "teleport"}]})")).find("scenarios[0].kind"),
              std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"scenarios": [{"kind": "capacity", "mode": "hollow", "h": 0.125}]})"))
                  .find("scenarios[0].mode"),
              std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"schema_version": 7})")).find("schema_version"), std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"threads": 0})")).find("threads"), std::string::npos);
}

TEST(Config, ModuleErrorsKeepTheirCode) {
    try {
        run(json::parse(R"({"scenarios": [{"name": "bad", "kind": "solve-eps", "h": 0.0625, "eps": 0.0625}]})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ResolutionLost);
        EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
    }
}

TEST(Scenarios, BuiltinEquidist) {
    const auto bundle = run(json::parse(R"({"scenarios": [{"name": "equidist-sqrt23"}]})"));
    ASSERT_EQ(bundle.scenarios.size(), 1u);
    const auto& csv = bundle.scenarios[0].csv;
    EXPECT_EQ(csv.rfind("eps,t,window,N,A,ratio\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
}

TEST(Scenarios, CountMatchesEnumeration) {
    const auto bundle = run(json::parse(
        R"({"scenarios": [{"kind": "count", "nu": [0, 0, 1], "offset": 0.500000001, "eps": [0.25], "shape": "ball:0.5"}]})"));
    const auto& csv = bundle.scenarios[0].csv;
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    // N = 9 projected points, A = 9 intersections.
    EXPECT_NE(row.find(",9,9,"), std::string::npos) << row;
}

TEST(Scenarios, ManifestEchoesResolvedDefaults) {
    const auto bundle = run(json::parse(R"({"seed": 5, "scenarios": [{"kind": "discrepancy", "alpha": [0.5], "N": 10000}]})"));
    const auto& sc = bundle.manifest["scenarios"][0];
    EXPECT_EQ(bundle.manifest["seed"], 5);
    EXPECT_EQ(sc["N"], 10000);
    EXPECT_EQ(sc["kesten"], 0);
    EXPECT_NE(bundle.scenarios[0].csv.find("0.5,10000,"), std::string::npos);
}

TEST(Scenarios, RepeatRunsAreBitIdentical) {
    const auto config = json::parse(R"({"seed": 9, "scenarios": [
        {"name": "k", "kind": "discrepancy", "kesten": 5, "N": 2000},
        {"name": "c", "kind": "capacity", "shape": "ball:1", "h": 0.125, "mode": "solid"},
        {"name": "l", "kind": "solve-limit", "h": 0.0625, "capnu": 12.566}]})");
    const auto dir1 = scratch("repeat1"), dir2 = scratch("repeat2");
    write_bundle(run(config), dir1);
    write_bundle(run(config), dir2);
    for (const char* file : {"k.csv", "c.csv", "l.csv", "l.u_limit.field", "manifest.json"})
        EXPECT_EQ(slurp(dir1 / file), slurp(dir2 / file)) << file;
    const auto manifest = json::parse(slurp(dir1 / "manifest.json"));
    EXPECT_EQ(manifest["tool"], kToolVersion);
    EXPECT_EQ(manifest["scenarios"][1]["mode"], "solid");
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST(Scenarios, SeedChangesRandomDraws) {
    auto config = json::parse(R"({"scenarios": [{"kind": "discrepancy", "kesten": 3, "N": 100}]})");
    config["seed"] = 1;
    const auto a = run(config).scenarios[0].csv;
    config["seed"] = 2;
    EXPECT_NE(a, run(config).scenarios[0].csv);
}

TEST(Scenarios, AcceptanceSuiteCounting) {
    const auto bundle = run(json::parse(R"({"scenarios": [{"kind": "accept", "suite": "counting"}]})"));
    ASSERT_EQ(bundle.scenarios[0].verdicts.size(), 1u);
    EXPECT_EQ(bundle.scenarios[0].verdicts[0].id, 4);
    EXPECT_TRUE(bundle.all_pass());
}

TEST(Scenarios, QuickFlagMarksVerdictsIndicative) {
    const auto bundle = run(json::parse(R"({"quick": true, "scenarios": [{"kind": "accept", "suite": "discrepancy"}]})"));
    ASSERT_EQ(bundle.scenarios[0].verdicts.size(), 2u);
    // Only criteria whose sizes shrink under --quick are marked.
    for (const auto& v : bundle.scenarios[0].verdicts) EXPECT_EQ(v.indicative, v.id == 5) << v.id;
}

TEST(Cli, VersionAndHelp) {
    const auto [code, out] = cli("--version");
    EXPECT_EQ(code, 0);
    EXPECT_NE(out.find(kToolVersion), std::string::npos);
    EXPECT_EQ(cli("--help").first, 0);
}

TEST(Cli, SubcommandWritesCsvToStdout) {
    const auto [code, out] = cli("discrepancy --alpha 0.5 --N 10000");
    EXPECT_EQ(code, 0);
    EXPECT_EQ(out.rfind("alpha,N,star,extreme,kesten_ratio\n", 0), 0u);
    EXPECT_NE(out.find(",244.499"), std::string::npos) << out;
}

TEST(Cli, ConfigFileAndOutputDirectory) {
    const auto dir = scratch("cli");
    std::filesystem::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.json");
        cfg << R"({
  // comments are allowed
  "schema_version": 1,
  "scenarios": [{"name": "eq", "kind": "equidist", "alpha": [1.4142135623730951], "eps": [0.01], "t": [0.1]}]
})";
    }
    const auto [code, out] = cli("--config " + (dir / "run.json").string() + " --out " + (dir / "out").string());
    EXPECT_EQ(code, 0) << out;
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "eq.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "manifest.json"));
    std::filesystem::remove_all(dir);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli_bad");
    std::filesystem::create_directories(dir);
    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"scenarios": [{"kind": "count", "bogus": 1}]})";
    }
    EXPECT_EQ(cli("--config " + (dir / "bad.json").string()).first, 3);
    EXPECT_EQ(cli("solve-eps --h 0.0625 --eps 0.0625").first, 2);
    EXPECT_EQ(cli("accept --suite counting --check").first, 0);
    std::filesystem::remove_all(dir);
}

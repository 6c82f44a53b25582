#include "featrisk_tools/config.hpp"
#include "featrisk_tools/experiments.hpp"
#include "featrisk_tools/output.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace featrisk;
using namespace featrisk::tools;
using nlohmann::json;

namespace {

json minimal(const std::string& kind) {
    return {{"kind", kind}, {"instance", {{"p", 10}, {"q", 3}}}, {"grid", {{"values", {4, 8}}}}};
}

std::filesystem::path temp_dir(const std::string& tag) {
    return std::filesystem::temp_directory_path() / ("featrisk-" + tag + "-" + std::to_string(std::random_device{}()));
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Config, Defaults) {
    const ExperimentConfig c = parse_config(minimal("risk-curve"));
    EXPECT_EQ(c.kind, ExperimentKind::risk_curve);
    EXPECT_EQ(c.replicates, 50);
    EXPECT_EQ(c.instance.covariance.type, "ar1");
    ASSERT_TRUE(c.instance.task.snr.has_value());
    EXPECT_EQ(*c.instance.task.snr, 10.0);
    ASSERT_EQ(c.predictors.size(), 1u);
    EXPECT_EQ(c.predictors[0].name, "RP");
    EXPECT_EQ(c.grid.values, (std::vector<double>{4, 8}));
}

TEST(Config, RejectsUnknownKeysAtAnyDepth) {
    json top = minimal("risk-curve");
    top["colour"] = 1;
    EXPECT_THROW(parse_config(top), ConfigError);
    json nested = minimal("risk-curve");
    nested["instance"]["covariance"] = {{"type", "ar1"}, {"rhoo", 0.3}};
    try {
        parse_config(nested);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("rhoo"), std::string::npos);
    }
}

TEST(Config, RejectsBadValues) {
    json a = minimal("risk-curve");
    a["replicates"] = 1;
    EXPECT_THROW(parse_config(a), ConfigError);
    json b = minimal("risk-curve");
    b["instance"]["covariance"] = {{"rho", 1.0}};
    EXPECT_THROW(parse_config(b), ConfigError);
    json c = minimal("risk-curve");
    c["grid"]["param"] = "q";
    EXPECT_THROW(parse_config(c), ConfigError);
    json d = minimal("nonsense");
    EXPECT_THROW(parse_config(d), ConfigError);
    json e = minimal("risk-curve");
    e["predictors"] = {{{"type", "ridgeless"}, {"lambda", {{"alpha", 1.0}}}}};
    EXPECT_THROW(parse_config(e), ConfigError);
    json f = minimal("risk-curve");
    f["seed"] = -3;
    EXPECT_THROW(parse_config(f), ConfigError);
}

TEST(Config, NonSampleGridNeedsN) {
    json a = minimal("ablation");
    a["grid"]["param"] = "snr";
    EXPECT_THROW(parse_config(a), ConfigError);
    a["n"] = 5;
    EXPECT_NO_THROW(parse_config(a));
}

TEST(Config, LogGridRoundsAndDeduplicates) {
    json a = minimal("risk-curve");
    a["grid"] = {{"log", {1, 4}}, {"points", 7}};
    const ExperimentConfig c = parse_config(a);
    EXPECT_EQ(c.grid.values, (std::vector<double>{1, 2, 3, 4}));
}

TEST(Config, SnrNullSwitchesCalibrationOff) {
    json a = minimal("risk-curve");
    a["instance"]["task"] = {{"snr", nullptr}, {"scale", 2.0}};
    const ExperimentConfig c = parse_config(a);
    EXPECT_FALSE(c.instance.task.snr.has_value());
    EXPECT_EQ(c.instance.task.scale, 2.0);
}

TEST(Config, UpstreamGridMustExceedP) {
    json a = {{"kind", "upstream"}, {"n", 4}, {"instance", {{"p", 10}, {"q", 3}}}, {"upstream", {{"n_pre", {{"values", {8, 40}}}}}}};
    EXPECT_THROW(parse_config(a), ConfigError);
    a["upstream"]["n_pre"]["values"] = {20, 40};
    EXPECT_EQ(parse_config(a).upstream.n_pre, (std::vector<int>{20, 40}));
}

TEST(Config, YamlAndJsonAgree) {
    const auto dir = temp_dir("cfg");
    std::filesystem::create_directories(dir);
    {
        std::ofstream y(dir / "a.yaml");
        y << "kind: spectrum\nseed: 9\ninstance: {p: 12, q: 4}\ngrid:\n  param: n\n  values: [2, 3]\n";
        std::ofstream j(dir / "a.json");
        j << R"({"kind": "spectrum", "seed": 9, "instance": {"p": 12, "q": 4}, "grid": {"param": "n", "values": [2, 3]}})";
    }
    EXPECT_EQ(to_json(parse_config(load_document(dir / "a.yaml"))), to_json(parse_config(load_document(dir / "a.json"))));
    EXPECT_THROW(load_document(dir / "missing.yaml"), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Output, FormatDouble) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1e-300), "1e-300");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Output, CsvQuoting) {
    CsvTable t({"a", "b,c"});
    t.add({1.5, std::string("say \"hi\"")});
    t.add({static_cast<long long>(7), std::string("plain")});
    EXPECT_EQ(t.str(), "a,\"b,c\"\r\n1.5,\"say \"\"hi\"\"\"\r\n7,plain\r\n");
}

TEST(Output, NumberOrNull) {
    EXPECT_TRUE(number_or_null(std::nan("")).is_null());
    EXPECT_EQ(number_or_null(2.5), json(2.5));
}

TEST(Experiments, CommandKinds) {
    const auto k = kinds_for_command("asymptotics");
    EXPECT_EQ(k.size(), 2u);
    EXPECT_TRUE(kinds_for_command("no-such-command").empty());
}

TEST(Experiments, RiskCurveRowsAndStatus) {
    json j = minimal("risk-curve");
    j["replicates"] = 4;
    j["grid"]["values"] = {3, 10, 20};  // n = p sits on the boundary
    const ExperimentConfig c = parse_config(j);
    const auto dir = temp_dir("rc");
    const RunReport rep = run_experiment(c, {dir, 1, "simulate"});
    EXPECT_EQ(rep.rows, 3u);
    EXPECT_EQ(rep.failed_rows, 1u);
    const std::string csv = read_all(dir / "results.csv");
    EXPECT_NE(csv.find("regime_"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
    std::filesystem::remove_all(dir);
}

TEST(Experiments, SameSeedSameBytes) {
    json j = {{"kind", "spectrum"}, {"seed", 3}, {"instance", {{"p", 14}, {"q", 4}}}, {"grid", {{"values", {2, 5}}}}};
    const ExperimentConfig c = parse_config(j);
    const auto a = temp_dir("a"), b = temp_dir("b");
    run_experiment(c, {a, 1, "spectrum-opt"});
    run_experiment(c, {b, 3, "spectrum-opt"});
    for (const char* f : {"results.csv", "solutions.csv", "summary.json", "manifest.json"}) {
        EXPECT_EQ(read_all(a / f), read_all(b / f)) << f;
    }
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST(Config, ShippedExamplesParse) {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(FEATRISK_CONFIG_DIR)) {
        SCOPED_TRACE(entry.path().string());
        const ExperimentConfig c = parse_config(load_document(entry.path()));
        // the canonical echo is itself a valid config
        EXPECT_EQ(to_json(parse_config(to_json(c))), to_json(c));
        ++count;
    }
    EXPECT_GE(count, 7);
}

#include <hodgelab/report.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace hodgelab;

namespace {

const std::filesystem::path source_dir{HODGELAB_SOURCE_DIR};

json minimal()
{
    return json::parse(R"({
      "schema_version": 1,
      "name": "t",
      "manifold": {"factors": [{"kind": "line", "c": 1, "L": 8.0, "N": 32}]}
    })");
}

json load_json(const std::filesystem::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::filesystem::path scratch(const std::string& name)
{
    auto d = std::filesystem::temp_directory_path() / ("hodgelab_test_cli_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(HODGELAB_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Every key of `cfg` is declared by the schema node (recursing into objects
/// and the factor variants).
void expect_declared(const json& cfg, const json& schema, const std::string& where)
{
    if (schema.contains("oneOf")) {
        bool any = false;
        for (const auto& alt : schema.at("oneOf")) {
            bool ok = true;
            for (const auto& [key, v] : cfg.items()) {
                (void)v;
                if (!alt.at("properties").contains(key)) ok = false;
            }
            if (ok && alt.at("properties").at("kind").at("const") == cfg.at("kind")) any = true;
        }
        EXPECT_TRUE(any) << where;
        return;
    }
    if (!cfg.is_object()) return;
    ASSERT_TRUE(schema.contains("properties")) << where;
    EXPECT_FALSE(schema.value("additionalProperties", true)) << where;
    for (const auto& [key, v] : cfg.items()) {
        ASSERT_TRUE(schema.at("properties").contains(key)) << where << "." << key;
        const json& sub = schema.at("properties").at(key);
        if (v.is_object()) expect_declared(v, sub, where + "." + key);
        if (v.is_array() && sub.contains("items"))
            for (const auto& e : v) expect_declared(e, sub.at("items"), where + "." + key + "[]");
    }
}

} // namespace

TEST(ParseConfig, MinimalDefaults)
{
    ExperimentConfig c = parse_config(minimal());
    EXPECT_EQ(c.name, "t");
    EXPECT_EQ(c.degrees, (std::vector<int>{0, 1}));
    EXPECT_EQ(c.mode(), BoundaryMode::relative);
    EXPECT_EQ(c.op, OperatorKind::laplacian_mu);
    EXPECT_FALSE(c.oscillator.has_value());
}

TEST(ParseConfig, RejectsUnknownKeys)
{
    for (const char* path : {"/bogus", "/manifold/bogus", "/manifold/factors/0/bogus", "/solver/bogus",
                             "/maps/bogus", "/diagnostics/bogus"}) {
        json j = minimal();
        j[json::json_pointer(path)] = 1;
        EXPECT_THROW(parse_config(j), ConfigError) << path;
    }
}

TEST(ParseConfig, SchemaVersion)
{
    json j = minimal();
    j["schema_version"] = 2;
    EXPECT_THROW(parse_config(j), ConfigError);
    j.erase("schema_version");
    EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(ParseConfig, InvalidModels)
{
    json mixed = minimal();
    mixed["manifold"]["factors"].push_back({{"kind", "line"}, {"c", -1}, {"L", 8.0}, {"N", 32}});
    EXPECT_THROW(parse_config(mixed), ConfigError);

    json coarse = minimal();
    coarse["manifold"]["factors"][0]["N"] = 3;
    EXPECT_THROW(parse_config(coarse), ConfigError);

    json kind = minimal();
    kind["manifold"]["factors"][0]["kind"] = "sphere";
    EXPECT_THROW(parse_config(kind), ConfigError);

    json mode = minimal();
    mode["manifold"]["boundary_mode"] = "mixed";
    EXPECT_THROW(parse_config(mode), ConfigError);

    json forced = minimal();
    forced["manifold"]["boundary_mode"] = "absolute";
    EXPECT_EQ(parse_config(forced).mode(), BoundaryMode::absolute);
}

TEST(ParseConfig, Degrees)
{
    json j = minimal();
    j["degrees"] = {2};
    EXPECT_THROW(parse_config(j), ConfigError);
    j["degrees"] = {-1};
    EXPECT_THROW(parse_config(j), ConfigError);
    j["degrees"] = json::array();
    EXPECT_THROW(parse_config(j), ConfigError);
    j["degrees"] = {1, 0, 1};
    EXPECT_EQ(parse_config(j).degrees, (std::vector<int>{0, 1}));
}

TEST(ParseConfig, SectionValidation)
{
    json sweep = minimal();
    sweep["maps"] = {{"R_sweep", {1.0, 0.5}}};
    EXPECT_THROW(parse_config(sweep), ConfigError);

    json route = minimal();
    route["solver"] = {{"route", "magic"}};
    EXPECT_THROW(parse_config(route), ConfigError);

    json osc = minimal();
    osc["manifold"]["factors"].push_back({{"kind", "circle"}, {"circumference", 1.0}, {"N", 8}});
    osc["oscillator"] = json::object();
    EXPECT_THROW(parse_config(osc), ConfigError);

    json res = minimal();
    res["oscillator"] = {{"resolutions", {256, 128}}};
    EXPECT_THROW(parse_config(res), ConfigError);

    json split = minimal();
    split["kunneth"] = {{"split", 1}};
    EXPECT_THROW(parse_config(split), ConfigError);

    json type = minimal();
    type["solver"] = {{"k", "six"}};
    EXPECT_THROW(parse_config(type), ConfigError);
}

TEST(ParseConfig, ShippedConfigs)
{
    const json schema = load_json(source_dir / "schemas" / "config.schema.json");
    EXPECT_EQ(schema.at("version"), kConfigSchemaVersion);
    int count = 0;
    for (const auto& e : std::filesystem::directory_iterator(source_dir / "configs")) {
        if (e.path().extension() != ".json") continue;
        ++count;
        const json j = load_json(e.path());
        expect_declared(j, schema, e.path().filename().string());
        if (e.path().stem() == "neg_mixed_signs") EXPECT_THROW(load_config(e.path().string()), ConfigError);
        else EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    }
    EXPECT_GE(count, 10);
    EXPECT_THROW(load_config((source_dir / "configs" / "missing.json").string()), ConfigError);
}

TEST(Report, ByteIdenticalForIdenticalConfigs)
{
    ExperimentConfig c = load_config((source_dir / "configs" / "r1_growth.json").string());
    ReportBundle a = run_pipeline("spectrum", c);
    ReportBundle b = run_pipeline("spectrum", c);
    EXPECT_EQ(report_json(a).dump(2), report_json(b).dump(2));
    EXPECT_EQ(spectrum_csv(a), spectrum_csv(b));
    EXPECT_EQ(verdicts_csv(a), verdicts_csv(b));

    auto da = scratch("a"), db = scratch("b");
    write_report(a, da, "json");
    write_report(b, db, "json");
    EXPECT_EQ(slurp(da / "spectrum.json"), slurp(db / "spectrum.json"));
    // timing lives in the sidecar only
    EXPECT_EQ(slurp(da / "spectrum.json").find("wall_seconds"), std::string::npos);
    EXPECT_TRUE(load_json(da / "spectrum.timing.json").contains("wall_seconds"));
}

TEST(Report, Fields)
{
    ExperimentConfig c = load_config((source_dir / "configs" / "r1_growth.json").string());
    json j = report_json(run_pipeline("spectrum", c));
    EXPECT_EQ(j.at("schema_version"), kReportSchemaVersion);
    EXPECT_EQ(j.at("pipeline"), "spectrum");
    EXPECT_EQ(j.at("boundary_mode"), "relative");
    EXPECT_EQ(j.at("seed"), c.solver.seed);
    EXPECT_EQ(j.at("summary").at("verdicts"), j.at("verdicts").size());
    EXPECT_THROW(run_pipeline("nope", c), ConfigError);
}

TEST(Report, CsvHeadersAndQuoting)
{
    ExperimentConfig c = load_config((source_dir / "configs" / "r1_growth.json").string());
    ReportBundle r = run_pipeline("spectrum", c);
    const std::string spect = spectrum_csv(r), verd = verdicts_csv(r);
    EXPECT_EQ(spect.substr(0, spect.find('\n')), "model,degree,index,eigenvalue,residual");
    EXPECT_EQ(verd.substr(0, verd.find('\n')), "pipeline,verdict,measured,threshold,comparison,pass,oracle");
    EXPECT_EQ(static_cast<std::size_t>(std::count(spect.begin(), spect.end(), '\n')), r.spectrum_rows.size() + 1);

    // header columns match the schema files
    for (auto [file, text] : {std::pair{"spectrum.csv.json", spect}, std::pair{"verdicts.csv.json", verd}}) {
        std::string header;
        const json schema = load_json(source_dir / "schemas" / file);
        for (const auto& col : schema.at("columns"))
            header += (header.empty() ? "" : ",") + col.at("name").get<std::string>();
        EXPECT_EQ(text.substr(0, text.find('\n')), header) << file;
    }
    EXPECT_EQ(detail::csv_field("plain"), "plain");
    EXPECT_EQ(detail::csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(detail::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Report, EmptySectionsOmitted)
{
    ReportBundle r;
    r.pipeline = "x";
    json j = report_json(r);
    EXPECT_FALSE(j.contains("sections"));
    EXPECT_EQ(j.at("summary").at("status"), "PASS");
    r.add("v", 1, 0, "<", false, "o");
    EXPECT_EQ(report_json(r).at("summary").at("status"), "FAIL");
    EXPECT_EQ(verdicts_csv(r), "pipeline,verdict,measured,threshold,comparison,pass,oracle\nx,v,1,0,<,FAIL,o\n");
}

TEST(Cli, ExitCodes)
{
    const auto out = scratch("exit");
    const auto cfg = [](const char* name) { return (source_dir / "configs" / name).string(); };
    const std::string o = " --out " + out.string();
    EXPECT_EQ(run_cli("hodge-verify --config " + cfg("r1_growth.json") + o), 0);
    EXPECT_EQ(run_cli("hodge-verify --config " + cfg("neg_forced_absolute.json") + o), 1);
    EXPECT_EQ(run_cli("hodge-verify --config " + cfg("neg_mixed_signs.json") + o), 2);
    EXPECT_EQ(run_cli("hodge-verify --config " + cfg("missing.json") + o), 2);
    EXPECT_EQ(run_cli("no-such-pipeline --config " + cfg("r1_growth.json") + o), 2);
    EXPECT_EQ(run_cli("spectrum --config " + cfg("r1_growth.json") + o + " --format csv"), 0);
    EXPECT_TRUE(std::filesystem::exists(out / "spectrum_verdicts.csv"));
    EXPECT_TRUE(std::filesystem::exists(out / "spectrum_spectrum.csv"));
    EXPECT_TRUE(std::filesystem::exists(out / "hodge-verify.json"));
    EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, SeedOverrideIsRecorded)
{
    const auto out = scratch("seed");
    ASSERT_EQ(run_cli("spectrum --config " + (source_dir / "configs" / "r1_growth.json").string() + " --out " +
                      out.string() + " --seed 7"),
              0);
    EXPECT_EQ(load_json(out / "spectrum.json").at("seed"), 7);
}

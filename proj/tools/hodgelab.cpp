// hodgelab: run one verification pipeline from a JSON config.
//
//   hodgelab <pipeline> --config <path> [--out <dir>] [--format json|csv] [--seed <u64>]
//
// Exit status: 0 all verdicts PASS, 1 some verdict FAIL, 2 config or solver error.

#include <hodgelab/report.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

int fail(const std::string& kind, const std::string& message)
{
    hodgelab::json e{{"error", kind}, {"message", message}};
    std::cerr << e.dump() << "\n";
    return 2;
}

void apply_thread_override()
{
    const char* env = std::getenv("HODGELAB_NUM_THREADS");
    if (!env) return;
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (*env == '\0' || *end != '\0' || n < 1)
        throw hodgelab::ConfigError("HODGELAB_NUM_THREADS must be a positive integer");
    Eigen::setNbThreads(static_cast<int>(n));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Weighted Hodge theory verification pipelines"};
    std::string pipeline, config, out = ".", format = "json";
    std::uint64_t seed = 0;
    app.add_option("pipeline", pipeline, "pipeline name")
        ->required()
        ->check(CLI::IsMember(hodgelab::pipeline_names()));
    app.add_option("--config", config, "experiment config (JSON)")->required();
    app.add_option("--out", out, "output directory");
    app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));
    auto* seed_opt = app.add_option("--seed", seed, "override solver seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        apply_thread_override();
        hodgelab::ExperimentConfig cfg = hodgelab::load_config(config);
        if (*seed_opt) cfg.solver.seed = seed;
        hodgelab::ReportBundle r = hodgelab::run_pipeline(pipeline, cfg);
        auto files = hodgelab::write_report(r, out, format);
        for (const auto& v : r.verdicts)
            std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << "  measured=" << v.measured.dump()
                      << " threshold=" << v.threshold.dump() << "\n";
        std::cout << r.pipeline << ": " << (r.all_pass() ? "PASS" : "FAIL") << " (" << r.failed() << " of "
                  << r.verdicts.size() << " failed); report " << files.front().string() << "\n";
        return r.all_pass() ? 0 : 1;
    } catch (const hodgelab::ConfigError& e) {
        return fail("config", e.what());
    } catch (const hodgelab::InvalidSpecError& e) {
        return fail("spec", e.what());
    } catch (const hodgelab::SolverError& e) {
        return fail("solver", e.what());
    } catch (const hodgelab::SpectralGapError& e) {
        return fail("spectral_gap", e.what());
    } catch (const hodgelab::Error& e) {
        return fail("error", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
}

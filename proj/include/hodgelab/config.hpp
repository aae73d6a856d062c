#pragma once

// Experiment configuration: a single JSON document (schemas/config.schema.json).
// Parsing is strict: unknown keys and out-of-range values are ConfigErrors.

#include <hodgelab/spectral.hpp>

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>

namespace hodgelab {

using json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;

enum class OperatorKind { laplacian_mu, laplacian_h, laplacian_h_direct };

inline const char* to_string(OperatorKind k)
{
    switch (k) {
    case OperatorKind::laplacian_mu: return "laplacian_mu";
    case OperatorKind::laplacian_h: return "laplacian_h";
    case OperatorKind::laplacian_h_direct: return "laplacian_h_direct";
    }
    return "?";
}

struct MapsOptions {
    double R = 4.0;
    std::vector<double> R_sweep{0.5, 1.0, 2.0, 3.0, 4.0};
    double tolerance = 1e-6;      ///< bound on |Pi(nu_i) - w^i|_mu
    double collar = 0.5;          ///< collar width for the EZ profile
};

struct DiagnosticsOptions {
    bool seminorms = true;
    bool garding = true;
    bool ladder = true;
    bool decay = true;
    bool envelope = true;
    int refine = 2;               ///< refinement factor for the stability study
    double stability = 0.05;      ///< relative change allowed across one refinement
    double garding_max = 2.0;
    double envelope_from = 2.0;
    double envelope_to = 6.0;
    double envelope_a = 1.0;      ///< g(x) - g(x0) <= a + b log(x/x0)
    double envelope_b = 3.0;
};

struct KunnethOptions {
    int split = 1;                ///< first `split` factors form the left model
    int count = 5;                ///< nonzero eigenvalues compared per degree
    double rel_tol = 0.01;
};

struct DualityOptions {
    int count = 5;
    double tol_factor = 2.0;      ///< agreement bound in units of the solver tolerance
};

struct OscillatorOptions {
    std::vector<int> resolutions{128, 256, 512};
    int degree = 0;
    int eigenvalues = 4;
    double rel_tol_finest = 0.01;
    double order_min = 1.7;
    double order_max = 2.3;
};

struct WeitzenbockOptions {
    std::vector<int> resolutions{128, 256, 512};
    int probes = 4;
    double abs_max_finest = 1e-2;
    double order_min = 1.7;
    double order_max = 2.3;
};

struct BettiOptions {
    Index max_cells = 600000;
    std::size_t max_entries = 40000000;
    bool coarsen = true;
    int probes = 8;               ///< random probes for the adjointness check
    double adjoint_tol = 1e-12;
};

struct ExperimentConfig {
    std::string name = "unnamed";
    ManifoldSpec manifold;
    std::optional<BoundaryMode> forced_mode;
    std::vector<int> degrees;
    EigenSolveConfig solver;
    OperatorKind op = OperatorKind::laplacian_mu;
    MapsOptions maps;
    DiagnosticsOptions diagnostics;
    KunnethOptions kunneth;
    DualityOptions duality;
    std::optional<OscillatorOptions> oscillator;
    std::optional<WeitzenbockOptions> weitzenbock;
    BettiOptions betti;

    BoundaryMode mode() const { return forced_mode ? *forced_mode : default_boundary_mode(manifold); }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

inline double positive(double v, const std::string& what)
{
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive");
    return v;
}

inline FactorSpec parse_factor(const json& f, const std::string& where)
{
    if (!f.is_object() || !f.contains("kind")) throw ConfigError(where + " needs a 'kind'");
    const std::string kind = get_or<std::string>(f, "kind", "", where);
    if (!f.contains("N")) throw ConfigError(where + ".N is required");
    const int n = get_or<int>(f, "N", 0, where);
    if (kind == "line") {
        check_keys(f, {"kind", "c", "L", "N"}, where);
        if (!f.contains("c") || !f.contains("L")) throw ConfigError(where + ": a line needs c and L");
        return FactorSpec::line(get_or<double>(f, "c", 0.0, where), get_or<double>(f, "L", 0.0, where), n);
    }
    if (kind == "circle") {
        check_keys(f, {"kind", "circumference", "N", "offset"}, where);
        if (!f.contains("circumference")) throw ConfigError(where + ": a circle needs a circumference");
        return FactorSpec::circle(get_or<double>(f, "circumference", 0.0, where), n,
                                  get_or<double>(f, "offset", 0.0, where));
    }
    throw ConfigError(where + ".kind must be 'line' or 'circle'");
}

inline std::vector<int> resolution_list(const json& j, const char* key, std::vector<int> fallback,
                                        const std::string& where)
{
    auto v = get_or<std::vector<int>>(j, key, fallback, where);
    if (v.size() < 2) throw ConfigError(where + "." + key + " needs at least two resolutions");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 4) throw ConfigError(where + "." + key + " entries must be >= 4");
        if (i && v[i] <= v[i - 1]) throw ConfigError(where + "." + key + " must be increasing");
    }
    return v;
}

} // namespace detail

inline ExperimentConfig parse_config(const json& j)
{
    using namespace detail;
    check_keys(j, {"schema_version", "name", "manifold", "degrees", "solver", "maps", "diagnostics", "kunneth",
                   "duality", "oscillator", "weitzenbock", "betti"},
               "config");
    const int version = get_or<int>(j, "schema_version", 0, "config");
    if (version != kConfigSchemaVersion)
        throw ConfigError("config.schema_version must be " + std::to_string(kConfigSchemaVersion));
    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", c.name, "config");

    if (!j.contains("manifold")) throw ConfigError("config.manifold is required");
    const json& m = j.at("manifold");
    check_keys(m, {"factors", "boundary_mode"}, "manifold");
    if (!m.contains("factors") || !m.at("factors").is_array() || m.at("factors").empty())
        throw ConfigError("manifold.factors must be a non-empty array");
    std::vector<FactorSpec> fs;
    for (std::size_t i = 0; i < m.at("factors").size(); ++i)
        fs.push_back(parse_factor(m.at("factors")[i], "manifold.factors[" + std::to_string(i) + "]"));
    try {
        c.manifold = ManifoldSpec(std::move(fs));
    } catch (const InvalidSpecError& e) {
        throw ConfigError(std::string("manifold: ") + e.what());
    }
    const std::string mode = get_or<std::string>(m, "boundary_mode", "auto", "manifold");
    if (mode == "relative") c.forced_mode = BoundaryMode::relative;
    else if (mode == "absolute") c.forced_mode = BoundaryMode::absolute;
    else if (mode != "auto") throw ConfigError("manifold.boundary_mode must be auto, relative or absolute");
    try {
        (void)c.mode();
    } catch (const InvalidSpecError& e) {
        throw ConfigError(std::string("manifold: ") + e.what());
    }

    const int n = c.manifold.dimension();
    if (j.contains("degrees")) {
        c.degrees = get_or<std::vector<int>>(j, "degrees", {}, "config");
        if (c.degrees.empty()) throw ConfigError("config.degrees must not be empty");
        for (int p : c.degrees)
            if (p < 0 || p > n)
                throw ConfigError("degree " + std::to_string(p) + " outside [0, " + std::to_string(n) + "]");
        std::sort(c.degrees.begin(), c.degrees.end());
        c.degrees.erase(std::unique(c.degrees.begin(), c.degrees.end()), c.degrees.end());
    } else {
        for (int p = 0; p <= n; ++p) c.degrees.push_back(p);
    }

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        check_keys(s, {"k", "tolerance", "max_iterations", "tau_abs", "tau_gap", "seed", "dense_limit", "route",
                       "operator", "shift"},
                   "solver");
        auto& e = c.solver;
        e.k = get_or<int>(s, "k", e.k, "solver");
        e.tolerance = get_or<double>(s, "tolerance", e.tolerance, "solver");
        e.max_iterations = get_or<int>(s, "max_iterations", e.max_iterations, "solver");
        e.tau_abs = get_or<double>(s, "tau_abs", e.tau_abs, "solver");
        e.tau_gap = get_or<double>(s, "tau_gap", e.tau_gap, "solver");
        e.seed = get_or<std::uint64_t>(s, "seed", e.seed, "solver");
        e.dense_limit = get_or<Index>(s, "dense_limit", e.dense_limit, "solver");
        e.shift = get_or<double>(s, "shift", e.shift, "solver");
        const std::string route = get_or<std::string>(s, "route", "auto", "solver");
        if (route == "auto") e.route = SolverRoute::automatic;
        else if (route == "dense") e.route = SolverRoute::dense;
        else if (route == "iterative") e.route = SolverRoute::iterative;
        else throw ConfigError("solver.route must be auto, dense or iterative");
        const std::string op = get_or<std::string>(s, "operator", "laplacian_mu", "solver");
        if (op == "laplacian_mu") c.op = OperatorKind::laplacian_mu;
        else if (op == "laplacian_h") c.op = OperatorKind::laplacian_h;
        else if (op == "laplacian_h_direct") c.op = OperatorKind::laplacian_h_direct;
        else throw ConfigError("solver.operator must be laplacian_mu, laplacian_h or laplacian_h_direct");
        try {
            e.validate();
        } catch (const InvalidSpecError& err) {
            throw ConfigError(std::string("solver: ") + err.what());
        }
    }

    if (j.contains("maps")) {
        const json& s = j.at("maps");
        check_keys(s, {"R", "R_sweep", "tolerance", "collar"}, "maps");
        auto& o = c.maps;
        o.R = get_or<double>(s, "R", o.R, "maps");
        o.R_sweep = get_or<std::vector<double>>(s, "R_sweep", o.R_sweep, "maps");
        o.tolerance = positive(get_or<double>(s, "tolerance", o.tolerance, "maps"), "maps.tolerance");
        o.collar = positive(get_or<double>(s, "collar", o.collar, "maps"), "maps.collar");
        if (!(o.R >= 0.0)) throw ConfigError("maps.R must be >= 0");
        for (std::size_t i = 0; i < o.R_sweep.size(); ++i)
            if (!(o.R_sweep[i] >= 0.0) || (i && o.R_sweep[i] <= o.R_sweep[i - 1]))
                throw ConfigError("maps.R_sweep must be increasing and nonnegative");
    }

    if (j.contains("diagnostics")) {
        const json& s = j.at("diagnostics");
        check_keys(s, {"seminorms", "garding", "ladder", "decay", "envelope", "refine", "stability", "garding_max",
                       "envelope_from", "envelope_to", "envelope_a", "envelope_b"},
                   "diagnostics");
        auto& o = c.diagnostics;
        o.seminorms = get_or<bool>(s, "seminorms", o.seminorms, "diagnostics");
        o.garding = get_or<bool>(s, "garding", o.garding, "diagnostics");
        o.ladder = get_or<bool>(s, "ladder", o.ladder, "diagnostics");
        o.decay = get_or<bool>(s, "decay", o.decay, "diagnostics");
        o.envelope = get_or<bool>(s, "envelope", o.envelope, "diagnostics");
        o.refine = get_or<int>(s, "refine", o.refine, "diagnostics");
        o.stability = positive(get_or<double>(s, "stability", o.stability, "diagnostics"), "diagnostics.stability");
        o.garding_max = positive(get_or<double>(s, "garding_max", o.garding_max, "diagnostics"),
                                 "diagnostics.garding_max");
        o.envelope_from = get_or<double>(s, "envelope_from", o.envelope_from, "diagnostics");
        o.envelope_to = get_or<double>(s, "envelope_to", o.envelope_to, "diagnostics");
        o.envelope_a = get_or<double>(s, "envelope_a", o.envelope_a, "diagnostics");
        o.envelope_b = get_or<double>(s, "envelope_b", o.envelope_b, "diagnostics");
        if (o.refine < 2) throw ConfigError("diagnostics.refine must be >= 2");
        if (!(o.envelope_to >= o.envelope_from + 2.0))
            throw ConfigError("diagnostics envelope interval needs at least two unit shells");
    }

    if (j.contains("kunneth")) {
        const json& s = j.at("kunneth");
        check_keys(s, {"split", "count", "rel_tol"}, "kunneth");
        auto& o = c.kunneth;
        o.split = get_or<int>(s, "split", o.split, "kunneth");
        o.count = get_or<int>(s, "count", o.count, "kunneth");
        o.rel_tol = positive(get_or<double>(s, "rel_tol", o.rel_tol, "kunneth"), "kunneth.rel_tol");
        if (o.split < 1 || o.split >= n) throw ConfigError("kunneth.split must lie in [1, n-1]");
        if (o.count < 1) throw ConfigError("kunneth.count must be >= 1");
    }

    if (j.contains("duality")) {
        const json& s = j.at("duality");
        check_keys(s, {"count", "tol_factor"}, "duality");
        c.duality.count = get_or<int>(s, "count", c.duality.count, "duality");
        c.duality.tol_factor =
            positive(get_or<double>(s, "tol_factor", c.duality.tol_factor, "duality"), "duality.tol_factor");
        if (c.duality.count < 1) throw ConfigError("duality.count must be >= 1");
    }

    if (j.contains("oscillator")) {
        const json& s = j.at("oscillator");
        check_keys(s, {"resolutions", "degree", "eigenvalues", "rel_tol_finest", "order_min", "order_max"},
                   "oscillator");
        OscillatorOptions o;
        o.resolutions = resolution_list(s, "resolutions", o.resolutions, "oscillator");
        o.degree = get_or<int>(s, "degree", o.degree, "oscillator");
        o.eigenvalues = get_or<int>(s, "eigenvalues", o.eigenvalues, "oscillator");
        o.rel_tol_finest = positive(get_or<double>(s, "rel_tol_finest", o.rel_tol_finest, "oscillator"),
                                    "oscillator.rel_tol_finest");
        o.order_min = get_or<double>(s, "order_min", o.order_min, "oscillator");
        o.order_max = get_or<double>(s, "order_max", o.order_max, "oscillator");
        if (n != 1 || !c.manifold.factor(0).is_line() || c.manifold.factor(0).c == 0.0)
            throw ConfigError("the oscillator study needs a single weighted line factor");
        if (o.degree < 0 || o.degree > 1) throw ConfigError("oscillator.degree must be 0 or 1");
        if (o.eigenvalues < 1) throw ConfigError("oscillator.eigenvalues must be >= 1");
        c.oscillator = o;
    }

    if (j.contains("weitzenbock")) {
        const json& s = j.at("weitzenbock");
        check_keys(s, {"resolutions", "probes", "abs_max_finest", "order_min", "order_max"}, "weitzenbock");
        WeitzenbockOptions o;
        o.resolutions = resolution_list(s, "resolutions", o.resolutions, "weitzenbock");
        o.probes = get_or<int>(s, "probes", o.probes, "weitzenbock");
        o.abs_max_finest = positive(get_or<double>(s, "abs_max_finest", o.abs_max_finest, "weitzenbock"),
                                    "weitzenbock.abs_max_finest");
        o.order_min = get_or<double>(s, "order_min", o.order_min, "weitzenbock");
        o.order_max = get_or<double>(s, "order_max", o.order_max, "weitzenbock");
        if (o.probes < 1) throw ConfigError("weitzenbock.probes must be >= 1");
        c.weitzenbock = o;
    }

    if (j.contains("betti")) {
        const json& s = j.at("betti");
        check_keys(s, {"max_cells", "max_entries", "coarsen", "probes", "adjoint_tol"}, "betti");
        auto& o = c.betti;
        o.max_cells = get_or<Index>(s, "max_cells", o.max_cells, "betti");
        o.max_entries = get_or<std::size_t>(s, "max_entries", o.max_entries, "betti");
        o.coarsen = get_or<bool>(s, "coarsen", o.coarsen, "betti");
        o.probes = get_or<int>(s, "probes", o.probes, "betti");
        o.adjoint_tol = positive(get_or<double>(s, "adjoint_tol", o.adjoint_tol, "betti"), "betti.adjoint_tol");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

} // namespace hodgelab

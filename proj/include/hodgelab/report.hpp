#pragma once

// Report writers. JSON keeps field order fixed and floats at 12 significant
// digits; CSV follows schemas/spectrum.csv.json and schemas/verdicts.csv.json.
// Wall-clock time goes to a separate sidecar so reports are byte-identical.

#include <hodgelab/pipelines.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace hodgelab {

inline json report_json(const ReportBundle& r)
{
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool"] = "hodgelab";
    j["pipeline"] = r.pipeline;
    j["config"] = r.config_name;
    j["model"] = r.model;
    j["boundary_mode"] = r.boundary_mode;
    j["seed"] = r.seed;
    j["tolerances"] = r.tolerances;
    if (!r.sections.empty()) j["sections"] = r.sections;
    json v = json::array();
    for (const auto& x : r.verdicts)
        v.push_back({{"name", x.name},
                     {"measured", x.measured},
                     {"threshold", x.threshold},
                     {"comparison", x.comparison},
                     {"pass", x.pass},
                     {"oracle", x.oracle}});
    j["verdicts"] = v;
    j["summary"] = {{"verdicts", r.verdicts.size()}, {"failed", r.failed()}, {"status", r.all_pass() ? "PASS" : "FAIL"}};
    return j;
}

namespace detail {

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

inline std::string fmt12(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

} // namespace detail

inline std::string spectrum_csv(const ReportBundle& r)
{
    std::ostringstream os;
    os << "model,degree,index,eigenvalue,residual\n";
    for (const auto& row : r.spectrum_rows)
        os << detail::csv_field(row.model) << ',' << row.degree << ',' << row.index << ','
           << detail::fmt12(row.eigenvalue) << ',' << detail::fmt12(row.residual) << '\n';
    return os.str();
}

inline std::string verdicts_csv(const ReportBundle& r)
{
    std::ostringstream os;
    os << "pipeline,verdict,measured,threshold,comparison,pass,oracle\n";
    for (const auto& v : r.verdicts) {
        auto text = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
        os << r.pipeline << ',' << detail::csv_field(v.name) << ',' << detail::csv_field(text(v.measured)) << ','
           << detail::csv_field(text(v.threshold)) << ',' << detail::csv_field(v.comparison) << ','
           << (v.pass ? "PASS" : "FAIL") << ',' << detail::csv_field(v.oracle) << '\n';
    }
    return os.str();
}

/// Write the report into `dir`; returns the files written.
inline std::vector<std::filesystem::path> write_report(const ReportBundle& r, const std::filesystem::path& dir,
                                                       const std::string& format)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> files;
    if (format == "json") {
        files.push_back(dir / (r.pipeline + ".json"));
        detail::write_file(files.back(), report_json(r).dump(2) + "\n");
    } else if (format == "csv") {
        files.push_back(dir / (r.pipeline + "_verdicts.csv"));
        detail::write_file(files.back(), verdicts_csv(r));
        if (!r.spectrum_rows.empty()) {
            files.push_back(dir / (r.pipeline + "_spectrum.csv"));
            detail::write_file(files.back(), spectrum_csv(r));
        }
    } else {
        throw ConfigError("format must be json or csv");
    }
    files.push_back(dir / (r.pipeline + ".timing.json"));
    json t{{"pipeline", r.pipeline}, {"wall_seconds", jnum(r.wall_seconds)}};
    detail::write_file(files.back(), t.dump(2) + "\n");
    return files;
}

} // namespace hodgelab

#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughfrac/errors.hpp"
#include "roughfrac/geometry.hpp"
#include "roughfrac/params.hpp"
#include "roughfrac/weights.hpp"

namespace roughfrac {

using ordered_json = nlohmann::ordered_json;

/// One function's contribution to a boundedness experiment: the ratio
/// target-norm / source-norm and the ball where the target norm peaked.
struct ExperimentRow {
    std::string function_id;
    double ratio = 0.0;
    std::optional<Ball> maximizing_ball;
    bool skipped = false; // degenerate denominator; excluded from max_ratio
};

/// Outcome of one two-grid boundedness experiment.
struct BoundednessReport {
    std::string experiment;
    OperatorParams params;
    std::string weight;
    std::string kernel;
    int coarse_m = 0;
    int fine_m = 0;
    double half_width = 0.0;
    FamilyProvenance family;
    std::vector<ExperimentRow> rows;      // coarse grid
    std::vector<ExperimentRow> rows_fine; // refined grid
    double max_ratio = 0.0;
    double max_ratio_fine = 0.0;
    double stability_factor = 0.0;          // max_ratio_fine / max_ratio
    double family_extension_factor = 0.0;   // extended-family max / base max (coarse)
    double threshold = 0.0;
    std::string verdict; // "pass" | "fail"
    std::vector<std::string> notes;
};

/// One row of the internal-consistency suite.
struct IdentityRow {
    std::string name;
    double observed = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

namespace report_detail {

inline ordered_json json_number_or_inf(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

inline ordered_json ball_json(const Ball& b, int n) {
    ordered_json j;
    j["center"] = n == 3 ? std::vector<double>{b.center[0], b.center[1], b.center[2]}
                         : std::vector<double>{b.center[0], b.center[1]};
    j["radius"] = b.radius;
    return j;
}

inline ordered_json row_json(const ExperimentRow& r, int n) {
    ordered_json j;
    j["function_id"] = r.function_id;
    if (r.skipped) {
        j["ratio"] = nullptr;
        j["skipped"] = true;
    } else {
        j["ratio"] = r.ratio;
    }
    if (r.maximizing_ball)
        j["maximizing_ball"] = ball_json(*r.maximizing_ball, n);
    else
        j["maximizing_ball"] = nullptr;
    return j;
}

} // namespace report_detail

inline ordered_json params_json(const OperatorParams& p) {
    ordered_json j;
    j["n"] = p.n;
    j["alpha"] = p.alpha;
    j["s"] = report_detail::json_number_or_inf(p.s);
    j["s_conj"] = p.s_conj;
    j["p"] = p.p;
    j["q"] = p.q;
    j["kappa"] = p.kappa;
    j["p1"] = p.p1;
    j["q1"] = p.q1;
    return j;
}

inline ordered_json family_json(const FamilyProvenance& f) {
    ordered_json j;
    j["grid_m"] = f.grid_m;
    j["grid_half_width"] = f.grid_half_width;
    j["stride"] = f.stride;
    j["r_min"] = f.r_min;
    j["r_max"] = f.r_max;
    return j;
}

/// ISO-8601 UTC wall-clock stamp (the one key the determinism check ignores).
inline std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline ordered_json report_json(const BoundednessReport& r, bool with_timestamp = true) {
    int n = r.params.n;
    ordered_json j;
    j["experiment"] = r.experiment;
    j["params"] = params_json(r.params);
    j["weight"] = r.weight;
    j["kernel"] = r.kernel;
    j["grid"] = ordered_json{{"n", n},
                             {"half_width", r.half_width},
                             {"coarse_m", r.coarse_m},
                             {"fine_m", r.fine_m}};
    j["family"] = family_json(r.family);
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) rows.push_back(report_detail::row_json(row, n));
    j["rows"] = rows;
    ordered_json rows_f = ordered_json::array();
    for (const auto& row : r.rows_fine) rows_f.push_back(report_detail::row_json(row, n));
    j["rows_fine"] = rows_f;
    j["max_ratio"] = r.max_ratio;
    j["max_ratio_fine"] = r.max_ratio_fine;
    j["stability_factor"] = r.stability_factor;
    j["family_extension_factor"] = r.family_extension_factor;
    j["threshold"] = r.threshold;
    j["verdict"] = r.verdict;
    j["notes"] = r.notes;
    if (with_timestamp) j["timestamp"] = utc_timestamp();
    return j;
}

inline ordered_json weight_report_json(const WeightConstantReport& r, int n) {
    ordered_json j;
    j["class"] = r.class_tag;
    j["exponents"] = r.exponents;
    j["constant"] = r.constant;
    j["worst_ball"] = report_detail::ball_json(r.worst_ball, n);
    j["family"] = r.family_provenance;
    return j;
}

inline ordered_json identity_suite_json(const std::vector<IdentityRow>& rows,
                                        bool with_timestamp = true) {
    ordered_json j;
    j["suite"] = "identities";
    ordered_json arr = ordered_json::array();
    bool all = true;
    for (const auto& r : rows) {
        ordered_json e;
        e["name"] = r.name;
        e["observed"] = report_detail::json_number_or_inf(r.observed);
        e["tolerance"] = r.tolerance;
        e["pass"] = r.pass;
        arr.push_back(e);
        all = all && r.pass;
    }
    j["rows"] = arr;
    j["all_pass"] = all;
    if (with_timestamp) j["timestamp"] = utc_timestamp();
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open output file: " + path);
    out << content;
    if (!out)
        throw ConfigError("failed writing output file: " + path);
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

/// Row-major CSV dump with the three-line header (n, L, m); 9 significant
/// digits per value, one grid row per line (n=3 flattens the leading axes).
inline void write_grid_csv(const std::string& path, const GridFunction& f) {
    const Grid& g = f.grid();
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "n,%d\n", g.n());
    out += buf;
    std::snprintf(buf, sizeof buf, "L,%.9g\n", g.half_width());
    out += buf;
    std::snprintf(buf, sizeof buf, "m,%d\n", g.m());
    out += buf;
    std::size_t per_line = static_cast<std::size_t>(g.m());
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", f[i]);
        out += buf;
        out += ((i + 1) % per_line == 0) ? '\n' : ',';
    }
    write_text_file(path, out);
}

/// FNV-1a 64-bit hash (hex string) of a canonical configuration text, for
/// manifest stamping.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline ordered_json manifest_json(const std::string& version, const std::string& config_canonical,
                                  std::uint64_t seed, int n, int m, double half_width,
                                  const std::vector<std::string>& outputs,
                                  bool with_timestamp = true) {
    ordered_json j;
    j["tool"] = "roughfrac";
    j["version"] = version;
    j["config_hash"] = fnv1a_hex(config_canonical);
    j["seed"] = seed;
    j["grid"] = ordered_json{{"n", n}, {"m", m}, {"half_width", half_width}};
    j["outputs"] = outputs;
    if (with_timestamp) j["timestamp"] = utc_timestamp();
    return j;
}

} // namespace roughfrac

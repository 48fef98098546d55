#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "roughfrac/errors.hpp"
#include "roughfrac/params.hpp"
#include "roughfrac/verification.hpp"

namespace roughfrac {

/// Flat INI-style run configuration. Every field has a usable default; the
/// canonical string (and hence the manifest hash) is computed from resolved
/// values, so two files spelling the same run hash identically.
struct Config {
    // [grid]
    int n = 2;
    double half_width = 1.0;
    int m = 256;
    // [params]
    double alpha = 0.5;
    double s = 2.0; // infinity() for an essentially bounded kernel index
    double p = 3.0;
    double kappa = 0.1;
    // [kernel]  kind: constant | expr | table
    std::string kernel_kind = "table";
    double kernel_value = 1.0;
    std::string kernel_expr = "sign(cos(theta))";
    int kernel_samples = 512;
    // [weight]  kind: power | one
    std::string weight_kind = "power";
    double weight_beta = 0.1;
    std::array<double, 3> weight_center{0.0, 0.0, 0.0};
    // [family]  r_min and r_min_cells are mutually exclusive
    int family_stride = 0;        // 0 -> m / 8
    double family_r_min = -1.0;   // < 0 -> r_min_cells * h
    int family_r_min_cells = 8;
    double family_r_max = -1.0;   // < 0 -> half_width
    // [functions]
    std::string functions_tag = "mixed";
    std::uint64_t seed = 42;
    int count = 20;
    int base_m = 0; // 0 -> m
    // [quadrature]
    std::string quad_rule = "disc"; // disc | exclusion
    int near_field_cells = 0;
    int gauss_order = 20;
    int angular_samples = 4096;
    // [experiments]
    std::vector<std::string> experiments = {"1.2"};
    // [output]
    std::string output_dir = "out";
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "infinity") return OperatorParams::infinity();
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
    }
}

inline long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + v + "' as an integer");
    }
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline bool known_tag(const std::string& t) {
    return t == "A" || t == "B" || t == "D" || t == "1.1" || t == "1.2" || t == "1.3" ||
           t == "cor";
}

} // namespace config_detail

/// Parse configuration text. Unknown sections or keys are errors, named in
/// the message; '#' and ';' start full-line comments.
inline Config parse_config(const std::string& text) {
    using namespace config_detail;
    Config c;
    bool saw_r_min = false, saw_r_min_cells = false;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section '" +
                                  line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "grid" && section != "params" && section != "kernel" &&
                section != "weight" && section != "family" && section != "functions" &&
                section != "quadrature" && section != "experiments" && section != "output")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got '" +
                              line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        std::string where = key + "' in [" + section + "]";
        if (section == "grid") {
            if (key == "n") c.n = static_cast<int>(parse_int(key, val));
            else if (key == "half_width") c.half_width = parse_double(key, val);
            else if (key == "m") c.m = static_cast<int>(parse_int(key, val));
            else throw ConfigError("unknown key '" + where);
        } else if (section == "params") {
            if (key == "alpha") c.alpha = parse_double(key, val);
            else if (key == "s") c.s = parse_double(key, val);
            else if (key == "p") c.p = parse_double(key, val);
            else if (key == "kappa") c.kappa = parse_double(key, val);
            else throw ConfigError("unknown key '" + where);
        } else if (section == "kernel") {
            if (key == "kind") {
                if (val != "constant" && val != "expr" && val != "table")
                    throw ConfigError("kernel kind must be constant, expr or table, got '" +
                                      val + "'");
                c.kernel_kind = val;
            } else if (key == "value") c.kernel_value = parse_double(key, val);
            else if (key == "expr") c.kernel_expr = val;
            else if (key == "samples") c.kernel_samples = static_cast<int>(parse_int(key, val));
            else throw ConfigError("unknown key '" + where);
        } else if (section == "weight") {
            if (key == "kind") {
                if (val != "power" && val != "one")
                    throw ConfigError("weight kind must be power or one, got '" + val + "'");
                c.weight_kind = val;
            } else if (key == "beta") c.weight_beta = parse_double(key, val);
            else if (key == "cx") c.weight_center[0] = parse_double(key, val);
            else if (key == "cy") c.weight_center[1] = parse_double(key, val);
            else if (key == "cz") c.weight_center[2] = parse_double(key, val);
            else throw ConfigError("unknown key '" + where);
        } else if (section == "family") {
            if (key == "stride") c.family_stride = static_cast<int>(parse_int(key, val));
            else if (key == "r_min") {
                c.family_r_min = parse_double(key, val);
                saw_r_min = true;
            } else if (key == "r_min_cells") {
                c.family_r_min_cells = static_cast<int>(parse_int(key, val));
                saw_r_min_cells = true;
            } else if (key == "r_max") c.family_r_max = parse_double(key, val);
            else throw ConfigError("unknown key '" + where);
        } else if (section == "functions") {
            if (key == "tag") c.functions_tag = val;
            else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, val));
            else if (key == "count") c.count = static_cast<int>(parse_int(key, val));
            else if (key == "base_m") c.base_m = static_cast<int>(parse_int(key, val));
            else throw ConfigError("unknown key '" + where);
        } else if (section == "quadrature") {
            if (key == "rule") {
                if (val != "disc" && val != "exclusion")
                    throw ConfigError("quadrature rule must be disc or exclusion, got '" + val +
                                      "'");
                c.quad_rule = val;
            } else if (key == "near_field_cells")
                c.near_field_cells = static_cast<int>(parse_int(key, val));
            else if (key == "gauss_order") c.gauss_order = static_cast<int>(parse_int(key, val));
            else if (key == "angular_samples")
                c.angular_samples = static_cast<int>(parse_int(key, val));
            else throw ConfigError("unknown key '" + where);
        } else if (section == "experiments") {
            if (key == "tags") {
                c.experiments = split_list(val);
                for (const auto& t : c.experiments)
                    if (!config_detail::known_tag(t))
                        throw ConfigError("unknown experiment tag '" + t +
                                          "' (expected A, B, D, 1.1, 1.2, 1.3 or cor)");
            } else throw ConfigError("unknown key '" + where);
        } else if (section == "output") {
            if (key == "dir") c.output_dir = val;
            else throw ConfigError("unknown key '" + where);
        } else {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": key '" + key + "' appears before any section header");
        }
    }
    if (saw_r_min && saw_r_min_cells)
        throw ConfigError("[family] sets both r_min and r_min_cells; choose one");
    return c;
}

inline Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline Config default_config() { return Config{}; }

/// Resolve defaults that depend on other fields.
inline int resolved_stride(const Config& c) {
    return c.family_stride > 0 ? c.family_stride : c.m / 8;
}
inline double resolved_r_min(const Config& c) {
    return c.family_r_min > 0.0 ? c.family_r_min
                                : c.family_r_min_cells * (2.0 * c.half_width / c.m);
}
inline double resolved_r_max(const Config& c) {
    return c.family_r_max > 0.0 ? c.family_r_max : c.half_width;
}

inline RoughKernel build_kernel(const Config& c) {
    if (c.kernel_kind == "constant") return RoughKernel::constant(c.n, c.kernel_value);
    if (c.kernel_kind == "expr") return RoughKernel::expression(c.n, c.kernel_expr);
    return RoughKernel::tabulate(RoughKernel::expression(c.n, c.kernel_expr),
                                 c.kernel_samples);
}

inline Weight build_weight(const Config& c) {
    if (c.weight_kind == "one") return Weight::one();
    return Weight::power(c.weight_beta, c.weight_center);
}

/// Turn a configuration into a runnable experiment setup (validating the
/// parameter chain and grid compatibility in the process).
inline ExperimentSetup make_setup(const Config& c) {
    ExperimentSetup s;
    s.coarse = Grid(c.n, c.half_width, c.m);
    s.params = derive_params(c.n, c.alpha, c.s, c.p, c.kappa);
    s.kernel = build_kernel(c);
    s.weight = build_weight(c);
    s.family_stride = resolved_stride(c);
    s.family_r_min = resolved_r_min(c);
    s.family_r_max = resolved_r_max(c);
    s.functions.tag = c.functions_tag;
    s.functions.seed = c.seed;
    s.functions.count = c.count;
    s.functions.base_m = c.base_m > 0 ? c.base_m : c.m;
    s.quad.rule = c.quad_rule == "exclusion" ? SingularRule::exclusion : SingularRule::disc;
    s.quad.near_field_radius_cells = c.near_field_cells;
    s.quad.gauss_order = c.gauss_order;
    s.quad.angular_samples = c.angular_samples;
    return s;
}

/// Deterministic single-line rendering of the resolved configuration; input
/// to the manifest's config hash.
inline std::string canonical_config_string(const Config& c) {
    char buf[512];
    auto num = [](double x) {
        char b[64];
        std::snprintf(b, sizeof(b), "%.17g", x);
        return std::string(b);
    };
    std::string out;
    std::snprintf(buf, sizeof(buf), "grid.n=%d;grid.half_width=%s;grid.m=%d;", c.n,
                  num(c.half_width).c_str(), c.m);
    out += buf;
    out += "params.alpha=" + num(c.alpha) + ";params.s=" + num(c.s) +
           ";params.p=" + num(c.p) + ";params.kappa=" + num(c.kappa) + ";";
    out += "kernel=" + c.kernel_kind + ":";
    if (c.kernel_kind == "constant") out += num(c.kernel_value);
    else out += c.kernel_expr;
    if (c.kernel_kind == "table") out += ":" + std::to_string(c.kernel_samples);
    out += ";";
    out += "weight=" + c.weight_kind;
    if (c.weight_kind == "power")
        out += ":beta=" + num(c.weight_beta) + ",center=" + num(c.weight_center[0]) + "," +
               num(c.weight_center[1]) + "," + num(c.weight_center[2]);
    out += ";";
    out += "family.stride=" + std::to_string(resolved_stride(c)) +
           ";family.r_min=" + num(resolved_r_min(c)) +
           ";family.r_max=" + num(resolved_r_max(c)) + ";";
    out += "functions=" + c.functions_tag + ":seed=" + std::to_string(c.seed) +
           ":count=" + std::to_string(c.count) +
           ":base_m=" + std::to_string(c.base_m > 0 ? c.base_m : c.m) + ";";
    out += "quad=" + c.quad_rule + ":nf=" + std::to_string(c.near_field_cells) +
           ":gauss=" + std::to_string(c.gauss_order) +
           ":ang=" + std::to_string(c.angular_samples) + ";";
    out += "experiments=";
    for (std::size_t i = 0; i < c.experiments.size(); ++i) {
        if (i) out += ",";
        out += c.experiments[i];
    }
    out += ";output=" + c.output_dir;
    return out;
}

} // namespace roughfrac

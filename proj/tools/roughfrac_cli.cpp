// Command-line front end: run boundedness experiments, estimate weight
// constants, evaluate norms over the test corpus, and export grids as CSV.
// Exit codes: 0 success / all verdicts pass, 1 numerical failure, 2 bad
// configuration or usage.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roughfrac/config.hpp"
#include "roughfrac/version.hpp"

namespace rf = roughfrac;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid_m;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_dry = true) {
    cmd->add_option("--config", o.config_path, "INI configuration file");
    cmd->add_option("--out", o.out_dir, "output directory (overrides [output] dir)");
    cmd->add_option("--seed", o.seed, "override the corpus seed");
    cmd->add_option("--grid-m", o.grid_m, "override the coarse grid resolution");
    if (with_dry)
        cmd->add_flag("--dry-run", o.dry_run, "resolve and print the configuration, run nothing");
}

rf::Config load_config(const CommonOpts& o) {
    rf::Config c = o.config_path.empty() ? rf::default_config()
                                         : rf::parse_config_file(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.grid_m) c.m = *o.grid_m;
    if (!o.out_dir.empty()) c.output_dir = o.out_dir;
    return c;
}

std::filesystem::path ensure_out_dir(const rf::Config& c) {
    std::filesystem::path dir(c.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw rf::ConfigError("cannot create output directory '" + c.output_dir + "'");
    return dir;
}

void write_manifest(const rf::Config& c, const std::filesystem::path& dir,
                    const std::vector<std::string>& outputs) {
    rf::ordered_json m = rf::manifest_json(ROUGHFRAC_VERSION, rf::canonical_config_string(c),
                                           c.seed, c.n, c.m, c.half_width, outputs);
    rf::write_json_file((dir / "manifest.json").string(), m);
}

int print_dry_run(const rf::Config& c) {
    rf::ExperimentSetup s = rf::make_setup(c); // validates the whole chain
    std::printf("config: %s\n", rf::canonical_config_string(c).c_str());
    std::printf("hash:   %s\n", rf::fnv1a_hex(rf::canonical_config_string(c)).c_str());
    std::printf("derived: q=%.6g p1=%.6g q1=%.6g s'=%.6g\n", s.params.q, s.params.p1,
                s.params.q1, s.params.s_conj);
    return 0;
}

int run_verify(const CommonOpts& o) {
    rf::Config c = load_config(o);
    if (o.dry_run) return print_dry_run(c);
    auto dir = ensure_out_dir(c);
    std::vector<std::string> outputs;
    bool all_pass = true;

    std::vector<rf::IdentityRow> rows = rf::run_identity_suite(c.seed);
    int suite_fail = 0;
    for (const auto& r : rows)
        if (!r.pass) ++suite_fail;
    rf::write_json_file((dir / "identities.json").string(), rf::identity_suite_json(rows));
    outputs.push_back("identities.json");
    std::printf("identity suite: %zu checks, %d failed -> %s\n", rows.size(), suite_fail,
                suite_fail == 0 ? "pass" : "fail");
    if (suite_fail > 0) all_pass = false;

    rf::ExperimentSetup setup = rf::make_setup(c);
    for (const std::string& tag : c.experiments) {
        rf::BoundednessReport rep = rf::run_experiment(tag, setup);
        std::string fname = "experiment-" + tag + ".json";
        rf::write_json_file((dir / fname).string(), rf::report_json(rep));
        outputs.push_back(fname);
        std::printf("experiment %-4s max=%.6g stability=%.4f extension=%.4f -> %s\n",
                    tag.c_str(), rep.max_ratio, rep.stability_factor,
                    rep.family_extension_factor, rep.verdict.c_str());
        if (rep.verdict != "pass") all_pass = false;
    }
    write_manifest(c, dir, outputs);
    std::printf("verify: %s\n", all_pass ? "pass" : "fail");
    return all_pass ? 0 : 1;
}

int run_experiment_cmd(const CommonOpts& o, const std::string& tag) {
    rf::Config c = load_config(o);
    if (o.dry_run) return print_dry_run(c);
    auto dir = ensure_out_dir(c);
    rf::ExperimentSetup setup = rf::make_setup(c);
    rf::BoundednessReport rep = rf::run_experiment(tag, setup);
    std::string fname = "experiment-" + tag + ".json";
    rf::write_json_file((dir / fname).string(), rf::report_json(rep));
    write_manifest(c, dir, {fname});
    std::printf("experiment %s: max=%.6g fine=%.6g stability=%.4f extension=%.4f -> %s\n",
                tag.c_str(), rep.max_ratio, rep.max_ratio_fine, rep.stability_factor,
                rep.family_extension_factor, rep.verdict.c_str());
    return rep.verdict == "pass" ? 0 : 1;
}

int run_norms(const CommonOpts& o) {
    rf::Config c = load_config(o);
    if (o.dry_run) return print_dry_run(c);
    auto dir = ensure_out_dir(c);
    rf::ExperimentSetup s = rf::make_setup(c);
    const rf::Grid& g = s.coarse;
    rf::BallFamily family =
        rf::build_ball_family(g, s.family_stride, s.family_r_min, s.family_r_max);
    rf::Weight u = rf::verif_detail::materialize(rf::raise(s.weight, s.params.p), g);
    rf::Weight v = rf::verif_detail::materialize(rf::raise(s.weight, s.params.q), g);

    rf::ordered_json out;
    out["grid"] = {{"n", g.n()}, {"half_width", g.half_width()}, {"m", g.m()}};
    out["family"] = rf::family_json(family.provenance);
    out["params"] = rf::params_json(s.params);
    rf::ordered_json items = rf::ordered_json::array();
    for (int k = 0; k < s.functions.count; ++k) {
        rf::GridFunction f = rf::make_test_function(g, s.functions, k);
        rf::NormResult mo = rf::morrey_norm_two_weight(f, u, v, s.params.p, s.params.kappa,
                                                       family);
        rf::ordered_json row;
        row["function"] = rf::function_id(s.functions, k);
        row["lebesgue_p"] = rf::weighted_lp_norm(f, u, s.params.p);
        row["morrey_p_kappa"] = mo.value;
        if (mo.maximizing_ball) {
            row["ball_center"] = {mo.maximizing_ball->center[0], mo.maximizing_ball->center[1]};
            row["ball_radius"] = mo.maximizing_ball->radius;
        }
        items.push_back(row);
        std::printf("%-12s  Lp=%-12.6g  Morrey=%-12.6g\n",
                    rf::function_id(s.functions, k).c_str(), (double)row["lebesgue_p"],
                    mo.value);
    }
    out["functions"] = items;
    rf::GridFunction b = rf::log_abs_function(g);
    out["bmo_log_abs"] = rf::bmo_norm(b, family).value;
    std::printf("bmo(log|x|) = %.6g\n", (double)out["bmo_log_abs"]);
    rf::write_json_file((dir / "norms.json").string(), out);
    write_manifest(c, dir, {"norms.json"});
    return 0;
}

int run_weights(const CommonOpts& o) {
    rf::Config c = load_config(o);
    if (o.dry_run) return print_dry_run(c);
    auto dir = ensure_out_dir(c);
    rf::ExperimentSetup s = rf::make_setup(c);
    const rf::Grid& g = s.coarse;
    rf::BallFamily family =
        rf::build_ball_family(g, s.family_stride, s.family_r_min, s.family_r_max);
    rf::Weight w = rf::verif_detail::materialize(s.weight, g);

    rf::ordered_json out;
    out["weight"] = s.weight.describe();
    out["family"] = rf::family_json(family.provenance);
    rf::WeightConstantReport apq =
        rf::apq_constant(w, s.params.p, s.params.q, family, g);
    out["apq"] = rf::weight_report_json(apq, g.n());
    std::printf("A(p,q)  p=%.4g q=%.4g : %.6g\n", s.params.p, s.params.q, apq.constant);
    if (s.params.p > 1.0) {
        rf::WeightConstantReport ap = rf::ap_constant(w, s.params.p, family, g);
        out["ap"] = rf::weight_report_json(ap, g.n());
        std::printf("A_p     p=%.4g        : %.6g\n", s.params.p, ap.constant);
    }
    rf::WeightConstantReport rh = rf::rh_constant(w, 2.0, family, g);
    out["reverse_holder_2"] = rf::weight_report_json(rh, g.n());
    std::printf("RH_2                  : %.6g\n", rh.constant);
    auto doubling = rf::check_doubling(w, s.params.p, family, g, 2.0);
    double worst = 0.0;
    std::size_t flagged = 0;
    for (const auto& r : doubling) {
        worst = std::max(worst, r.ratio);
        if (r.flagged) ++flagged;
    }
    out["doubling"] = {{"lambda", 2.0},
                       {"worst_ratio", worst},
                       {"flagged_balls", flagged},
                       {"checked_balls", doubling.size()}};
    std::printf("doubling lambda=2     : worst ratio %.6g, %zu/%zu flagged\n", worst, flagged,
                doubling.size());
    rf::write_json_file((dir / "weights.json").string(), out);
    write_manifest(c, dir, {"weights.json"});
    return 0;
}

int run_dump_grid(const CommonOpts& o, const std::string& what, const std::string& file) {
    rf::Config c = load_config(o);
    if (o.dry_run) return print_dry_run(c);
    auto dir = ensure_out_dir(c);
    rf::ExperimentSetup s = rf::make_setup(c);
    const rf::Grid& g = s.coarse;
    rf::GridFunction out(g);
    if (what == "weight") {
        out = rf::verif_detail::materialize(s.weight, g).grid_values();
    } else if (what == "b") {
        out = rf::log_abs_function(g);
    } else if (what.size() > 1 && what[0] == 'f') {
        int k = 0;
        try {
            k = std::stoi(what.substr(1));
        } catch (const std::exception&) {
            throw rf::ConfigError("dump-grid: cannot parse function index in '" + what + "'");
        }
        out = rf::make_test_function(g, s.functions, k);
    } else {
        throw rf::ConfigError("dump-grid: unknown field '" + what +
                              "' (expected f<k>, weight or b)");
    }
    std::string fname = file.empty() ? ("grid-" + what + ".csv") : file;
    rf::write_grid_csv((dir / fname).string(), out);
    std::printf("wrote %s (%d x %d values)\n", (dir / fname).string().c_str(), g.m(), g.m());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"roughfrac: numerical experiments for rough-kernel fractional operators "
                 "on weighted Morrey spaces"};
    app.set_version_flag("--version", ROUGHFRAC_VERSION);
    app.require_subcommand(1);

    CommonOpts vo, eo, no, wo, go;
    CLI::App* verify = app.add_subcommand("verify", "identity suite + configured experiments");
    add_common(verify, vo);

    CLI::App* exp = app.add_subcommand("experiment", "run one two-grid boundedness experiment");
    std::string theorem = "1.2";
    exp->add_option("--theorem", theorem, "experiment tag: A, B, D, 1.1, 1.2, 1.3, cor")
        ->required();
    add_common(exp, eo);

    CLI::App* norms = app.add_subcommand("norms", "norms of the test corpus");
    add_common(norms, no);

    CLI::App* weights = app.add_subcommand("weights", "weight-class constant estimates");
    add_common(weights, wo);

    CLI::App* dump = app.add_subcommand("dump-grid", "export a grid function as CSV");
    std::string what = "f0", file;
    dump->add_option("--what", what, "field to export: f<k>, weight or b");
    dump->add_option("--file", file, "output file name (default grid-<what>.csv)");
    add_common(dump, go);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (verify->parsed()) return run_verify(vo);
        if (exp->parsed()) {
            if (!rf::config_detail::known_tag(theorem))
                throw rf::ConfigError("unknown experiment tag '" + theorem + "'");
            return run_experiment_cmd(eo, theorem);
        }
        if (norms->parsed()) return run_norms(no);
        if (weights->parsed()) return run_weights(wo);
        if (dump->parsed()) return run_dump_grid(go, what, file);
    } catch (const rf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const rf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}

#include <catch_amalgamated.hpp>

#include <cmath>

#include "roughfrac/verification.hpp"

using namespace roughfrac;

namespace {

ExperimentSetup mini_setup() {
    ExperimentSetup s;
    s.coarse = Grid(2, 1.0, 48);
    s.family_stride = 8;
    s.family_r_min = 8.0 * s.coarse.spacing();
    s.family_r_max = 1.0;
    s.functions.count = 4;
    s.functions.base_m = 48;
    return s;
}

} // namespace

TEST_CASE("every internal identity holds", "[verification]") {
    auto rows = run_identity_suite(42);
    CHECK(rows.size() >= 30);
    for (const auto& r : rows) {
        INFO(r.name << ": observed " << r.observed << " tolerance " << r.tolerance);
        CHECK(r.pass);
    }
}

TEST_CASE("all experiment tags run their two-grid protocol", "[verification]") {
    ExperimentSetup s = mini_setup();
    for (const std::string tag : {"A", "B", "D", "1.1", "1.2", "1.3", "cor"}) {
        BoundednessReport r = run_experiment(tag, s);
        INFO("experiment " << tag);
        CHECK(r.experiment == tag);
        CHECK(r.coarse_m == 48);
        CHECK(r.fine_m == 96);
        std::size_t per_grid = tag == "A" ? 8 : 4; // two operators for tag A
        CHECK(r.rows.size() == per_grid);
        CHECK(r.rows_fine.size() == per_grid);
        CHECK(r.max_ratio > 0.0);
        CHECK(std::isfinite(r.stability_factor));
        CHECK(r.stability_factor <= r.threshold);
        CHECK(r.family_extension_factor <= r.threshold);
        CHECK(r.verdict == "pass");
    }
}

TEST_CASE("ratio rows carry the norms' maximizing balls where they exist", "[verification]") {
    ExperimentSetup s = mini_setup();
    BoundednessReport morrey = run_experiment("1.2", s);
    for (const auto& row : morrey.rows) {
        CHECK(row.maximizing_ball.has_value());
        CHECK(row.maximizing_ball->radius >= s.family_r_min - 1e-12);
    }
    BoundednessReport lebesgue = run_experiment("B", s);
    for (const auto& row : lebesgue.rows) CHECK_FALSE(row.maximizing_ball.has_value());
    // tag A labels each function's two operator rows
    BoundednessReport both = run_experiment("A", s);
    CHECK(both.rows[0].function_id.find(":M") != std::string::npos);
    CHECK(both.rows[1].function_id.find(":T") != std::string::npos);
}

TEST_CASE("plain Lebesgue experiments have a neutral extension factor", "[verification]") {
    ExperimentSetup s = mini_setup();
    BoundednessReport r = run_experiment("A", s);
    CHECK(r.family_extension_factor == 1.0); // no family in either norm
}

TEST_CASE("unknown experiment tags are rejected by name", "[verification]") {
    ExperimentSetup s = mini_setup();
    CHECK_THROWS_AS(run_experiment("1.4", s), ConfigError);
    CHECK_THROWS_AS(run_experiment("", s), ConfigError);
}

TEST_CASE("out-of-class weights abort the run before any operator work", "[verification]") {
    ExperimentSetup s = mini_setup();
    s.weight = Weight::power(3.0); // far outside every admissible range here
    CHECK_THROWS_AS(run_experiment("1.2", s), PreconditionFailed);
    s.skip_precondition = true;
    CHECK_NOTHROW(run_experiment("1.2", s)); // forced run still completes
}

TEST_CASE("the corollary's domination check scans every coarse cell", "[verification]") {
    ExperimentSetup s = mini_setup();
    BoundednessReport r = run_experiment("cor", s);
    REQUIRE_FALSE(r.notes.empty());
    CHECK(r.notes[0].find("domination") != std::string::npos);
    CHECK(r.notes[0].find("0 violating") != std::string::npos);
}

TEST_CASE("commutator experiments are structurally zero for constant symbols",
          "[verification]") {
    ExperimentSetup s = mini_setup();
    CHECK(b_constant_control("1.3", s, 2.5, 2) == 0.0);
    CHECK(b_constant_control("cor", s, -1.5, 2) == 0.0);
    CHECK_THROWS_AS(b_constant_control("A", s, 1.0, 2), ConfigError);
}

TEST_CASE("reports are byte-stable apart from the timestamp", "[verification]") {
    ExperimentSetup s = mini_setup();
    s.functions.count = 2;
    BoundednessReport a = run_experiment("1.2", s);
    BoundednessReport b = run_experiment("1.2", s);
    ordered_json ja = report_json(a), jb = report_json(b);
    ja.erase("timestamp");
    jb.erase("timestamp");
    CHECK(ja.dump(2) == jb.dump(2));
}

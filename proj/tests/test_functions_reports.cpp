#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "roughfrac/reports.hpp"
#include "roughfrac/test_functions.hpp"

using namespace roughfrac;

TEST_CASE("the corpus is deterministic in (seed, index)", "[functions]") {
    Grid g(2, 1.0, 64);
    TestFunctionFamily fam;
    fam.tag = "mixed";
    fam.seed = 42;
    fam.count = 8;
    fam.base_m = 64;
    for (int k = 0; k < 4; ++k) {
        GridFunction a = make_test_function(g, fam, k);
        GridFunction b = make_test_function(g, fam, k);
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
        CHECK(d == 0.0);
        CHECK(a.all_finite());
    }
    TestFunctionFamily other = fam;
    other.seed = 43;
    GridFunction a = make_test_function(g, fam, 0);
    GridFunction b = make_test_function(g, other, 0);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
    CHECK(d > 0.0);
}

TEST_CASE("smooth corpus members denote the same continuum function at any m", "[functions]") {
    TestFunctionFamily fam;
    fam.tag = "gauss";
    fam.seed = 17;
    fam.count = 1;
    fam.base_m = 256;
    Grid g64(2, 1.0, 64), g128(2, 1.0, 128);
    GridFunction c = make_test_function(g64, fam, 0);
    GridFunction f = make_test_function(g128, fam, 0);
    // every coarse cell center is straddled by fine cells; compare against
    // the average of the four fine cells that tile it
    double worst = 0.0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            double avg = 0.25 * (f.at(2 * i, 2 * j) + f.at(2 * i + 1, 2 * j) +
                                 f.at(2 * i, 2 * j + 1) + f.at(2 * i + 1, 2 * j + 1));
            worst = std::max(worst, std::fabs(c.at(i, j) - avg));
        }
    CHECK(worst < 0.05); // smooth function: second-order in h
}

TEST_CASE("the shape cycle and identifiers follow the index", "[functions]") {
    TestFunctionFamily fam; // mixed
    CHECK(function_id(fam, 0) == "f0:indicator");
    CHECK(function_id(fam, 1) == "f1:bump");
    CHECK(function_id(fam, 2) == "f2:gauss");
    CHECK(function_id(fam, 3) == "f3:random");
    CHECK(function_id(fam, 4) == "f4:indicator");
    TestFunctionFamily gf;
    gf.tag = "gauss";
    CHECK(function_id(gf, 2) == "f2:gauss");
}

TEST_CASE("invalid corpus requests are rejected", "[functions]") {
    Grid g(2, 1.0, 16);
    TestFunctionFamily fam;
    fam.count = 4;
    fam.base_m = 16;
    CHECK_THROWS_AS(make_test_function(g, fam, -1), ConstraintViolation);
    CHECK_THROWS_AS(make_test_function(g, fam, 4), ConstraintViolation);
    TestFunctionFamily bad = fam;
    bad.tag = "sawtooth";
    CHECK_THROWS_AS(make_test_function(g, bad, 0), ConstraintViolation);
}

TEST_CASE("helper fields evaluate their formulas", "[functions]") {
    Grid g(2, 1.0, 32);
    GridFunction b = log_abs_function(g);
    int i = 24, j = 8;
    double x = g.axis_center(i), y = g.axis_center(j);
    CHECK(b.at(i, j) == Catch::Approx(0.5 * std::log(x * x + y * y)));
    GridFunction c = constant_function(g, -3.5);
    CHECK(c.at(0, 0) == -3.5);
    CHECK(c.at(31, 31) == -3.5);
}

TEST_CASE("json reports have a stable schema", "[reports]") {
    OperatorParams p = derive_params(2, 0.5, 2.0, 3.0, 0.1);
    ordered_json pj = params_json(p);
    CHECK(pj["alpha"] == 0.5);
    CHECK(pj["q"].get<double>() == Catch::Approx(12.0).margin(1e-12));
    OperatorParams pinf = derive_params(2, 0.5, OperatorParams::infinity(), 3.0, 0.1);
    CHECK(params_json(pinf)["s"] == "inf");

    BoundednessReport rep;
    rep.experiment = "1.2";
    rep.params = p;
    rep.weight = "power:beta=0.1";
    rep.kernel = "table:512";
    rep.coarse_m = 64;
    rep.fine_m = 128;
    rep.half_width = 1.0;
    rep.family = FamilyProvenance{64, 1.0, 8, 0.25, 1.0};
    ExperimentRow row;
    row.function_id = "f0:indicator";
    row.ratio = 1.5;
    row.maximizing_ball = Ball{{0.25, 0.5, 0.0}, 0.354};
    rep.rows.push_back(row);
    rep.max_ratio = 1.5;
    rep.max_ratio_fine = 1.52;
    rep.stability_factor = 1.0133;
    rep.verdict = "pass";
    ordered_json j = report_json(rep);
    auto it = j.begin();
    CHECK(it.key() == "experiment"); // fixed leading key
    CHECK(j.contains("timestamp"));
    ordered_json j2 = report_json(rep, false);
    CHECK_FALSE(j2.contains("timestamp"));
    // identical reports serialize identically once the timestamp is gone
    ordered_json ja = report_json(rep), jb = report_json(rep);
    ja.erase("timestamp");
    jb.erase("timestamp");
    CHECK(ja.dump() == jb.dump());
    CHECK(j["rows"][0]["maximizing_ball"]["radius"] == 0.354);
}

TEST_CASE("grid csv has the three-line header and full payload", "[reports]") {
    Grid g(2, 1.0, 8);
    GridFunction f(g);
    f.at(3, 4) = 1.25;
    std::string path = "/tmp/rf_test_grid.csv";
    write_grid_csv(path, f);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string l1, l2, l3;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    CHECK(l1 == "n,2");
    CHECK(l2 == "L,1");
    CHECK(l3 == "m,8");
    int rows = 0;
    std::string line;
    bool found = false;
    while (std::getline(in, line)) {
        if (line.find("1.25") != std::string::npos) found = true;
        ++rows;
    }
    CHECK(rows == 8);
    CHECK(found);
}

TEST_CASE("the config hash is the 64-bit FNV-1a of the canonical string", "[reports]") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("hello") == fnv1a_hex("hello"));
    CHECK(fnv1a_hex("hello") != fnv1a_hex("hellp"));
}

TEST_CASE("identity suites and manifests aggregate their rows", "[reports]") {
    std::vector<IdentityRow> rows = {{"alpha", 0.0, 1e-12, true}, {"beta", 2.0, 1.0, false}};
    ordered_json j = identity_suite_json(rows, false);
    CHECK(j["all_pass"] == false);
    CHECK(j["rows"].size() == 2);
    CHECK(j["rows"][0]["name"] == "alpha");

    ordered_json m = manifest_json("1.0.0", "grid.n=2", 42, 2, 256, 1.0, {"a.json"}, false);
    CHECK(m["tool"] == "roughfrac");
    CHECK(m["config_hash"] == fnv1a_hex("grid.n=2"));
    CHECK(m["outputs"][0] == "a.json");
}

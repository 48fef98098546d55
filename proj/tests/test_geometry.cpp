#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "roughfrac/geometry.hpp"

using namespace roughfrac;

TEST_CASE("grid exposes cell-centered coordinates", "[geometry]") {
    Grid g(2, 1.0, 8);
    CHECK(g.spacing() == Catch::Approx(0.25));
    CHECK(g.cell_volume() == Catch::Approx(0.0625));
    CHECK(g.axis_center(0) == Catch::Approx(-0.875));
    CHECK(g.axis_center(7) == Catch::Approx(0.875));
    // centers are symmetric about the origin
    for (int i = 0; i < 8; ++i)
        CHECK(g.axis_center(i) == Catch::Approx(-g.axis_center(7 - i)));
}

TEST_CASE("axis_index inverts axis_center and clamps", "[geometry]") {
    Grid g(2, 1.5, 32);
    for (int i = 0; i < g.m(); ++i) CHECK(g.axis_index(g.axis_center(i)) == i);
    CHECK(g.axis_index(-99.0) == 0);
    CHECK(g.axis_index(99.0) == g.m() - 1);
}

TEST_CASE("flat_index enumerates cells without collision", "[geometry]") {
    Grid g(3, 1.0, 8);
    std::set<std::size_t> seen;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 8; ++k) seen.insert(g.flat_index(i, j, k));
    CHECK(seen.size() == 512);
    CHECK(*seen.rbegin() == 511);
}

TEST_CASE("grid construction validates its arguments", "[geometry]") {
    CHECK_THROWS_AS(Grid(4, 1.0, 16), InvalidGrid);
    CHECK_THROWS_AS(Grid(2, 0.0, 16), InvalidGrid);
    CHECK_THROWS_AS(Grid(2, 1.0, 6), InvalidGrid);
    CHECK_THROWS_AS(Grid(2, 1.0, 17), InvalidGrid); // odd
}

TEST_CASE("cells_in_ball matches the brute-force predicate", "[geometry]") {
    Grid g(2, 1.0, 24);
    Ball b{{0.21, -0.37, 0.0}, 0.55};
    std::set<std::pair<int, int>> expect;
    for (int i = 0; i < g.m(); ++i)
        for (int j = 0; j < g.m(); ++j) {
            double dx = g.axis_center(i) - b.center[0];
            double dy = g.axis_center(j) - b.center[1];
            if (dx * dx + dy * dy <= b.radius * b.radius) expect.insert({i, j});
        }
    std::set<std::pair<int, int>> got;
    for (const CellRun& run : cells_in_ball(g, b))
        for (int j = run.j_begin; j < run.j_end; ++j) got.insert({run.i, j});
    CHECK(got == expect);
    CHECK(count_cells_in_ball(g, b) == expect.size());
}

TEST_CASE("cell count grows with the radius and approximates the area", "[geometry]") {
    Grid g(2, 1.0, 128);
    std::size_t prev = 0;
    for (double r : {0.2, 0.4, 0.6, 0.8}) {
        std::size_t c = count_cells_in_ball(g, Ball{{0.05, 0.05, 0.0}, r});
        CHECK(c > prev);
        prev = c;
        double area = static_cast<double>(c) * g.cell_volume();
        CHECK(area == Catch::Approx(unit_ball_volume(2) * r * r).epsilon(0.05));
    }
}

TEST_CASE("radius ladder doubles every two steps", "[geometry]") {
    auto ladder = radius_ladder(0.125, 1.0);
    REQUIRE(ladder.size() == 7);
    CHECK(ladder.front() == Catch::Approx(0.125));
    CHECK(ladder.back() == Catch::Approx(1.0));
    for (std::size_t i = 2; i < ladder.size(); ++i)
        CHECK(ladder[i] == Catch::Approx(2.0 * ladder[i - 2]));
}

TEST_CASE("ball family is anchored to grid positions", "[geometry]") {
    Grid g(2, 1.0, 64);
    BallFamily fam = build_ball_family(g, 8, 0.125, 1.0);
    CHECK(fam.size() == 64 * 7); // 8x8 centers, 7-rung ladder
    CHECK(fam.provenance.stride == 8);
    std::set<double> xs;
    for (const Ball& b : fam.balls) {
        xs.insert(b.center[0]);
        CHECK(b.radius >= 0.125);
        CHECK(b.radius <= 1.0 + 1e-12);
    }
    CHECK(xs.size() == 8);

    CHECK_THROWS_AS(build_ball_family(g, 7, 0.125, 1.0), ConstraintViolation); // stride
    CHECK_THROWS_AS(build_ball_family(g, 8, 0.01, 1.0), ConstraintViolation);  // r_min < 2h
    CHECK_THROWS_AS(build_ball_family(g, 8, 0.125, 2.0), ConstraintViolation); // r_max > L
    CHECK_THROWS_AS(build_ball_family(g, 8, 0.5, 0.25), InvalidLadder); // inverted range
}

TEST_CASE("dilate scales the radius about a fixed center", "[geometry]") {
    Ball b{{0.1, 0.2, 0.0}, 0.3};
    Ball d = dilate(b, 2.0);
    CHECK(d.center[0] == b.center[0]);
    CHECK(d.center[1] == b.center[1]);
    CHECK(d.radius == Catch::Approx(0.6));
}

TEST_CASE("grid function stores finite values row-major", "[geometry]") {
    Grid g(2, 1.0, 16);
    GridFunction f(g);
    f.at(3, 5) = 2.5;
    CHECK(f[g.flat_index(3, 5)] == 2.5);
    CHECK(f.all_finite());
    f.at(0, 0) = std::nan("");
    CHECK_FALSE(f.all_finite());
}

#include <catch_amalgamated.hpp>

#include <cmath>

#include "roughfrac/params.hpp"
#include "roughfrac/sphere_kernel.hpp"

using namespace roughfrac;

namespace {
constexpr double pi = 3.14159265358979323846;
}

TEST_CASE("expression kernels evaluate their angular formula", "[kernel]") {
    RoughKernel k = RoughKernel::expression(2, "sign(cos(theta))");
    CHECK(k.eval_angle(0.1, 0.0) == 1.0);
    CHECK(k.eval_angle(pi - 0.1, 0.0) == -1.0);
    RoughKernel a = RoughKernel::expression(2, "abs(sin(2*theta)) + 0.5");
    CHECK(a.eval_angle(pi / 4.0, 0.0) == Catch::Approx(1.5));
    CHECK(a.eval_angle(3.0 * pi / 4.0, 0.0) == Catch::Approx(1.5));
    RoughKernel c = RoughKernel::constant(2, 2.5);
    CHECK(c.eval_angle(1.234, 0.0) == 2.5);
}

TEST_CASE("a colatitude-dependent formula needs three dimensions", "[kernel]") {
    RoughKernel k = RoughKernel::expression(3, "cos(phi) * sin(theta)");
    CHECK(k.eval_angle(pi / 2.0, 0.0) == Catch::Approx(1.0));
    CHECK(k.eval_angle(pi / 2.0, pi) == Catch::Approx(-1.0));
}

TEST_CASE("malformed formulas are rejected with a parse error", "[kernel]") {
    CHECK_THROWS_AS(RoughKernel::expression(2, "cos(theta"), KernelParseError);
    CHECK_THROWS_AS(RoughKernel::expression(2, "warble(theta)"), KernelParseError);
    CHECK_THROWS_AS(RoughKernel::expression(2, ""), KernelParseError);
    CHECK_THROWS_AS(RoughKernel::expression(2, "1 +"), KernelParseError);
}

TEST_CASE("tabulated kernels reproduce their sample values exactly", "[kernel]") {
    RoughKernel src = RoughKernel::expression(2, "cos(theta)");
    RoughKernel tab = RoughKernel::tabulate(src, 128);
    REQUIRE(tab.is_table());
    CHECK(tab.table_size() == 128);
    for (int j = 0; j < 128; ++j) {
        double theta = (j + 0.5) * 2.0 * pi / 128.0;
        CHECK(tab.eval_angle(theta, 0.0) == src.eval_angle(theta, 0.0));
    }
    // off-sample angles floor to the nearest stored sample
    double theta0 = 0.5 * 2.0 * pi / 128.0;
    CHECK(tab.eval_angle(theta0 + 1e-6, 0.0) == src.eval_angle(theta0, 0.0));
}

TEST_CASE("homogeneous evaluation depends only on the direction", "[kernel]") {
    RoughKernel k = RoughKernel::expression(2, "sin(theta)");
    double a = eval_homogeneous(k, 0.3, 0.4);
    double b = eval_homogeneous(k, 3.0, 4.0);
    CHECK(a == Catch::Approx(b));
    CHECK(a == Catch::Approx(0.8));
    CHECK_THROWS_AS(eval_homogeneous(k, 0.0, 0.0), ZeroVector);
}

TEST_CASE("integral norms over the sphere match closed forms", "[kernel]") {
    RoughKernel one = RoughKernel::constant(2, 1.0);
    CHECK(sphere_norm(one, 2.0) == Catch::Approx(std::sqrt(2.0 * pi)).margin(1e-12));
    RoughKernel cosk = RoughKernel::expression(2, "cos(theta)");
    CHECK(sphere_norm(cosk, 2.0) == Catch::Approx(std::sqrt(pi)).margin(1e-9));
    CHECK(sphere_norm(cosk, OperatorParams::infinity()) == Catch::Approx(1.0).margin(1e-12));
    // |sign| integrates like the constant 1
    RoughKernel sgn = RoughKernel::tabulate(RoughKernel::expression(2, "sign(cos(theta))"), 512);
    CHECK(sphere_norm(sgn, 4.0) == Catch::Approx(std::pow(2.0 * pi, 0.25)).margin(1e-12));
    CHECK_THROWS_AS(sphere_norm(one, 0.5), ConstraintViolation);
}

TEST_CASE("three-dimensional norms carry the surface element", "[kernel]") {
    RoughKernel one3 = RoughKernel::constant(3, 1.0);
    // Product trapezoid rule in colatitude: second order, so the default
    // sampling lands within ~1e-5 and refining tightens it quadratically.
    CHECK(sphere_norm(one3, 2.0) == Catch::Approx(std::sqrt(4.0 * pi)).epsilon(1e-4));
    CHECK(sphere_norm(one3, 2.0, 8192) == Catch::Approx(std::sqrt(4.0 * pi)).epsilon(1e-6));
}

TEST_CASE("angular means separate the signed and absolute averages", "[kernel]") {
    RoughKernel sgn = RoughKernel::tabulate(RoughKernel::expression(2, "sign(cos(theta))"), 512);
    CHECK(sphere_mean(sgn) == Catch::Approx(0.0).margin(1e-12));
    CHECK(sphere_mean(sgn, /*absolute=*/true) == Catch::Approx(1.0).margin(1e-12));
    RoughKernel shifted = RoughKernel::expression(2, "2 + cos(theta)");
    CHECK(sphere_mean(shifted) == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("describe names the kernel's construction", "[kernel]") {
    CHECK(RoughKernel::constant(2, 1.5).describe().find("constant") != std::string::npos);
    RoughKernel tab = RoughKernel::tabulate(RoughKernel::expression(2, "cos(theta)"), 64);
    CHECK(tab.describe().find("64") != std::string::npos);
}

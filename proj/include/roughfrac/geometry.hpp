#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "roughfrac/errors.hpp"

namespace roughfrac {

/// Uniform Cartesian grid over the box [-L, L]^n with m cells per axis.
/// Sample points are cell centers x_i = -L + (i + 1/2) h, h = 2L/m.
/// The origin is never a cell center (m is even), which keeps power-weight
/// and log samples finite everywhere.
class Grid {
public:
    Grid(int n, double half_width, int m) : n_(n), half_width_(half_width), m_(m) {
        if (n != 2 && n != 3)
            throw InvalidGrid("Grid: dimension must be 2 or 3, got " + std::to_string(n));
        if (!(half_width > 0.0))
            throw InvalidGrid("Grid: half_width must be positive");
        if (m < 8 || m % 2 != 0)
            throw InvalidGrid("Grid: m must be even and >= 8, got " + std::to_string(m));
    }

    int n() const { return n_; }
    double half_width() const { return half_width_; }
    int m() const { return m_; }
    double spacing() const { return 2.0 * half_width_ / m_; }

    /// Coordinate of the i-th cell center along any axis.
    double axis_center(int i) const { return -half_width_ + (i + 0.5) * spacing(); }

    /// Index of the cell whose center is nearest to coordinate x (clamped to the box).
    int axis_index(double x) const {
        int i = static_cast<int>(std::floor((x + half_width_) / spacing()));
        if (i < 0) i = 0;
        if (i >= m_) i = m_ - 1;
        return i;
    }

    std::size_t num_cells() const {
        std::size_t c = static_cast<std::size_t>(m_) * m_;
        return n_ == 3 ? c * m_ : c;
    }

    /// Row-major flat index; axes ordered (x0, x1[, x2]), last axis fastest.
    std::size_t flat_index(int i, int j, int k = 0) const {
        std::size_t idx = static_cast<std::size_t>(i) * m_ + j;
        return n_ == 3 ? idx * m_ + k : idx;
    }

    double cell_volume() const {
        double h = spacing();
        return n_ == 3 ? h * h * h : h * h;
    }

    bool operator==(const Grid& o) const {
        return n_ == o.n_ && half_width_ == o.half_width_ && m_ == o.m_;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }

private:
    int n_;
    double half_width_;
    int m_;
};

/// Real-valued function sampled at the cell centers of a Grid, implicitly zero
/// outside the box (compact-support convention). Storage is row-major.
class GridFunction {
public:
    explicit GridFunction(const Grid& grid, double fill = 0.0)
        : grid_(grid), values_(grid.num_cells(), fill) {}

    GridFunction(const Grid& grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.num_cells())
            throw InvalidGrid("GridFunction: value count does not match grid");
    }

    const Grid& grid() const { return grid_; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& at(int i, int j, int k = 0) { return values_[grid_.flat_index(i, j, k)]; }
    double at(int i, int j, int k = 0) const { return values_[grid_.flat_index(i, j, k)]; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Euclidean ball B(x0, r). The center is a point of the box, not necessarily
/// a cell center; only the first n coordinates are meaningful.
struct Ball {
    std::array<double, 3> center{0.0, 0.0, 0.0};
    double radius = 0.0;
};

inline Ball dilate(const Ball& b, double lambda) {
    if (!(lambda > 0.0))
        throw ConstraintViolation("dilate: lambda must be positive");
    return Ball{b.center, b.radius * lambda};
}

/// Provenance of a BallFamily: enough to rebuild it bit-identically and to
/// stamp every supremum-type result with the family that produced it.
struct FamilyProvenance {
    int grid_m = 0;
    double grid_half_width = 0.0;
    int stride = 0;
    double r_min = 0.0;
    double r_max = 0.0;

    std::string describe() const {
        return "m=" + std::to_string(grid_m) + " stride=" + std::to_string(stride) +
               " r_min=" + std::to_string(r_min) + " r_max=" + std::to_string(r_max);
    }
};

/// Finite surrogate for "all balls in R^n": centers on a sub-grid of cell
/// centers, radii on the geometric ladder r_j = r_min * sqrt(2)^j <= r_max.
struct BallFamily {
    std::vector<Ball> balls;
    FamilyProvenance provenance;

    bool empty() const { return balls.empty(); }
    std::size_t size() const { return balls.size(); }
};

/// Radius ladder r_j = r_min * sqrt(2)^j, truncated at r_max (inclusive up to
/// a 1e-9 relative slack so exact powers of two land on the endpoint).
inline std::vector<double> radius_ladder(double r_min, double r_max) {
    if (!(r_min > 0.0) || r_min > r_max * (1.0 + 1e-9))
        throw InvalidLadder("radius_ladder: need 0 < r_min <= r_max");
    std::vector<double> rs;
    for (int j = 0;; ++j) {
        double r = r_min * std::pow(2.0, 0.5 * j);
        if (r > r_max * (1.0 + 1e-9)) break;
        rs.push_back(r);
    }
    return rs;
}

/// Default centered-ball radius ladder for the sup-over-r maximal operators:
/// r from 2h up to r_max in sqrt(2) steps.
inline std::vector<double> maximal_ladder(const Grid& grid, double r_max) {
    return radius_ladder(2.0 * grid.spacing(), r_max);
}

/// Deterministic family: centers at cell indices i with i == m/2 (mod stride)
/// on every axis (stride = m degenerates to the single cell nearest the
/// origin), radii on the sqrt(2) ladder. Sorted by center then radius.
inline BallFamily build_ball_family(const Grid& grid, int stride, double r_min, double r_max) {
    double h = grid.spacing();
    if (r_min > r_max)
        throw InvalidLadder("build_ball_family: r_min > r_max");
    if (!(2.0 * h <= r_min * (1.0 + 1e-9)))
        throw ConstraintViolation("build_ball_family: requires r_min >= 2h");
    if (!(r_max <= grid.half_width() * (1.0 + 1e-9)))
        throw ConstraintViolation("build_ball_family: requires r_max <= L");
    if (stride <= 0 || grid.m() % stride != 0)
        throw ConstraintViolation("build_ball_family: stride must divide m");

    std::vector<int> idx;
    for (int i = 0; i < grid.m(); ++i)
        if (((i - grid.m() / 2) % stride + stride) % stride == 0) idx.push_back(i);

    std::vector<double> rs = radius_ladder(r_min, r_max);

    BallFamily fam;
    fam.provenance = FamilyProvenance{grid.m(), grid.half_width(), stride, r_min, r_max};
    auto push_center = [&](double cx, double cy, double cz) {
        for (double r : rs)
            fam.balls.push_back(Ball{{cx, cy, cz}, r});
    };
    if (grid.n() == 2) {
        for (int i : idx)
            for (int j : idx)
                push_center(grid.axis_center(i), grid.axis_center(j), 0.0);
    } else {
        for (int i : idx)
            for (int j : idx)
                for (int k : idx)
                    push_center(grid.axis_center(i), grid.axis_center(j), grid.axis_center(k));
    }
    return fam;
}

/// Contiguous run of cells [j_begin, j_end) along the last axis, at fixed
/// leading indices, whose centers lie in a closed ball.
struct CellRun {
    int i = 0;       // first-axis index
    int k = 0;       // second-axis index (n=3 only; 0 for n=2)
    int j_begin = 0; // last-axis begin
    int j_end = 0;   // last-axis end (exclusive)
};

namespace detail {

/// Tight index window [lo, hi) on one axis for centers c_j with
/// (c_j - c)^2 + d2 <= r2, refined with the exact double predicate so results
/// do not depend on sqrt rounding.
inline void axis_window(const Grid& g, double c, double d2, double r2, int& lo, int& hi) {
    double r = std::sqrt(std::max(r2 - d2, 0.0));
    double h = g.spacing(), L = g.half_width();
    int jlo = static_cast<int>(std::floor((c - r + L) / h - 0.5));
    int jhi = static_cast<int>(std::ceil((c + r + L) / h - 0.5));
    if (jlo < 0) jlo = 0;
    if (jhi > g.m() - 1) jhi = g.m() - 1;
    auto inside = [&](int j) {
        double d = g.axis_center(j) - c;
        return d * d + d2 <= r2;
    };
    while (jlo <= jhi && !inside(jlo)) ++jlo;
    while (jlo > 0 && inside(jlo - 1)) --jlo;
    while (jhi >= jlo && !inside(jhi)) --jhi;
    while (jhi < g.m() - 1 && inside(jhi + 1)) ++jhi;
    lo = jlo;
    hi = jhi + 1;
    if (lo > hi) { lo = 0; hi = 0; }
}

} // namespace detail

/// All cells whose centers lie in the closed ball, as contiguous runs along
/// the last axis, in row-major (lexicographic) order. Centers strictly outside
/// the box contribute nothing (compact-support convention).
inline std::vector<CellRun> cells_in_ball(const Grid& grid, const Ball& ball) {
    std::vector<CellRun> runs;
    double r2 = ball.radius * ball.radius;
    if (grid.n() == 2) {
        for (int i = 0; i < grid.m(); ++i) {
            double dx = grid.axis_center(i) - ball.center[0];
            double d2 = dx * dx;
            if (d2 > r2) continue;
            int lo, hi;
            detail::axis_window(grid, ball.center[1], d2, r2, lo, hi);
            if (hi > lo) runs.push_back(CellRun{i, 0, lo, hi});
        }
    } else {
        for (int i = 0; i < grid.m(); ++i) {
            double dx = grid.axis_center(i) - ball.center[0];
            double dx2 = dx * dx;
            if (dx2 > r2) continue;
            for (int k = 0; k < grid.m(); ++k) {
                double dy = grid.axis_center(k) - ball.center[1];
                double d2 = dx2 + dy * dy;
                if (d2 > r2) continue;
                int lo, hi;
                detail::axis_window(grid, ball.center[2], d2, r2, lo, hi);
                if (hi > lo) runs.push_back(CellRun{i, k, lo, hi});
            }
        }
    }
    return runs;
}

/// Number of cells with centers in the closed ball.
inline std::size_t count_cells_in_ball(const Grid& grid, const Ball& ball) {
    std::size_t c = 0;
    for (const CellRun& run : cells_in_ball(grid, ball))
        c += static_cast<std::size_t>(run.j_end - run.j_begin);
    return c;
}

/// Volume of the continuum unit ball in dimension n (v_2 = pi, v_3 = 4pi/3).
inline double unit_ball_volume(int n) {
    return n == 2 ? 3.14159265358979323846
                  : 4.0 / 3.0 * 3.14159265358979323846;
}

/// Surface measure of the unit sphere S^{n-1} (2pi for n=2, 4pi for n=3).
inline double unit_sphere_measure(int n) {
    return n == 2 ? 2.0 * 3.14159265358979323846
                  : 4.0 * 3.14159265358979323846;
}

} // namespace roughfrac

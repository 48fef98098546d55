#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "roughfrac/errors.hpp"
#include "roughfrac/geometry.hpp"

namespace roughfrac {

/// Weight function w >= 0: closed-form power |x-c|^beta, gridded nonnegative
/// samples, or the constant 1. Power weights admit closed-form radial ball
/// measures about their center, which the tests use as an oracle.
class Weight {
public:
    struct ConstantOne {};
    struct Power {
        std::array<double, 3> center;
        double beta;
    };

    static Weight power(double beta, std::array<double, 3> center = {0.0, 0.0, 0.0}) {
        Weight w;
        w.spec_ = Power{center, beta};
        return w;
    }
    static Weight one() {
        Weight w;
        w.spec_ = ConstantOne{};
        return w;
    }
    static Weight gridded(GridFunction values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
                throw NonFiniteWeight("Weight::gridded: negative or non-finite sample");
        }
        Weight w;
        w.spec_ = std::move(values);
        return w;
    }
    /// Sample any weight onto a grid (handy for "measured" checks that must
    /// not shortcut через closed forms).
    static Weight gridded_from(const Weight& src, const Grid& grid) {
        GridFunction g(grid);
        for (int i = 0; i < grid.m(); ++i)
            for (int j = 0; j < grid.m(); ++j) {
                if (grid.n() == 2) {
                    g.at(i, j) = src.eval(grid.axis_center(i), grid.axis_center(j), 0.0);
                } else {
                    for (int k = 0; k < grid.m(); ++k)
                        g.at(i, j, k) = src.eval(grid.axis_center(i), grid.axis_center(j),
                                                 grid.axis_center(k));
                }
            }
        return gridded(std::move(g));
    }

    bool is_power() const { return std::holds_alternative<Power>(spec_); }
    bool is_one() const { return std::holds_alternative<ConstantOne>(spec_); }
    bool is_gridded() const { return std::holds_alternative<GridFunction>(spec_); }
    const Power& power_spec() const { return std::get<Power>(spec_); }
    const GridFunction& grid_values() const { return std::get<GridFunction>(spec_); }

    double eval(double x, double y, double z = 0.0) const {
        if (const auto* p = std::get_if<Power>(&spec_)) {
            double dx = x - p->center[0], dy = y - p->center[1], dz = z - p->center[2];
            double r = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (r == 0.0) {
                if (p->beta > 0.0) return 0.0;
                if (p->beta == 0.0) return 1.0;
                throw NonFiniteWeight("Weight: negative power evaluated at its singularity");
            }
            return std::pow(r, p->beta);
        }
        if (std::holds_alternative<ConstantOne>(spec_)) return 1.0;
        const GridFunction& g = std::get<GridFunction>(spec_);
        int i = g.grid().axis_index(x), j = g.grid().axis_index(y);
        int k = g.grid().n() == 3 ? g.grid().axis_index(z) : 0;
        return g.at(i, j, k);
    }

    /// Sample at a cell center of `grid` (gridded weights require the same grid).
    double at_cell(const Grid& grid, int i, int j, int k = 0) const {
        if (const auto* g = std::get_if<GridFunction>(&spec_)) {
            if (g->grid() != grid)
                throw GridMismatch("Weight: gridded weight lives on a different grid");
            return g->at(i, j, k);
        }
        return eval(grid.axis_center(i), grid.axis_center(j),
                    grid.n() == 3 ? grid.axis_center(k) : 0.0);
    }

    std::string describe() const {
        if (const auto* p = std::get_if<Power>(&spec_))
            return "power:beta=" + std::to_string(p->beta);
        if (std::holds_alternative<ConstantOne>(spec_)) return "one";
        return "gridded";
    }

private:
    Weight() = default;
    std::variant<ConstantOne, Power, GridFunction> spec_;
};

/// Pointwise t-th power. Power specs stay closed form (beta -> t*beta);
/// gridded weights are checked for finiteness (0^t with t < 0 is rejected).
inline Weight raise(const Weight& w, double t) {
    if (w.is_one()) return Weight::one();
    if (w.is_power()) {
        const auto& p = w.power_spec();
        return Weight::power(p.beta * t, p.center);
    }
    const GridFunction& g = w.grid_values();
    GridFunction out(g.grid());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double v = std::pow(g[i], t);
        if (!std::isfinite(v))
            throw NonFiniteWeight("raise: non-finite cell after power " + std::to_string(t));
        out[i] = v;
    }
    return Weight::gridded(std::move(out));
}

struct WeightPair {
    Weight u;
    Weight v;
};

/// w(B) = int_B w. Closed form sigma(S^{n-1}) r^{n+beta}/(n+beta) when the
/// ball is concentric with a power weight (or the weight is constant 1);
/// otherwise a midpoint sum over cells with centers in B, with the cell
/// containing a power singularity replaced by its exact polar integral over
/// the equal-volume disc.
inline double ball_measure(const Weight& w, const Ball& ball, const Grid& grid) {
    int n = grid.n();
    if (w.is_one())
        return unit_ball_volume(n) * std::pow(ball.radius, n);
    if (w.is_power()) {
        const auto& p = w.power_spec();
        double dx = ball.center[0] - p.center[0], dy = ball.center[1] - p.center[1];
        double dz = n == 3 ? ball.center[2] - p.center[2] : 0.0;
        bool concentric = dx == 0.0 && dy == 0.0 && dz == 0.0;
        if (concentric) {
            if (n + p.beta <= 0.0)
                throw NonIntegrable("ball_measure: power weight beta <= -n on a centered ball");
            return unit_sphere_measure(n) * std::pow(ball.radius, n + p.beta) / (n + p.beta);
        }
    }
    // midpoint path
    double h = grid.spacing();
    double cellv = grid.cell_volume();
    double acc = 0.0;
    bool singular_inside = false;
    int si = -1, sj = -1, sk = -1;
    if (w.is_power() && w.power_spec().beta < 0.0) {
        const auto& p = w.power_spec();
        double d2 = 0.0;
        for (int a = 0; a < n; ++a) {
            double d = p.center[a] - ball.center[a];
            d2 += d * d;
        }
        if (d2 <= ball.radius * ball.radius &&
            std::fabs(p.center[0]) <= grid.half_width() && std::fabs(p.center[1]) <= grid.half_width()) {
            si = grid.axis_index(p.center[0]);
            sj = grid.axis_index(p.center[1]);
            sk = n == 3 ? grid.axis_index(p.center[2]) : 0;
            singular_inside = true;
            if (n + p.beta <= 0.0)
                throw NonIntegrable("ball_measure: non-integrable power singularity inside ball");
        }
    }
    for (const CellRun& run : cells_in_ball(grid, ball)) {
        for (int j = run.j_begin; j < run.j_end; ++j) {
            if (singular_inside && run.i == si &&
                ((n == 2 && j == sj) || (n == 3 && run.k == sj && j == sk))) {
                // exact polar integral over the equal-volume disc around the singularity
                const auto& p = w.power_spec();
                double rho = n == 2 ? h / std::sqrt(3.14159265358979323846)
                                    : h * std::pow(3.0 / (16.0 * std::atan(1.0)), 1.0 / 3.0);
                acc += unit_sphere_measure(n) * std::pow(rho, n + p.beta) / (n + p.beta);
            } else {
                double x = grid.axis_center(run.i);
                double y = n == 2 ? grid.axis_center(j) : grid.axis_center(run.k);
                double z = n == 3 ? grid.axis_center(j) : 0.0;
                acc += w.eval(x, y, z) * cellv;
            }
        }
    }
    return acc;
}

/// Estimated weight-class constant plus the ball that attained it.
struct WeightConstantReport {
    std::string class_tag;        // "A_p" | "A(p,q)" | "RH_r"
    std::vector<double> exponents;
    double constant = 0.0;
    Ball worst_ball;
    std::string family_provenance;
};

namespace weight_detail {

/// Plain discrete average of the t-th power of w over the cells of a ball.
/// No singular-cell replacement here: the divergence probes for out-of-class
/// power weights rely on raw cell sampling near the singularity.
inline std::optional<double> mean_power_over_ball(const Grid& grid, const Weight& w,
                                                  const Ball& ball, double t,
                                                  bool* degenerate = nullptr) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (const CellRun& run : cells_in_ball(grid, ball)) {
        for (int j = run.j_begin; j < run.j_end; ++j) {
            double v = grid.n() == 2 ? w.at_cell(grid, run.i, j)
                                     : w.at_cell(grid, run.i, run.k, j);
            if (v == 0.0 && t < 0.0) {
                if (degenerate) *degenerate = true;
                return std::nullopt;
            }
            double pv = t == 1.0 ? v : std::pow(v, t);
            if (!std::isfinite(pv)) {
                if (degenerate) *degenerate = true;
                return std::nullopt;
            }
            acc += pv;
            ++cnt;
        }
    }
    if (cnt == 0) return std::nullopt;
    return acc / static_cast<double>(cnt);
}

inline double min_over_ball(const Grid& grid, const Weight& w, const Ball& ball) {
    double mn = std::numeric_limits<double>::infinity();
    for (const CellRun& run : cells_in_ball(grid, ball))
        for (int j = run.j_begin; j < run.j_end; ++j) {
            double v = grid.n() == 2 ? w.at_cell(grid, run.i, j)
                                     : w.at_cell(grid, run.i, run.k, j);
            mn = std::min(mn, v);
        }
    return mn;
}

} // namespace weight_detail

/// Muckenhoupt A_p estimate: max over family balls of
/// (avg_B w) * (avg_B w^{-1/(p-1)})^{p-1}. Throws DegenerateWeight when w
/// vanishes on a sampled ball.
inline WeightConstantReport ap_constant(const Weight& w, double p, const BallFamily& family,
                                        const Grid& grid) {
    if (!(p > 1.0))
        throw ConstraintViolation("ap_constant: requires p > 1");
    WeightConstantReport rep;
    rep.class_tag = "A_p";
    rep.exponents = {p};
    rep.family_provenance = family.provenance.describe();
    for (const Ball& b : family.balls) {
        bool degenerate = false;
        auto m1 = weight_detail::mean_power_over_ball(grid, w, b, 1.0, &degenerate);
        auto m2 = weight_detail::mean_power_over_ball(grid, w, b, -1.0 / (p - 1.0), &degenerate);
        if (degenerate)
            throw DegenerateWeight("ap_constant: weight vanishes (or blows up) on a family ball");
        if (!m1 || !m2) continue; // ball with no sampled cells
        double est = *m1 * std::pow(*m2, p - 1.0);
        if (est > rep.constant) {
            rep.constant = est;
            rep.worst_ball = b;
        }
    }
    return rep;
}

/// Two-exponent A(p,q) estimate: max over family of
/// (avg_B w^q)^{1/q} * (avg_B w^{-p'})^{1/p'} for p > 1; at the p = 1
/// boundary the A1-style expression (avg_B w^q)^{1/q} * (ess sup_B w^{-1})
/// with ess sup realized as max over cell samples.
inline WeightConstantReport apq_constant(const Weight& w, double p, double q,
                                         const BallFamily& family, const Grid& grid) {
    if (!(p >= 1.0) || !(q > p) || !std::isfinite(q))
        throw ConstraintViolation("apq_constant: requires 1 <= p < q < infinity");
    WeightConstantReport rep;
    rep.class_tag = "A(p,q)";
    rep.exponents = {p, q};
    rep.family_provenance = family.provenance.describe();
    for (const Ball& b : family.balls) {
        bool degenerate = false;
        auto mq = weight_detail::mean_power_over_ball(grid, w, b, q, &degenerate);
        double est = 0.0;
        if (p > 1.0) {
            double pc = p / (p - 1.0);
            auto mp = weight_detail::mean_power_over_ball(grid, w, b, -pc, &degenerate);
            if (degenerate)
                throw DegenerateWeight("apq_constant: weight vanishes on a family ball");
            if (!mq || !mp) continue;
            est = std::pow(*mq, 1.0 / q) * std::pow(*mp, 1.0 / pc);
        } else {
            double mn = weight_detail::min_over_ball(grid, w, b);
            if (mn <= 0.0)
                throw DegenerateWeight("apq_constant: weight vanishes on a family ball");
            if (!mq) continue;
            est = std::pow(*mq, 1.0 / q) / mn;
        }
        if (est > rep.constant) {
            rep.constant = est;
            rep.worst_ball = b;
        }
    }
    return rep;
}

/// Reverse-Hoelder estimate: max over family of (avg_B w^r)^{1/r} / (avg_B w).
inline WeightConstantReport rh_constant(const Weight& w, double r, const BallFamily& family,
                                        const Grid& grid) {
    if (!(r > 1.0))
        throw ConstraintViolation("rh_constant: requires r > 1");
    WeightConstantReport rep;
    rep.class_tag = "RH_r";
    rep.exponents = {r};
    rep.family_provenance = family.provenance.describe();
    for (const Ball& b : family.balls) {
        bool degenerate = false;
        auto mr = weight_detail::mean_power_over_ball(grid, w, b, r, &degenerate);
        auto m1 = weight_detail::mean_power_over_ball(grid, w, b, 1.0, &degenerate);
        if (!mr || !m1 || *m1 == 0.0) continue;
        double est = std::pow(*mr, 1.0 / r) / *m1;
        if (est > rep.constant) {
            rep.constant = est;
            rep.worst_ball = b;
        }
    }
    return rep;
}

struct DoublingRow {
    Ball ball;
    double ratio = 0.0;   // w(lambda B)/w(B)
    double bound = 0.0;   // C * lambda^{np}
    bool flagged = false; // ratio > bound
};

/// Doubling check w(lambda B) <= C lambda^{np} w(B): per-ball ratios with C
/// calibrated as the max ratio at lambda = 2 over the same family (the
/// constant is existential, so the check asserts consistency, not a number).
inline std::vector<DoublingRow> check_doubling(const Weight& w, double p,
                                               const BallFamily& family, const Grid& grid,
                                               double lambda) {
    if (!(lambda >= 1.0))
        throw ConstraintViolation("check_doubling: requires lambda >= 1");
    double calib = 0.0;
    for (const Ball& b : family.balls) {
        double wb = ball_measure(w, b, grid);
        if (wb <= 0.0) continue;
        calib = std::max(calib, ball_measure(w, dilate(b, 2.0), grid) / wb);
    }
    double np = grid.n() * p;
    std::vector<DoublingRow> rows;
    rows.reserve(family.size());
    double c_over = calib / std::pow(2.0, np); // so bound(lambda=2) equals calib exactly
    for (const Ball& b : family.balls) {
        double wb = ball_measure(w, b, grid);
        if (wb <= 0.0) continue;
        DoublingRow row;
        row.ball = b;
        row.ratio = ball_measure(w, dilate(b, lambda), grid) / wb;
        row.bound = c_over * std::pow(lambda, np);
        row.flagged = row.ratio > row.bound * (1.0 + 1e-12);
        rows.push_back(row);
    }
    return rows;
}

/// Lemma-style subset comparison: returns (w(E)/w(B), (|E|/|B|)^{(r-1)/r})
/// for a cell subset E of the cells of B; both measures discrete so the
/// harness's assertion lhs <= C * rhs is a purely discrete statement.
struct SubsetComparison {
    double lhs = 0.0; // w(E)/w(B)
    double rhs = 0.0; // (|E|/|B|)^{(r-1)/r}
};

inline SubsetComparison check_rh_subset(const Weight& w, double r,
                                        const std::vector<CellRun>& subset_cells,
                                        const Ball& ball, const Grid& grid) {
    if (!(r > 1.0))
        throw ConstraintViolation("check_rh_subset: requires r > 1");
    std::size_t ne = 0;
    double we = 0.0;
    for (const CellRun& run : subset_cells)
        for (int j = run.j_begin; j < run.j_end; ++j) {
            we += grid.n() == 2 ? w.at_cell(grid, run.i, j) : w.at_cell(grid, run.i, run.k, j);
            ++ne;
        }
    if (ne == 0)
        throw EmptySubset("check_rh_subset: empty subset");
    std::size_t nb = 0;
    double wb = 0.0;
    for (const CellRun& run : cells_in_ball(grid, ball))
        for (int j = run.j_begin; j < run.j_end; ++j) {
            wb += grid.n() == 2 ? w.at_cell(grid, run.i, j) : w.at_cell(grid, run.i, run.k, j);
            ++nb;
        }
    if (nb == 0 || wb == 0.0)
        throw ZeroMeasureBall("check_rh_subset: base ball has zero weight measure");
    SubsetComparison out;
    out.lhs = we / wb;
    out.rhs = std::pow(static_cast<double>(ne) / static_cast<double>(nb), (r - 1.0) / r);
    return out;
}

} // namespace roughfrac

#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "roughfrac/errors.hpp"
#include "roughfrac/geometry.hpp"
#include "roughfrac/weights.hpp"

namespace roughfrac {

/// Value of a supremum-type norm together with the family ball that attained
/// it (the first maximizer in family order, for determinism).
struct NormResult {
    double value = 0.0;
    std::optional<Ball> maximizing_ball;
    std::string family_provenance;
};

namespace norm_detail {

inline double pow_abs(double v, double p) {
    double a = std::fabs(v);
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    return std::pow(a, p);
}

inline void require_grid(const GridFunction& f, const Grid& grid, const char* who) {
    if (f.grid() != grid)
        throw GridMismatch(std::string(who) + ": function grid differs from stated grid");
}

} // namespace norm_detail

/// || f ||_{L^p(w)} = (sum_cells |f|^p w h^n)^{1/p}, all cells of the box.
inline double weighted_lp_norm(const GridFunction& f, const Weight& w, double p) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw ConstraintViolation("weighted_lp_norm: requires 1 <= p < infinity");
    const Grid& g = f.grid();
    double cellv = g.cell_volume();
    double acc = 0.0;
    if (g.n() == 2) {
        for (int i = 0; i < g.m(); ++i)
            for (int j = 0; j < g.m(); ++j)
                acc += norm_detail::pow_abs(f.at(i, j), p) * w.at_cell(g, i, j) * cellv;
    } else {
        for (int i = 0; i < g.m(); ++i)
            for (int j = 0; j < g.m(); ++j)
                for (int k = 0; k < g.m(); ++k)
                    acc += norm_detail::pow_abs(f.at(i, j, k), p) * w.at_cell(g, i, j, k) * cellv;
    }
    return std::pow(acc, 1.0 / p);
}

/// Two-weight Morrey norm sup_B ( v(B)^{-kappa} int_B |f|^p u )^{1/p} with
/// discrete midpoint sums for both the integral and the normalizer v(B).
/// Throws ZeroMeasureBall when v(B) vanishes on a family ball with cells.
inline NormResult morrey_norm_two_weight(const GridFunction& f, const Weight& u,
                                         const Weight& v, double p, double kappa,
                                         const BallFamily& family) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw ConstraintViolation("morrey_norm_two_weight: requires 1 <= p < infinity");
    if (!(kappa > 0.0) || !(kappa < 1.0))
        throw ConstraintViolation("morrey_norm_two_weight: requires 0 < kappa < 1");
    if (family.balls.empty())
        throw ConstraintViolation("morrey_norm_two_weight: empty ball family");
    const Grid& g = f.grid();
    double cellv = g.cell_volume();
    NormResult out;
    out.family_provenance = family.provenance.describe();
    for (const Ball& b : family.balls) {
        double integral = 0.0, vmass = 0.0;
        std::size_t cells = 0;
        for (const CellRun& run : cells_in_ball(g, b)) {
            for (int j = run.j_begin; j < run.j_end; ++j) {
                double fv, uv, vv;
                if (g.n() == 2) {
                    fv = f.at(run.i, j);
                    uv = u.at_cell(g, run.i, j);
                    vv = v.at_cell(g, run.i, j);
                } else {
                    fv = f.at(run.i, run.k, j);
                    uv = u.at_cell(g, run.i, run.k, j);
                    vv = v.at_cell(g, run.i, run.k, j);
                }
                integral += norm_detail::pow_abs(fv, p) * uv * cellv;
                vmass += vv * cellv;
                ++cells;
            }
        }
        if (cells == 0) continue;
        if (vmass <= 0.0)
            throw ZeroMeasureBall("morrey_norm_two_weight: normalizing weight vanishes on a family ball");
        double val = std::pow(std::pow(vmass, -kappa) * integral, 1.0 / p);
        if (val > out.value) {
            out.value = val;
            out.maximizing_ball = b;
        }
    }
    return out;
}

/// One-weight Morrey norm sup_B ( w(B)^{-kappa} int_B |f|^p w )^{1/p}.
/// Shares the two-weight implementation, so setting u = v = w there gives
/// bit-identical values.
inline NormResult morrey_norm(const GridFunction& f, const Weight& w, double p, double kappa,
                              const BallFamily& family) {
    return morrey_norm_two_weight(f, w, w, p, kappa, family);
}

/// sup_B ( |B|^{-1} int_B |b - b_B|^p )^{1/p} with unweighted cell means;
/// p = 1 is the BMO norm itself.
inline NormResult bmo_lp_oscillation(const GridFunction& b, double p, const BallFamily& family) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw ConstraintViolation("bmo_lp_oscillation: requires 1 <= p < infinity");
    if (family.balls.empty())
        throw ConstraintViolation("bmo_lp_oscillation: empty ball family");
    const Grid& g = b.grid();
    NormResult out;
    out.family_provenance = family.provenance.describe();
    for (const Ball& ball : family.balls) {
        auto runs = cells_in_ball(g, ball);
        double mean = 0.0;
        std::size_t cells = 0;
        for (const CellRun& run : runs)
            for (int j = run.j_begin; j < run.j_end; ++j) {
                mean += g.n() == 2 ? b.at(run.i, j) : b.at(run.i, run.k, j);
                ++cells;
            }
        if (cells == 0) continue;
        mean /= static_cast<double>(cells);
        double osc = 0.0;
        for (const CellRun& run : runs)
            for (int j = run.j_begin; j < run.j_end; ++j) {
                double v = g.n() == 2 ? b.at(run.i, j) : b.at(run.i, run.k, j);
                osc += norm_detail::pow_abs(v - mean, p);
            }
        double val = std::pow(osc / static_cast<double>(cells), 1.0 / p);
        if (val > out.value) {
            out.value = val;
            out.maximizing_ball = ball;
        }
    }
    return out;
}

/// BMO norm: the p = 1 mean oscillation (same code path, hence exact
/// coincidence with bmo_lp_oscillation at p = 1).
inline NormResult bmo_norm(const GridFunction& b, const BallFamily& family) {
    return bmo_lp_oscillation(b, 1.0, family);
}

/// Weighted mean oscillation sup_B ( mu(B)^{-1} int_B |b - b_B|^q mu )^{1/q}
/// with the *unweighted* ball mean b_B, as in commutator estimates.
inline NormResult weighted_oscillation(const GridFunction& b, double q, const Weight& mu,
                                       const BallFamily& family) {
    if (!(q >= 1.0) || !std::isfinite(q))
        throw ConstraintViolation("weighted_oscillation: requires 1 <= q < infinity");
    if (family.balls.empty())
        throw ConstraintViolation("weighted_oscillation: empty ball family");
    const Grid& g = b.grid();
    double cellv = g.cell_volume();
    NormResult out;
    out.family_provenance = family.provenance.describe();
    for (const Ball& ball : family.balls) {
        auto runs = cells_in_ball(g, ball);
        double mean = 0.0;
        std::size_t cells = 0;
        for (const CellRun& run : runs)
            for (int j = run.j_begin; j < run.j_end; ++j) {
                mean += g.n() == 2 ? b.at(run.i, j) : b.at(run.i, run.k, j);
                ++cells;
            }
        if (cells == 0) continue;
        mean /= static_cast<double>(cells);
        double osc = 0.0, mmass = 0.0;
        for (const CellRun& run : runs)
            for (int j = run.j_begin; j < run.j_end; ++j) {
                double bv, mv;
                if (g.n() == 2) {
                    bv = b.at(run.i, j);
                    mv = mu.at_cell(g, run.i, j);
                } else {
                    bv = b.at(run.i, run.k, j);
                    mv = mu.at_cell(g, run.i, run.k, j);
                }
                osc += norm_detail::pow_abs(bv - mean, q) * mv * cellv;
                mmass += mv * cellv;
            }
        if (mmass <= 0.0)
            throw ZeroMeasureBall("weighted_oscillation: weight vanishes on a family ball");
        double val = std::pow(osc / mmass, 1.0 / q);
        if (val > out.value) {
            out.value = val;
            out.maximizing_ball = ball;
        }
    }
    return out;
}

} // namespace roughfrac

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "roughfrac/errors.hpp"
#include "roughfrac/geometry.hpp"
#include "roughfrac/sphere_kernel.hpp"

#if defined(__AVX512F__) || defined(__AVX2__)
#include <immintrin.h>
#endif

namespace roughfrac {

/// Treatment of the cell containing the kernel singularity (the self cell).
enum class SingularRule {
    disc,      // replace by the exact integral over the equal-volume disc,
               // with the kernel's angular mean as the angular factor
    exclusion  // drop the self cell entirely
};

/// Quadrature controls for the convolution-type operators. The defaults give
/// the plain midpoint scheme; near_field_radius_cells = k > 0 upgrades every
/// kernel-table entry at offsets |z| <= k h to the exact integral of the
/// kernel over that cell (tensor Gauss-Legendre), and the self cell to its
/// exact polar-coordinate integral. The upgraded scheme restores full
/// first-order convergence that the midpoint rule loses to the |z|^{alpha-n}
/// singularity near the origin.
struct QuadratureSpec {
    SingularRule rule = SingularRule::disc;
    int near_field_radius_cells = 0;
    int gauss_order = 20;
    int angular_samples = 4096;
};

namespace op_detail {

/// Gauss-Legendre nodes and weights on [-1, 1], generated by Newton iteration
/// on the Legendre recurrence (deterministic for a fixed libm).
inline void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 2 || order > 64)
        throw ConstraintViolation("gauss_legendre: order must be in [2, 64]");
    nodes.assign(order, 0.0);
    weights.assign(order, 0.0);
    const double pi = 3.14159265358979323846;
    int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
}

} // namespace op_detail

/// Integer-offset kernel table: entry c_d at offset d (|d_i| <= m-1) is the
/// per-cell constant so that the discrete operator reads
///     (T f)(x) = h^n * sum_d c_d f(x - d h).
/// Far field: c_d = Omega(d') (|d| h)^{alpha - n}. Self cell: per the
/// SingularRule (disc mean or zero), or the exact polar integral when the
/// near-field upgrade is on. The absolute variant tabulates |Omega| instead,
/// for domination comparisons and absolute commutators.
class KernelTable {
public:
    KernelTable(const Grid& grid, const RoughKernel& kernel, double alpha,
                const QuadratureSpec& quad = {}, bool absolute = false)
        : grid_(grid), alpha_(alpha), absolute_(absolute),
          rule_(quad.rule), near_field_(quad.near_field_radius_cells) {
        if (kernel.n() != grid.n())
            throw GridMismatch("KernelTable: kernel dimension differs from grid");
        if (!(alpha > 0.0) || !(alpha < grid.n()))
            throw InvalidAlpha("KernelTable: requires 0 < alpha < n");
        if (quad.near_field_radius_cells < 0)
            throw ConstraintViolation("KernelTable: near_field_radius_cells must be >= 0");
        m_ = grid.m();
        span_ = 2 * m_ - 1;
        describe_ = kernel.describe() + (absolute ? "|abs" : "") +
                    (rule_ == SingularRule::disc ? "|disc" : "|exclusion") +
                    "|nf=" + std::to_string(near_field_);
        if (grid.n() == 2)
            build2(kernel, quad);
        else
            build3(kernel, quad);
    }

    const Grid& grid() const { return grid_; }
    double alpha() const { return alpha_; }
    bool absolute() const { return absolute_; }
    const std::string& describe() const { return describe_; }
    int span() const { return span_; }

    double at_offset(int d0, int d1, int d2 = 0) const {
        if (std::abs(d0) > m_ - 1 || std::abs(d1) > m_ - 1 || std::abs(d2) > m_ - 1)
            throw ConstraintViolation("KernelTable: offset outside the table");
        std::size_t idx = static_cast<std::size_t>(d0 + m_ - 1) * span_ + (d1 + m_ - 1);
        if (grid_.n() == 3) idx = idx * span_ + (d2 + m_ - 1);
        return vals_[idx];
    }

    /// n=2 hot-loop accessor: row2(d0)[d1] = entry at offset (d0, d1).
    const double* row2(int d0) const {
        return vals_.data() + static_cast<std::size_t>(d0 + m_ - 1) * span_ + (m_ - 1);
    }
    /// n=3 analog: row3(d0, d1)[d2].
    const double* row3(int d0, int d1) const {
        return vals_.data() +
               (static_cast<std::size_t>(d0 + m_ - 1) * span_ + (d1 + m_ - 1)) * span_ + (m_ - 1);
    }

private:
    double angular(const RoughKernel& kernel, double y0, double y1, double y2) const {
        double v = eval_homogeneous(kernel, y0, y1, y2);
        if (!std::isfinite(v))
            throw NonIntegrable("KernelTable: non-finite kernel value");
        return absolute_ ? std::fabs(v) : v;
    }

    double self_value2(const RoughKernel& kernel, const QuadratureSpec& quad) const {
        double h = grid_.spacing();
        if (near_field_ > 0 && rule_ == SingularRule::disc) {
            // exact polar integral over the square cell: (1/(alpha h^2)) *
            // int Omega(theta) R(theta)^alpha dtheta, R = (h/2)/max(|cos|,|sin|)
            int M = quad.angular_samples < 512 ? 512 : quad.angular_samples;
            if (kernel.is_table()) {
                int T = kernel.table_size();
                M = T * ((M + T - 1) / T);
            }
            const double two_pi = 2.0 * 3.14159265358979323846;
            double acc = 0.0;
            for (int j = 0; j < M; ++j) {
                double th = j * two_pi / M;
                double om = kernel.eval_angle(th, 0.0);
                if (absolute_) om = std::fabs(om);
                double den = std::max(std::fabs(std::cos(th)), std::fabs(std::sin(th)));
                acc += om * std::pow(0.5 * h / den, alpha_);
            }
            return acc * (two_pi / M) / (alpha_ * h * h);
        }
        if (rule_ == SingularRule::exclusion) return 0.0;
        double mean = sphere_mean(kernel, absolute_, quad.angular_samples);
        double rho = h / std::sqrt(3.14159265358979323846); // equal-area disc radius
        return mean * unit_sphere_measure(2) * std::pow(rho, alpha_) / (alpha_ * h * h);
    }

    double self_value3(const RoughKernel& kernel, const QuadratureSpec& quad) const {
        double h = grid_.spacing();
        if (near_field_ > 0 && rule_ == SingularRule::disc) {
            const double pi = 3.14159265358979323846;
            int Mt = 256, Mp = 512;
            double acc = 0.0;
            for (int i = 0; i <= Mt; ++i) {
                double th = i * pi / Mt;
                double wt = ((i == 0 || i == Mt) ? 0.5 : 1.0) * std::sin(th);
                double st = std::sin(th), ct = std::cos(th);
                for (int j = 0; j < Mp; ++j) {
                    double ph = j * 2.0 * pi / Mp;
                    double cmax = std::max({std::fabs(st * std::cos(ph)),
                                            std::fabs(st * std::sin(ph)), std::fabs(ct)});
                    double om = kernel.eval_angle(th, ph);
                    if (absolute_) om = std::fabs(om);
                    acc += wt * om * std::pow(0.5 * h / cmax, alpha_);
                }
            }
            acc *= (pi / Mt) * (2.0 * pi / Mp);
            return acc / (alpha_ * h * h * h);
        }
        if (rule_ == SingularRule::exclusion) return 0.0;
        double mean = sphere_mean(kernel, absolute_, quad.angular_samples);
        double rho = h * std::pow(3.0 / (4.0 * 3.14159265358979323846), 1.0 / 3.0);
        return mean * unit_sphere_measure(3) * std::pow(rho, alpha_) / (alpha_ * h * h * h);
    }

    void build2(const RoughKernel& kernel, const QuadratureSpec& quad) {
        double h = grid_.spacing();
        vals_.assign(static_cast<std::size_t>(span_) * span_, 0.0);
        std::vector<double> gn, gw;
        if (near_field_ > 0) op_detail::gauss_legendre(quad.gauss_order, gn, gw);
        long nf2 = static_cast<long>(near_field_) * near_field_;
        for (int d0 = -(m_ - 1); d0 <= m_ - 1; ++d0) {
            double* row = vals_.data() + static_cast<std::size_t>(d0 + m_ - 1) * span_ + (m_ - 1);
            for (int d1 = -(m_ - 1); d1 <= m_ - 1; ++d1) {
                if (d0 == 0 && d1 == 0) {
                    row[d1] = self_value2(kernel, quad);
                    continue;
                }
                long r2 = static_cast<long>(d0) * d0 + static_cast<long>(d1) * d1;
                if (near_field_ > 0 && r2 <= nf2) {
                    // exact cell integral / h^2 by tensor Gauss-Legendre
                    double acc = 0.0;
                    for (std::size_t a = 0; a < gn.size(); ++a) {
                        double y0 = (d0 + 0.5 * gn[a]) * h;
                        for (std::size_t b = 0; b < gn.size(); ++b) {
                            double y1 = (d1 + 0.5 * gn[b]) * h;
                            double r = std::sqrt(y0 * y0 + y1 * y1);
                            acc += gw[a] * gw[b] *
                                   angular(kernel, y0, y1, 0.0) * std::pow(r, alpha_ - 2.0);
                        }
                    }
                    row[d1] = 0.25 * acc;
                } else {
                    double r = std::sqrt(static_cast<double>(r2)) * h;
                    row[d1] = angular(kernel, d0, d1, 0.0) * std::pow(r, alpha_ - 2.0);
                }
            }
        }
    }

    void build3(const RoughKernel& kernel, const QuadratureSpec& quad) {
        double h = grid_.spacing();
        vals_.assign(static_cast<std::size_t>(span_) * span_ * span_, 0.0);
        std::vector<double> gn, gw;
        if (near_field_ > 0) op_detail::gauss_legendre(std::min(quad.gauss_order, 12), gn, gw);
        long nf2 = static_cast<long>(near_field_) * near_field_;
        for (int d0 = -(m_ - 1); d0 <= m_ - 1; ++d0)
            for (int d1 = -(m_ - 1); d1 <= m_ - 1; ++d1) {
                double* row = const_cast<double*>(row3(d0, d1));
                for (int d2 = -(m_ - 1); d2 <= m_ - 1; ++d2) {
                    if (d0 == 0 && d1 == 0 && d2 == 0) {
                        row[d2] = self_value3(kernel, quad);
                        continue;
                    }
                    long r2 = static_cast<long>(d0) * d0 + static_cast<long>(d1) * d1 +
                              static_cast<long>(d2) * d2;
                    if (near_field_ > 0 && r2 <= nf2) {
                        double acc = 0.0;
                        for (std::size_t a = 0; a < gn.size(); ++a) {
                            double y0 = (d0 + 0.5 * gn[a]) * h;
                            for (std::size_t b = 0; b < gn.size(); ++b) {
                                double y1 = (d1 + 0.5 * gn[b]) * h;
                                for (std::size_t c = 0; c < gn.size(); ++c) {
                                    double y2 = (d2 + 0.5 * gn[c]) * h;
                                    double r = std::sqrt(y0 * y0 + y1 * y1 + y2 * y2);
                                    acc += gw[a] * gw[b] * gw[c] *
                                           angular(kernel, y0, y1, y2) *
                                           std::pow(r, alpha_ - 3.0);
                                }
                            }
                        }
                        row[d2] = 0.125 * acc;
                    } else {
                        double r = std::sqrt(static_cast<double>(r2)) * h;
                        row[d2] = angular(kernel, d0, d1, d2) * std::pow(r, alpha_ - 3.0);
                    }
                }
            }
    }

    Grid grid_;
    double alpha_;
    bool absolute_;
    SingularRule rule_;
    int near_field_;
    int m_ = 0;
    int span_ = 0;
    std::string describe_;
    std::vector<double> vals_;
};

namespace op_detail {

/// Reference correlation for one n=2 output cell: lexicographic fused
/// multiply-adds over all source cells. Every accelerated path below
/// reproduces this accumulation order per output lane bit-for-bit.
inline double corr_cell2(const KernelTable& T, const std::vector<double>& f, int m,
                         int i0, int i1) {
    double acc = 0.0;
    for (int j0 = 0; j0 < m; ++j0) {
        const double* krow = T.row2(i0 - j0);
        const double* frow = f.data() + static_cast<std::size_t>(j0) * m;
        for (int j1 = 0; j1 < m; ++j1)
            acc = std::fma(krow[i1 - j1], frow[j1], acc);
    }
    return acc;
}

inline double comm_cell2(const KernelTable& T, const std::vector<double>& b,
                         const std::vector<double>& f, int m, int i0, int i1,
                         bool absolute) {
    double bx = b[static_cast<std::size_t>(i0) * m + i1];
    double acc = 0.0;
    for (int j0 = 0; j0 < m; ++j0) {
        const double* krow = T.row2(i0 - j0);
        const double* brow = b.data() + static_cast<std::size_t>(j0) * m;
        const double* frow = f.data() + static_cast<std::size_t>(j0) * m;
        if (absolute) {
            for (int j1 = 0; j1 < m; ++j1)
                acc = std::fma(krow[i1 - j1],
                               std::fabs(bx - brow[j1]) * std::fabs(frow[j1]), acc);
        } else {
            for (int j1 = 0; j1 < m; ++j1)
                acc = std::fma(krow[i1 - j1], (bx - brow[j1]) * frow[j1], acc);
        }
    }
    return acc;
}

#if defined(__AVX512F__)

inline __m512d abs_pd512(__m512d x) {
    return _mm512_castsi512_pd(
        _mm512_and_si512(_mm512_castpd_si512(x), _mm512_set1_epi64(0x7fffffffffffffffLL)));
}

/// 32 outputs (one row segment) per block, 4 zmm accumulators; each lane runs
/// the same jy-major / jx-minor fma sequence as corr_cell2.
inline void corr_block2_avx512(const KernelTable& T, const double* f, int m,
                               int i0, int i1_0, double* out_row) {
    __m512d a0 = _mm512_setzero_pd(), a1 = _mm512_setzero_pd();
    __m512d a2 = _mm512_setzero_pd(), a3 = _mm512_setzero_pd();
    for (int j0 = 0; j0 < m; ++j0) {
        const double* krow = T.row2(i0 - j0);
        const double* frow = f + static_cast<std::size_t>(j0) * m;
        for (int j1 = 0; j1 < m; ++j1) {
            __m512d fv = _mm512_set1_pd(frow[j1]);
            const double* kp = krow + (i1_0 - j1);
            a0 = _mm512_fmadd_pd(_mm512_loadu_pd(kp + 0), fv, a0);
            a1 = _mm512_fmadd_pd(_mm512_loadu_pd(kp + 8), fv, a1);
            a2 = _mm512_fmadd_pd(_mm512_loadu_pd(kp + 16), fv, a2);
            a3 = _mm512_fmadd_pd(_mm512_loadu_pd(kp + 24), fv, a3);
        }
    }
    _mm512_storeu_pd(out_row + i1_0 + 0, a0);
    _mm512_storeu_pd(out_row + i1_0 + 8, a1);
    _mm512_storeu_pd(out_row + i1_0 + 16, a2);
    _mm512_storeu_pd(out_row + i1_0 + 24, a3);
}

inline void comm_block2_avx512(const KernelTable& T, const double* b, const double* f, int m,
                               int i0, int i1_0, double* out_row, bool absolute) {
    __m512d a0 = _mm512_setzero_pd(), a1 = _mm512_setzero_pd();
    __m512d a2 = _mm512_setzero_pd(), a3 = _mm512_setzero_pd();
    const double* bx_row = b + static_cast<std::size_t>(i0) * m + i1_0;
    __m512d bx0 = _mm512_loadu_pd(bx_row + 0);
    __m512d bx1 = _mm512_loadu_pd(bx_row + 8);
    __m512d bx2 = _mm512_loadu_pd(bx_row + 16);
    __m512d bx3 = _mm512_loadu_pd(bx_row + 24);
    for (int j0 = 0; j0 < m; ++j0) {
        const double* krow = T.row2(i0 - j0);
        const double* brow = b + static_cast<std::size_t>(j0) * m;
        const double* frow = f + static_cast<std::size_t>(j0) * m;
        for (int j1 = 0; j1 < m; ++j1) {
            const double* kp = krow + (i1_0 - j1);
            __m512d bj = _mm512_set1_pd(brow[j1]);
            __m512d g0, g1, g2, g3;
            if (absolute) {
                __m512d fj = _mm512_set1_pd(std::fabs(frow[j1]));
                g0 = _mm512_mul_pd(abs_pd512(_mm512_sub_pd(bx0, bj)), fj);
                g1 = _mm512_mul_pd(abs_pd512(_mm512_sub_pd(bx1, bj)), fj);
                g2 = _mm512_mul_pd(abs_pd512(_mm512_sub_pd(bx2, bj)), fj);
                g3 = _mm512_mul_pd(abs_pd512(_mm512_sub_pd(bx3, bj)), fj);
            } else {
                __m512d fj = _mm512_set1_pd(frow[j1]);
                g0 = _mm512_mul_pd(_mm512_sub_pd(bx0, bj), fj);
                g1 = _mm512_mul_pd(_mm512_sub_pd(bx1, bj), fj);
                g2 = _mm512_mul_pd(_mm512_sub_pd(bx2, bj), fj);
                g3 = _mm512_mul_pd(_mm512_sub_pd(bx3, bj), fj);
            }
            a0 = _mm512_fmadd_pd(_mm512_loadu_pd(kp + 0), g0, a0);
            a1 = _mm512_fmadd_pd(_mm512_loadu_pd(kp + 8), g1, a1);
            a2 = _mm512_fmadd_pd(_mm512_loadu_pd(kp + 16), g2, a2);
            a3 = _mm512_fmadd_pd(_mm512_loadu_pd(kp + 24), g3, a3);
        }
    }
    _mm512_storeu_pd(out_row + i1_0 + 0, a0);
    _mm512_storeu_pd(out_row + i1_0 + 8, a1);
    _mm512_storeu_pd(out_row + i1_0 + 16, a2);
    _mm512_storeu_pd(out_row + i1_0 + 24, a3);
}

#elif defined(__AVX2__) && defined(__FMA__)

inline __m256d abs_pd256(__m256d x) {
    return _mm256_and_pd(x, _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL)));
}

inline void corr_block2_avx2(const KernelTable& T, const double* f, int m,
                             int i0, int i1_0, double* out_row) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    for (int j0 = 0; j0 < m; ++j0) {
        const double* krow = T.row2(i0 - j0);
        const double* frow = f + static_cast<std::size_t>(j0) * m;
        for (int j1 = 0; j1 < m; ++j1) {
            __m256d fv = _mm256_set1_pd(frow[j1]);
            const double* kp = krow + (i1_0 - j1);
            a0 = _mm256_fmadd_pd(_mm256_loadu_pd(kp + 0), fv, a0);
            a1 = _mm256_fmadd_pd(_mm256_loadu_pd(kp + 4), fv, a1);
            a2 = _mm256_fmadd_pd(_mm256_loadu_pd(kp + 8), fv, a2);
            a3 = _mm256_fmadd_pd(_mm256_loadu_pd(kp + 12), fv, a3);
        }
    }
    _mm256_storeu_pd(out_row + i1_0 + 0, a0);
    _mm256_storeu_pd(out_row + i1_0 + 4, a1);
    _mm256_storeu_pd(out_row + i1_0 + 8, a2);
    _mm256_storeu_pd(out_row + i1_0 + 12, a3);
}

inline void comm_block2_avx2(const KernelTable& T, const double* b, const double* f, int m,
                             int i0, int i1_0, double* out_row, bool absolute) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    const double* bx_row = b + static_cast<std::size_t>(i0) * m + i1_0;
    __m256d bx0 = _mm256_loadu_pd(bx_row + 0);
    __m256d bx1 = _mm256_loadu_pd(bx_row + 4);
    __m256d bx2 = _mm256_loadu_pd(bx_row + 8);
    __m256d bx3 = _mm256_loadu_pd(bx_row + 12);
    for (int j0 = 0; j0 < m; ++j0) {
        const double* krow = T.row2(i0 - j0);
        const double* brow = b + static_cast<std::size_t>(j0) * m;
        const double* frow = f + static_cast<std::size_t>(j0) * m;
        for (int j1 = 0; j1 < m; ++j1) {
            const double* kp = krow + (i1_0 - j1);
            __m256d bj = _mm256_set1_pd(brow[j1]);
            __m256d g0, g1, g2, g3;
            if (absolute) {
                __m256d fj = _mm256_set1_pd(std::fabs(frow[j1]));
                g0 = _mm256_mul_pd(abs_pd256(_mm256_sub_pd(bx0, bj)), fj);
                g1 = _mm256_mul_pd(abs_pd256(_mm256_sub_pd(bx1, bj)), fj);
                g2 = _mm256_mul_pd(abs_pd256(_mm256_sub_pd(bx2, bj)), fj);
                g3 = _mm256_mul_pd(abs_pd256(_mm256_sub_pd(bx3, bj)), fj);
            } else {
                __m256d fj = _mm256_set1_pd(frow[j1]);
                g0 = _mm256_mul_pd(_mm256_sub_pd(bx0, bj), fj);
                g1 = _mm256_mul_pd(_mm256_sub_pd(bx1, bj), fj);
                g2 = _mm256_mul_pd(_mm256_sub_pd(bx2, bj), fj);
                g3 = _mm256_mul_pd(_mm256_sub_pd(bx3, bj), fj);
            }
            a0 = _mm256_fmadd_pd(_mm256_loadu_pd(kp + 0), g0, a0);
            a1 = _mm256_fmadd_pd(_mm256_loadu_pd(kp + 4), g1, a1);
            a2 = _mm256_fmadd_pd(_mm256_loadu_pd(kp + 8), g2, a2);
            a3 = _mm256_fmadd_pd(_mm256_loadu_pd(kp + 12), g3, a3);
        }
    }
    _mm256_storeu_pd(out_row + i1_0 + 0, a0);
    _mm256_storeu_pd(out_row + i1_0 + 4, a1);
    _mm256_storeu_pd(out_row + i1_0 + 8, a2);
    _mm256_storeu_pd(out_row + i1_0 + 12, a3);
}

#endif

inline void corr_grid2(const KernelTable& T, const std::vector<double>& f, int m,
                       std::vector<double>& out) {
#if defined(__AVX512F__)
    constexpr int B = 32;
#elif defined(__AVX2__) && defined(__FMA__)
    constexpr int B = 16;
#else
    constexpr int B = 0;
#endif
    for (int i0 = 0; i0 < m; ++i0) {
        double* out_row = out.data() + static_cast<std::size_t>(i0) * m;
        int i1 = 0;
        if constexpr (B > 0) {
            for (; i1 + B <= m; i1 += B) {
#if defined(__AVX512F__)
                corr_block2_avx512(T, f.data(), m, i0, i1, out_row);
#elif defined(__AVX2__) && defined(__FMA__)
                corr_block2_avx2(T, f.data(), m, i0, i1, out_row);
#endif
            }
        }
        for (; i1 < m; ++i1) out_row[i1] = corr_cell2(T, f, m, i0, i1);
    }
}

inline void comm_grid2(const KernelTable& T, const std::vector<double>& b,
                       const std::vector<double>& f, int m, std::vector<double>& out,
                       bool absolute) {
#if defined(__AVX512F__)
    constexpr int B = 32;
#elif defined(__AVX2__) && defined(__FMA__)
    constexpr int B = 16;
#else
    constexpr int B = 0;
#endif
    for (int i0 = 0; i0 < m; ++i0) {
        double* out_row = out.data() + static_cast<std::size_t>(i0) * m;
        int i1 = 0;
        if constexpr (B > 0) {
            for (; i1 + B <= m; i1 += B) {
#if defined(__AVX512F__)
                comm_block2_avx512(T, b.data(), f.data(), m, i0, i1, out_row, absolute);
#elif defined(__AVX2__) && defined(__FMA__)
                comm_block2_avx2(T, b.data(), f.data(), m, i0, i1, out_row, absolute);
#endif
            }
        }
        for (; i1 < m; ++i1) out_row[i1] = comm_cell2(T, b, f, m, i0, i1, absolute);
    }
}

/// Force the scalar reference path (used by the cross-validation tests).
inline void corr_grid2_scalar(const KernelTable& T, const std::vector<double>& f, int m,
                              std::vector<double>& out) {
    for (int i0 = 0; i0 < m; ++i0) {
        double* out_row = out.data() + static_cast<std::size_t>(i0) * m;
        for (int i1 = 0; i1 < m; ++i1) out_row[i1] = corr_cell2(T, f, m, i0, i1);
    }
}

inline void comm_grid2_scalar(const KernelTable& T, const std::vector<double>& b,
                              const std::vector<double>& f, int m, std::vector<double>& out,
                              bool absolute) {
    for (int i0 = 0; i0 < m; ++i0) {
        double* out_row = out.data() + static_cast<std::size_t>(i0) * m;
        for (int i1 = 0; i1 < m; ++i1)
            out_row[i1] = comm_cell2(T, b, f, m, i0, i1, absolute);
    }
}

} // namespace op_detail

/// Rough fractional integral (T f)(x) = sum_y Omega((x-y)') |x-y|^{alpha-n}
/// f(y) h^n over all grid cells, with the singular self cell per the table's
/// quadrature rule. Accelerated and scalar builds produce identical bits.
inline GridFunction riesz_rough(const GridFunction& f, const KernelTable& table) {
    const Grid& g = f.grid();
    if (g != table.grid())
        throw GridMismatch("riesz_rough: kernel table built for a different grid");
    GridFunction out(g);
    int m = g.m();
    if (g.n() == 2) {
        op_detail::corr_grid2(table, f.values(), m, out.values());
    } else {
        for (int i0 = 0; i0 < m; ++i0)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i2 = 0; i2 < m; ++i2) {
                    double acc = 0.0;
                    for (int j0 = 0; j0 < m; ++j0)
                        for (int j1 = 0; j1 < m; ++j1) {
                            const double* krow = table.row3(i0 - j0, i1 - j1);
                            const double* frow =
                                f.values().data() +
                                (static_cast<std::size_t>(j0) * m + j1) * m;
                            for (int j2 = 0; j2 < m; ++j2)
                                acc = std::fma(krow[i2 - j2], frow[j2], acc);
                        }
                    out.at(i0, i1, i2) = acc;
                }
    }
    double cv = g.cell_volume();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= cv;
    return out;
}

inline GridFunction riesz_rough(const GridFunction& f, const RoughKernel& kernel, double alpha,
                                const QuadratureSpec& quad = {}) {
    return riesz_rough(f, KernelTable(f.grid(), kernel, alpha, quad));
}

/// Point evaluation of the same discrete operator at one cell (identical bits
/// to the full-grid result at that cell).
inline double riesz_rough_at(const GridFunction& f, const KernelTable& table, int i0, int i1,
                             int i2 = 0) {
    const Grid& g = f.grid();
    if (g != table.grid())
        throw GridMismatch("riesz_rough_at: kernel table built for a different grid");
    int m = g.m();
    double acc;
    if (g.n() == 2) {
        acc = op_detail::corr_cell2(table, f.values(), m, i0, i1);
    } else {
        acc = 0.0;
        for (int j0 = 0; j0 < m; ++j0)
            for (int j1 = 0; j1 < m; ++j1) {
                const double* krow = table.row3(i0 - j0, i1 - j1);
                const double* frow =
                    f.values().data() + (static_cast<std::size_t>(j0) * m + j1) * m;
                for (int j2 = 0; j2 < m; ++j2)
                    acc = std::fma(krow[i2 - j2], frow[j2], acc);
            }
    }
    return acc * g.cell_volume();
}

/// Which commutator is being formed: the signed kernel
/// [b, T_{Omega,alpha}] f = sum K (b(x)-b(y)) f(y) h^n, or the absolute
/// majorant with |Omega|, |b(x)-b(y)| and |f| (the domination comparator).
enum class CommutatorForm { signed_kernel, absolute };

inline GridFunction commutator_T(const GridFunction& b, const GridFunction& f,
                                 const KernelTable& table,
                                 CommutatorForm form = CommutatorForm::signed_kernel) {
    const Grid& g = f.grid();
    if (g != table.grid() || b.grid() != g)
        throw GridMismatch("commutator_T: grids of b, f and kernel table must agree");
    bool absolute = form == CommutatorForm::absolute;
    if (absolute != table.absolute())
        throw ConstraintViolation(
            "commutator_T: absolute form requires an absolute kernel table (and vice versa)");
    GridFunction out(g);
    int m = g.m();
    if (g.n() == 2) {
        op_detail::comm_grid2(table, b.values(), f.values(), m, out.values(), absolute);
    } else {
        for (int i0 = 0; i0 < m; ++i0)
            for (int i1 = 0; i1 < m; ++i1)
                for (int i2 = 0; i2 < m; ++i2) {
                    double bx = b.at(i0, i1, i2);
                    double acc = 0.0;
                    for (int j0 = 0; j0 < m; ++j0)
                        for (int j1 = 0; j1 < m; ++j1) {
                            const double* krow = table.row3(i0 - j0, i1 - j1);
                            std::size_t base = (static_cast<std::size_t>(j0) * m + j1) * m;
                            const double* brow = b.values().data() + base;
                            const double* frow = f.values().data() + base;
                            if (absolute) {
                                for (int j2 = 0; j2 < m; ++j2)
                                    acc = std::fma(krow[i2 - j2],
                                                   std::fabs(bx - brow[j2]) *
                                                       std::fabs(frow[j2]),
                                                   acc);
                            } else {
                                for (int j2 = 0; j2 < m; ++j2)
                                    acc = std::fma(krow[i2 - j2],
                                                   (bx - brow[j2]) * frow[j2], acc);
                            }
                        }
                    out.at(i0, i1, i2) = acc;
                }
    }
    double cv = g.cell_volume();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= cv;
    return out;
}

/// |f|^s cellwise (s = 1 keeps |f| without a pow call). The maximal-function
/// composition identities rely on callers and the operators sharing this
/// exact computation.
inline GridFunction abs_power(const GridFunction& f, double s) {
    if (!(s > 0.0))
        throw InvalidExponent("abs_power: requires s > 0");
    GridFunction g(f.grid());
    if (s == 1.0) {
        for (std::size_t i = 0; i < f.size(); ++i) g[i] = std::fabs(f[i]);
    } else {
        for (std::size_t i = 0; i < f.size(); ++i) g[i] = std::pow(std::fabs(f[i]), s);
    }
    return g;
}

namespace op_detail {

/// Offsets within the top ladder radius, bucketed by the first ladder radius
/// that contains them and ordered (bucket, d0, d1[, d2]). The self offset
/// carries the angular mean of |Omega| (equal-volume philosophy; it anyway
/// multiplies |b(x)-b(x)| = 0 in commutators).
struct LadderOffsets {
    struct Entry {
        int d0, d1, d2;
        double om;
    };
    std::vector<double> radii;
    std::vector<double> prefactors; // r_hat^{alpha - n}, see build_ladder_offsets
    std::vector<std::size_t> bucket_end;
    std::vector<Entry> entries;
};

inline LadderOffsets build_ladder_offsets(const Grid& grid, const RoughKernel& kernel,
                                          double alpha, const std::vector<double>& ladder) {
    if (ladder.empty())
        throw InvalidLadder("maximal operators: empty radius ladder");
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i + 1]))
            throw InvalidLadder("maximal operators: ladder radii must increase");
    if (!(alpha > 0.0) || !(alpha < grid.n()))
        throw InvalidAlpha("maximal operators: requires 0 < alpha < n");
    if (kernel.n() != grid.n())
        throw GridMismatch("maximal operators: kernel dimension differs from grid");

    LadderOffsets L;
    L.radii = ladder;

    double h = grid.spacing();
    int m = grid.m();
    double om0 = sphere_mean(kernel, /*absolute=*/true);
    std::vector<std::vector<LadderOffsets::Entry>> bins(ladder.size());
    auto bucket_of = [&](double r) -> int {
        for (std::size_t b = 0; b < ladder.size(); ++b)
            if (r <= ladder[b] * (1.0 + 1e-12)) return static_cast<int>(b);
        return -1;
    };
    if (grid.n() == 2) {
        for (int d0 = -(m - 1); d0 <= m - 1; ++d0)
            for (int d1 = -(m - 1); d1 <= m - 1; ++d1) {
                double r = std::sqrt(double(d0) * d0 + double(d1) * d1) * h;
                int b = bucket_of(r);
                if (b < 0) continue;
                double om = (d0 == 0 && d1 == 0)
                                ? om0
                                : std::fabs(eval_homogeneous(kernel, d0, d1, 0.0));
                bins[b].push_back({d0, d1, 0, om});
            }
    } else {
        for (int d0 = -(m - 1); d0 <= m - 1; ++d0)
            for (int d1 = -(m - 1); d1 <= m - 1; ++d1)
                for (int d2 = -(m - 1); d2 <= m - 1; ++d2) {
                    double r = std::sqrt(double(d0) * d0 + double(d1) * d1 + double(d2) * d2) * h;
                    int b = bucket_of(r);
                    if (b < 0) continue;
                    double om = (d0 == 0 && d1 == 0 && d2 == 0)
                                    ? om0
                                    : std::fabs(eval_homogeneous(kernel, d0, d1, d2));
                    bins[b].push_back({d0, d1, d2, om});
                }
    }
    // Normalize each rung by max(r, volume-equivalent radius of its cell set):
    // near the resolution floor the discrete ball can hold more than v_n r^n
    // of cell volume, and a nominal r^{alpha-n} there would let the discrete
    // sup exceed its continuum majorants. Inflating never shrinks the radius,
    // so per-cell comparisons against |y|^{alpha-n} kernels are preserved, and
    // r_hat -> r as h -> 0.
    double vn = unit_ball_volume(grid.n());
    for (std::size_t b = 0; b < bins.size(); ++b) {
        L.entries.insert(L.entries.end(), bins[b].begin(), bins[b].end());
        L.bucket_end.push_back(L.entries.size());
        double cell_vol = static_cast<double>(L.entries.size()) * std::pow(h, grid.n());
        double r_hat = std::max(ladder[b], std::pow(cell_vol / vn, 1.0 / grid.n()));
        L.prefactors.push_back(std::pow(r_hat, alpha - grid.n()));
    }
    return L;
}

/// S(x) += om * src(x - d) over the in-grid overlap (n=2 rows).
inline void shifted_add2(std::vector<double>& S, const std::vector<double>& src, int m,
                         int d0, int d1, double om) {
    int i0_lo = std::max(0, d0), i0_hi = m + std::min(0, d0);
    int i1_lo = std::max(0, d1), i1_hi = m + std::min(0, d1);
    for (int i0 = i0_lo; i0 < i0_hi; ++i0) {
        double* srow = S.data() + static_cast<std::size_t>(i0) * m;
        const double* arow = src.data() + static_cast<std::size_t>(i0 - d0) * m - d1;
        for (int i1 = i1_lo; i1 < i1_hi; ++i1) srow[i1] += om * arow[i1];
    }
}

inline void shifted_add_comm2(std::vector<double>& S, const std::vector<double>& b,
                              const std::vector<double>& absf, int m, int d0, int d1,
                              double om) {
    int i0_lo = std::max(0, d0), i0_hi = m + std::min(0, d0);
    int i1_lo = std::max(0, d1), i1_hi = m + std::min(0, d1);
    for (int i0 = i0_lo; i0 < i0_hi; ++i0) {
        double* srow = S.data() + static_cast<std::size_t>(i0) * m;
        const double* bxrow = b.data() + static_cast<std::size_t>(i0) * m;
        const double* byrow = b.data() + static_cast<std::size_t>(i0 - d0) * m - d1;
        const double* arow = absf.data() + static_cast<std::size_t>(i0 - d0) * m - d1;
        for (int i1 = i1_lo; i1 < i1_hi; ++i1)
            srow[i1] += om * std::fabs(bxrow[i1] - byrow[i1]) * arow[i1];
    }
}

inline void shifted_add3(std::vector<double>& S, const std::vector<double>& src, int m,
                         int d0, int d1, int d2, double om) {
    int i0_lo = std::max(0, d0), i0_hi = m + std::min(0, d0);
    int i1_lo = std::max(0, d1), i1_hi = m + std::min(0, d1);
    int i2_lo = std::max(0, d2), i2_hi = m + std::min(0, d2);
    for (int i0 = i0_lo; i0 < i0_hi; ++i0)
        for (int i1 = i1_lo; i1 < i1_hi; ++i1) {
            double* srow = S.data() + (static_cast<std::size_t>(i0) * m + i1) * m;
            const double* arow =
                src.data() + (static_cast<std::size_t>(i0 - d0) * m + (i1 - d1)) * m - d2;
            for (int i2 = i2_lo; i2 < i2_hi; ++i2) srow[i2] += om * arow[i2];
        }
}

inline void shifted_add_comm3(std::vector<double>& S, const std::vector<double>& b,
                              const std::vector<double>& absf, int m, int d0, int d1, int d2,
                              double om) {
    int i0_lo = std::max(0, d0), i0_hi = m + std::min(0, d0);
    int i1_lo = std::max(0, d1), i1_hi = m + std::min(0, d1);
    int i2_lo = std::max(0, d2), i2_hi = m + std::min(0, d2);
    for (int i0 = i0_lo; i0 < i0_hi; ++i0)
        for (int i1 = i1_lo; i1 < i1_hi; ++i1) {
            std::size_t xbase = (static_cast<std::size_t>(i0) * m + i1) * m;
            std::size_t ybase = (static_cast<std::size_t>(i0 - d0) * m + (i1 - d1)) * m - d2;
            double* srow = S.data() + xbase;
            const double* bxrow = b.data() + xbase;
            const double* byrow = b.data() + ybase;
            const double* arow = absf.data() + ybase;
            for (int i2 = i2_lo; i2 < i2_hi; ++i2)
                srow[i2] += om * std::fabs(bxrow[i2] - byrow[i2]) * arow[i2];
        }
}

} // namespace op_detail

/// Rough fractional maximal function
///     M_{Omega,alpha} f(x) = max_r r_hat^{alpha-n} sum_{|y-x| <= r} |Omega| |f| h^n
/// over the given radius ladder, where r_hat >= r is the rung's
/// volume-consistent radius (see build_ladder_offsets). Partial sums
/// accumulate annulus by annulus (bucket-major, lexicographic within a
/// bucket), so each radius reuses the previous one's work.
inline GridFunction frac_maximal_rough(const GridFunction& f, const RoughKernel& kernel,
                                       double alpha, const std::vector<double>& ladder) {
    const Grid& g = f.grid();
    auto L = op_detail::build_ladder_offsets(g, kernel, alpha, ladder);
    int m = g.m();
    std::vector<double> absf(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) absf[i] = std::fabs(f[i]);
    std::vector<double> S(f.size(), 0.0);
    GridFunction out(g); // all zeros; candidates are nonnegative
    std::size_t e = 0;
    for (std::size_t b = 0; b < L.radii.size(); ++b) {
        for (; e < L.bucket_end[b]; ++e) {
            const auto& en = L.entries[e];
            if (g.n() == 2)
                op_detail::shifted_add2(S, absf, m, en.d0, en.d1, en.om);
            else
                op_detail::shifted_add3(S, absf, m, en.d0, en.d1, en.d2, en.om);
        }
        double pref = L.prefactors[b];
        for (std::size_t i = 0; i < S.size(); ++i) {
            double c = pref * S[i];
            if (c > out[i]) out[i] = c;
        }
    }
    double cv = g.cell_volume();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= cv;
    return out;
}

/// Maximal commutator
///   [b, M_{Omega,alpha}] f(x) = max_r r^{alpha-n} sum_{|y-x|<=r}
///                               |Omega| |b(x)-b(y)| |f(y)| h^n.
inline GridFunction commutator_M(const GridFunction& b, const GridFunction& f,
                                 const RoughKernel& kernel, double alpha,
                                 const std::vector<double>& ladder) {
    const Grid& g = f.grid();
    if (b.grid() != g)
        throw GridMismatch("commutator_M: b and f live on different grids");
    auto L = op_detail::build_ladder_offsets(g, kernel, alpha, ladder);
    int m = g.m();
    std::vector<double> absf(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) absf[i] = std::fabs(f[i]);
    std::vector<double> S(f.size(), 0.0);
    GridFunction out(g);
    std::size_t e = 0;
    for (std::size_t bk = 0; bk < L.radii.size(); ++bk) {
        for (; e < L.bucket_end[bk]; ++e) {
            const auto& en = L.entries[e];
            if (g.n() == 2)
                op_detail::shifted_add_comm2(S, b.values(), absf, m, en.d0, en.d1, en.om);
            else
                op_detail::shifted_add_comm3(S, b.values(), absf, m, en.d0, en.d1, en.d2,
                                             en.om);
        }
        double pref = L.prefactors[bk];
        for (std::size_t i = 0; i < S.size(); ++i) {
            double c = pref * S[i];
            if (c > out[i]) out[i] = c;
        }
    }
    double cv = g.cell_volume();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= cv;
    return out;
}

/// Uncentered Hardy-Littlewood maximal function over an explicit ball family:
/// for each cell, the max of the discrete averages (mean of |f| over cells)
/// of the family balls containing it. Throws NoCoveringBall if some cell is
/// in no family ball.
inline GridFunction hl_maximal(const GridFunction& f, const BallFamily& family) {
    const Grid& g = f.grid();
    GridFunction out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -1.0;
    for (const Ball& ball : family.balls) {
        auto runs = cells_in_ball(g, ball);
        double sum = 0.0;
        std::size_t cnt = 0;
        for (const CellRun& run : runs)
            for (int j = run.j_begin; j < run.j_end; ++j) {
                sum += std::fabs(g.n() == 2 ? f.at(run.i, j) : f.at(run.i, run.k, j));
                ++cnt;
            }
        if (cnt == 0) continue;
        double avg = sum / static_cast<double>(cnt);
        for (const CellRun& run : runs)
            for (int j = run.j_begin; j < run.j_end; ++j) {
                double& o = g.n() == 2 ? out.at(run.i, j) : out.at(run.i, run.k, j);
                if (avg > o) o = avg;
            }
    }
    std::size_t uncovered = 0;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i] < 0.0) ++uncovered;
    if (uncovered > 0)
        throw NoCoveringBall("hl_maximal: " + std::to_string(uncovered) +
                             " cells are covered by no family ball");
    return out;
}

/// Fractional maximal function with interior exponent,
///   M_{alpha,s} f(x) = sup_{B ∋ x} ( |B|^{alpha s/n - 1} int_B |f|^s )^{1/s},
/// over an explicit uncentered ball family, with the continuum ball volume
/// |B| = v_n r^n. Requires alpha s < n (InvalidExponent otherwise).
inline GridFunction frac_maximal(const GridFunction& f, double alpha, double s,
                                 const BallFamily& family) {
    const Grid& g = f.grid();
    int n = g.n();
    if (!(alpha > 0.0) || !(alpha < n))
        throw InvalidAlpha("frac_maximal: requires 0 < alpha < n");
    if (!(s >= 1.0) || !std::isfinite(s))
        throw InvalidExponent("frac_maximal: requires 1 <= s < infinity");
    if (!(alpha * s < n))
        throw InvalidExponent("frac_maximal: requires alpha * s < n");
    GridFunction pw = abs_power(f, s);
    GridFunction best(g);
    for (std::size_t i = 0; i < best.size(); ++i) best[i] = -1.0;
    double cv = g.cell_volume();
    for (const Ball& ball : family.balls) {
        auto runs = cells_in_ball(g, ball);
        double sum = 0.0;
        std::size_t cnt = 0;
        for (const CellRun& run : runs)
            for (int j = run.j_begin; j < run.j_end; ++j) {
                sum += n == 2 ? pw.at(run.i, j) : pw.at(run.i, run.k, j);
                ++cnt;
            }
        if (cnt == 0) continue;
        double vb = unit_ball_volume(n) * std::pow(ball.radius, static_cast<double>(n));
        double P = std::pow(vb, alpha * s / n - 1.0) * (sum * cv);
        for (const CellRun& run : runs)
            for (int j = run.j_begin; j < run.j_end; ++j) {
                double& o = n == 2 ? best.at(run.i, j) : best.at(run.i, run.k, j);
                if (P > o) o = P;
            }
    }
    std::size_t uncovered = 0;
    for (std::size_t i = 0; i < best.size(); ++i)
        if (best[i] < 0.0) ++uncovered;
    if (uncovered > 0)
        throw NoCoveringBall("frac_maximal: " + std::to_string(uncovered) +
                             " cells are covered by no family ball");
    if (s != 1.0)
        for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::pow(best[i], 1.0 / s);
    return best;
}

} // namespace roughfrac

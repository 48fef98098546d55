#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "roughfrac/errors.hpp"

namespace roughfrac {

namespace kernel_detail {

constexpr double two_pi = 6.28318530717958647692;

/// Tiny closed-form angular expression grammar:
///   expr    := term (('+' | '-') term)*
///   term    := factor (('*' | '/') factor)*
///   factor  := atom ('^' integer)?
///   atom    := number | 'theta' | 'phi' | '(' expr ')' | '-' atom
///            | ('cos' | 'sin' | 'sign' | 'abs') '(' expr ')'
/// theta is the n=2 polar angle or the n=3 colatitude; phi the n=3 longitude.
struct ExprNode {
    enum class Kind { Number, Theta, Phi, Add, Sub, Mul, Div, Pow, Neg, Cos, Sin, Sign, Abs };
    Kind kind;
    double number = 0.0;
    int ipow = 1;
    std::unique_ptr<ExprNode> lhs, rhs;

    double eval(double theta, double phi) const {
        switch (kind) {
            case Kind::Number: return number;
            case Kind::Theta: return theta;
            case Kind::Phi: return phi;
            case Kind::Add: return lhs->eval(theta, phi) + rhs->eval(theta, phi);
            case Kind::Sub: return lhs->eval(theta, phi) - rhs->eval(theta, phi);
            case Kind::Mul: return lhs->eval(theta, phi) * rhs->eval(theta, phi);
            case Kind::Div: return lhs->eval(theta, phi) / rhs->eval(theta, phi);
            case Kind::Pow: {
                double base = lhs->eval(theta, phi);
                double r = 1.0;
                for (int i = 0; i < ipow; ++i) r *= base;
                return r;
            }
            case Kind::Neg: return -lhs->eval(theta, phi);
            case Kind::Cos: return std::cos(lhs->eval(theta, phi));
            case Kind::Sin: return std::sin(lhs->eval(theta, phi));
            case Kind::Sign: {
                double v = lhs->eval(theta, phi);
                return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
            }
            case Kind::Abs: return std::fabs(lhs->eval(theta, phi));
        }
        return 0.0;
    }
};

class ExprParser {
public:
    explicit ExprParser(std::string text) : text_(std::move(text)) {}

    std::unique_ptr<ExprNode> parse() {
        auto e = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw KernelParseError("kernel expression: trailing input at '" +
                                   text_.substr(pos_) + "'");
        return e;
    }

private:
    std::string text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    static std::unique_ptr<ExprNode> make(ExprNode::Kind k) {
        auto n = std::make_unique<ExprNode>();
        n->kind = k;
        return n;
    }
    static std::unique_ptr<ExprNode> binary(ExprNode::Kind k, std::unique_ptr<ExprNode> a,
                                            std::unique_ptr<ExprNode> b) {
        auto n = make(k);
        n->lhs = std::move(a);
        n->rhs = std::move(b);
        return n;
    }

    std::unique_ptr<ExprNode> parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (eat('+')) lhs = binary(ExprNode::Kind::Add, std::move(lhs), parse_term());
            else if (eat('-')) lhs = binary(ExprNode::Kind::Sub, std::move(lhs), parse_term());
            else return lhs;
        }
    }
    std::unique_ptr<ExprNode> parse_term() {
        auto lhs = parse_factor();
        for (;;) {
            if (eat('*')) lhs = binary(ExprNode::Kind::Mul, std::move(lhs), parse_factor());
            else if (eat('/')) lhs = binary(ExprNode::Kind::Div, std::move(lhs), parse_factor());
            else return lhs;
        }
    }
    std::unique_ptr<ExprNode> parse_factor() {
        auto base = parse_atom();
        if (eat('^')) {
            skip_ws();
            bool neg = eat('-');
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ == start || neg)
                throw KernelParseError("kernel expression: '^' needs a nonnegative integer");
            auto n = make(ExprNode::Kind::Pow);
            n->lhs = std::move(base);
            n->ipow = std::stoi(text_.substr(start, pos_ - start));
            return n;
        }
        return base;
    }
    std::unique_ptr<ExprNode> parse_atom() {
        skip_ws();
        if (eat('(')) {
            auto e = parse_expr();
            if (!eat(')')) throw KernelParseError("kernel expression: missing ')'");
            return e;
        }
        if (eat('-')) {
            auto n = make(ExprNode::Kind::Neg);
            n->lhs = parse_atom();
            return n;
        }
        char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                    text_[pos_] == 'e' || text_[pos_] == 'E' ||
                    ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
                     (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
                ++pos_;
            auto n = make(ExprNode::Kind::Number);
            n->number = std::stod(text_.substr(start, pos_ - start));
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            std::string word = text_.substr(start, pos_ - start);
            if (word == "theta") return make(ExprNode::Kind::Theta);
            if (word == "phi") return make(ExprNode::Kind::Phi);
            if (word == "pi") {
                auto n = make(ExprNode::Kind::Number);
                n->number = two_pi / 2.0;
                return n;
            }
            ExprNode::Kind k;
            if (word == "cos") k = ExprNode::Kind::Cos;
            else if (word == "sin") k = ExprNode::Kind::Sin;
            else if (word == "sign") k = ExprNode::Kind::Sign;
            else if (word == "abs") k = ExprNode::Kind::Abs;
            else throw KernelParseError("kernel expression: unknown name '" + word + "'");
            if (!eat('(')) throw KernelParseError("kernel expression: '" + word + "' needs '('");
            auto n = make(k);
            n->lhs = parse_expr();
            if (!eat(')')) throw KernelParseError("kernel expression: missing ')'");
            return n;
        }
        throw KernelParseError("kernel expression: unexpected character");
    }
};

} // namespace kernel_detail

/// Omega in L^s(S^{n-1}), homogeneous of degree zero: evaluation depends only
/// on the direction y/|y|. Three representations:
///   - constant c,
///   - closed-form angular expression in theta (n=2) or (theta, phi) (n=3),
///   - tabulated samples at equispaced angles with nearest-sample evaluation
///     (piecewise constant on angular cells, so genuinely rough kernels are
///     represented exactly).
/// Table samples live at the offset angles (j+1/2)*cell so that sign-type
/// expressions are sampled away from their zero crossings.
class RoughKernel {
public:
    static RoughKernel constant(int n, double c) {
        RoughKernel k(n);
        k.spec_ = Constant{c};
        k.describe_ = "constant:" + format_double(c);
        return k;
    }

    static RoughKernel expression(int n, const std::string& expr) {
        RoughKernel k(n);
        Expr e;
        e.text = expr;
        e.root = std::shared_ptr<const kernel_detail::ExprNode>(
            kernel_detail::ExprParser(expr).parse().release());
        k.spec_ = std::move(e);
        k.describe_ = "expr:" + expr;
        return k;
    }

    /// n=2 table from explicit samples; sample j is the value on the angular
    /// cell [j*d, (j+1)*d), d = 2pi/M, nominally taken at angle (j+1/2)*d.
    static RoughKernel table2(std::vector<double> samples) {
        if (samples.size() < 4)
            throw KernelParseError("RoughKernel::table2: need at least 4 samples");
        RoughKernel k(2);
        k.describe_ = "table2:" + std::to_string(samples.size());
        k.spec_ = Table2{std::move(samples)};
        return k;
    }

    /// n=3 table on a colatitude x longitude grid of cell-midpoint samples.
    static RoughKernel table3(int m_theta, int m_phi, std::vector<double> samples) {
        if (m_theta < 2 || m_phi < 4 ||
            samples.size() != static_cast<std::size_t>(m_theta) * m_phi)
            throw KernelParseError("RoughKernel::table3: bad table shape");
        RoughKernel k(3);
        k.describe_ = "table3:" + std::to_string(m_theta) + "x" + std::to_string(m_phi);
        k.spec_ = Table3{m_theta, m_phi, std::move(samples)};
        return k;
    }

    /// Tabulate any kernel at M equispaced offset angles (n=2).
    static RoughKernel tabulate(const RoughKernel& src, int M) {
        if (src.n() != 2)
            throw KernelParseError("RoughKernel::tabulate: n=2 only");
        std::vector<double> samples(M);
        for (int j = 0; j < M; ++j)
            samples[j] = src.eval_angle((j + 0.5) * kernel_detail::two_pi / M, 0.0);
        return table2(std::move(samples));
    }

    int n() const { return n_; }
    const std::string& describe() const { return describe_; }
    bool is_table() const { return std::holds_alternative<Table2>(spec_) ||
                                   std::holds_alternative<Table3>(spec_); }
    int table_size() const {
        if (const auto* t = std::get_if<Table2>(&spec_)) return static_cast<int>(t->samples.size());
        if (const auto* t = std::get_if<Table3>(&spec_)) return t->m_phi;
        return 0;
    }

    /// Evaluate on the angular parametrization directly: n=2 uses theta only,
    /// n=3 uses (theta = colatitude in [0, pi], phi = longitude in [0, 2pi)).
    double eval_angle(double theta, double phi) const {
        if (const auto* c = std::get_if<Constant>(&spec_)) return c->value;
        if (const auto* e = std::get_if<Expr>(&spec_)) return e->root->eval(theta, phi);
        if (const auto* t = std::get_if<Table2>(&spec_)) {
            int M = static_cast<int>(t->samples.size());
            double u = theta / kernel_detail::two_pi;
            u -= std::floor(u);
            int j = static_cast<int>(u * M);
            if (j >= M) j = M - 1;
            return t->samples[j];
        }
        const auto& t = std::get<Table3>(spec_);
        double pi = kernel_detail::two_pi / 2.0;
        double ut = theta / pi;
        if (ut < 0.0) ut = 0.0;
        int it = static_cast<int>(ut * t.m_theta);
        if (it >= t.m_theta) it = t.m_theta - 1;
        double up = phi / kernel_detail::two_pi;
        up -= std::floor(up);
        int ip = static_cast<int>(up * t.m_phi);
        if (ip >= t.m_phi) ip = t.m_phi - 1;
        return t.samples[static_cast<std::size_t>(it) * t.m_phi + ip];
    }

private:
    struct Constant { double value; };
    struct Expr {
        std::string text;
        std::shared_ptr<const kernel_detail::ExprNode> root;
    };
    struct Table2 { std::vector<double> samples; };
    struct Table3 { int m_theta; int m_phi; std::vector<double> samples; };

    explicit RoughKernel(int n) : n_(n) {
        if (n != 2 && n != 3)
            throw KernelParseError("RoughKernel: dimension must be 2 or 3");
    }

    static std::string format_double(double v) {
        std::string s = std::to_string(v);
        return s;
    }

    int n_;
    std::variant<Constant, Expr, Table2, Table3> spec_;
    std::string describe_;
};

/// Omega(y/|y|) for y != 0; invariant under y -> lambda*y, lambda > 0.
inline double eval_homogeneous(const RoughKernel& kernel, double y0, double y1, double y2 = 0.0) {
    double norm2 = y0 * y0 + y1 * y1 + (kernel.n() == 3 ? y2 * y2 : 0.0);
    if (!(norm2 > 0.0))
        throw ZeroVector("eval_homogeneous: zero direction vector");
    if (kernel.n() == 2) {
        double theta = std::atan2(y1, y0);
        if (theta < 0.0) theta += kernel_detail::two_pi;
        return kernel.eval_angle(theta, 0.0);
    }
    double r = std::sqrt(norm2);
    double ct = y2 / r;
    if (ct > 1.0) ct = 1.0;
    if (ct < -1.0) ct = -1.0;
    double theta = std::acos(ct);
    double phi = std::atan2(y1, y0);
    if (phi < 0.0) phi += kernel_detail::two_pi;
    return kernel.eval_angle(theta, phi);
}

/// ||Omega||_{L^s(S^{n-1})} by trapezoid quadrature on the angular
/// parametrization (exact for tabulated kernels because the sample count is a
/// multiple of the table size); s = infinity takes the max of |Omega| over the
/// same angular sample set. Throws NonIntegrable on non-finite samples.
inline double sphere_norm(const RoughKernel& kernel, double s, int min_samples = 512) {
    if (!(s > 1.0))
        throw ConstraintViolation("sphere_norm: requires s > 1 (or infinity)");
    bool sup_norm = (s == std::numeric_limits<double>::infinity());
    if (kernel.n() == 2) {
        int M = min_samples < 256 ? 256 : min_samples;
        if (kernel.is_table()) {
            int T = kernel.table_size();
            M = T * ((M + T - 1) / T);
        }
        double acc = 0.0, mx = 0.0;
        for (int j = 0; j < M; ++j) {
            double v = kernel.eval_angle(j * kernel_detail::two_pi / M, 0.0);
            if (!std::isfinite(v))
                throw NonIntegrable("sphere_norm: non-finite kernel sample");
            double a = std::fabs(v);
            if (a > mx) mx = a;
            if (!sup_norm) acc += std::pow(a, s);
        }
        if (sup_norm) return mx;
        double integral = acc * (kernel_detail::two_pi / M);
        return std::pow(integral, 1.0 / s);
    }
    // n = 3: product rule, colatitude x longitude with sin(theta) Jacobian.
    int Mt = min_samples < 256 ? 128 : min_samples / 2;
    int Mp = min_samples < 256 ? 256 : min_samples;
    double pi = kernel_detail::two_pi / 2.0;
    double acc = 0.0, mx = 0.0;
    for (int i = 0; i <= Mt; ++i) {
        double theta = i * pi / Mt;
        double wt = (i == 0 || i == Mt) ? 0.5 : 1.0; // trapezoid ends (sin = 0 anyway)
        for (int j = 0; j < Mp; ++j) {
            double v = kernel.eval_angle(theta, j * kernel_detail::two_pi / Mp);
            if (!std::isfinite(v))
                throw NonIntegrable("sphere_norm: non-finite kernel sample");
            double a = std::fabs(v);
            if (a > mx) mx = a;
            if (!sup_norm) acc += wt * std::pow(a, s) * std::sin(theta);
        }
    }
    if (sup_norm) return mx;
    double integral = acc * (pi / Mt) * (kernel_detail::two_pi / Mp);
    return std::pow(integral, 1.0 / s);
}

/// Mean value (1/sigma(S^{n-1})) int Omega dsigma (signed, or of |Omega|),
/// sampled like sphere_norm so tabulated kernels are averaged exactly.
inline double sphere_mean(const RoughKernel& kernel, bool absolute = false,
                          int min_samples = 4096) {
    if (kernel.n() == 2) {
        int M = min_samples < 256 ? 256 : min_samples;
        if (kernel.is_table()) {
            int T = kernel.table_size();
            M = T * ((M + T - 1) / T);
        }
        double acc = 0.0;
        for (int j = 0; j < M; ++j) {
            double v = kernel.eval_angle(j * kernel_detail::two_pi / M, 0.0);
            if (!std::isfinite(v))
                throw NonIntegrable("sphere_mean: non-finite kernel sample");
            acc += absolute ? std::fabs(v) : v;
        }
        return acc / M;
    }
    int Mt = min_samples < 256 ? 128 : min_samples / 2;
    int Mp = min_samples < 256 ? 256 : min_samples;
    double pi = kernel_detail::two_pi / 2.0;
    double acc = 0.0, wsum = 0.0;
    for (int i = 0; i <= Mt; ++i) {
        double theta = i * pi / Mt;
        double wt = ((i == 0 || i == Mt) ? 0.5 : 1.0) * std::sin(theta);
        for (int j = 0; j < Mp; ++j) {
            double v = kernel.eval_angle(theta, j * kernel_detail::two_pi / Mp);
            if (!std::isfinite(v))
                throw NonIntegrable("sphere_mean: non-finite kernel sample");
            acc += wt * (absolute ? std::fabs(v) : v);
            wsum += wt;
        }
    }
    return acc / wsum;
}

} // namespace roughfrac

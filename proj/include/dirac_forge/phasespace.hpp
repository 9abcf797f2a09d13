#pragma once

#include "dirac_forge/linalg.hpp"

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dirac_forge {

using Rational = mpq_class;

// accepts "n/d", integers and plain decimals ("0.25", "-1e-3"); decimals are read exactly
Rational parse_rational(const std::string& text);
// always "num/den"
std::string format_rational(const Rational& r);
// exact binary value of x
Rational rational_from_double(double x);

// coordinates z = (q^1..q^N, p_1..p_N)
struct PhaseSpace {
    std::size_t n_pairs = 0;
    std::vector<std::string> names;  // optional, empty means q1..qN p1..pN

    PhaseSpace() = default;
    explicit PhaseSpace(std::size_t n) : n_pairs(n) {}

    std::size_t dim() const { return 2 * n_pairs; }
    std::size_t q(std::size_t i) const { return i; }
    std::size_t p(std::size_t i) const { return n_pairs + i; }
    std::string name(std::size_t index) const;
    Mat sigma() const { return canonical_form(dim()); }
};

class PolyFunction {
public:
    using Exponents = std::vector<std::uint32_t>;

    // total degree first, then lexicographic by coordinate index
    struct GrlexLess {
        bool operator()(const Exponents& a, const Exponents& b) const;
    };
    using Terms = std::map<Exponents, Rational, GrlexLess>;

    explicit PolyFunction(std::size_t n_vars = 0) : n_vars_(n_vars) {}

    static PolyFunction constant(std::size_t n_vars, const Rational& c);
    static PolyFunction variable(std::size_t n_vars, std::size_t index);

    std::size_t n_vars() const { return n_vars_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    unsigned degree() const;
    double max_abs_coeff() const;

    void add_term(Exponents exps, const Rational& coeff);

    PolyFunction derivative(std::size_t index) const;
    // same polynomial over more variables, new ones appended
    PolyFunction padded(std::size_t n_vars) const;

    double evaluate(const Vec& z) const;
    Vec gradient(const Vec& z) const;

    PolyFunction& operator+=(const PolyFunction& o);
    PolyFunction& operator-=(const PolyFunction& o);
    PolyFunction& operator*=(const Rational& c);
    friend PolyFunction operator+(PolyFunction a, const PolyFunction& b) { return a += b; }
    friend PolyFunction operator-(PolyFunction a, const PolyFunction& b) { return a -= b; }
    friend PolyFunction operator*(const PolyFunction& a, const PolyFunction& b);
    friend PolyFunction operator*(PolyFunction a, const Rational& c) { return a *= c; }
    friend PolyFunction operator*(const Rational& c, PolyFunction a) { return a *= c; }
    PolyFunction operator-() const;
    bool operator==(const PolyFunction& o) const { return n_vars_ == o.n_vars_ && terms_ == o.terms_; }

private:
    void check_compatible(const PolyFunction& o) const;

    std::size_t n_vars_;
    Terms terms_;
};

// sum_i coeffs[i] * fs[i]
PolyFunction linear_combination(const std::vector<PolyFunction>& fs, const std::vector<Rational>& coeffs,
                                 std::size_t n_vars);

PolyFunction poisson_bracket(const PolyFunction& f, const PolyFunction& g, const PhaseSpace& space);

Vec gradient(const PolyFunction& f, const Vec& z);

// rows are gradients
Mat jacobian(const std::vector<PolyFunction>& fs, const Vec& z, std::size_t dim);

double max_constraint_value(const std::vector<PolyFunction>& fs, const Vec& z);

struct SurfaceSampleOptions {
    int max_iter = 100;
    double tol_surface = 1e-10;
    double tol_rank = 1e-9;
};

// Gauss-Newton from a seeded draw in [-1, 1]^{2N}; minimum-norm steps
Vec sample_surface_point(const PhaseSpace& space, const std::vector<PolyFunction>& constraints,
                         std::uint64_t seed, const SurfaceSampleOptions& opts = {});

// bracket matrix sigma minus the constraint correction with kernel k
Mat constrained_fundamental(const Mat& sigma, const Mat& jac, const Mat& k);
double constrained_bracket(const Vec& grad_f, const Vec& grad_g, const Mat& sigma, const Mat& jac,
                           const Mat& k);

}  // namespace dirac_forge

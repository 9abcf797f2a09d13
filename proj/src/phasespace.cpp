#include "dirac_forge/phasespace.hpp"

#include "dirac_forge/errors.hpp"
#include "dirac_forge/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace dirac_forge {

namespace {

bool all_digits(const std::string& s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

mpz_class pow10(unsigned long e)
{
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
    return r;
}

}  // namespace

Rational parse_rational(const std::string& raw)
{
    std::string text;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
    if (text.empty()) throw StructuralError("empty number");

    auto slash = text.find('/');
    if (slash != std::string::npos) {
        std::string num = text.substr(0, slash), den = text.substr(slash + 1);
        std::string num_digits = (!num.empty() && (num[0] == '-' || num[0] == '+')) ? num.substr(1) : num;
        if (!all_digits(num_digits) || !all_digits(den))
            throw StructuralError("bad rational '" + raw + "'");
        if (num[0] == '+') num = num.substr(1);
        Rational r;
        r.get_num() = mpz_class(num, 10);
        r.get_den() = mpz_class(den, 10);
        if (r.get_den() == 0) throw StructuralError("zero denominator in '" + raw + "'");
        r.canonicalize();
        return r;
    }

    // decimal with optional exponent, converted exactly
    std::size_t pos = 0;
    bool neg = false;
    if (text[pos] == '+' || text[pos] == '-') neg = text[pos++] == '-';
    std::string int_part, frac_part;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) int_part.push_back(text[pos++]);
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) frac_part.push_back(text[pos++]);
    }
    if (int_part.empty() && frac_part.empty()) throw StructuralError("bad number '" + raw + "'");
    long exp10 = 0;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
        ++pos;
        std::string e = text.substr(pos);
        std::string e_digits = (!e.empty() && (e[0] == '-' || e[0] == '+')) ? e.substr(1) : e;
        if (!all_digits(e_digits) || e_digits.size() > 6) throw StructuralError("bad exponent in '" + raw + "'");
        exp10 = std::stol(e);
        pos = text.size();
    }
    if (pos != text.size()) throw StructuralError("bad number '" + raw + "'");
    mpz_class mant(int_part + frac_part, 10);
    exp10 -= static_cast<long>(frac_part.size());
    Rational r;
    if (exp10 >= 0) {
        r = Rational(mant * pow10(static_cast<unsigned long>(exp10)));
    } else {
        r.get_num() = mant;
        r.get_den() = pow10(static_cast<unsigned long>(-exp10));
        r.canonicalize();
    }
    return neg ? Rational(-r) : r;
}

std::string format_rational(const Rational& r)
{
    Rational c = r;
    c.canonicalize();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

Rational rational_from_double(double x)
{
    if (!std::isfinite(x)) throw StructuralError("non-finite coefficient");
    return Rational(x);
}

std::string PhaseSpace::name(std::size_t index) const
{
    if (index < names.size()) return names[index];
    if (index < n_pairs) return "q" + std::to_string(index + 1);
    return "p" + std::to_string(index - n_pairs + 1);
}

bool PolyFunction::GrlexLess::operator()(const Exponents& a, const Exponents& b) const
{
    std::uint64_t da = 0, db = 0;
    for (auto e : a) da += e;
    for (auto e : b) db += e;
    if (da != db) return da < db;
    // larger exponent in an earlier coordinate sorts later
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

PolyFunction PolyFunction::constant(std::size_t n_vars, const Rational& c)
{
    PolyFunction f(n_vars);
    f.add_term(Exponents(n_vars, 0), c);
    return f;
}

PolyFunction PolyFunction::variable(std::size_t n_vars, std::size_t index)
{
    if (index >= n_vars) throw StructuralError("variable index out of range");
    PolyFunction f(n_vars);
    Exponents e(n_vars, 0);
    e[index] = 1;
    f.add_term(std::move(e), Rational(1));
    return f;
}

unsigned PolyFunction::degree() const
{
    unsigned d = 0;
    for (const auto& [e, c] : terms_) {
        unsigned s = 0;
        for (auto x : e) s += x;
        d = std::max(d, s);
    }
    return d;
}

double PolyFunction::max_abs_coeff() const
{
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c.get_d()));
    return m;
}

void PolyFunction::add_term(Exponents exps, const Rational& coeff)
{
    if (exps.size() != n_vars_)
        throw StructuralError("monomial has " + std::to_string(exps.size()) + " exponents, expected " +
                              std::to_string(n_vars_));
    Rational c = coeff;
    c.canonicalize();  // mpq_class(n, d) is not reduced on construction
    if (c == 0) return;
    auto it = terms_.find(exps);
    if (it == terms_.end()) {
        terms_.emplace(std::move(exps), c);
        return;
    }
    it->second += c;
    if (it->second == 0) terms_.erase(it);
}

PolyFunction PolyFunction::derivative(std::size_t index) const
{
    if (index >= n_vars_) throw StructuralError("derivative index out of range");
    PolyFunction d(n_vars_);
    for (const auto& [e, c] : terms_) {
        if (e[index] == 0) continue;
        Exponents ne = e;
        ne[index] -= 1;
        d.add_term(std::move(ne), c * e[index]);
    }
    return d;
}

PolyFunction PolyFunction::padded(std::size_t n_vars) const
{
    if (n_vars < n_vars_) throw StructuralError("cannot shrink polynomial variable count");
    PolyFunction out(n_vars);
    for (const auto& [e, c] : terms_) {
        Exponents ne = e;
        ne.resize(n_vars, 0);
        out.add_term(std::move(ne), c);
    }
    return out;
}

double PolyFunction::evaluate(const Vec& z) const
{
    if (static_cast<std::size_t>(z.size()) != n_vars_)
        throw StructuralError("point dimension " + std::to_string(z.size()) + " does not match " +
                              std::to_string(n_vars_));
    double sum = 0.0;
    for (const auto& [e, c] : terms_) {
        double t = c.get_d();
        for (std::size_t i = 0; i < e.size(); ++i)
            for (std::uint32_t k = 0; k < e[i]; ++k) t *= z(static_cast<Eigen::Index>(i));
        sum += t;
    }
    return sum;
}

Vec PolyFunction::gradient(const Vec& z) const
{
    if (static_cast<std::size_t>(z.size()) != n_vars_)
        throw StructuralError("point dimension " + std::to_string(z.size()) + " does not match " +
                              std::to_string(n_vars_));
    Vec g = Vec::Zero(static_cast<Eigen::Index>(n_vars_));
    std::vector<std::size_t> nz;
    for (const auto& [e, c] : terms_) {
        nz.clear();
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i]) nz.push_back(i);
        const double cd = c.get_d();
        for (std::size_t i : nz) {
            double t = cd * e[i];
            for (std::size_t j : nz) {
                std::uint32_t pw = (j == i) ? e[j] - 1 : e[j];
                for (std::uint32_t k = 0; k < pw; ++k) t *= z(static_cast<Eigen::Index>(j));
            }
            g(static_cast<Eigen::Index>(i)) += t;
        }
    }
    return g;
}

void PolyFunction::check_compatible(const PolyFunction& o) const
{
    if (n_vars_ != o.n_vars_)
        throw StructuralError("polynomials over " + std::to_string(n_vars_) + " and " + std::to_string(o.n_vars_) +
                              " variables");
}

PolyFunction& PolyFunction::operator+=(const PolyFunction& o)
{
    check_compatible(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
}

PolyFunction& PolyFunction::operator-=(const PolyFunction& o)
{
    check_compatible(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
}

PolyFunction& PolyFunction::operator*=(const Rational& c)
{
    Rational cc = c;
    cc.canonicalize();
    if (cc == 0) {
        terms_.clear();
        return *this;
    }
    for (auto& [e, v] : terms_) v *= cc;
    return *this;
}

PolyFunction operator*(const PolyFunction& a, const PolyFunction& b)
{
    a.check_compatible(b);
    PolyFunction out(a.n_vars_);
    for (const auto& [ea, ca] : a.terms_)
        for (const auto& [eb, cb] : b.terms_) {
            PolyFunction::Exponents e(ea.size());
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            out.add_term(std::move(e), ca * cb);
        }
    return out;
}

PolyFunction PolyFunction::operator-() const
{
    PolyFunction out = *this;
    for (auto& [e, v] : out.terms_) v = -v;
    return out;
}

PolyFunction linear_combination(const std::vector<PolyFunction>& fs, const std::vector<Rational>& coeffs,
                                 std::size_t n_vars)
{
    if (fs.size() != coeffs.size()) throw StructuralError("linear combination size mismatch");
    PolyFunction out(n_vars);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (coeffs[i] == 0) continue;
        if (fs[i].n_vars() != n_vars) throw StructuralError("linear combination over mismatched variables");
        for (const auto& [e, c] : fs[i].terms()) out.add_term(e, c * coeffs[i]);
    }
    return out;
}

PolyFunction poisson_bracket(const PolyFunction& f, const PolyFunction& g, const PhaseSpace& space)
{
    if (f.n_vars() != space.dim() || g.n_vars() != space.dim())
        throw StructuralError("bracket operands do not live on a phase space of dimension " +
                              std::to_string(space.dim()));
    PolyFunction out(space.dim());
    for (std::size_t i = 0; i < space.n_pairs; ++i) {
        out += f.derivative(space.q(i)) * g.derivative(space.p(i));
        out -= f.derivative(space.p(i)) * g.derivative(space.q(i));
    }
    return out;
}

Vec gradient(const PolyFunction& f, const Vec& z)
{
    return f.gradient(z);
}

Mat jacobian(const std::vector<PolyFunction>& fs, const Vec& z, std::size_t dim)
{
    Mat j(static_cast<Eigen::Index>(fs.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t a = 0; a < fs.size(); ++a) j.row(static_cast<Eigen::Index>(a)) = fs[a].gradient(z).transpose();
    return j;
}

double max_constraint_value(const std::vector<PolyFunction>& fs, const Vec& z)
{
    double m = 0.0;
    for (const auto& f : fs) m = std::max(m, std::abs(f.evaluate(z)));
    return m;
}

Vec sample_surface_point(const PhaseSpace& space, const std::vector<PolyFunction>& constraints,
                         std::uint64_t seed, const SurfaceSampleOptions& opts)
{
    for (const auto& c : constraints)
        if (c.n_vars() != space.dim()) throw StructuralError("constraint dimension mismatch");
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(space.dim());
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.uniform(-1.0, 1.0);
    if (constraints.empty()) return z;

    const auto m = static_cast<Eigen::Index>(constraints.size());
    Vec r(m);
    double res = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= opts.max_iter; ++it) {
        for (Eigen::Index a = 0; a < m; ++a) r(a) = constraints[static_cast<std::size_t>(a)].evaluate(z);
        res = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
        if (!std::isfinite(res)) break;
        if (res < opts.tol_surface) return z;
        if (it == opts.max_iter) break;
        Mat j = jacobian(constraints, z, space.dim());
        z -= pinv(j, opts.tol_rank) * r;
    }
    throw SamplingError("surface sampling did not converge (residual " + std::to_string(res) + ")", res);
}

Mat constrained_fundamental(const Mat& sigma, const Mat& jac, const Mat& k)
{
    if (jac.rows() == 0) return sigma;
    Mat left = sigma * jac.transpose();
    Mat right = jac * sigma;
    return sigma - left * k * right;
}

double constrained_bracket(const Vec& grad_f, const Vec& grad_g, const Mat& sigma, const Mat& jac, const Mat& k)
{
    double plain = grad_f.dot(sigma * grad_g);
    if (jac.rows() == 0) return plain;
    Vec a = jac * (sigma.transpose() * grad_f);  // [f, chi_a]
    Vec b = jac * (sigma * grad_g);              // [chi_b, g]
    return plain - a.dot(k * b);
}

}  // namespace dirac_forge

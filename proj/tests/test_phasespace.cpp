#include <catch2/catch_amalgamated.hpp>

#include "dirac_forge/errors.hpp"
#include "dirac_forge/io.hpp"
#include "dirac_forge/random.hpp"
#include "support/oracles.hpp"

using namespace dirac_forge;

namespace {

PolyFunction var(std::size_t n, std::size_t i) { return PolyFunction::variable(n, i); }

PolyFunction rand_poly(std::size_t dim, Rng& rng)
{
    PolyFunction f(dim);
    for (int t = 0; t < 4; ++t) {
        PolyFunction::Exponents e(dim, 0);
        unsigned deg = static_cast<unsigned>(rng.below(3)) + 1;
        for (unsigned d = 0; d < deg; ++d) ++e[rng.below(dim)];
        f.add_term(e, Rational(static_cast<long>(rng.below(7)) - 3, static_cast<unsigned long>(rng.below(3) + 1)));
    }
    return f;
}

}  // namespace

TEST_CASE("rational parsing is exact")
{
    CHECK(parse_rational("3/6") == Rational(1, 2));
    CHECK(parse_rational("-4") == Rational(-4));
    CHECK(parse_rational("0.25") == Rational(1, 4));
    CHECK(parse_rational("-1e-3") == Rational(-1, 1000));
    CHECK(parse_rational("1.5E2") == Rational(150));
    CHECK(format_rational(Rational(6, 4)) == "3/2");
    CHECK(format_rational(Rational(2)) == "2/1");
    CHECK_THROWS_AS(parse_rational("x"), StructuralError);
    CHECK_THROWS_AS(parse_rational("1/0"), StructuralError);
    CHECK(rational_from_double(0.1).get_d() == 0.1);
}

TEST_CASE("canonical brackets")
{
    PhaseSpace s(2);
    std::size_t n = s.dim();
    CHECK(poisson_bracket(var(n, s.q(0)), var(n, s.p(0)), s) == PolyFunction::constant(n, 1));
    CHECK(poisson_bracket(var(n, s.p(1)), var(n, s.q(1)), s) == PolyFunction::constant(n, -1));
    CHECK(poisson_bracket(var(n, s.q(0)), var(n, s.p(1)), s).is_zero());
    CHECK(poisson_bracket(var(n, s.q(0)), var(n, s.q(1)), s).is_zero());
    CHECK(s.name(s.q(1)) == "q2");
    CHECK(s.name(s.p(0)) == "p1");
}

TEST_CASE("bracket of q1 p1 with q1 squared")
{
    PhaseSpace s(2);
    std::size_t n = s.dim();
    PolyFunction f = var(n, 0) * var(n, 2);
    PolyFunction g = var(n, 0) * var(n, 0);
    PolyFunction b = poisson_bracket(f, g, s);
    CHECK(b == Rational(-2) * g);

    // the same number from finite-difference gradients
    Vec z(4);
    z << 0.7, -0.3, 1.1, 0.4;
    Vec gf = oracle::fd_gradient(f, z), gg = oracle::fd_gradient(g, z);
    double fd = gf.dot(s.sigma() * gg);
    CHECK(std::abs(fd - b.evaluate(z)) < 1e-7);
    CHECK(std::abs(b.evaluate(z) + 2 * 0.49) < 1e-14);
}

TEST_CASE("bracket identities on random polynomials")
{
    PhaseSpace s(2);
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        PolyFunction f = rand_poly(4, rng), g = rand_poly(4, rng), h = rand_poly(4, rng);
        auto pb = [&](const PolyFunction& a, const PolyFunction& b) { return poisson_bracket(a, b, s); };
        CHECK((pb(f, g) + pb(g, f)).is_zero());
        CHECK((pb(f, pb(g, h)) + pb(g, pb(h, f)) + pb(h, pb(f, g))).is_zero());
        CHECK(pb(f, g * h) == pb(f, g) * h + g * pb(f, h));
    }
}

TEST_CASE("gradient matches finite differences")
{
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        PolyFunction f = rand_poly(4, rng);
        Vec z(4);
        for (int i = 0; i < 4; ++i) z(i) = rng.uniform(-1, 1);
        CHECK((gradient(f, z) - oracle::fd_gradient(f, z)).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("polynomial algebra")
{
    std::size_t n = 2;
    PolyFunction x = var(n, 0), y = var(n, 1);
    PolyFunction f = x * x + Rational(3) * x * y - PolyFunction::constant(n, 2);
    CHECK(f.degree() == 2);
    Vec z(2);
    z << 2.0, -1.0;
    CHECK(f.evaluate(z) == Catch::Approx(4 - 6 - 2));
    CHECK((f - f).is_zero());
    CHECK(f.derivative(0) == Rational(2) * x + Rational(3) * y);
    CHECK(f.padded(4).n_vars() == 4);
    CHECK(linear_combination({x, y}, {Rational(1), Rational(-1)}, n) == x - y);
    CHECK_THROWS_AS(x + var(3, 0), StructuralError);
}

TEST_CASE("surface sampling")
{
    PhaseSpace s(1);
    std::size_t n = s.dim();
    // circle q^2 + p^2 = 1
    PolyFunction c = var(n, 0) * var(n, 0) + var(n, 1) * var(n, 1) - PolyFunction::constant(n, 1);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Vec z = sample_surface_point(s, {c}, seed);
        CHECK(std::abs(c.evaluate(z)) <= 1e-10);
    }
    CHECK(sample_surface_point(s, {c}, 3) == sample_surface_point(s, {c}, 3));

    // q = 0 and q = 1 cannot both hold
    PolyFunction a = var(n, 0), b = var(n, 0) - PolyFunction::constant(n, 1);
    CHECK_THROWS_AS(sample_surface_point(s, {a, b}, 1), SamplingError);
    try {
        sample_surface_point(s, {a, b}, 1);
    } catch (const SamplingError& e) {
        CHECK(e.residual() > 0.1);
    }
}

TEST_CASE("constrained bracket removes constraint directions")
{
    PhaseSpace s(2);
    Vec z = Vec::Zero(4);
    Mat jac = Mat::Zero(2, 4);
    jac(0, 0) = 1;  // q1
    jac(1, 2) = 1;  // p1
    Mat c = jac * s.sigma() * jac.transpose();
    Mat f = constrained_fundamental(s.sigma(), jac, c.inverse());
    CHECK(oracle::max_abs(f * jac.transpose()) < 1e-15);
    CHECK(f(1, 3) == Catch::Approx(1.0));
    CHECK(std::abs(f(0, 2)) < 1e-15);
}

TEST_CASE("polynomial json round trip")
{
    Rng rng(2);
    for (int i = 0; i < 5; ++i) {
        PolyFunction f = rand_poly(4, rng);
        CHECK(poly_from_json(poly_to_json(f), 4) == f);
    }
    CHECK_THROWS_AS(poly_from_json(Json::parse(R"([{"coeff":"1","exps":[1,0]}])"), 4), StructuralError);
}

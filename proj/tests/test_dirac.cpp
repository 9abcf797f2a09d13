#include <catch2/catch_amalgamated.hpp>

#include "dirac_forge/dirac.hpp"
#include "dirac_forge/errors.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace dirac_forge;

namespace {

const std::vector<std::vector<std::size_t>> kSuite = {{4, 2}, {4, 4, 2}, {6, 6, 4, 2}, {4, 4, 4, 4, 2}};

ReducibleSystem suite_chain(const std::vector<std::size_t>& lv, std::uint64_t seed)
{
    long m = profile_ranks(lv).front();
    return generate_random_chain({lv, static_cast<std::size_t>(m / 2 + 1), seed});
}

// chi = (q1 - q2^2, p1, q1 - q2^2 + p1), Z_1 = (1, 1, -1)
ReducibleSystem curved_toy()
{
    ReducibleSystem sys = oracle::load("toy.json");
    PolyFunction q2sq = PolyFunction::variable(4, 1) * PolyFunction::variable(4, 1);
    sys.chi[0] -= q2sq;
    sys.chi[2] -= q2sq;
    return sys;
}

}  // namespace

TEST_CASE("toy bracket matrix and fundamental brackets")
{
    ReducibleSystem sys = oracle::load("toy.json");
    ProjectorLadder lad = build_ladder(sys);
    Vec z(4);
    z << 0.0, 0.37, 0.0, -1.2;
    Mat c = build_C(sys, z);
    Mat expect(3, 3);
    expect << 0, 1, 1, -1, 0, -1, -1, 1, 0;
    CHECK(oracle::max_abs(c - expect) == 0.0);

    DiracStructure st = build_structure(sys, lad, z);
    CHECK(oracle::max_abs(c * st.m - lad.d0()) < 1e-12);
    CHECK(oracle::max_abs(st.m + st.m.transpose()) == 0.0);
    Mat f = fundamental_dirac(sys, st);
    CHECK(f(1, 3) == Catch::Approx(1.0).margin(1e-12));   // [q2, p2]*
    CHECK(std::abs(f(0, 2)) < 1e-12);                     // [q1, p1]*
    CHECK(oracle::max_abs(f - oracle::subset_fundamental(sys.space.sigma(), st.jac)) < 1e-12);
    CHECK_FALSE(st.mu.has_value());
}

TEST_CASE("toy has no invertible antisymmetric kernel")
{
    ReducibleSystem sys = oracle::load("toy.json");
    ProjectorLadder lad = build_ladder(sys);
    CHECK_THROWS_AS(build_level_forms(sys, lad), ParityError);
}

TEST_CASE("off-surface point is a precondition failure")
{
    ReducibleSystem sys = oracle::load("toy.json");
    ProjectorLadder lad = build_ladder(sys);
    Vec z(4);
    z << 0.5, 0.0, 0.0, 0.0;
    CHECK_THROWS_AS(build_structure(sys, lad, z), PreconditionError);
}

TEST_CASE("rank deficient C is not second class")
{
    ReducibleSystem sys = oracle::load("broken.json");
    CHECK_THROWS_AS(build_C(sys, Vec::Zero(4)), NotSecondClassError);
}

TEST_CASE("both kernels agree with the subset bracket")
{
    for (const auto& lv : kSuite) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            ReducibleSystem sys = suite_chain(lv, seed);
            ProjectorLadder lad = build_ladder(sys);
            LevelForms forms = build_level_forms(sys, lad);
            for (std::uint64_t s = 0; s < 3; ++s) {
                Vec z = sample_surface_point(sys.space, sys.chi, 100 + s);
                DiracStructure st = build_structure(sys, lad, z, &forms);
                REQUIRE(st.mu.has_value());
                Mat ref = oracle::subset_fundamental(sys.space.sigma(), st.jac);
                Mat fm = fundamental_dirac(sys, st, Kernel::M);
                Mat fmu = fundamental_dirac(sys, st, Kernel::Mu);
                CHECK(oracle::max_abs(fm - ref) < 1e-8);
                CHECK(oracle::max_abs(fmu - ref) < 1e-8);
                // constraints are Casimirs
                CHECK(oracle::max_abs(fm * st.jac.transpose()) < 1e-8);
                CHECK(oracle::max_abs(*st.mu * *st.mu_inv - Mat::Identity(st.mu->rows(), st.mu->cols())) < 1e-8);
                for (const auto& [k, v] : st.residuals) {
                    INFO(k);
                    CHECK(v < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("odd sectors reject the invertible kernel but keep the M route")
{
    for (const auto& lv : std::vector<std::vector<std::size_t>>{{3, 1}, {4, 4, 3, 1}, {5, 6, 5, 3, 1}}) {
        ReducibleSystem sys = suite_chain(lv, 1);
        CHECK(validate(sys).ok());
        ProjectorLadder lad = build_ladder(sys);
        CHECK_THROWS_AS(build_level_forms(sys, lad), ParityError);
        Vec z = sample_surface_point(sys.space, sys.chi, 5);
        DiracStructure st = build_structure(sys, lad, z);
        CHECK(oracle::max_abs(fundamental_dirac(sys, st) - oracle::subset_fundamental(sys.space.sigma(), st.jac)) < 1e-8);
    }
}

TEST_CASE("dirac bracket of observables")
{
    ReducibleSystem sys = suite_chain({4, 4, 2}, 2);
    ProjectorLadder lad = build_ladder(sys);
    Vec z = sample_surface_point(sys.space, sys.chi, 9);
    DiracStructure st = build_structure(sys, lad, z);
    std::size_t n = sys.space.dim();
    PolyFunction f = PolyFunction::variable(n, 0) * PolyFunction::variable(n, 3);
    PolyFunction g = PolyFunction::variable(n, 1) * PolyFunction::variable(n, 1) + PolyFunction::variable(n, 2);
    double b = dirac_bracket_at(f, g, sys, st);
    CHECK(b == Catch::Approx(oracle::subset_bracket(f.gradient(z), g.gradient(z), sys.space.sigma(), st.jac)).margin(1e-10));
    CHECK(dirac_bracket_at(g, f, sys, st) == Catch::Approx(-b).margin(1e-12));
    for (const auto& chi : sys.chi) CHECK(std::abs(dirac_bracket_at(f, chi, sys, st)) < 1e-9);
    CHECK_THROWS_AS(dirac_bracket_at(PolyFunction::variable(n + 2, 0), g, sys, st), StructuralError);
}

TEST_CASE("curved toy: jacobi identity and subset agreement")
{
    ReducibleSystem sys = curved_toy();
    CHECK(validate(sys).ok());
    ProjectorLadder lad = build_ladder(sys);
    auto fund = [&](const Vec& z) {
        DiracStructure st = build_structure(sys, lad, z, nullptr, false);
        return Mat(fundamental_dirac(sys, st));
    };
    Vec z(4);
    z << 0.49, 0.7, 0.0, 0.3;
    DiracStructure st = build_structure(sys, lad, z);
    CHECK(oracle::max_abs(fund(z) - oracle::subset_fundamental(sys.space.sigma(), st.jac)) < 1e-12);

    // sum_l F^{al} d_l F^{bc} + cyclic, derivatives by central differences
    const double h = 1e-5;
    std::vector<Mat> dF;
    for (int l = 0; l < 4; ++l) {
        Vec a = z, b = z;
        a(l) += h;
        b(l) -= h;
        dF.push_back((fund(a) - fund(b)) / (2 * h));
    }
    Mat F = fund(z);
    double worst = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) {
                double s = 0.0;
                for (int l = 0; l < 4; ++l)
                    s += F(a, l) * dF[l](b, c) + F(b, l) * dF[l](c, a) + F(c, l) * dF[l](a, b);
                worst = std::max(worst, std::abs(s));
            }
    CHECK(worst < 1e-7);
    // [q1, p2]* = 2 q2 on the surface
    CHECK(F(0, 3) == Catch::Approx(2 * 0.7).margin(1e-12));
}

TEST_CASE("harmonic evolution on the toy surface")
{
    ReducibleSystem sys = oracle::load("toy.json");
    ProjectorLadder lad = build_ladder(sys);
    std::size_t n = 4;
    PolyFunction h = Rational(1, 2) * (PolyFunction::variable(n, 1) * PolyFunction::variable(n, 1) +
                                       PolyFunction::variable(n, 3) * PolyFunction::variable(n, 3));
    Vec z0(4);
    z0 << 0.0, 0.6, 0.0, -0.2;
    double dt = 0.01;
    std::size_t steps = 200;
    Trajectory tr = evolve(sys, lad, h, z0, dt, steps);
    REQUIRE(tr.points.size() == steps + 1);
    double t = dt * static_cast<double>(steps);
    const Vec& zt = tr.points.back();
    CHECK(std::abs(zt(1) - (0.6 * std::cos(t) - 0.2 * std::sin(t))) < 1e-6);
    CHECK(std::abs(zt(3) - (-0.2 * std::cos(t) - 0.6 * std::sin(t))) < 1e-6);
    CHECK(tr.max_drift < 1e-10);
    CHECK_FALSE(tr.flagged);
    CHECK(std::abs(h.evaluate(zt) - h.evaluate(z0)) < 1e-8);
}

TEST_CASE("trivial flows stay put")
{
    ReducibleSystem sys = oracle::load("toy.json");
    ProjectorLadder lad = build_ladder(sys);
    Vec z0(4);
    z0 << 0.0, 0.6, 0.0, -0.2;
    Trajectory zero = evolve(sys, lad, PolyFunction(4), z0, 0.1, 10);
    CHECK((zero.points.back() - z0).cwiseAbs().maxCoeff() == 0.0);
    // a constraint generates no motion under the Dirac bracket
    Trajectory gen = evolve(sys, lad, sys.chi[0], z0, 0.1, 10);
    CHECK((gen.points.back() - z0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(evolve(sys, lad, PolyFunction(4), z0, -1.0, 3), StructuralError);
    Vec off = z0;
    off(0) = 1.0;
    CHECK_THROWS_AS(evolve(sys, lad, PolyFunction(4), off, 0.1, 3), PreconditionError);
}

TEST_CASE("drift is flagged when the flow leaves the surface")
{
    // coarse steps on a curved surface leave it at truncation order
    ReducibleSystem sys = curved_toy();
    ProjectorLadder lad = build_ladder(sys);
    std::size_t n = 4;
    PolyFunction h = Rational(1, 2) * PolyFunction::variable(n, 3) * PolyFunction::variable(n, 3) +
                     PolyFunction::variable(n, 1) * PolyFunction::variable(n, 1) * PolyFunction::variable(n, 1);
    Vec z0(4);
    z0 << 0.25, 0.5, 0.0, 0.4;
    Trajectory tr = evolve(sys, lad, h, z0, 0.5, 4, 1e-12);
    CHECK(tr.flagged);
    CHECK(tr.max_drift > 1e-12);
}

#include <catch2/catch_amalgamated.hpp>

#include "dirac_forge/errors.hpp"
#include "dirac_forge/pform.hpp"
#include "support/oracles.hpp"

using namespace dirac_forge;

namespace {

double reference_deviation(const PFormSystem& ps)
{
    const ReducibleSystem& sys = ps.sys;
    ProjectorLadder lad = build_ladder(sys);
    Vec z = sample_surface_point(sys.space, sys.chi, 1);
    DiracStructure st = build_structure(sys, lad, z);
    return oracle::max_abs(fundamental_dirac(sys, st) - reference_brackets(ps.spec));
}

}  // namespace

TEST_CASE("maxwell field on a small torus")
{
    PFormSystem ps = build_pform_system({1, 4, {3, 3, 3}});
    CHECK(ps.sites == 27);
    CHECK(ps.components == 3);
    CHECK(ps.sys.space.n_pairs == 81);
    CHECK(ps.sys.order() == 0);
    CHECK(ps.sys.level_sizes() == std::vector<std::size_t>{52});
    CHECK(validate(ps.sys).ok());
    CHECK(reference_deviation(ps) < 1e-7);
    CHECK(fourier_dof_count(ps.spec) == 162 - 52);
}

TEST_CASE("reference projector is a projector with the right trace")
{
    PFormSpec spec{1, 3, {4, 3}};
    Mat ref = reference_brackets(spec);
    auto n = ref.rows() / 2;
    Mat p = ref.topRightCorner(n, n);
    CHECK(oracle::max_abs(p * p - p) < 1e-12);
    CHECK(oracle::max_abs(p - p.transpose()) < 1e-12);
    CHECK(oracle::max_abs(ref.topLeftCorner(n, n)) == 0.0);
    // transverse modes: one per nonzero momentum, two at zero momentum
    CHECK(p.trace() == Catch::Approx(11 + 2).margin(1e-10));
    CHECK(reference_deviation(build_pform_system(spec)) < 1e-7);
}

TEST_CASE("two-form chain sizes and exactness")
{
    PFormSystem ps = build_pform_system({2, 4, {3, 3, 3}});
    CHECK(ps.sys.level_sizes() == std::vector<std::size_t>{156, 52});
    CHECK(ps.sys.space.n_pairs == 81);
    CHECK(ps.sys.independent_count() == 104);
    CHECK((ps.sys.z_stages[0].to_double() * jacobian(ps.sys.chi, Vec::Zero(162), 162)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ps.omegas.sector_forms.count(1) == 1);
    CHECK(fourier_dof_count(ps.spec) == 162 - 104);
    ValidationReport rep = validate(ps.sys);
    CHECK(rep.ok());
    CHECK(reference_deviation(ps) < 1e-7);
}

TEST_CASE("three-form stage sizes")
{
    PFormSystem ps = build_pform_system({3, 5, {2, 2, 2, 2}});
    CHECK(ps.sys.level_sizes() == std::vector<std::size_t>{180, 120, 30});
    for (std::size_t k = 0; k + 1 < ps.sys.z_stages.size(); ++k)
        CHECK((ps.sys.z_stages[k + 1] * ps.sys.z_stages[k]).is_zero());
    CHECK(fourier_dof_count(ps.spec) == static_cast<long>(ps.sys.space.dim()) - ps.sys.independent_count());
}

TEST_CASE("lowest dimension")
{
    PFormSystem ps = build_pform_system({1, 2, {4}});
    CHECK(ps.sys.space.n_pairs == 4);
    CHECK(ps.sys.level_sizes() == std::vector<std::size_t>{6});
    CHECK(fourier_dof_count(ps.spec) == 2);
    CHECK(reference_deviation(ps) < 1e-7);
}

TEST_CASE("hamiltonian")
{
    PFormSpec spec{1, 3, {3, 3}};
    PolyFunction h = pform_hamiltonian(spec);
    std::size_t n = 18;
    CHECK(h.n_vars() == 2 * n);
    Vec z = Vec::Zero(2 * static_cast<Eigen::Index>(n));
    z(static_cast<Eigen::Index>(n)) = 2.0;  // one momentum
    CHECK(h.evaluate(z) == Catch::Approx(2.0));
    Vec a = Vec::Zero(z.size());
    a.head(static_cast<Eigen::Index>(n)).setConstant(0.7);  // constant potential has dA = 0
    CHECK(std::abs(h.evaluate(a)) < 1e-14);
    CHECK(h.degree() == 2);
}

TEST_CASE("invalid specs")
{
    CHECK_THROWS_AS(build_pform_system({3, 3, {3, 3}}), StructuralError);
    CHECK_THROWS_AS(build_pform_system({0, 4, {3, 3, 3}}), StructuralError);
    CHECK_THROWS_AS(build_pform_system({1, 4, {3, 3}}), StructuralError);
    CHECK_THROWS_AS(build_pform_system({1, 4, {3, 1, 3}}), StructuralError);
    CHECK_THROWS_AS(build_pform_system({1, 4, {20, 20, 20}}), StructuralError);
}

#include <catch2/catch_amalgamated.hpp>

#include "dirac_forge/errors.hpp"
#include "dirac_forge/projectors.hpp"
#include "support/oracles.hpp"

using namespace dirac_forge;

TEST_CASE("toy ladder")
{
    ReducibleSystem sys = oracle::load("toy.json");
    ProjectorLadder lad = build_ladder(sys);
    REQUIRE(lad.abar.size() == 1);
    Vec expect(3);
    expect << 1.0 / 3, 1.0 / 3, -1.0 / 3;
    CHECK((lad.abar[0].col(0) - expect).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(lad.d_top(0, 0) == Catch::Approx(3.0));
    Mat z = sys.z_stages[0].to_double();
    CHECK(oracle::max_abs(lad.d0() - (Mat::Identity(3, 3) - z.transpose() * z / 3.0)) < 1e-15);
    CHECK(lad.d0().trace() == Catch::Approx(2.0));

    std::vector<Vec> pts;
    for (std::uint64_t s = 0; s < 3; ++s) pts.push_back(sample_surface_point(sys.space, sys.chi, s));
    ResidualReport rep = verify_ladder(sys, lad, pts);
    CHECK(rep.ok());
    CHECK(rep.entries.count("d0_chi") == 1);
    CHECK(rep.entries.at("trace_d0").residual < 1e-12);
}

TEST_CASE("order zero ladder is the identity")
{
    ReducibleSystem sys;
    sys.space = PhaseSpace(2);
    sys.chi = {PolyFunction::variable(4, 0), PolyFunction::variable(4, 2)};
    ProjectorLadder lad = build_ladder(sys);
    CHECK(lad.order == 0);
    CHECK(oracle::max_abs(lad.d0() - Mat::Identity(2, 2)) == 0.0);
    CHECK(verify_ladder(sys, lad).ok());
}

TEST_CASE("ladder identities on random chains")
{
    const std::vector<std::vector<std::size_t>> profiles = {{4, 2}, {4, 4, 2}, {6, 6, 4, 2}, {4, 4, 4, 4, 2}, {5, 6, 5, 3, 1}};
    for (const auto& lv : profiles) {
        long m = profile_ranks(lv).front();
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            ReducibleSystem sys = generate_random_chain({lv, static_cast<std::size_t>(m / 2 + 1), seed});
            ProjectorLadder lad = build_ladder(sys);
            ResidualReport rep = verify_ladder(sys, lad);
            CHECK(rep.ok());
            for (const auto& [name, e] : rep.entries) {
                INFO(name);
                CHECK(e.residual < 1e-8);
            }
            auto ranks = profile_ranks(lv);
            for (std::size_t k = 0; k < lad.d.size(); ++k)
                CHECK(numerical_rank(lad.d[k], 1e-9) == static_cast<std::size_t>(ranks[k]));
            CHECK(lad.d0().trace() == Catch::Approx(static_cast<double>(m)).margin(1e-9));
        }
    }
}

TEST_CASE("perturbed ladder is flagged")
{
    ReducibleSystem sys = generate_random_chain({{4, 4, 2}, 3, 4});
    ProjectorLadder lad = build_ladder(sys);
    lad.abar[0](0, 0) += 1e-3;
    ResidualReport rep = verify_ladder(sys, lad);
    CHECK_FALSE(rep.ok());
    double worst = 0.0;
    for (const auto& [name, e] : rep.entries) worst = std::max(worst, e.residual);
    CHECK(worst > 1e-4);
}

#include <catch2/catch_amalgamated.hpp>

#include "dirac_forge/errors.hpp"
#include "support/oracles.hpp"

using namespace dirac_forge;

TEST_CASE("toy system validates")
{
    ReducibleSystem sys = oracle::load("toy.json");
    CHECK(sys.order() == 1);
    CHECK(sys.level_sizes() == std::vector<std::size_t>{3, 1});
    CHECK(sys.independent_count() == 2);
    ValidationReport rep = validate(sys);
    INFO([&] {
        std::string s;
        for (const auto& c : rep.checks) s += c.name + " " + std::to_string(c.residual) + (c.pass ? "\n" : " FAIL\n");
        return s;
    }());
    CHECK(rep.ok());
    for (const char* name : {"z1_chi_strong", "stage1_nonzero", "top_stage_full_rank",
                             "independent_count_admissible", "surface_sampling", "second_class", "z1_c_weak"}) {
        const Check* c = rep.find(name);
        REQUIRE(c != nullptr);
        CHECK(c->pass);
    }
    CHECK(rep.find("z1_chi_strong")->residual == 0.0);
    for (auto r : rep.c_ranks) CHECK(r == 2);
}

TEST_CASE("rank deficient bracket matrix is not second class")
{
    ReducibleSystem sys = oracle::load("broken.json");
    ValidationReport rep = validate(sys);
    CHECK_FALSE(rep.ok());
    REQUIRE(rep.find("second_class") != nullptr);
    CHECK_FALSE(rep.find("second_class")->pass);
}

TEST_CASE("shape mismatch is structural")
{
    CHECK_THROWS_AS(oracle::load("bad_shape.json"), StructuralError);
    CHECK_THROWS_AS(oracle::load("malformed.json"), StructuralError);
}

TEST_CASE("Z1 chi nonzero is caught")
{
    ReducibleSystem sys = oracle::load("toy.json");
    sys.z_stages[0](0, 2) = Rational(1);
    ValidationReport rep = validate(sys);
    CHECK_FALSE(rep.find("z1_chi_strong")->pass);
    CHECK_FALSE(rep.ok());
}

TEST_CASE("profile ranks")
{
    CHECK(profile_ranks({4, 4, 2}) == std::vector<long>{2, 2, 2});
    CHECK(profile_ranks({6, 6, 4, 2}) == std::vector<long>{2, 4, 2, 2});
    CHECK(profile_ranks({3, 1}) == std::vector<long>{2, 1});
}

TEST_CASE("random chains are exact and second class")
{
    const std::vector<std::vector<std::size_t>> profiles = {{4, 2}, {4, 4, 2}, {6, 6, 4, 2}, {4, 4, 4, 4, 2}};
    for (const auto& lv : profiles) {
        long m = profile_ranks(lv).front();
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            ChainProfile prof{lv, static_cast<std::size_t>(m / 2 + 1), seed};
            ReducibleSystem sys = generate_random_chain(prof);
            CHECK(sys.level_sizes() == lv);
            // exactness in rationals
            for (std::size_t k = 0; k + 1 < sys.z_stages.size(); ++k)
                CHECK((sys.z_stages[k + 1] * sys.z_stages[k]).is_zero());
            ValidationReport rep = validate(sys);
            CHECK(rep.ok());
        }
    }
}

TEST_CASE("random chain generation is deterministic")
{
    ChainProfile prof{{4, 4, 2}, 3, 9};
    ReducibleSystem a = generate_random_chain(prof), b = generate_random_chain(prof);
    CHECK(a.z_stages == b.z_stages);
    REQUIRE(a.chi.size() == b.chi.size());
    for (std::size_t i = 0; i < a.chi.size(); ++i) CHECK(a.chi[i] == b.chi[i]);
}

TEST_CASE("invalid profiles are rejected")
{
    CHECK_THROWS_AS(generate_random_chain({{}, 3, 0}), GenerationError);
    CHECK_THROWS_AS(generate_random_chain({{4, 0}, 3, 0}), GenerationError);
    CHECK_THROWS_AS(generate_random_chain({{2, 4}, 3, 0}), GenerationError);
    CHECK_THROWS_AS(generate_random_chain({{4, 2, 1}, 3, 0}), GenerationError);  // M = 3
    CHECK_THROWS_AS(generate_random_chain({{8, 2}, 2, 0}), GenerationError);     // M = 6 > 2N
}

TEST_CASE("dof counts")
{
    ReducibleSystem sys = oracle::load("toy.json");
    Vec z = sample_surface_point(sys.space, sys.chi, 1);
    DofReport d = dof_report(sys, z);
    CHECK(d.dim == 4);
    CHECK(d.expected_surface_rank == 2);
    CHECK(d.jacobian_rank == 2);
    CHECK(d.induced_rank == 2);
    CHECK(d.pass);

    ReducibleSystem empty;
    empty.space = PhaseSpace(2);
    DofReport e = dof_report(empty, Vec::Zero(4));
    CHECK(e.induced_rank == 4);
    CHECK(e.pass);

    Vec off = z;
    off(0) += 1.0;
    CHECK_THROWS_AS(dof_report(sys, off), PreconditionError);
}

TEST_CASE("tangent complement generators")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ReducibleSystem sys = generate_random_chain({{6, 6, 4, 2}, 3, seed});
        Vec z = sample_surface_point(sys.space, sys.chi, seed);
        Mat x = tangent_complement_generators(sys, z);
        CHECK(x.rows() == 6);
        CHECK(x.cols() == 6);
        CHECK(numerical_rank(x, 1e-9) == 2);
        Mat jac = jacobian(sys.chi, z, sys.space.dim());
        CHECK(oracle::max_abs(x - sys.space.sigma() * jac.transpose()) < 1e-14);
    }
}

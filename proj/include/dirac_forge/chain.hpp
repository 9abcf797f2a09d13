#pragma once

#include "dirac_forge/phasespace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dirac_forge {

struct Tolerances {
    double tol_weak = 1e-8;
    double tol_rank = 1e-9;
    double tol_surface = 1e-10;
};

struct RationalMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Rational> data;  // row-major

    RationalMatrix() = default;
    RationalMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, Rational(0)) {}

    Rational& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const Rational& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    Mat to_double() const;
    bool is_zero() const;
    double max_abs() const;
    bool operator==(const RationalMatrix& o) const = default;
};

RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b);

// chi at level 0 plus Z_1..Z_L; z_stages[k-1] = Z_k is M_k x M_{k-1}
struct ReducibleSystem {
    PhaseSpace space;
    std::vector<PolyFunction> chi;
    std::vector<RationalMatrix> z_stages;
    Tolerances tol;
    std::uint64_t seed = 0;
    int n_samples = 5;

    std::size_t order() const { return z_stages.size(); }
    // M_0..M_L
    std::vector<std::size_t> level_sizes() const;
    // alternating sum of level sizes
    long independent_count() const;

    // sizes and shapes only; throws StructuralError
    void check_shapes() const;
};

struct Check {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string message;
};

struct ValidationReport {
    std::vector<Check> checks;
    std::vector<std::size_t> level_sizes;
    long independent_count = 0;
    std::vector<std::size_t> stage_ranks;
    std::vector<std::size_t> c_ranks;  // rank of [chi, chi] at each sample point

    bool ok() const;
    const Check* find(const std::string& name) const;
};

ValidationReport validate(const ReducibleSystem& sys);

// levels = (M_0..M_L)
struct ChainProfile {
    std::vector<std::size_t> levels;
    std::size_t n_pairs = 0;
    std::uint64_t seed = 0;
};

// exact integer chain obtained by unimodular change of basis from the split model complex
ReducibleSystem generate_random_chain(const ChainProfile& profile);

// ranks r_k of the model complex: M_k = r_k + r_{k+1}, r_0 = M
std::vector<long> profile_ranks(const std::vector<std::size_t>& levels);

struct DofReport {
    std::size_t dim = 0;                  // 2N
    long independent_count = 0;           // alternating sum
    long expected_surface_rank = 0;       // 2N - M
    std::size_t jacobian_rank = 0;
    std::size_t induced_rank = 0;         // rank of the pulled-back form
    std::vector<std::size_t> level_sizes;
    bool pass = false;
};

// z must lie on the surface within tol_surface
DofReport dof_report(const ReducibleSystem& sys, const Vec& z);

// columns sigma * grad chi_a, 2N x M_0
Mat tangent_complement_generators(const ReducibleSystem& sys, const Vec& z);

void require_on_surface(const ReducibleSystem& sys, const Vec& z);

}  // namespace dirac_forge

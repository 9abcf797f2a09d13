#pragma once

#include "dirac_forge/dirac.hpp"

#include <cstdint>

namespace dirac_forge {

// new variables y_j at odd levels j with [y_j, y_j] = omega_j
struct SectorInfo {
    std::size_t level = 0;
    std::size_t offset = 0;  // position inside the extended coordinate vector
    std::size_t size = 0;
    Mat omega;
    Mat omega_inv;
};

struct ExtendedPhaseSpace {
    PhaseSpace base;
    std::vector<SectorInfo> sectors;

    std::size_t dim() const;
    Mat bracket_matrix() const;
    // (z, 0)
    Vec extend(const Vec& z) const;
    Vec base_part(const Vec& x) const;
    const SectorInfo& sector(std::size_t level) const;
};

struct IntermediateSystem {
    ReducibleSystem sys;
    ProjectorLadder ladder;
    LevelForms forms;
    ExtendedPhaseSpace ext;
    std::vector<PolyFunction> constraints;  // chi followed by every y component
};

IntermediateSystem build_intermediate(const ReducibleSystem& sys, const ProjectorLadder& ladder,
                                      const LevelForms& forms);

// kernel blockdiag(mu, omega_j^{-1}); observables over the extended coordinates
double intermediate_bracket_at(const PolyFunction& f, const PolyFunction& g, const IntermediateSystem& inter,
                               const Vec& x);

struct IrreducibleSystem {
    ReducibleSystem sys;
    ProjectorLadder ladder;
    LevelForms forms;
    ExtendedPhaseSpace ext;
    std::map<std::size_t, Mat> a;           // A_j at odd j
    std::vector<std::size_t> block_levels;  // 0, 2, 4, ...
    std::vector<std::size_t> block_offsets;
    std::vector<PolyFunction> chi_tilde;

    std::size_t count() const { return chi_tilde.size(); }
};

IrreducibleSystem build_irreducible(const ReducibleSystem& sys, const ProjectorLadder& ladder,
                                    const LevelForms& forms);

// same, with explicit A_j blocks (used to probe sensitivity)
IrreducibleSystem assemble_irreducible(const ReducibleSystem& sys, const ProjectorLadder& ladder,
                                       const LevelForms& forms, const std::map<std::size_t, Mat>& a);

struct CDelta {
    Mat c;             // blockwise matrix of brackets
    Mat c_direct;      // from gradients of chi_tilde
    Mat inv_closed;    // closed-form inverse
    std::map<std::string, double> residuals;
};

// x must be an extended point; mu comes from the reducible structure at its base part
CDelta build_c_delta(const IrreducibleSystem& irr, const Vec& x, bool check_surface = true);

struct IrreducibleStructure {
    Vec point;
    Mat jac;
    CDelta cd;
};

IrreducibleStructure build_irreducible_structure(const IrreducibleSystem& irr, const Vec& x);

// observables over the base or the extended coordinates
double irreducible_dirac_at(const PolyFunction& f, const PolyFunction& g, const IrreducibleSystem& irr,
                            const IrreducibleStructure& st);
double irreducible_dirac_at(const PolyFunction& f, const PolyFunction& g, const IrreducibleSystem& irr,
                            const Vec& x);

Mat irreducible_fundamental(const IrreducibleSystem& irr, const IrreducibleStructure& st);

// max |R chi_tilde - (chi, y)| over polynomial coefficients, R the recovery map
double recovery_residual(const IrreducibleSystem& irr);

struct ExtendedDof {
    std::size_t dim = 0;
    std::size_t induced_rank = 0;
    long expected = 0;
    bool pass = false;
};

ExtendedDof extended_dof_report(const IrreducibleSystem& irr, const Vec& x);

struct Certificate {
    double max_deviation = 0.0;
    double fundamental_deviation = 0.0;
    double observable_deviation = 0.0;
    double intermediate_deviation = 0.0;
    double closed_form_deviation = 0.0;  // |C C^-1 - I|_inf with the closed-form inverse
    double recovery_deviation = 0.0;
    std::size_t points = 0;
    std::size_t observables = 0;
    std::uint64_t seed = 0;
    double tol = 0.0;
    bool pass = false;
    Mat fundamental_reducible;    // at the first point
    Mat fundamental_irreducible;  // base block at the first point
};

Certificate certify_equivalence(const IrreducibleSystem& irr, std::size_t n_points, std::size_t n_observables,
                                std::uint64_t seed);

// random observable of degree <= 3 with a few small rational terms
PolyFunction random_observable(std::size_t dim, std::uint64_t seed);

// canonical-pair form of the irreducible system: y rewritten in Darboux coordinates
ReducibleSystem to_canonical_system(const IrreducibleSystem& irr);

}  // namespace dirac_forge

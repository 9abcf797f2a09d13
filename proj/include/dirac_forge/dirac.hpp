#pragma once

#include "dirac_forge/projectors.hpp"

#include <functional>
#include <map>
#include <optional>

namespace dirac_forge {

// user-chosen y-sector forms, keyed by odd level j
struct OmegaChoice {
    std::map<std::size_t, Mat> sector_forms;
};

// Upper-index forms w_up[k] (M_k x M_k, k = 1..L, index 0 unused) built from the top down,
// plus the y-sector forms omega[j] and the maps e[j] for odd j.
struct LevelForms {
    std::vector<Mat> w_up;
    std::map<std::size_t, Mat> omega;
    std::map<std::size_t, Mat> omega_inv;
    std::map<std::size_t, Mat> e;
    std::map<std::string, double> residuals;
};

// Throws ParityError when an odd-level sector or a ladder rank is odd.
LevelForms build_level_forms(const ReducibleSystem& sys, const ProjectorLadder& ladder,
                             const OmegaChoice& choice = {});

enum class Kernel { M, Mu };

struct DiracStructure {
    Vec point;
    Mat jac;      // M_0 x 2N
    Mat c;        // [chi, chi]
    Mat m;        // C m = D_0
    std::optional<Mat> mu;
    std::optional<Mat> mu_inv;
    std::map<std::string, double> residuals;

    const Mat& kernel(Kernel k) const;
};

// [chi, chi] at z, exactly antisymmetric; checks rank and Z_1 C = 0
Mat build_C(const ReducibleSystem& sys, const Vec& z, bool check_surface = true);

// minimum-norm solution of C m = D_0, antisymmetrized
Mat solve_M(const ReducibleSystem& sys, const Mat& c, const Mat& d0);

struct MuPair {
    Mat mu;
    Mat mu_inv;
    std::map<std::string, double> residuals;
};

// mu = m + Z_1^T w_1 Z_1, invertible, with mu^{-1} checked against C + Abar_1 w_1^{-1} Abar_1^T
MuPair build_mu(const ReducibleSystem& sys, const ProjectorLadder& ladder, const Mat& c, const Mat& m,
                const LevelForms& forms);

// forms may be null, in which case mu is left empty
DiracStructure build_structure(const ReducibleSystem& sys, const ProjectorLadder& ladder, const Vec& z,
                               const LevelForms* forms = nullptr, bool check_surface = true);

double dirac_bracket_at(const PolyFunction& f, const PolyFunction& g, const ReducibleSystem& sys,
                        const DiracStructure& st, Kernel kernel = Kernel::M);

// [z^a, z^b]* as a 2N x 2N matrix
Mat fundamental_dirac(const ReducibleSystem& sys, const DiracStructure& st, Kernel kernel = Kernel::M);

struct Trajectory {
    std::vector<Vec> points;
    std::vector<double> drift;  // max |chi| at each stored point
    double max_drift = 0.0;
    bool flagged = false;
};

// rebuilds the bracket matrix at every stage point; flags drift beyond drift_tol
Trajectory evolve(const ReducibleSystem& sys, const ProjectorLadder& ladder, const PolyFunction& h,
                  const Vec& z0, double dt, std::size_t steps, double drift_tol = 1e-4,
                  Kernel kernel = Kernel::M, const LevelForms* forms = nullptr);

}  // namespace dirac_forge

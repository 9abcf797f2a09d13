#pragma once

#include "dirac_forge/chain.hpp"

#include <map>
#include <string>
#include <vector>

namespace dirac_forge {

// abar[k-1] = Abar_k (M_{k-1} x M_k), d[k] = D_k (M_k x M_k) for k < L.
// d_top = Z_L A_top with A_top = Z_L^T, d_top_inv its inverse.
struct ProjectorLadder {
    std::size_t order = 0;
    std::vector<Mat> z;     // stages as doubles
    std::vector<Mat> abar;
    std::vector<Mat> d;
    Mat a_top;
    Mat d_top;
    Mat d_top_inv;
    std::map<std::string, double> residuals;

    const Mat& d0() const { return d.front(); }
};

struct ResidualEntry {
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct ResidualReport {
    std::map<std::string, ResidualEntry> entries;
    bool ok() const;
};

// throws LadderError when a defining identity fails beyond tol_weak
ProjectorLadder build_ladder(const ReducibleSystem& sys);

// recomputes every D_k from the stored Abar and Z; surface points are used for D_0 chi = chi
ResidualReport verify_ladder(const ReducibleSystem& sys, const ProjectorLadder& ladder,
                             const std::vector<Vec>& points = {});

}  // namespace dirac_forge

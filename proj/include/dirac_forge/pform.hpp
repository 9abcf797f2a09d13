#pragma once

#include "dirac_forge/dirac.hpp"

#include <vector>

namespace dirac_forge {

// p-form gauge field on a periodic spatial lattice of D-1 dimensions
struct PFormSpec {
    int p = 1;
    int dim = 4;               // spacetime dimension D
    std::vector<int> extents;  // one per spatial axis
};

struct PFormSystem {
    PFormSpec spec;
    ReducibleSystem sys;
    OmegaChoice omegas;         // block forms for the odd-level y-sectors
    std::size_t sites = 0;
    std::size_t components = 0;  // independent p-form components per site
};

// One site per form component is dropped at every constraint level: on the torus the
// per-component sum of each constraint vanishes identically.
PFormSystem build_pform_system(const PFormSpec& spec);

// [z^a, z^b]* assembled from the transverse projector in momentum space
Mat reference_brackets(const PFormSpec& spec);

// 2N minus twice the momentum-space constraint ranks, summed over modes
long fourier_dof_count(const PFormSpec& spec);

// sum over sites of pi^2/2 plus (dA)^2/2
PolyFunction pform_hamiltonian(const PFormSpec& spec);

}  // namespace dirac_forge

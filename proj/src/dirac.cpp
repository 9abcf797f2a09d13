#include "dirac_forge/dirac.hpp"

#include "dirac_forge/errors.hpp"

#include <cmath>
#include <functional>

namespace dirac_forge {

namespace {

Mat checked_inverse(const Mat& a, double tol, const std::string& what)
{
    if (numerical_rank(a, tol) != static_cast<std::size_t>(a.rows()))
        throw ConstructionError(what + " is singular");
    return a.fullPivLu().inverse();
}

}  // namespace

LevelForms build_level_forms(const ReducibleSystem& sys, const ProjectorLadder& lad, const OmegaChoice& choice)
{
    const std::size_t L = lad.order;
    const auto m = sys.level_sizes();
    const auto r = profile_ranks(m);
    const double tr = sys.tol.tol_rank;
    LevelForms forms;
    forms.w_up.assign(L + 1, Mat());
    if (L == 0) return forms;

    for (std::size_t j = 1; j <= L; j += 2)
        if (m[j] % 2 != 0)
            throw ParityError("y-sector at level " + std::to_string(j) + " has odd size " + std::to_string(m[j]) +
                              "; no invertible antisymmetric form exists");
    for (const auto& [j, om] : choice.sector_forms) {
        if (j == 0 || j > L || j % 2 == 0)
            throw StructuralError("sector forms are only defined at odd levels 1.." + std::to_string(L));
        if (om.rows() != static_cast<Eigen::Index>(m[j]) || om.cols() != om.rows())
            throw StructuralError("sector form at level " + std::to_string(j) + " must be " + std::to_string(m[j]) +
                                  " x " + std::to_string(m[j]));
        if (max_abs(om + om.transpose()) > sys.tol.tol_weak)
            throw StructuralError("sector form at level " + std::to_string(j) + " is not antisymmetric");
    }
    for (std::size_t j = 1; j <= L; j += 2)
        forms.e[j] = (j == L) ? lad.d_top_inv : Mat::Identity(static_cast<Eigen::Index>(m[j]), static_cast<Eigen::Index>(m[j]));

    std::vector<bool> done(L + 1, false);
    std::function<const Mat&(std::size_t)> w_at = [&](std::size_t k) -> const Mat& {
        if (done[k]) return forms.w_up[k];
        const auto n = static_cast<Eigen::Index>(m[k]);
        auto over = choice.sector_forms.find(k);
        if (k % 2 == 1 && over != choice.sector_forms.end()) {
            const Mat& e = forms.e[k];
            Mat oinv = checked_inverse(over->second, tr, "sector form at level " + std::to_string(k));
            forms.w_up[k] = antisymmetrize(e.transpose() * oinv * e);
        } else if (k == L) {
            if (L % 2 == 1) {
                Mat om = canonical_form(m[L]);
                forms.w_up[k] = antisymmetrize(forms.e[k].transpose() * om.transpose() * forms.e[k]);
            } else {
                forms.w_up[k] = canonical_form(m[L]);
            }
        } else {
            const Mat& dk = lad.d[k];
            if (r[k] % 2 != 0)
                throw ParityError("projector at level " + std::to_string(k) + " has odd rank " +
                                  std::to_string(r[k]) + "; no compatible invertible form exists");
            Mat u = range_basis(dk, tr);
            if (u.cols() != r[k]) throw ConstructionError("projector rank mismatch at level " + std::to_string(k));
            Mat x = u * canonical_form(static_cast<std::size_t>(r[k])) * u.transpose();
            const Mat& zn = lad.z[k];
            forms.w_up[k] = antisymmetrize(dk.transpose() * x * dk + zn.transpose() * w_at(k + 1) * zn);
        }
        if (numerical_rank(forms.w_up[k], tr) != static_cast<std::size_t>(n))
            throw ConstructionError("level form at level " + std::to_string(k) + " is singular");
        if (k < L) {
            const Mat& dk = lad.d[k];
            forms.residuals["w" + std::to_string(k) + "_compat"] =
                max_abs(dk.transpose() * forms.w_up[k] - forms.w_up[k] * dk);
        }
        done[k] = true;
        return forms.w_up[k];
    };

    w_at(1);
    for (std::size_t j = 1; j <= L; j += 2) {
        auto over = choice.sector_forms.find(j);
        if (over != choice.sector_forms.end()) {
            forms.omega[j] = over->second;
        } else if (j == L) {
            forms.omega[j] = canonical_form(m[L]);
        } else {
            forms.omega[j] = antisymmetrize(checked_inverse(w_at(j), tr, "level form"));
        }
        forms.omega_inv[j] = checked_inverse(forms.omega[j], tr, "sector form at level " + std::to_string(j));
        if (j < L) {
            const Mat& dj = lad.d[j];
            forms.residuals["omega" + std::to_string(j) + "_compat"] =
                max_abs(dj * forms.omega[j] - forms.omega[j] * dj.transpose());
        }
    }
    return forms;
}

const Mat& DiracStructure::kernel(Kernel k) const
{
    if (k == Kernel::M) return m;
    if (!mu) throw PreconditionError("structure was built without the invertible kernel");
    return *mu;
}

Mat build_C(const ReducibleSystem& sys, const Vec& z, bool check_surface)
{
    if (check_surface) require_on_surface(sys, z);
    Mat j = jacobian(sys.chi, z, sys.space.dim());
    Mat c = antisymmetrize(j * sys.space.sigma() * j.transpose());
    long M = sys.independent_count();
    std::size_t rk = numerical_rank(c, sys.tol.tol_rank);
    if (M < 0 || rk != static_cast<std::size_t>(M))
        throw NotSecondClassError("rank [chi, chi] = " + std::to_string(rk) + " but the alternating sum is " +
                                  std::to_string(M));
    if (!sys.z_stages.empty()) {
        double r = max_abs(sys.z_stages[0].to_double() * c);
        if (r > sys.tol.tol_weak * std::max(1.0, max_abs(c)))
            throw NotSecondClassError("Z_1 [chi, chi] does not vanish (" + std::to_string(r) + ")");
    }
    return c;
}

Mat solve_M(const ReducibleSystem& sys, const Mat& c, const Mat& d0)
{
    Mat m = antisymmetrize(pinv(c, sys.tol.tol_rank) * d0);
    double r = max_abs(c * m - d0);
    if (!(r <= sys.tol.tol_weak)) throw SolverError("C m = D_0 residual " + std::to_string(r), r);
    return m;
}

MuPair build_mu(const ReducibleSystem& sys, const ProjectorLadder& lad, const Mat& c, const Mat& m,
                const LevelForms& forms)
{
    const auto m0 = static_cast<Eigen::Index>(sys.chi.size());
    if (m0 % 2 != 0)
        throw ParityError("an invertible antisymmetric kernel needs an even number of constraints, got " +
                          std::to_string(m0));
    MuPair out;
    if (lad.order == 0) {
        out.mu = m;
    } else {
        if (forms.w_up.size() != lad.order + 1 || forms.w_up[1].size() == 0)
            throw PreconditionError("level forms do not match the ladder");
        const Mat& z1 = lad.z[0];
        out.mu = antisymmetrize(m + z1.transpose() * forms.w_up[1] * z1);
    }
    out.mu_inv = checked_inverse(out.mu, sys.tol.tol_rank, "kernel mu");
    const Mat id = Mat::Identity(m0, m0);
    out.residuals["mu_mu_inv"] = max_abs(out.mu * out.mu_inv - id);
    const Mat& d0 = lad.d0();
    out.residuals["m_projected"] = max_abs(m - d0.transpose() * out.mu * d0);
    if (lad.order >= 1) {
        const Mat& a1 = lad.abar[0];
        Mat closed = c + a1 * forms.w_up[1].fullPivLu().inverse() * a1.transpose();
        out.residuals["mu_inv_closed"] = max_abs(out.mu_inv - closed);
    }
    if (out.residuals["mu_mu_inv"] > sys.tol.tol_weak)
        throw ConstructionError("kernel mu is numerically singular");
    return out;
}

DiracStructure build_structure(const ReducibleSystem& sys, const ProjectorLadder& lad, const Vec& z,
                               const LevelForms* forms, bool check_surface)
{
    DiracStructure st;
    st.point = z;
    st.c = build_C(sys, z, check_surface);
    st.jac = jacobian(sys.chi, z, sys.space.dim());
    st.m = solve_M(sys, st.c, lad.d0());
    st.residuals["c_m_d0"] = max_abs(st.c * st.m - lad.d0());
    if (forms) {
        MuPair mp = build_mu(sys, lad, st.c, st.m, *forms);
        st.mu = mp.mu;
        st.mu_inv = mp.mu_inv;
        for (const auto& [k, v] : mp.residuals) st.residuals[k] = v;
    }
    return st;
}

double dirac_bracket_at(const PolyFunction& f, const PolyFunction& g, const ReducibleSystem& sys,
                        const DiracStructure& st, Kernel kernel)
{
    if (f.n_vars() != sys.space.dim() || g.n_vars() != sys.space.dim())
        throw StructuralError("observable dimension does not match the phase space");
    return constrained_bracket(f.gradient(st.point), g.gradient(st.point), sys.space.sigma(), st.jac,
                               st.kernel(kernel));
}

Mat fundamental_dirac(const ReducibleSystem& sys, const DiracStructure& st, Kernel kernel)
{
    return constrained_fundamental(sys.space.sigma(), st.jac, st.kernel(kernel));
}

Trajectory evolve(const ReducibleSystem& sys, const ProjectorLadder& lad, const PolyFunction& h, const Vec& z0,
                  double dt, std::size_t steps, double drift_tol, Kernel kernel, const LevelForms* forms)
{
    if (h.n_vars() != sys.space.dim()) throw StructuralError("hamiltonian dimension does not match the phase space");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw StructuralError("time step must be positive");
    if (kernel == Kernel::Mu && !forms) throw PreconditionError("invertible kernel requested without level forms");
    require_on_surface(sys, z0);
    auto velocity = [&](const Vec& z) -> Vec {
        DiracStructure st = build_structure(sys, lad, z, kernel == Kernel::Mu ? forms : nullptr, false);
        return fundamental_dirac(sys, st, kernel) * h.gradient(z);
    };
    Trajectory tr;
    tr.points.reserve(steps + 1);
    Vec z = z0;
    tr.points.push_back(z);
    tr.drift.push_back(max_constraint_value(sys.chi, z));
    for (std::size_t s = 0; s < steps; ++s) {
        Vec k1 = velocity(z);
        Vec k2 = velocity(z + 0.5 * dt * k1);
        Vec k3 = velocity(z + 0.5 * dt * k2);
        Vec k4 = velocity(z + dt * k3);
        z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        double d = max_constraint_value(sys.chi, z);
        tr.points.push_back(z);
        tr.drift.push_back(d);
    }
    for (double d : tr.drift) tr.max_drift = std::max(tr.max_drift, d);
    tr.flagged = !(tr.max_drift <= drift_tol);
    return tr;
}

}  // namespace dirac_forge

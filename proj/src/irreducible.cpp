#include "dirac_forge/irreducible.hpp"

#include "dirac_forge/errors.hpp"
#include "dirac_forge/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dirac_forge {

std::size_t ExtendedPhaseSpace::dim() const
{
    std::size_t d = base.dim();
    for (const auto& s : sectors) d += s.size;
    return d;
}

Mat ExtendedPhaseSpace::bracket_matrix() const
{
    const auto n = static_cast<Eigen::Index>(dim());
    Mat s = Mat::Zero(n, n);
    const auto b = static_cast<Eigen::Index>(base.dim());
    s.topLeftCorner(b, b) = base.sigma();
    for (const auto& sec : sectors) {
        auto o = static_cast<Eigen::Index>(sec.offset);
        auto m = static_cast<Eigen::Index>(sec.size);
        s.block(o, o, m, m) = sec.omega;
    }
    return s;
}

Vec ExtendedPhaseSpace::extend(const Vec& z) const
{
    if (static_cast<std::size_t>(z.size()) != base.dim()) throw StructuralError("base point dimension mismatch");
    Vec x = Vec::Zero(static_cast<Eigen::Index>(dim()));
    x.head(z.size()) = z;
    return x;
}

Vec ExtendedPhaseSpace::base_part(const Vec& x) const
{
    if (static_cast<std::size_t>(x.size()) != dim()) throw StructuralError("extended point dimension mismatch");
    return x.head(static_cast<Eigen::Index>(base.dim()));
}

const SectorInfo& ExtendedPhaseSpace::sector(std::size_t level) const
{
    for (const auto& s : sectors)
        if (s.level == level) return s;
    throw StructuralError("no y-sector at level " + std::to_string(level));
}

namespace {

ExtendedPhaseSpace make_extended(const ReducibleSystem& sys, const LevelForms& forms)
{
    ExtendedPhaseSpace ext;
    ext.base = sys.space;
    std::size_t off = sys.space.dim();
    const auto m = sys.level_sizes();
    for (std::size_t j = 1; j < m.size(); j += 2) {
        SectorInfo s;
        s.level = j;
        s.offset = off;
        s.size = m[j];
        s.omega = forms.omega.at(j);
        s.omega_inv = forms.omega_inv.at(j);
        off += m[j];
        ext.sectors.push_back(std::move(s));
    }
    return ext;
}

PolyFunction lift(const PolyFunction& f, std::size_t dim)
{
    return f.n_vars() == dim ? f : f.padded(dim);
}

void require_extended_surface(const std::vector<PolyFunction>& cs, const Vec& x, double tol)
{
    double r = max_constraint_value(cs, x);
    if (!(r <= tol))
        throw PreconditionError("point is off the extended constraint surface (max residual " + std::to_string(r) +
                                ")");
}

Mat intermediate_kernel(const IntermediateSystem& inter, const Mat& mu)
{
    const auto m0 = mu.rows();
    Eigen::Index total = m0;
    for (const auto& s : inter.ext.sectors) total += static_cast<Eigen::Index>(s.size);
    Mat k = Mat::Zero(total, total);
    k.topLeftCorner(m0, m0) = mu;
    Eigen::Index o = m0;
    for (const auto& s : inter.ext.sectors) {
        auto n = static_cast<Eigen::Index>(s.size);
        k.block(o, o, n, n) = s.omega_inv;
        o += n;
    }
    return k;
}

Mat intermediate_fundamental(const IntermediateSystem& inter, const Vec& x)
{
    require_extended_surface(inter.constraints, x, inter.sys.tol.tol_surface);
    Vec z = inter.ext.base_part(x);
    DiracStructure st = build_structure(inter.sys, inter.ladder, z, &inter.forms);
    Mat jac = jacobian(inter.constraints, x, inter.ext.dim());
    return constrained_fundamental(inter.ext.bracket_matrix(), jac, intermediate_kernel(inter, *st.mu));
}

}  // namespace

IntermediateSystem build_intermediate(const ReducibleSystem& sys, const ProjectorLadder& ladder,
                                      const LevelForms& forms)
{
    if (sys.chi.size() % 2 != 0)
        throw ParityError("an invertible antisymmetric kernel needs an even number of constraints, got " +
                          std::to_string(sys.chi.size()));
    IntermediateSystem inter{sys, ladder, forms, make_extended(sys, forms), {}};
    const std::size_t dim = inter.ext.dim();
    for (const auto& c : sys.chi) inter.constraints.push_back(lift(c, dim));
    for (const auto& s : inter.ext.sectors)
        for (std::size_t a = 0; a < s.size; ++a) inter.constraints.push_back(PolyFunction::variable(dim, s.offset + a));
    return inter;
}

double intermediate_bracket_at(const PolyFunction& f, const PolyFunction& g, const IntermediateSystem& inter,
                               const Vec& x)
{
    const std::size_t dim = inter.ext.dim();
    Mat b = intermediate_fundamental(inter, x);
    return lift(f, dim).gradient(x).dot(b * lift(g, dim).gradient(x));
}

IrreducibleSystem build_irreducible(const ReducibleSystem& sys, const ProjectorLadder& ladder, const LevelForms& forms)
{
    std::map<std::size_t, Mat> a;
    const std::size_t L = ladder.order;
    for (std::size_t j = 1; j <= L; j += 2) {
        // Abar_j = A_j e_j
        a[j] = (j == L) ? ladder.a_top : Mat(ladder.abar[j - 1] * forms.e.at(j).fullPivLu().inverse());
    }
    return assemble_irreducible(sys, ladder, forms, a);
}

IrreducibleSystem assemble_irreducible(const ReducibleSystem& sys, const ProjectorLadder& ladder,
                                       const LevelForms& forms, const std::map<std::size_t, Mat>& a)
{
    if (sys.chi.size() % 2 != 0)
        throw ParityError("an invertible antisymmetric kernel needs an even number of constraints, got " +
                          std::to_string(sys.chi.size()));
    const std::size_t L = ladder.order;
    const auto m = sys.level_sizes();
    IrreducibleSystem irr;
    irr.sys = sys;
    irr.ladder = ladder;
    irr.forms = forms;
    irr.ext = make_extended(sys, forms);
    irr.a = a;
    const std::size_t dim = irr.ext.dim();
    for (std::size_t j = 1; j <= L; j += 2) {
        auto it = a.find(j);
        if (it == a.end() || it->second.rows() != static_cast<Eigen::Index>(m[j - 1]) ||
            it->second.cols() != static_cast<Eigen::Index>(m[j]))
            throw StructuralError("A block at level " + std::to_string(j) + " is missing or misshaped");
    }

    auto add_y = [&](PolyFunction& f, const Mat& coef, Eigen::Index row, const SectorInfo& s) {
        for (std::size_t b = 0; b < s.size; ++b) {
            double v = coef(row, static_cast<Eigen::Index>(b));
            if (v == 0.0) continue;
            PolyFunction::Exponents e(dim, 0);
            e[s.offset + b] = 1;
            f.add_term(std::move(e), rational_from_double(v));
        }
    };

    for (std::size_t l = 0; l <= L; l += 2) {
        irr.block_levels.push_back(l);
        irr.block_offsets.push_back(irr.chi_tilde.size());
        for (std::size_t r = 0; r < m[l]; ++r) {
            PolyFunction f(dim);
            if (l == 0) {
                f = lift(sys.chi[r], dim);
            } else {
                const auto& zl = sys.z_stages[l - 1];
                const SectorInfo& s = irr.ext.sector(l - 1);
                for (std::size_t b = 0; b < s.size; ++b) {
                    if (zl(r, b) == 0) continue;
                    PolyFunction::Exponents e(dim, 0);
                    e[s.offset + b] = 1;
                    f.add_term(std::move(e), zl(r, b));
                }
            }
            if (l + 1 <= L) add_y(f, a.at(l + 1), static_cast<Eigen::Index>(r), irr.ext.sector(l + 1));
            irr.chi_tilde.push_back(std::move(f));
        }
    }
    return irr;
}

CDelta build_c_delta(const IrreducibleSystem& irr, const Vec& x, bool check_surface)
{
    if (check_surface) require_extended_surface(irr.chi_tilde, x, irr.sys.tol.tol_surface);
    const auto& lad = irr.ladder;
    const auto& forms = irr.forms;
    const std::size_t L = lad.order;
    Vec z = irr.ext.base_part(x);
    DiracStructure st = build_structure(irr.sys, lad, z, &forms, check_surface);

    const auto n = static_cast<Eigen::Index>(irr.count());
    const std::size_t nb = irr.block_levels.size();
    auto off = [&](std::size_t b) { return static_cast<Eigen::Index>(irr.block_offsets[b]); };
    auto sz = [&](std::size_t b) {
        return static_cast<Eigen::Index>((b + 1 < nb ? irr.block_offsets[b + 1] : irr.count()) - irr.block_offsets[b]);
    };
    auto omega = [&](std::size_t j) -> const Mat& { return forms.omega.at(j); };
    auto omega_inv = [&](std::size_t j) -> const Mat& { return forms.omega_inv.at(j); };
    // E_j Z_j
    auto ez = [&](std::size_t j) -> Mat { return forms.e.at(j) * lad.z[j - 1]; };

    CDelta cd;
    cd.c = Mat::Zero(n, n);
    cd.inv_closed = Mat::Zero(n, n);
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t l = irr.block_levels[b];
        Mat diag = (l == 0) ? st.c : Mat(lad.z[l - 1] * omega(l - 1) * lad.z[l - 1].transpose());
        if (l + 1 <= L) {
            const Mat& al = irr.a.at(l + 1);
            diag += al * omega(l + 1) * al.transpose();
        }
        cd.c.block(off(b), off(b), sz(b), sz(b)) = diag;

        Mat psi;
        if (l == 0) {
            psi = *st.mu;
        } else {
            const Mat& ab = lad.abar[l - 1];
            psi = ab.transpose() * omega_inv(l - 1) * ab;
            if (l + 1 <= L) {
                Mat e = ez(l + 1);
                psi += e.transpose() * omega_inv(l + 1) * e;
            }
        }
        cd.inv_closed.block(off(b), off(b), sz(b), sz(b)) = psi;

        if (b + 1 < nb) {
            Mat up = irr.a.at(l + 1) * omega(l + 1) * lad.z[l + 1].transpose();
            cd.c.block(off(b), off(b + 1), sz(b), sz(b + 1)) = up;
            cd.c.block(off(b + 1), off(b), sz(b + 1), sz(b)) = -up.transpose();
            Mat iup = ez(l + 1).transpose() * omega_inv(l + 1) * lad.abar[l + 1];
            cd.inv_closed.block(off(b), off(b + 1), sz(b), sz(b + 1)) = iup;
            cd.inv_closed.block(off(b + 1), off(b), sz(b + 1), sz(b)) = -iup.transpose();
        }
    }
    Mat jac = jacobian(irr.chi_tilde, x, irr.ext.dim());
    cd.c_direct = antisymmetrize(jac * irr.ext.bracket_matrix() * jac.transpose());
    cd.residuals["blockwise_vs_direct"] = max_abs(cd.c - cd.c_direct);
    cd.residuals["c_inv_closed"] = inf_norm(cd.c * cd.inv_closed - Mat::Identity(n, n));
    if (numerical_rank(cd.c, irr.sys.tol.tol_rank) == static_cast<std::size_t>(n)) {
        Mat numeric = cd.c.fullPivLu().inverse();
        cd.residuals["closed_vs_numeric"] = max_abs(cd.inv_closed - numeric);
    } else {
        cd.residuals["closed_vs_numeric"] = std::numeric_limits<double>::infinity();
    }
    for (const auto& [k, v] : st.residuals) cd.residuals["base_" + k] = v;
    return cd;
}

IrreducibleStructure build_irreducible_structure(const IrreducibleSystem& irr, const Vec& x)
{
    IrreducibleStructure st;
    st.point = x;
    st.cd = build_c_delta(irr, x, true);
    st.jac = jacobian(irr.chi_tilde, x, irr.ext.dim());
    return st;
}

double irreducible_dirac_at(const PolyFunction& f, const PolyFunction& g, const IrreducibleSystem& irr,
                            const IrreducibleStructure& st)
{
    const std::size_t dim = irr.ext.dim();
    if ((f.n_vars() != dim && f.n_vars() != irr.ext.base.dim()) ||
        (g.n_vars() != dim && g.n_vars() != irr.ext.base.dim()))
        throw StructuralError("observable dimension matches neither the base nor the extended space");
    return constrained_bracket(lift(f, dim).gradient(st.point), lift(g, dim).gradient(st.point),
                               irr.ext.bracket_matrix(), st.jac, st.cd.inv_closed);
}

double irreducible_dirac_at(const PolyFunction& f, const PolyFunction& g, const IrreducibleSystem& irr, const Vec& x)
{
    return irreducible_dirac_at(f, g, irr, build_irreducible_structure(irr, x));
}

Mat irreducible_fundamental(const IrreducibleSystem& irr, const IrreducibleStructure& st)
{
    return constrained_fundamental(irr.ext.bracket_matrix(), st.jac, st.cd.inv_closed);
}

double recovery_residual(const IrreducibleSystem& irr)
{
    const std::size_t dim = irr.ext.dim();
    const std::size_t L = irr.ladder.order;
    const auto m = irr.sys.level_sizes();

    // targets: chi, then y sectors in order
    std::vector<PolyFunction> target;
    for (const auto& c : irr.sys.chi) target.push_back(lift(c, dim));
    for (const auto& s : irr.ext.sectors)
        for (std::size_t a = 0; a < s.size; ++a) target.push_back(PolyFunction::variable(dim, s.offset + a));

    std::map<PolyFunction::Exponents, Eigen::Index, PolyFunction::GrlexLess> cols;
    auto collect = [&](const std::vector<PolyFunction>& fs) {
        for (const auto& f : fs)
            for (const auto& [e, c] : f.terms()) cols.emplace(e, 0);
    };
    collect(target);
    collect(irr.chi_tilde);
    Eigen::Index next = 0;
    for (auto& [e, i] : cols) i = next++;
    auto coeffs = [&](const std::vector<PolyFunction>& fs) {
        Mat out = Mat::Zero(static_cast<Eigen::Index>(fs.size()), next);
        for (std::size_t r = 0; r < fs.size(); ++r)
            for (const auto& [e, c] : fs[r].terms()) out(static_cast<Eigen::Index>(r), cols.at(e)) = c.get_d();
        return out;
    };
    Mat t_coef = coeffs(irr.chi_tilde);
    Mat goal = coeffs(target);

    Mat rec = Mat::Zero(goal.rows(), t_coef.rows());
    const auto m0 = static_cast<Eigen::Index>(m[0]);
    rec.block(0, 0, m0, m0) = irr.ladder.d0();
    Eigen::Index row = m0;
    for (const auto& s : irr.ext.sectors) {
        const std::size_t j = s.level;
        auto n = static_cast<Eigen::Index>(s.size);
        // y_j = E_j Z_j chi~_{j-1} + Abar_{j+1} chi~_{j+1}
        std::size_t below = (j - 1) / 2;
        auto ob = static_cast<Eigen::Index>(irr.block_offsets[below]);
        rec.block(row, ob, n, static_cast<Eigen::Index>(m[j - 1])) = irr.forms.e.at(j) * irr.ladder.z[j - 1];
        if (j + 1 <= L) {
            auto oa = static_cast<Eigen::Index>(irr.block_offsets[below + 1]);
            rec.block(row, oa, n, static_cast<Eigen::Index>(m[j + 1])) = irr.ladder.abar[j];
        }
        row += n;
    }
    return max_abs(rec * t_coef - goal);
}

ExtendedDof extended_dof_report(const IrreducibleSystem& irr, const Vec& x)
{
    require_extended_surface(irr.chi_tilde, x, irr.sys.tol.tol_surface);
    ExtendedDof rep;
    rep.dim = irr.ext.dim();
    Mat jac = jacobian(irr.chi_tilde, x, rep.dim);
    Mat t = null_space(jac, irr.sys.tol.tol_rank);
    Mat form = irr.ext.bracket_matrix().fullPivLu().inverse();
    rep.induced_rank = numerical_rank(t.transpose() * form * t, irr.sys.tol.tol_rank);
    rep.expected = static_cast<long>(irr.sys.space.dim()) - irr.sys.independent_count();
    rep.pass = static_cast<long>(rep.induced_rank) == rep.expected;
    return rep;
}

PolyFunction random_observable(std::size_t dim, std::uint64_t seed)
{
    Rng rng(seed);
    PolyFunction f(dim);
    std::size_t terms = 1 + rng.below(3);
    for (std::size_t t = 0; t < terms; ++t) {
        PolyFunction::Exponents e(dim, 0);
        std::size_t deg = 1 + rng.below(3);
        for (std::size_t d = 0; d < deg; ++d) e[rng.below(dim)] += 1;
        long num = 1 + static_cast<long>(rng.below(4));
        if (rng.below(2)) num = -num;
        long den = 1 + static_cast<long>(rng.below(3));
        f.add_term(std::move(e), Rational(num, den));
    }
    if (f.is_zero()) f = PolyFunction::variable(dim, rng.below(dim));
    return f;
}

Certificate certify_equivalence(const IrreducibleSystem& irr, std::size_t n_points, std::size_t n_observables,
                                std::uint64_t seed)
{
    const ReducibleSystem& sys = irr.sys;
    Certificate cert;
    cert.points = n_points;
    cert.observables = n_observables;
    cert.seed = seed;
    cert.tol = sys.tol.tol_weak;
    const std::size_t dim = sys.space.dim();
    const auto b = static_cast<Eigen::Index>(dim);

    std::vector<std::pair<PolyFunction, PolyFunction>> obs;
    for (std::size_t k = 0; k < n_observables; ++k)
        obs.emplace_back(random_observable(dim, substream_seed(seed ^ 0x5eedULL, 2 * k)),
                         random_observable(dim, substream_seed(seed ^ 0x5eedULL, 2 * k + 1)));

    IntermediateSystem inter = build_intermediate(sys, irr.ladder, irr.forms);
    SurfaceSampleOptions so;
    so.tol_surface = sys.tol.tol_surface;
    so.tol_rank = sys.tol.tol_rank;
    for (std::size_t i = 0; i < n_points; ++i) {
        Vec z = sample_surface_point(sys.space, sys.chi, substream_seed(seed, i), so);
        Vec x = irr.ext.extend(z);
        DiracStructure red = build_structure(sys, irr.ladder, z);
        Mat fred = fundamental_dirac(sys, red);
        IrreducibleStructure ist = build_irreducible_structure(irr, x);
        Mat firr = irreducible_fundamental(irr, ist);
        Mat finter = intermediate_fundamental(inter, x);
        if (i == 0) {
            cert.fundamental_reducible = fred;
            cert.fundamental_irreducible = firr.topLeftCorner(b, b);
        }
        cert.fundamental_deviation = std::max(cert.fundamental_deviation, max_abs(fred - firr.topLeftCorner(b, b)));
        cert.intermediate_deviation =
            std::max(cert.intermediate_deviation, max_abs(fred - finter.topLeftCorner(b, b)));
        for (const auto& [f, g] : obs) {
            double vr = dirac_bracket_at(f, g, sys, red);
            double vi = irreducible_dirac_at(f, g, irr, ist);
            cert.observable_deviation = std::max(cert.observable_deviation, std::abs(vr - vi));
        }
        cert.closed_form_deviation = std::max(cert.closed_form_deviation, ist.cd.residuals.at("c_inv_closed"));
    }
    // z-only brackets depend on the surface alone, so a wrong A block only shows up here
    cert.recovery_deviation = recovery_residual(irr);
    cert.max_deviation = std::max({cert.fundamental_deviation, cert.observable_deviation, cert.closed_form_deviation,
                                   cert.recovery_deviation});
    cert.pass = cert.max_deviation < cert.tol && cert.intermediate_deviation < cert.tol;
    return cert;
}

ReducibleSystem to_canonical_system(const IrreducibleSystem& irr)
{
    const std::size_t n = irr.sys.space.n_pairs;
    std::size_t h_total = 0;
    for (const auto& s : irr.ext.sectors) h_total += s.size / 2;
    const std::size_t np = n + h_total;
    const std::size_t nd = 2 * np;

    // each extended coordinate as a linear polynomial in the canonical ones
    std::vector<PolyFunction> subst;
    for (std::size_t i = 0; i < n; ++i) subst.push_back(PolyFunction::variable(nd, i));
    for (std::size_t i = 0; i < n; ++i) subst.push_back(PolyFunction::variable(nd, np + i));
    std::size_t pair_off = n;
    for (const auto& s : irr.ext.sectors) {
        Mat t = darboux_basis(s.omega, irr.sys.tol.tol_rank);
        Mat tinv = t.fullPivLu().inverse();
        const std::size_t h = s.size / 2;
        std::vector<PolyFunction> w;
        for (std::size_t a = 0; a < h; ++a) w.push_back(PolyFunction::variable(nd, pair_off + a));
        for (std::size_t a = 0; a < h; ++a) w.push_back(PolyFunction::variable(nd, np + pair_off + a));
        for (std::size_t bi = 0; bi < s.size; ++bi) {
            std::vector<Rational> row(s.size);
            for (std::size_t a = 0; a < s.size; ++a)
                row[a] = rational_from_double(tinv(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(a)));
            subst.push_back(linear_combination(w, row, nd));
        }
        pair_off += h;
    }

    ReducibleSystem out;
    out.space = PhaseSpace(np);
    out.tol = irr.sys.tol;
    out.seed = irr.sys.seed;
    out.n_samples = irr.sys.n_samples;
    for (const auto& f : irr.chi_tilde) {
        PolyFunction g(nd);
        for (const auto& [e, c] : f.terms()) {
            PolyFunction term = PolyFunction::constant(nd, c);
            for (std::size_t v = 0; v < e.size(); ++v)
                for (std::uint32_t k = 0; k < e[v]; ++k) term = term * subst[v];
            g += term;
        }
        out.chi.push_back(std::move(g));
    }
    return out;
}

}  // namespace dirac_forge

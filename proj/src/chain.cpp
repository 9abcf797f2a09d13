#include "dirac_forge/chain.hpp"

#include "dirac_forge/errors.hpp"
#include "dirac_forge/parallel.hpp"
#include "dirac_forge/random.hpp"

#include <algorithm>
#include <cmath>

namespace dirac_forge {

Mat RationalMatrix::to_double() const
{
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j).get_d();
    return m;
}

bool RationalMatrix::is_zero() const
{
    return std::all_of(data.begin(), data.end(), [](const Rational& r) { return r == 0; });
}

double RationalMatrix::max_abs() const
{
    double m = 0.0;
    for (const auto& r : data) m = std::max(m, std::abs(r.get_d()));
    return m;
}

RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b)
{
    if (a.cols != b.rows) throw StructuralError("rational matrix shape mismatch");
    RationalMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const Rational& x = a(i, k);
            if (x == 0) continue;
            for (std::size_t j = 0; j < b.cols; ++j)
                if (b(k, j) != 0) c(i, j) += x * b(k, j);
        }
    return c;
}

std::vector<std::size_t> ReducibleSystem::level_sizes() const
{
    std::vector<std::size_t> m{chi.size()};
    for (const auto& z : z_stages) m.push_back(z.rows);
    return m;
}

long ReducibleSystem::independent_count() const
{
    long s = 0, sign = 1;
    for (auto m : level_sizes()) {
        s += sign * static_cast<long>(m);
        sign = -sign;
    }
    return s;
}

void ReducibleSystem::check_shapes() const
{
    if (!space.names.empty() && space.names.size() != space.dim())
        throw StructuralError("expected " + std::to_string(space.dim()) + " coordinate names");
    for (std::size_t a = 0; a < chi.size(); ++a)
        if (chi[a].n_vars() != space.dim())
            throw StructuralError("constraint " + std::to_string(a) + " has " + std::to_string(chi[a].n_vars()) +
                                  " variables, phase space has " + std::to_string(space.dim()));
    std::size_t prev = chi.size();
    for (std::size_t k = 0; k < z_stages.size(); ++k) {
        const auto& z = z_stages[k];
        if (z.cols != prev)
            throw StructuralError("stage " + std::to_string(k + 1) + " has " + std::to_string(z.cols) +
                                  " columns, level " + std::to_string(k) + " has " + std::to_string(prev) +
                                  " functions");
        if (z.rows == 0) throw StructuralError("stage " + std::to_string(k + 1) + " has no rows");
        if (z.data.size() != z.rows * z.cols)
            throw StructuralError("stage " + std::to_string(k + 1) + " data size mismatch");
        prev = z.rows;
    }
    if (!(tol.tol_weak > 0 && tol.tol_rank > 0 && tol.tol_surface > 0))
        throw StructuralError("tolerances must be positive");
    if (n_samples < 1) throw StructuralError("n_samples must be at least 1");
}

bool ValidationReport::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* ValidationReport::find(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

ValidationReport validate(const ReducibleSystem& sys)
{
    sys.check_shapes();
    ValidationReport rep;
    rep.level_sizes = sys.level_sizes();
    rep.independent_count = sys.independent_count();
    const std::size_t L = sys.order();
    const double tw = sys.tol.tol_weak;

    if (L >= 1) {
        const auto& z1 = sys.z_stages[0];
        double worst = 0.0;
        for (std::size_t a = 0; a < z1.rows; ++a) {
            std::vector<Rational> row(z1.cols);
            for (std::size_t b = 0; b < z1.cols; ++b) row[b] = z1(a, b);
            worst = std::max(worst, linear_combination(sys.chi, row, sys.space.dim()).max_abs_coeff());
        }
        rep.checks.push_back({"z1_chi_strong", worst, tw, worst < tw,
                              worst < tw ? "" : "Z_1 chi is not identically zero"});
    }
    for (std::size_t k = 1; k < L; ++k) {
        double r = (sys.z_stages[k] * sys.z_stages[k - 1]).max_abs();
        std::string nm = "z" + std::to_string(k + 1) + "_z" + std::to_string(k);
        rep.checks.push_back({nm, r, tw, r < tw, r < tw ? "" : "consecutive stages do not compose to zero"});
    }
    for (std::size_t k = 0; k < L; ++k) {
        bool zero = sys.z_stages[k].is_zero();
        rep.checks.push_back({"stage" + std::to_string(k + 1) + "_nonzero", zero ? 1.0 : 0.0, 0.5, !zero,
                              zero ? "stage matrix is zero" : ""});
    }
    std::vector<Mat> zd;
    for (const auto& z : sys.z_stages) {
        zd.push_back(z.to_double());
        rep.stage_ranks.push_back(numerical_rank(zd.back(), sys.tol.tol_rank));
    }
    if (L >= 1) {
        std::size_t ml = sys.z_stages.back().rows;
        bool ok = rep.stage_ranks.back() == ml;
        rep.checks.push_back({"top_stage_full_rank", static_cast<double>(ml - rep.stage_ranks.back()), 0.5, ok,
                              ok ? "" : "rank(Z_L) < M_L: top-stage functions are dependent"});
    }
    // range(Z_k) = ker(Z_{k+1}) at every intermediate level
    for (std::size_t k = 1; k < L; ++k) {
        std::size_t mk = rep.level_sizes[k];
        long gap = static_cast<long>(mk) - static_cast<long>(rep.stage_ranks[k - 1] + rep.stage_ranks[k]);
        rep.checks.push_back({"level" + std::to_string(k) + "_exact", static_cast<double>(std::labs(gap)), 0.5,
                              gap == 0, gap == 0 ? "" : "stages are not exact at this level"});
    }
    const long M = rep.independent_count;
    {
        bool ok = M >= 0 && M % 2 == 0 && static_cast<std::size_t>(M) <= sys.space.dim();
        rep.checks.push_back({"independent_count_admissible", ok ? 0.0 : 1.0, 0.5, ok,
                              ok ? "" : "alternating sum must be even and within [0, 2N]"});
    }

    // second-class at sampled surface points
    const auto ns = static_cast<std::size_t>(sys.n_samples);
    std::vector<std::size_t> ranks(ns, 0);
    std::vector<double> z1c(ns, 0.0);
    std::string sample_failure;
    double sample_res = 0.0;
    try {
        parallel_for(ns, [&](std::size_t i) {
            SurfaceSampleOptions so;
            so.tol_surface = sys.tol.tol_surface;
            so.tol_rank = sys.tol.tol_rank;
            Vec z = sample_surface_point(sys.space, sys.chi, substream_seed(sys.seed, i), so);
            Mat j = jacobian(sys.chi, z, sys.space.dim());
            Mat c = j * sys.space.sigma() * j.transpose();
            ranks[i] = numerical_rank(c, sys.tol.tol_rank);
            if (!zd.empty()) z1c[i] = max_abs(zd[0] * c);
        });
    } catch (const SamplingError& e) {
        sample_failure = e.what();
        sample_res = e.residual();
    }
    if (!sample_failure.empty()) {
        rep.checks.push_back({"surface_sampling", sample_res, sys.tol.tol_surface, false, sample_failure});
        rep.checks.push_back({"second_class", 0.0, 0.0, false, "no surface points"});
        return rep;
    }
    rep.checks.push_back({"surface_sampling", 0.0, sys.tol.tol_surface, true, ""});
    rep.c_ranks = ranks;
    long worst_gap = 0;
    for (auto r : ranks) worst_gap = std::max(worst_gap, std::labs(static_cast<long>(r) - M));
    rep.checks.push_back({"second_class", static_cast<double>(worst_gap), 0.5, worst_gap == 0,
                          worst_gap == 0 ? "" : "rank [chi, chi] differs from the alternating sum"});
    if (!zd.empty()) {
        double w = *std::max_element(z1c.begin(), z1c.end());
        rep.checks.push_back({"z1_c_weak", w, tw, w < tw, w < tw ? "" : "Z_1 [chi, chi] is not zero on the surface"});
    }
    return rep;
}

std::vector<long> profile_ranks(const std::vector<std::size_t>& levels)
{
    std::vector<long> r(levels.size(), 0);
    if (levels.empty()) return r;
    long next = 0;
    for (std::size_t k = levels.size(); k-- > 0;) {
        r[k] = static_cast<long>(levels[k]) - next;
        next = r[k];
    }
    return r;
}

namespace {

struct Unimodular {
    RationalMatrix u;
    RationalMatrix inv;
};

// products of elementary integer row operations; inverse tracked as column operations
Unimodular random_unimodular(std::size_t n, Rng& rng)
{
    std::vector<std::vector<long long>> u(n, std::vector<long long>(n, 0)), v = u;
    for (std::size_t i = 0; i < n; ++i) u[i][i] = v[i][i] = 1;
    if (n > 1) {
        for (std::size_t t = 0; t < 2 * n; ++t) {
            std::size_t i = rng.below(n), j = rng.below(n - 1);
            if (j >= i) ++j;
            long long c = rng.below(2) ? 1 : -1;
            for (std::size_t k = 0; k < n; ++k) u[i][k] += c * u[j][k];
            for (std::size_t k = 0; k < n; ++k) v[k][j] -= c * v[k][i];
        }
    }
    Unimodular out{RationalMatrix(n, n), RationalMatrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            out.u(i, j) = Rational(static_cast<long>(u[i][j]));
            out.inv(i, j) = Rational(static_cast<long>(v[i][j]));
        }
    return out;
}

}  // namespace

ReducibleSystem generate_random_chain(const ChainProfile& profile)
{
    const auto& m = profile.levels;
    if (m.empty()) throw GenerationError("profile needs at least M_0");
    for (std::size_t k = 0; k < m.size(); ++k)
        if (m[k] == 0) throw GenerationError("M_" + std::to_string(k) + " must be positive");
    auto r = profile_ranks(m);
    for (std::size_t k = 1; k < r.size(); ++k)
        if (r[k] < 1)
            throw GenerationError("profile violates M_" + std::to_string(k) + " - M_" + std::to_string(k + 1) +
                                  " + ... >= 1 (stage " + std::to_string(k) + " would be zero)");
    const long M = r[0];
    if (M <= 0) throw GenerationError("alternating sum M = " + std::to_string(M) + " must be positive");
    if (M % 2 != 0) throw GenerationError("alternating sum M = " + std::to_string(M) + " must be even");
    if (static_cast<std::size_t>(M) > 2 * profile.n_pairs)
        throw GenerationError("alternating sum M = " + std::to_string(M) + " exceeds 2N = " +
                              std::to_string(2 * profile.n_pairs));

    Rng rng(profile.seed);
    std::vector<Unimodular> basis;
    for (auto mk : m) basis.push_back(random_unimodular(mk, rng));

    ReducibleSystem sys;
    sys.space = PhaseSpace(profile.n_pairs);
    sys.seed = profile.seed;
    // model stage k sends coords [r_{k-1}, r_{k-1} + r_k) of level k-1 onto coords [0, r_k) of level k
    for (std::size_t k = 1; k < m.size(); ++k) {
        RationalMatrix model(m[k], m[k - 1]);
        for (long i = 0; i < r[k]; ++i) {
            long s = rng.below(2) ? 1 : -1;
            long d = 1 + static_cast<long>(rng.below(2));
            model(static_cast<std::size_t>(i), static_cast<std::size_t>(r[k - 1] + i)) = Rational(s * d);
        }
        sys.z_stages.push_back(basis[k].u * model * basis[k - 1].inv);
    }

    // chi = V chi_ind, V = U_0 [R; 0]
    const auto mm = static_cast<std::size_t>(M);
    Unimodular mix = random_unimodular(mm, rng);
    RationalMatrix padded(m[0], mm);
    for (std::size_t i = 0; i < mm; ++i)
        for (std::size_t j = 0; j < mm; ++j) padded(i, j) = mix.u(i, j);
    RationalMatrix v = basis[0].u * padded;

    const std::size_t dim = sys.space.dim();
    std::vector<PolyFunction> ind;
    for (std::size_t j = 0; j < mm / 2; ++j) ind.push_back(PolyFunction::variable(dim, sys.space.q(j)));
    for (std::size_t j = 0; j < mm / 2; ++j) ind.push_back(PolyFunction::variable(dim, sys.space.p(j)));
    for (std::size_t a = 0; a < m[0]; ++a) {
        std::vector<Rational> row(mm);
        for (std::size_t j = 0; j < mm; ++j) row[j] = v(a, j);
        sys.chi.push_back(linear_combination(ind, row, dim));
    }
    return sys;
}

void require_on_surface(const ReducibleSystem& sys, const Vec& z)
{
    if (static_cast<std::size_t>(z.size()) != sys.space.dim())
        throw StructuralError("point has dimension " + std::to_string(z.size()) + ", phase space " +
                              std::to_string(sys.space.dim()));
    double r = max_constraint_value(sys.chi, z);
    if (!(r <= sys.tol.tol_surface))
        throw PreconditionError("point is off the constraint surface (max |chi| = " + std::to_string(r) + ")");
}

DofReport dof_report(const ReducibleSystem& sys, const Vec& z)
{
    sys.check_shapes();
    require_on_surface(sys, z);
    DofReport rep;
    rep.dim = sys.space.dim();
    rep.level_sizes = sys.level_sizes();
    rep.independent_count = sys.independent_count();
    rep.expected_surface_rank = static_cast<long>(rep.dim) - rep.independent_count;
    Mat j = jacobian(sys.chi, z, rep.dim);
    rep.jacobian_rank = numerical_rank(j, sys.tol.tol_rank);
    Mat t = null_space(j, sys.tol.tol_rank);
    Mat omega = -sys.space.sigma();  // inverse of sigma
    Mat induced = t.transpose() * omega * t;
    rep.induced_rank = numerical_rank(induced, sys.tol.tol_rank);
    rep.pass = static_cast<long>(rep.induced_rank) == rep.expected_surface_rank;
    return rep;
}

Mat tangent_complement_generators(const ReducibleSystem& sys, const Vec& z)
{
    require_on_surface(sys, z);
    Mat j = jacobian(sys.chi, z, sys.space.dim());
    return sys.space.sigma() * j.transpose();
}

}  // namespace dirac_forge

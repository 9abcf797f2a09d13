#include "dirac_forge/pform.hpp"

#include "dirac_forge/errors.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

namespace dirac_forge {

namespace {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

struct Lattice {
    std::vector<int> n;
    std::vector<std::size_t> stride;
    std::size_t sites = 1;

    explicit Lattice(const std::vector<int>& extents) : n(extents)
    {
        for (int e : n) {
            stride.push_back(sites);
            sites *= static_cast<std::size_t>(e);
        }
    }

    int coord(std::size_t x, std::size_t axis) const
    {
        return static_cast<int>((x / stride[axis]) % static_cast<std::size_t>(n[axis]));
    }

    std::size_t shift(std::size_t x, std::size_t axis, int delta) const
    {
        int c = coord(x, axis);
        int m = n[axis];
        int nc = ((c + delta) % m + m) % m;
        return x + static_cast<std::size_t>(nc) * stride[axis] - static_cast<std::size_t>(c) * stride[axis];
    }
};

using Combo = std::vector<int>;

std::vector<Combo> combos(int d, int k)
{
    std::vector<Combo> out;
    if (k < 0 || k > d) return out;
    Combo c(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = i;
    for (;;) {
        out.push_back(c);
        int i = k - 1;
        while (i >= 0 && c[static_cast<std::size_t>(i)] == d - k + i) --i;
        if (i < 0) break;
        ++c[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

std::map<Combo, std::size_t> combo_index(const std::vector<Combo>& cs)
{
    std::map<Combo, std::size_t> m;
    for (std::size_t i = 0; i < cs.size(); ++i) m[cs[i]] = i;
    return m;
}

// l inserted into J: sign of moving it to the front of sorted(l, J), or 0 if l is in J
int insert_sign(int l, const Combo& j, Combo& sorted)
{
    sorted.clear();
    int pos = 0;
    bool placed = false;
    for (int v : j) {
        if (v == l) return 0;
        if (!placed && l < v) {
            sorted.push_back(l);
            placed = true;
        }
        if (!placed) ++pos;
        sorted.push_back(v);
    }
    if (!placed) sorted.push_back(l);
    return (pos % 2 == 0) ? 1 : -1;
}

// backward-difference divergence from k-forms to (k-1)-forms, dense integer entries
std::vector<std::vector<long>> divergence(const Lattice& lat, int d, int k)
{
    auto lo = combos(d, k - 1), hi = combos(d, k);
    auto hi_index = combo_index(hi);
    const std::size_t s = lat.sites;
    std::vector<std::vector<long>> m(lo.size() * s, std::vector<long>(hi.size() * s, 0));
    Combo sorted;
    for (std::size_t jc = 0; jc < lo.size(); ++jc)
        for (int l = 0; l < d; ++l) {
            int sg = insert_sign(l, lo[jc], sorted);
            if (!sg) continue;
            std::size_t ic = hi_index.at(sorted);
            for (std::size_t x = 0; x < s; ++x) {
                std::size_t back = lat.shift(x, static_cast<std::size_t>(l), -1);
                m[jc * s + x][ic * s + x] += sg;
                m[jc * s + x][ic * s + back] -= sg;
            }
        }
    return m;
}

void check_spec(const PFormSpec& spec)
{
    const int d = spec.dim - 1;
    if (spec.p < 1) throw StructuralError("form degree p must be at least 1");
    if (spec.dim < spec.p + 1) throw StructuralError("spacetime dimension must be at least p + 1");
    if (static_cast<int>(spec.extents.size()) != d)
        throw StructuralError("need " + std::to_string(d) + " lattice extents, got " +
                              std::to_string(spec.extents.size()));
    std::size_t sites = 1;
    for (int e : spec.extents) {
        if (e < 2) throw StructuralError("lattice extents must be at least 2");
        sites *= static_cast<std::size_t>(e);
        if (sites > 100000) throw StructuralError("lattice too large");
    }
    std::size_t n = combos(d, spec.p).size() * sites;
    if (2 * n > 4000) throw StructuralError("phase space of dimension " + std::to_string(2 * n) + " exceeds 4000");
}

std::vector<double> momentum(const Lattice& lat, std::size_t mode)
{
    std::vector<double> k(lat.n.size());
    for (std::size_t a = 0; a < lat.n.size(); ++a)
        k[a] = 2.0 * std::numbers::pi * lat.coord(mode, a) / lat.n[a];
    return k;
}

// symbol of the forward exterior derivative on (p-1)-forms
CMat d_symbol(int d, int p, const std::vector<double>& k)
{
    auto lo = combos(d, p - 1), hi = combos(d, p);
    auto hi_index = combo_index(hi);
    CMat b = CMat::Zero(static_cast<Eigen::Index>(hi.size()), static_cast<Eigen::Index>(lo.size()));
    Combo sorted;
    for (std::size_t jc = 0; jc < lo.size(); ++jc)
        for (int l = 0; l < d; ++l) {
            int sg = insert_sign(l, lo[jc], sorted);
            if (!sg) continue;
            Cplx kh = std::exp(Cplx(0.0, k[static_cast<std::size_t>(l)])) - 1.0;
            b(static_cast<Eigen::Index>(hi_index.at(sorted)), static_cast<Eigen::Index>(jc)) += double(sg) * kh;
        }
    return b;
}

}  // namespace

PFormSystem build_pform_system(const PFormSpec& spec)
{
    check_spec(spec);
    const int d = spec.dim - 1;
    const int p = spec.p;
    Lattice lat(spec.extents);
    const std::size_t s = lat.sites;
    const std::size_t rs = s - 1;

    PFormSystem out;
    out.spec = spec;
    out.sites = s;
    out.components = combos(d, p).size();
    const std::size_t n = out.components * s;
    ReducibleSystem& sys = out.sys;
    sys.space = PhaseSpace(n);
    const std::size_t dim = sys.space.dim();

    // level 0: -p delta(pi) and -delta(A) on (p-1)-forms, site 0 dropped per component
    auto top = divergence(lat, d, p);
    const std::size_t c0 = combos(d, p - 1).size();
    for (int block = 0; block < 2; ++block) {
        const Rational scale = block == 0 ? Rational(-p) : Rational(-1);
        const std::size_t base = block == 0 ? n : 0;
        for (std::size_t jc = 0; jc < c0; ++jc)
            for (std::size_t x = 1; x < s; ++x) {
                PolyFunction f(dim);
                const auto& row = top[jc * s + x];
                for (std::size_t col = 0; col < row.size(); ++col) {
                    if (!row[col]) continue;
                    PolyFunction::Exponents e(dim, 0);
                    e[base + col] = 1;
                    f.add_term(std::move(e), scale * row[col]);
                }
                sys.chi.push_back(std::move(f));
            }
    }

    // stages: reduced divergence on (p-1-k)-forms, one copy per block
    const int L = p - 1;
    for (int k = 0; k < L; ++k) {
        const int deg = p - 1 - k;
        auto div = divergence(lat, d, deg);
        const std::size_t cin = combos(d, deg).size(), cout = combos(d, deg - 1).size();
        const std::size_t rin = cin * rs, rout = cout * rs;
        RationalMatrix z(2 * rout, 2 * rin);
        for (std::size_t jc = 0; jc < cout; ++jc)
            for (std::size_t x = 1; x < s; ++x)
                for (std::size_t ic = 0; ic < cin; ++ic)
                    for (std::size_t y = 1; y < s; ++y) {
                        long v = div[jc * s + x][ic * s + y] - div[jc * s + x][ic * s];
                        if (!v) continue;
                        std::size_t r = jc * rs + (x - 1), c = ic * rs + (y - 1);
                        z(r, c) = Rational(v);
                        z(rout + r, rin + c) = Rational(v);
                    }
        sys.z_stages.push_back(std::move(z));
    }

    const auto m = sys.level_sizes();
    for (std::size_t j = 1; j < m.size(); j += 2) {
        auto h = static_cast<Eigen::Index>(m[j] / 2);
        Mat om = Mat::Zero(2 * h, 2 * h);
        om.topRightCorner(h, h) = -Mat::Identity(h, h);
        om.bottomLeftCorner(h, h) = Mat::Identity(h, h);
        out.omegas.sector_forms[j] = om;
    }
    return out;
}

Mat reference_brackets(const PFormSpec& spec)
{
    check_spec(spec);
    const int d = spec.dim - 1;
    const int p = spec.p;
    Lattice lat(spec.extents);
    const std::size_t s = lat.sites;
    const auto c = static_cast<Eigen::Index>(combos(d, p).size());

    // kernel[diff] = (1/V) sum_k P(k) e^{ik.diff}, real part
    std::vector<Mat> kernel(s, Mat::Zero(c, c));
    for (std::size_t mode = 0; mode < s; ++mode) {
        auto k = momentum(lat, mode);
        CMat proj = CMat::Identity(c, c);
        if (mode != 0) {
            double k2 = 0.0;
            for (double ki : k) k2 += 4.0 * std::sin(0.5 * ki) * std::sin(0.5 * ki);
            CMat b = d_symbol(d, p, k);
            proj -= b * b.adjoint() / k2;
        }
        for (std::size_t diff = 0; diff < s; ++diff) {
            double phase = 0.0;
            for (std::size_t a = 0; a < k.size(); ++a) phase += k[a] * lat.coord(diff, a);
            Cplx w = std::exp(Cplx(0.0, phase)) / static_cast<double>(s);
            kernel[diff] += (proj * w).real();
        }
    }
    const auto n = static_cast<Eigen::Index>(c * static_cast<Eigen::Index>(s));
    Mat pa = Mat::Zero(n, n);
    for (std::size_t x = 0; x < s; ++x)
        for (std::size_t y = 0; y < s; ++y) {
            // site index of x - y
            std::size_t diff = x;
            for (std::size_t a = 0; a < lat.n.size(); ++a) diff = lat.shift(diff, a, -lat.coord(y, a));
            const Mat& kx = kernel[diff];
            for (Eigen::Index i = 0; i < c; ++i)
                for (Eigen::Index j = 0; j < c; ++j)
                    pa(i * static_cast<Eigen::Index>(s) + static_cast<Eigen::Index>(x),
                       j * static_cast<Eigen::Index>(s) + static_cast<Eigen::Index>(y)) = kx(i, j);
        }
    Mat full = Mat::Zero(2 * n, 2 * n);
    full.topRightCorner(n, n) = pa;
    full.bottomLeftCorner(n, n) = -pa.transpose();
    return full;
}

long fourier_dof_count(const PFormSpec& spec)
{
    check_spec(spec);
    const int d = spec.dim - 1;
    Lattice lat(spec.extents);
    const long c = static_cast<long>(combos(d, spec.p).size());
    long total = 0;
    for (std::size_t mode = 0; mode < lat.sites; ++mode) {
        CMat b = d_symbol(d, spec.p, momentum(lat, mode));
        long r = 0;
        if (mode != 0) {
            Eigen::JacobiSVD<CMat> svd(b);
            const auto& sv = svd.singularValues();
            for (Eigen::Index i = 0; i < sv.size(); ++i)
                if (sv(i) > 1e-9 * sv(0)) ++r;
        }
        total += 2 * c - 2 * r;
    }
    return total;
}

PolyFunction pform_hamiltonian(const PFormSpec& spec)
{
    check_spec(spec);
    const int d = spec.dim - 1;
    const int p = spec.p;
    Lattice lat(spec.extents);
    const std::size_t s = lat.sites;
    auto forms = combos(d, p);
    auto idx = combo_index(forms);
    const std::size_t n = forms.size() * s;
    const std::size_t dim = 2 * n;
    const Rational half(1, 2);
    PolyFunction h(dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto v = PolyFunction::variable(dim, n + i);
        h += half * (v * v);
    }
    // field strength: forward exterior derivative of A
    for (const auto& kc : combos(d, p + 1))
        for (std::size_t x = 0; x < s; ++x) {
            PolyFunction f(dim);
            for (std::size_t a = 0; a < kc.size(); ++a) {
                Combo rest;
                for (std::size_t b = 0; b < kc.size(); ++b)
                    if (b != a) rest.push_back(kc[b]);
                const std::size_t ic = idx.at(rest);
                const int sg = (a % 2 == 0) ? 1 : -1;
                const std::size_t fwd = lat.shift(x, static_cast<std::size_t>(kc[a]), 1);
                f += Rational(sg) * PolyFunction::variable(dim, ic * s + fwd);
                f -= Rational(sg) * PolyFunction::variable(dim, ic * s + x);
            }
            h += half * (f * f);
        }
    return h;
}

}  // namespace dirac_forge

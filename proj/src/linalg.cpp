#include "dirac_forge/linalg.hpp"

#include "dirac_forge/errors.hpp"

#include <cmath>
#include <vector>

namespace dirac_forge {

namespace {

struct Svd {
    Mat u;
    Vec s;
    Mat v;
    std::size_t rank = 0;
};

Svd svd(const Mat& a, double tol, bool full_v = false)
{
    Svd out;
    if (a.size() == 0) {
        out.u = Mat::Identity(a.rows(), a.rows());
        out.v = Mat::Identity(a.cols(), a.cols());
        out.s = Vec::Zero(0);
        return out;
    }
    unsigned opts = full_v ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                           : (Eigen::ComputeThinU | Eigen::ComputeThinV);
    // BDCSVD in Eigen 3.4.0 loses the factorization on clustered spectra (lattice stages); Jacobi does not
    Eigen::JacobiSVD<Mat> dec(a, opts);
    out.u = dec.matrixU();
    out.s = dec.singularValues();
    out.v = dec.matrixV();
    double top = out.s.size() ? out.s(0) : 0.0;
    if (top > 0.0) {
        for (Eigen::Index i = 0; i < out.s.size(); ++i)
            if (out.s(i) > tol * top) ++out.rank;
    }
    return out;
}

}  // namespace

double max_abs(const Mat& a)
{
    return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
}

double inf_norm(const Mat& a)
{
    return a.size() ? a.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

std::size_t numerical_rank(const Mat& a, double tol)
{
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> dec(a);
    const Vec& s = dec.singularValues();
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(0) > 0.0 && s(i) > tol * s(0)) ++r;
    return r;
}

Mat pinv(const Mat& a, double tol)
{
    if (a.size() == 0) return Mat::Zero(a.cols(), a.rows());
    Svd d = svd(a, tol);
    Mat out = Mat::Zero(a.cols(), a.rows());
    for (std::size_t i = 0; i < d.rank; ++i)
        out += d.v.col(i) * (1.0 / d.s(i)) * d.u.col(i).transpose();
    return out;
}

Mat null_space(const Mat& a, double tol)
{
    if (a.rows() == 0) return Mat::Identity(a.cols(), a.cols());
    Svd d = svd(a, tol, true);
    auto n = static_cast<Eigen::Index>(a.cols()) - static_cast<Eigen::Index>(d.rank);
    return d.v.rightCols(n);
}

Mat range_basis(const Mat& a, double tol)
{
    if (a.cols() == 0) return Mat::Zero(a.rows(), 0);
    Svd d = svd(a, tol);
    return d.u.leftCols(static_cast<Eigen::Index>(d.rank));
}

Mat canonical_form(std::size_t size)
{
    if (size % 2 != 0)
        throw ParityError("canonical form requested for odd size " + std::to_string(size));
    auto h = static_cast<Eigen::Index>(size / 2);
    Mat j = Mat::Zero(2 * h, 2 * h);
    j.topRightCorner(h, h) = Mat::Identity(h, h);
    j.bottomLeftCorner(h, h) = -Mat::Identity(h, h);
    return j;
}

Mat antisymmetrize(const Mat& a)
{
    return 0.5 * (a - a.transpose());
}

Mat darboux_basis(const Mat& omega, double tol)
{
    const Eigen::Index m = omega.rows();
    if (m % 2 != 0) throw ParityError("darboux basis for odd size " + std::to_string(m));
    // symplectic Gram-Schmidt on B(u, v) = u^T omega v
    std::vector<Vec> pool;
    for (Eigen::Index i = 0; i < m; ++i) pool.push_back(Vec::Unit(m, i));
    std::vector<Vec> es, fs;
    const double scale = std::max(max_abs(omega), 1.0);
    while (!pool.empty()) {
        double best = 0.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < pool.size(); ++i)
            for (std::size_t j = i + 1; j < pool.size(); ++j) {
                double b = std::abs(pool[i].dot(omega * pool[j]));
                if (b > best) { best = b; bi = i; bj = j; }
            }
        if (best <= tol * scale) throw ConstructionError("degenerate antisymmetric form");
        Vec e = pool[bi];
        Vec f = pool[bj] / e.dot(omega * pool[bj]);
        std::vector<Vec> rest;
        for (std::size_t k = 0; k < pool.size(); ++k) {
            if (k == bi || k == bj) continue;
            Vec x = pool[k];
            x += x.dot(omega * e) * f - x.dot(omega * f) * e;
            rest.push_back(x);
        }
        pool = std::move(rest);
        es.push_back(e);
        fs.push_back(f);
    }
    const auto h = static_cast<Eigen::Index>(es.size());
    Mat t(m, m);
    for (Eigen::Index i = 0; i < h; ++i) {
        t.row(i) = es[static_cast<std::size_t>(i)].transpose();
        t.row(h + i) = fs[static_cast<std::size_t>(i)].transpose();
    }
    return t;
}

}  // namespace dirac_forge

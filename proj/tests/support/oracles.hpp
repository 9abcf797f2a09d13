#pragma once

// Independent reference computations for the tests. Nothing here calls the projector ladder.

#include "dirac_forge/chain.hpp"
#include "dirac_forge/io.hpp"

#include <Eigen/QR>

#include <string>

namespace oracle {

using dirac_forge::Mat;
using dirac_forge::Vec;

inline std::string data_path(const std::string& name)
{
    return std::string(DF_TEST_DATA_DIR) + "/" + name;
}

inline dirac_forge::ReducibleSystem load(const std::string& name)
{
    auto p = data_path(name);
    return dirac_forge::system_from_json(dirac_forge::parse_json_text(dirac_forge::read_file(p), p));
}

// central differences
inline Vec fd_gradient(const dirac_forge::PolyFunction& f, const Vec& z, double h = 1e-5)
{
    Vec g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        Vec a = z, b = z;
        a(i) += h;
        b(i) -= h;
        g(i) = (f.evaluate(a) - f.evaluate(b)) / (2 * h);
    }
    return g;
}

// rows of jac picked by column-pivoted QR on jac^T
inline Mat independent_rows(const Mat& jac, double tol = 1e-9)
{
    Eigen::ColPivHouseholderQR<Mat> qr(jac.transpose());
    qr.setThreshold(tol);
    auto r = qr.rank();
    Mat out(r, jac.cols());
    for (Eigen::Index i = 0; i < r; ++i) out.row(i) = jac.row(qr.colsPermutation().indices()(i));
    return out;
}

// textbook Dirac bracket on an independent subset of constraints
inline Mat subset_fundamental(const Mat& sigma, const Mat& jac, double tol = 1e-9)
{
    Mat js = independent_rows(jac, tol);
    Mat cs = js * sigma * js.transpose();
    return sigma - sigma * js.transpose() * cs.inverse() * js * sigma;
}

inline double subset_bracket(const Vec& gf, const Vec& gg, const Mat& sigma, const Mat& jac)
{
    return gf.dot(subset_fundamental(sigma, jac) * gg);
}

inline double max_abs(const Mat& a)
{
    return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace oracle

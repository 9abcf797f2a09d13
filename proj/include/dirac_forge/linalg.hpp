#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace dirac_forge {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// max absolute entry; 0 for empty matrices
double max_abs(const Mat& a);

// max row sum of absolute values
double inf_norm(const Mat& a);

// number of singular values above tol * (largest singular value)
std::size_t numerical_rank(const Mat& a, double tol);

// Moore-Penrose inverse with the same relative cutoff
Mat pinv(const Mat& a, double tol);

// orthonormal bases via SVD
Mat null_space(const Mat& a, double tol);
Mat range_basis(const Mat& a, double tol);

// [[0, I], [-I, 0]] of size 2h
Mat canonical_form(std::size_t size);

Mat antisymmetrize(const Mat& a);

// rows of T satisfy T * omega * T^T = canonical_form(n); omega antisymmetric invertible
Mat darboux_basis(const Mat& omega, double tol);

}  // namespace dirac_forge

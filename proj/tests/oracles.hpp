#pragma once

// Reference implementations used only by the tests. They share no code with
// the library beyond the Matrix container.

#include "deqcert/numerics.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using deqcert::Matrix;
using deqcert::Vector;

// Cyclic Jacobi rotations on a symmetric matrix; eigenvalues in ascending order.
std::vector<double> jacobi_eigenvalues(const Matrix& symmetric);
// sqrt(lambda_max(M^T M)) via Jacobi.
double spectral_norm(const Matrix& m);

// Straight-line formulas with explicit loops.
Vector matvec(const Matrix& m, const Vector& x);
double norm(const Vector& v);
double relu(double v);
Vector contractive_step(const Matrix& W, const Matrix& U, const Matrix& b, const Vector& x, const Vector& d);
Matrix mon_W(const Matrix& A, const Matrix& B, double monotonicity);
Vector mon_step(const Matrix& A, const Matrix& B, const Matrix& U, const Matrix& b, double monotonicity,
                double alpha, const Vector& x, const Vector& d);
Vector lgd_step(const Matrix& A, const Matrix& R, double alpha, const Vector& x, const Vector& d);

// Closed forms of the bound terms in 50-digit decimal arithmetic, returned as doubles.
struct BoundTerms {
    double rademacher_closed;
    double term_rademacher;
    double term_confidence;
    double total;
};
BoundTerms high_precision_bound(double l_ell, double c_out, double l_hat, double c_params, double c_ell,
                                double p, double n, double delta);

// Composite trapezoid rule after the substitution r = t^2, refined until two
// successive halvings agree to `tol` relative.
double trapezoid(const std::function<double(double)>& f, double lower, double upper, double tol);

// Size of a greedy r-net: points join the net unless within r of a member.
std::size_t greedy_net_size(const std::vector<Vector>& points, double r);

// Central difference of f at x along each coordinate.
Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h);

} // namespace oracle

#pragma once

#include <Eigen/Dense>

namespace bridgesim {

// Dense small matrices (d <= 8 throughout); fixed max sizes keep all hot-loop
// temporaries on the stack. Vec capacity 72 = 8 + 8*8 also accommodates the
// flattened joint states of the matrix-valued moment/backward ODEs.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 72, 1>;

// Lower Cholesky factor of an SPD matrix. Throws std::runtime_error naming the
// failing pivot index when A is not SPD.
Mat cholesky_factor(const Mat& A);

// Solve A y = rhs for SPD A (factors internally).
Vec cholesky_solve(const Mat& A, const Vec& rhs);

// Solve L L^T y = rhs given the lower factor L.
Vec cholesky_solve_factored(const Mat& L, const Vec& rhs);
Mat cholesky_solve_factored(const Mat& L, const Mat& rhs);

// log det A = 2 * sum log diag(L)
double cholesky_logdet(const Mat& L);

// A^{-1} for SPD A via its Cholesky factor.
Mat spd_inverse(const Mat& A);

// Matrix exponential: scaling-and-squaring with a fixed degree-13 Pade core.
Mat expm(const Mat& A);

// Solve B*X + X*B^T + Q = 0 (continuous Lyapunov). Direct vectorized solve for
// d <= 2, Bartels-Stewart (real Schur) above. Throws when the operator is
// singular (some pair of eigenvalues of B sums to zero).
Mat solve_lyapunov(const Mat& B, const Mat& Q);

// Column-stacking helpers for matrix-valued ODE states.
Vec vec_of(const Mat& M);
Mat unvec(const Vec& z, int d);

}  // namespace bridgesim

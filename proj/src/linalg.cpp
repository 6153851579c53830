#include "bridgesim/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridgesim {

Mat cholesky_factor(const Mat& A) {
  const Eigen::Index d = A.rows();
  if (A.cols() != d) throw std::invalid_argument("cholesky_factor: matrix not square");
  Mat L = Mat::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double diag = A(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw std::runtime_error("cholesky_factor: matrix not SPD, nonpositive pivot at index " +
                               std::to_string(j));
    }
    L(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double s = A(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

Vec cholesky_solve_factored(const Mat& L, const Vec& rhs) {
  Vec y = L.triangularView<Eigen::Lower>().solve(rhs);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Mat cholesky_solve_factored(const Mat& L, const Mat& rhs) {
  Mat y = L.triangularView<Eigen::Lower>().solve(rhs);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Vec cholesky_solve(const Mat& A, const Vec& rhs) {
  return cholesky_solve_factored(cholesky_factor(A), rhs);
}

double cholesky_logdet(const Mat& L) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

Mat spd_inverse(const Mat& A) {
  const Mat L = cholesky_factor(A);
  return cholesky_solve_factored(L, Mat(Mat::Identity(A.rows(), A.rows())));
}

Mat expm(const Mat& A) {
  const Eigen::Index d = A.rows();
  if (A.cols() != d) throw std::invalid_argument("expm: matrix not square");
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Mat As = A / std::ldexp(1.0, s);
  const Mat I = Mat::Identity(d, d);
  const Mat A2 = As * As;
  const Mat A4 = A2 * A2;
  const Mat A6 = A2 * A4;
  const Mat U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                      b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
                b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  Mat F = Mat((V - U).fullPivLu().solve(Mat(V + U)));
  for (int k = 0; k < s; ++k) F = F * F;
  return F;
}

Vec vec_of(const Mat& M) {
  const int d = static_cast<int>(M.rows());
  Vec z(d * static_cast<int>(M.cols()));
  for (int j = 0; j < M.cols(); ++j)
    for (int i = 0; i < d; ++i) z[j * d + i] = M(i, j);
  return z;
}

Mat unvec(const Vec& z, int d) {
  Mat M(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) M(i, j) = z[j * d + i];
  return M;
}

namespace {

// Solve the small Sylvester block T_II W + W T_JJ^T = C via its Kronecker form.
Eigen::MatrixXd solve_block(const Eigen::MatrixXd& TII, const Eigen::MatrixXd& TJJ,
                            const Eigen::MatrixXd& C) {
  const Eigen::Index nI = TII.rows(), nJ = TJJ.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nI * nJ, nI * nJ);
  for (Eigen::Index j = 0; j < nJ; ++j)
    M.block(j * nI, j * nI, nI, nI) = TII;
  for (Eigen::Index j = 0; j < nJ; ++j)
    for (Eigen::Index k = 0; k < nJ; ++k)
      for (Eigen::Index i = 0; i < nI; ++i)
        M(j * nI + i, k * nI + i) += TJJ(j, k);
  Eigen::VectorXd c(nI * nJ);
  for (Eigen::Index j = 0; j < nJ; ++j) c.segment(j * nI, nI) = C.col(j);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible())
    throw std::runtime_error("solve_lyapunov: singular Lyapunov operator "
                             "(eigenvalue pair of B sums to zero)");
  Eigen::VectorXd w = lu.solve(c);
  Eigen::MatrixXd W(nI, nJ);
  for (Eigen::Index j = 0; j < nJ; ++j) W.col(j) = w.segment(j * nI, nI);
  return W;
}

}  // namespace

Mat solve_lyapunov(const Mat& B, const Mat& Q) {
  const Eigen::Index d = B.rows();
  if (B.cols() != d || Q.rows() != d || Q.cols() != d)
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");

  if (d <= 2) {
    // direct solve on the vectorized equation (I (x) B + B (x) I) vec(X) = -vec(Q)
    Eigen::MatrixXd Bd = B, Qd = Q;
    Eigen::MatrixXd W = solve_block(Bd, Bd, Eigen::MatrixXd(-Qd));
    Mat X = W;
    return Mat((X + X.transpose()) / 2.0);
  }

  // Bartels-Stewart: B = U T U^T with T quasi-upper-triangular, then solve
  // T Y + Y T^T = -U^T Q U block-back-substitution over the Schur blocks.
  Eigen::MatrixXd Bd = B;
  Eigen::RealSchur<Eigen::MatrixXd> schur(Bd);
  if (schur.info() != Eigen::Success)
    throw std::runtime_error("solve_lyapunov: Schur decomposition failed");
  const Eigen::MatrixXd T = schur.matrixT();
  const Eigen::MatrixXd U = schur.matrixU();
  Eigen::MatrixXd C = -(U.transpose() * Q * U);

  // block boundaries of the quasi-triangular T
  std::vector<Eigen::Index> start;
  for (Eigen::Index k = 0; k < d;) {
    start.push_back(k);
    k += (k + 1 < d && T(k + 1, k) != 0.0) ? 2 : 1;
  }
  const std::size_t nb = start.size();
  auto bsize = [&](std::size_t b) {
    return ((b + 1 < nb) ? start[b + 1] : d) - start[b];
  };

  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t J = nb; J-- > 0;) {
    for (std::size_t I = nb; I-- > 0;) {
      const Eigen::Index i0 = start[I], j0 = start[J], ni = bsize(I), nj = bsize(J);
      Eigen::MatrixXd rhs = C.block(i0, j0, ni, nj);
      for (std::size_t K = I + 1; K < nb; ++K)
        rhs -= T.block(i0, start[K], ni, bsize(K)) * Y.block(start[K], j0, bsize(K), nj);
      for (std::size_t K = J + 1; K < nb; ++K)
        rhs -= Y.block(i0, start[K], ni, bsize(K)) * T.block(j0, start[K], nj, bsize(K)).transpose();
      Y.block(i0, j0, ni, nj) =
          solve_block(T.block(i0, i0, ni, ni), T.block(j0, j0, nj, nj), rhs);
    }
  }
  Eigen::MatrixXd X = U * Y * U.transpose();
  Mat out = X;
  return Mat((out + out.transpose()) / 2.0);
}

}  // namespace bridgesim

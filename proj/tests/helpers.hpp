#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "bridgesim/auxiliary.hpp"
#include "bridgesim/linalg.hpp"
#include "bridgesim/sde.hpp"

namespace testutil {

inline bridgesim::Vec vec1(double a) {
  bridgesim::Vec v(1);
  v << a;
  return v;
}

inline bridgesim::Vec vec2(double a, double b) {
  bridgesim::Vec v(2);
  v << a, b;
  return v;
}

inline bridgesim::Mat mat1(double a) {
  bridgesim::Mat m(1, 1);
  m << a;
  return m;
}

inline bridgesim::Mat mat2(double a, double b, double c, double d) {
  bridgesim::Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

inline bridgesim::GridPtr uniform_grid(double T, std::size_t n) {
  return std::make_shared<const bridgesim::TimeGrid>(bridgesim::TimeGrid::uniform(T, n));
}

inline bridgesim::BridgeSpec spec1(double u, double v, double T) {
  return bridgesim::BridgeSpec{vec1(u), vec1(v), T};
}

// Constant-coefficient scalar linear auxiliary.
inline bridgesim::LinearAuxiliary const_aux1(double B, double beta, double sigma) {
  bridgesim::LinearAuxiliary aux;
  aux.d = 1;
  aux.d_noise = 1;
  const bridgesim::Mat Bm = mat1(B), Sm = mat1(sigma);
  const bridgesim::Vec bv = vec1(beta);
  aux.B = [Bm](double) { return Bm; };
  aux.beta = [bv](double) { return bv; };
  aux.sigma = [Sm](double) { return Sm; };
  aux.homogeneous = true;
  return aux;
}

inline double max_abs_diff(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return (A - B).cwiseAbs().maxCoeff();
}

// Scalar model with arbitrary drift/dispersion callables.
template <typename Drift, typename Sigma>
bridgesim::DiffusionModel scalar_model(Drift b, Sigma s) {
  bridgesim::DiffusionModel m;
  m.d = 1;
  m.d_noise = 1;
  m.drift = [b](double t, const bridgesim::Vec& x) { return vec1(b(t, x(0))); };
  m.dispersion = [s](double t, const bridgesim::Vec& x) { return mat1(s(t, x(0))); };
  return m;
}

}  // namespace testutil

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bridgesim/linalg.hpp"
#include "bridgesim/ode.hpp"
#include "bridgesim/sde.hpp"

namespace bridgesim {

// Linear process dXt = (B(t) X + beta(t)) dt + sigma(t) dW whose Gaussian
// transition density stands in for the intractable one.
struct LinearAuxiliary {
  int d = 1;
  int d_noise = 1;
  std::function<Mat(double)> B;
  std::function<Vec(double)> beta;
  std::function<Mat(double)> sigma;
  bool homogeneous = false;  // all three coefficient maps are time-constant

  Mat a(double t) const {
    const Mat s = sigma(t);
    return s * s.transpose();
  }
  Vec drift_at(double t, const Vec& x) const { return B(t) * x + beta(t); }
};

// Backward tables K(t), H(t) = K(t)^{-1}, v(t) driving the guiding term
// r(t,x) = H(t) (v(t) - x). K at the final node is zero and never inverted.
struct BackwardTable {
  GridPtr grid;
  BridgeSpec spec;
  std::vector<Mat> K;     // size N+1; K[N] = 0
  std::vector<Mat> chol;  // lower factors of K[i], i < N
  std::vector<Mat> H;     // materialized inverses, i < N
  std::vector<Vec> v;     // backward mean curve, v[N] = spec.v
};

// Tables by backward RK integration of dK/dt = B K + K B^T - a (K(T) = 0) and
// dv/dt = B v + beta (v(T) = v).
BackwardTable backward_tables_ode(const LinearAuxiliary& aux, const GridPtr& grid,
                                  const BridgeSpec& spec);

// Tables from the homogeneous closed forms K(t) = E L E^T - L with
// B L + L B^T + a = 0 and E = expm(-(T-t) B); v(t) = E (v - mu) + mu with
// B mu + beta = 0. B = 0 uses the explicit limit K = a (T-t), v = v - beta (T-t).
BackwardTable backward_tables_closed(const LinearAuxiliary& aux, const GridPtr& grid,
                                     const BridgeSpec& spec);

// Tables for the drift-matched constant-diffusivity auxiliary (B = 0,
// beta(t) = b(t, x(t)), sigma = sigma(T, v)), built directly from the
// tabulated flow: K(t_i) = a_end (T - t_i), v(t_i) = v - x(T) + x(t_i).
// The beta tail integral telescopes through the flow, so these are exact.
BackwardTable backward_tables_flow(const Mat& sigma_end, const OdeTrajectory& flow,
                                   const GridPtr& grid, const BridgeSpec& spec);

// Picks the closed form when the auxiliary is homogeneous and the closed form
// applies; otherwise integrates the ODEs.
BackwardTable make_backward_table(const LinearAuxiliary& aux, const GridPtr& grid,
                                  const BridgeSpec& spec);

// Guiding term r(t_i, x) = H(t_i) (v(t_i) - x), via the cached Cholesky factor.
Vec rtilde(const BackwardTable& table, std::size_t i, const Vec& x);

struct ForwardMoments {
  GridPtr grid;
  std::vector<Vec> m;  // mean per node
  std::vector<Mat> Q;  // covariance per node
};

// dm/dt = B m + beta, m(0) = u; dQ/dt = B Q + Q B^T + a, Q(0) = 0.
ForwardMoments forward_moments(const LinearAuxiliary& aux, const Vec& u, const GridPtr& grid);

// log of the auxiliary endpoint density: log N(v; m(T), Q(T)).
double log_ptilde_endpoint(const LinearAuxiliary& aux, const BridgeSpec& spec,
                           const GridPtr& grid);

// log N(x; mean, cov) helper shared by weights and conditioning code.
double log_normal_density(const Vec& x, const Vec& mean, const Mat& cov);

enum class SigmaPolicy { kConstantEnd, kInterpolate };

// Endpoint-matching dispersion schedule: CONSTANT_END freezes sigma(T, v);
// INTERPOLATE follows sigma(t, x(t)) up to t0 and then blends linearly into
// sigma(T, v). Both give exactly sigma(T, v) at t = T.
std::function<Mat(double)> sigma_tilde_policy(const DiffusionModel& model,
                                              const BridgeSpec& spec,
                                              const OdeInterpolant& flow,
                                              SigmaPolicy policy,
                                              std::optional<double> t0 = std::nullopt);

// Linearization of the model drift around the flow: B(t) = J_b(t, x(t)),
// beta(t) = b(t, x(t)) - B(t) x(t), with the dispersion schedule supplied.
LinearAuxiliary lna_auxiliary(const DiffusionModel& model, const OdeInterpolant& flow,
                              const std::function<Mat(double)>& sigma_schedule);

// Drift-matched constant-diffusivity auxiliary as a coefficient view (B = 0,
// beta(t) = b(t, x(t)), sigma = sigma_end); pairs with backward_tables_flow.
LinearAuxiliary simple_auxiliary(const DiffusionModel& model, const OdeInterpolant& flow,
                                 const Mat& sigma_end);

}  // namespace bridgesim

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "bridgesim/linalg.hpp"
#include "bridgesim/ode.hpp"

namespace bridgesim {

struct DiffusionModel {
  int d = 1;        // state dimension
  int d_noise = 1;  // driving noise dimension
  std::function<Vec(double, const Vec&)> drift;       // b(t,x)
  std::function<Mat(double, const Vec&)> dispersion;  // sigma(t,x), d x d_noise
  std::function<Mat(double, const Vec&)> drift_jacobian;  // optional, d x d

  Mat diffusivity(double t, const Vec& x) const {  // a = sigma sigma^T
    const Mat s = dispersion(t, x);
    return s * s.transpose();
  }

  // Supplied Jacobian, or central finite differences with per-coordinate step
  // 1e-6 * max(1, |x_j|).
  Mat jacobian(double t, const Vec& x) const;
};

struct BridgeSpec {
  Vec u;     // start state
  Vec v;     // end state
  double T;  // horizon, > 0
};

class TimeGrid {
 public:
  static TimeGrid uniform(double T, std::size_t n_steps);
  static TimeGrid from_nodes(std::vector<double> nodes);

  const std::vector<double>& nodes() const { return t_; }
  std::size_t steps() const { return t_.size() - 1; }
  double node(std::size_t i) const { return t_[i]; }
  double h(std::size_t i) const { return t_[i + 1] - t_[i]; }
  double horizon() const { return t_.back(); }

 private:
  std::vector<double> t_;
};

using GridPtr = std::shared_ptr<const TimeGrid>;

struct WienerIncrements {
  // row i holds dW_i (d_noise entries) over [t_i, t_{i+1})
  Eigen::MatrixXd dw;
  std::uint64_t seed = 0;

  Vec increment(std::size_t i) const { return dw.row(i).transpose(); }
};

WienerIncrements sample_wiener(const TimeGrid& grid, int d_noise, std::uint64_t seed);

struct SamplePath {
  GridPtr grid;
  Eigen::MatrixXd states;  // (N+1) x d, row per node

  std::size_t nodes() const { return static_cast<std::size_t>(states.rows()); }
  Vec state(std::size_t i) const { return states.row(i).transpose(); }
  void set_state(std::size_t i, const Vec& x) { states.row(i) = x.transpose(); }
};

SamplePath euler_maruyama(const std::function<Vec(double, const Vec&)>& drift,
                          const std::function<Mat(double, const Vec&)>& dispersion,
                          const Vec& x0, const GridPtr& grid, const WienerIncrements& dw);

// Deterministic flow: RK4 on xdot = b(t, x), x(0) = u, tabulated on the grid.
OdeTrajectory solve_flow(const DiffusionModel& model, const Vec& u, const TimeGrid& grid);

}  // namespace bridgesim

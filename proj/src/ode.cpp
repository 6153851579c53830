#include "bridgesim/ode.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bridgesim {

namespace {

void check_finite(const Vec& y, std::size_t node) {
  if (!y.allFinite())
    throw std::runtime_error("ODE integration produced a non-finite state at node " +
                             std::to_string(node));
}

Vec rk4_step(const OdeRhs& f, double t, const Vec& y, double h) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + h / 2.0, Vec(y + (h / 2.0) * k1));
  const Vec k3 = f(t + h / 2.0, Vec(y + (h / 2.0) * k2));
  const Vec k4 = f(t + h, Vec(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("ODE grid needs at least two nodes");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw std::invalid_argument("ODE grid must be strictly increasing");
}

}  // namespace

OdeTrajectory rk4_solve(const OdeRhs& f, const Vec& y0, const std::vector<double>& grid) {
  check_grid(grid);
  OdeTrajectory out;
  out.t = grid;
  out.y.resize(grid.size());
  out.y[0] = y0;
  check_finite(y0, 0);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    out.y[i + 1] = rk4_step(f, grid[i], out.y[i], grid[i + 1] - grid[i]);
    check_finite(out.y[i + 1], i + 1);
  }
  return out;
}

OdeTrajectory rk_backward(const OdeRhs& f, const Vec& yT, const std::vector<double>& grid) {
  check_grid(grid);
  OdeTrajectory out;
  out.t = grid;
  out.y.resize(grid.size());
  const std::size_t N = grid.size() - 1;
  out.y[N] = yT;
  check_finite(yT, N);
  for (std::size_t i = N; i-- > 0;) {
    out.y[i] = rk4_step(f, grid[i + 1], out.y[i + 1], grid[i] - grid[i + 1]);
    check_finite(out.y[i], i);
  }
  return out;
}

OdeInterpolant::OdeInterpolant(OdeTrajectory traj, OdeRhs f) : traj_(std::move(traj)) {
  slope_.resize(traj_.t.size());
  for (std::size_t i = 0; i < traj_.t.size(); ++i) slope_[i] = f(traj_.t[i], traj_.y[i]);
}

Vec OdeInterpolant::operator()(double t) const {
  const auto& tt = traj_.t;
  if (t <= tt.front()) return traj_.y.front();
  if (t >= tt.back()) return traj_.y.back();
  const auto it = std::upper_bound(tt.begin(), tt.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - tt.begin()) - 1;
  const double h = tt[i + 1] - tt[i];
  const double s = (t - tt[i]) / h;
  if (s == 0.0) return traj_.y[i];
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s * s * (3.0 - 2.0 * s);
  const double h11 = s * s * (s - 1.0);
  return h00 * traj_.y[i] + (h10 * h) * slope_[i] + h01 * traj_.y[i + 1] + (h11 * h) * slope_[i + 1];
}

}  // namespace bridgesim

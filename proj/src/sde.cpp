#include "bridgesim/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bridgesim/rng.hpp"

namespace bridgesim {

Mat DiffusionModel::jacobian(double t, const Vec& x) const {
  if (drift_jacobian) return drift_jacobian(t, x);
  Mat J(d, d);
  Vec xp = x, xm = x;
  for (int j = 0; j < d; ++j) {
    const double step = 1e-6 * std::max(1.0, std::fabs(x[j]));
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    J.col(j) = (drift(t, xp) - drift(t, xm)) / (2.0 * step);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return J;
}

TimeGrid TimeGrid::uniform(double T, std::size_t n_steps) {
  if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
  if (n_steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
  TimeGrid g;
  g.t_.resize(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i)
    g.t_[i] = T * static_cast<double>(i) / static_cast<double>(n_steps);
  g.t_.back() = T;  // exact horizon
  return g;
}

TimeGrid TimeGrid::from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 2) throw std::invalid_argument("TimeGrid: need at least two nodes");
  if (nodes.front() != 0.0) throw std::invalid_argument("TimeGrid: first node must be 0");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i] < nodes[i + 1]))
      throw std::invalid_argument("TimeGrid: nodes must be strictly increasing");
  TimeGrid g;
  g.t_ = std::move(nodes);
  return g;
}

WienerIncrements sample_wiener(const TimeGrid& grid, int d_noise, std::uint64_t seed) {
  if (d_noise < 1) throw std::invalid_argument("sample_wiener: d_noise must be >= 1");
  WienerIncrements w;
  w.seed = seed;
  const std::size_t N = grid.steps();
  w.dw.resize(static_cast<Eigen::Index>(N), d_noise);
  Rng rng(seed);
  for (std::size_t i = 0; i < N; ++i) {
    const double sh = std::sqrt(grid.h(i));
    for (int j = 0; j < d_noise; ++j)
      w.dw(static_cast<Eigen::Index>(i), j) = sh * rng.next_normal();
  }
  return w;
}

SamplePath euler_maruyama(const std::function<Vec(double, const Vec&)>& drift,
                          const std::function<Mat(double, const Vec&)>& dispersion,
                          const Vec& x0, const GridPtr& grid, const WienerIncrements& dw) {
  const std::size_t N = grid->steps();
  if (static_cast<std::size_t>(dw.dw.rows()) != N)
    throw std::invalid_argument("euler_maruyama: increments do not match the grid");
  SamplePath path;
  path.grid = grid;
  path.states.resize(static_cast<Eigen::Index>(N) + 1, x0.size());
  Vec x = x0;
  path.set_state(0, x);
  for (std::size_t i = 0; i < N; ++i) {
    const double t = grid->node(i);
    x = x + grid->h(i) * drift(t, x) + dispersion(t, x) * dw.increment(i);
    if (!x.allFinite())
      throw std::runtime_error("euler_maruyama: non-finite state at node " + std::to_string(i + 1));
    path.set_state(i + 1, x);
  }
  return path;
}

OdeTrajectory solve_flow(const DiffusionModel& model, const Vec& u, const TimeGrid& grid) {
  return rk4_solve([&](double t, const Vec& x) { return model.drift(t, x); }, u, grid.nodes());
}

}  // namespace bridgesim

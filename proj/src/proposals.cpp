#include "bridgesim/proposals.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bridgesim {

namespace {

SamplePath prepare(const BridgeSpec& spec, const GridPtr& grid) {
  SamplePath path;
  path.grid = grid;
  path.states.resize(static_cast<Eigen::Index>(grid->steps()) + 1, spec.u.size());
  path.set_state(0, spec.u);
  return path;
}

void check_node(const Vec& x, std::size_t node) {
  if (!x.allFinite())
    throw std::runtime_error("proposal simulation: non-finite state at node " +
                             std::to_string(node));
}

void check_flow(const OdeTrajectory& flow, const GridPtr& grid) {
  if (flow.t.size() != grid->nodes().size())
    throw std::invalid_argument("proposal simulation: flow does not cover the grid");
}

}  // namespace

SamplePath delyon_hu(int lambda, const DiffusionModel& model, const BridgeSpec& spec,
                     const GridPtr& grid, const WienerIncrements& dw) {
  if (lambda != 0 && lambda != 1)
    throw std::invalid_argument("delyon_hu: lambda must be 0 or 1");
  const std::size_t N = grid->steps();
  const double T = grid->horizon();
  SamplePath path = prepare(spec, grid);
  Vec x = spec.u;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double t = grid->node(i), h = grid->h(i);
    Vec drift = (spec.v - x) / (T - t);
    if (lambda == 1) drift += model.drift(t, x);
    x = x + h * drift + model.dispersion(t, x) * dw.increment(i);
    check_node(x, i + 1);
    path.set_state(i + 1, x);
  }
  path.set_state(N, spec.v);
  return path;
}

SamplePath residual(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                    const WienerIncrements& dw, const OdeTrajectory& flow) {
  check_flow(flow, grid);
  const std::size_t N = grid->steps();
  const double T = grid->horizon();
  const Vec w = spec.v - flow.back();
  SamplePath path = prepare(spec, grid);
  Vec c = Vec::Zero(spec.u.size());
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double t = grid->node(i), h = grid->h(i);
    const Vec at = flow.y[i] + c;
    c = c + (h / (T - t)) * (w - c) + model.dispersion(t, at) * dw.increment(i);
    const Vec x = flow.y[i + 1] + c;
    check_node(x, i + 1);
    path.set_state(i + 1, x);
  }
  path.set_state(N, spec.v);
  return path;
}

LnaConditioning lna_conditional_mean(const DiffusionModel& model, const BridgeSpec& spec,
                                     const GridPtr& grid, const OdeInterpolant& flow) {
  const int d = model.d;
  const std::size_t N = grid->steps();
  const OdeTrajectory& xt = flow.trajectory();
  if (xt.t.size() != N + 1)
    throw std::invalid_argument("lna_conditional_mean: flow does not cover the grid");

  // moments of the zero-started linearized residual dR = V(t, x(t)) R dt + sigma(t, x(t)) dW
  LinearAuxiliary res;
  res.d = d;
  res.d_noise = model.d_noise;
  res.B = [&model, &flow](double t) { return model.jacobian(t, flow(t)); };
  res.beta = [d](double) { return Vec(Vec::Zero(d)); };
  res.sigma = [&model, &flow](double t) { return model.dispersion(t, flow(t)); };
  const ForwardMoments fm = forward_moments(res, Vec(Vec::Zero(d)), grid);

  Vec g;
  try {
    g = cholesky_solve(fm.Q.back(), Vec(spec.v - xt.back()));
  } catch (const std::runtime_error&) {
    throw std::runtime_error("lna_conditional_mean: endpoint covariance Q(T) is singular");
  }

  // Phi(T, t) from one backward sweep of dM/ds = -M V(s, x(s)), M(T) = I
  const OdeRhs rhs = [&](double t, const Vec& z) {
    const Mat M = unvec(z, d);
    return vec_of(Mat(-M * model.jacobian(t, flow(t))));
  };
  const OdeTrajectory phi = rk_backward(rhs, vec_of(Mat(Mat::Identity(d, d))), grid->nodes());

  LnaConditioning cond;
  cond.z.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    const Mat Phi = unvec(phi.y[i], d);
    cond.z[i] = xt.y[i] + fm.Q[i] * (Phi.transpose() * g);
  }
  cond.z[N] = spec.v;
  return cond;
}

SamplePath lna_residual(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                        const WienerIncrements& dw, const LnaConditioning& cond) {
  const std::size_t N = grid->steps();
  if (cond.z.size() != N + 1)
    throw std::invalid_argument("lna_residual: conditioning does not cover the grid");
  const double T = grid->horizon();
  SamplePath path = prepare(spec, grid);
  Vec c = Vec::Zero(spec.u.size());
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double t = grid->node(i), h = grid->h(i);
    const Vec at = cond.z[i] + c;
    c = c - (h / (T - t)) * c + model.dispersion(t, at) * dw.increment(i);
    const Vec x = cond.z[i + 1] + c;
    check_node(x, i + 1);
    path.set_state(i + 1, x);
  }
  path.set_state(N, spec.v);
  return path;
}

SamplePath guided(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                  const WienerIncrements& dw, const BackwardTable& table) {
  if (table.grid->nodes() != grid->nodes())
    throw std::invalid_argument("guided: table built on a different grid");
  const std::size_t N = grid->steps();
  SamplePath path = prepare(spec, grid);
  Vec x = spec.u;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double t = grid->node(i), h = grid->h(i);
    const Vec r = rtilde(table, i, x);
    x = x + h * (model.drift(t, x) + model.diffusivity(t, x) * r) +
        model.dispersion(t, x) * dw.increment(i);
    check_node(x, i + 1);
    path.set_state(i + 1, x);
  }
  path.set_state(N, spec.v);
  return path;
}

SamplePath adjusted_residual_v1(const DiffusionModel& model, const BridgeSpec& spec,
                                const GridPtr& grid, const WienerIncrements& dw,
                                const OdeTrajectory& flow) {
  check_flow(flow, grid);
  const Mat s0 = model.dispersion(0.0, spec.u);
  const Mat sT = model.dispersion(grid->horizon(), spec.v);
  if ((s0 - sT).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument(
        "adjusted_residual_v1: sigma is not constant; use adjusted_residual_v2");
  const std::size_t N = grid->steps();
  const double T = grid->horizon();
  const Vec w = spec.v - flow.back();
  SamplePath path = prepare(spec, grid);
  Vec x = spec.u;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double t = grid->node(i), h = grid->h(i);
    const Vec pull = (Vec(w + flow.y[i]) - x) / (T - t);
    x = x + h * (model.drift(t, x) + pull) + model.dispersion(t, x) * dw.increment(i);
    check_node(x, i + 1);
    path.set_state(i + 1, x);
  }
  path.set_state(N, spec.v);
  return path;
}

SamplePath adjusted_residual_v2(const DiffusionModel& model, const BridgeSpec& spec,
                                const GridPtr& grid, const WienerIncrements& dw,
                                const OdeTrajectory& flow) {
  check_flow(flow, grid);
  const std::size_t N = grid->steps();
  const double T = grid->horizon();
  const Vec w = spec.v - flow.back();
  const Mat a_end = [&] {
    const Mat s = model.dispersion(T, spec.v);
    return Mat(s * s.transpose());
  }();
  const Mat L_end = cholesky_factor(a_end);
  SamplePath path = prepare(spec, grid);
  Vec x = spec.u;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double t = grid->node(i), h = grid->h(i);
    const Vec r = cholesky_solve_factored(L_end, Vec(Vec(w + flow.y[i]) - x)) / (T - t);
    x = x + h * (model.drift(t, x) + model.diffusivity(t, x) * r) +
        model.dispersion(t, x) * dw.increment(i);
    check_node(x, i + 1);
    path.set_state(i + 1, x);
  }
  path.set_state(N, spec.v);
  return path;
}

}  // namespace bridgesim

#include "bridgesim/weights.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bridgesim {

namespace {

Mat inverse_at(const DiffusionModel& model, double t, const Vec& x, std::size_t node,
               const char* who) {
  try {
    return spd_inverse(model.diffusivity(t, x));
  } catch (const std::runtime_error&) {
    throw std::runtime_error(std::string(who) + ": a(t,x) is singular at node " +
                             std::to_string(node));
  }
}

double sum_components(const LogWeight& w) {
  double s = 0.0;
  for (const auto& kv : w.components) s += kv.second;
  return s;
}

}  // namespace

double log_psi1(const SamplePath& path, const DiffusionModel& model, const BridgeSpec& spec) {
  const TimeGrid& grid = *path.grid;
  const std::size_t N = grid.steps();
  const double T = grid.horizon();
  double term1 = 0.0, term2 = 0.0, term3 = 0.0;
  Mat ainv = inverse_at(model, grid.node(0), path.state(0), 0, "log_psi1");
  for (std::size_t i = 0; i < N; ++i) {
    const double t = grid.node(i), h = grid.h(i);
    const Vec x = path.state(i);
    const Vec b = model.drift(t, x);
    const Vec dx = path.state(i + 1) - x;
    const Vec ainv_b = ainv * b;
    term1 += ainv_b.dot(dx);
    term2 -= 0.5 * ainv_b.dot(b) * h;
    if (i + 1 < N) {
      const double t1 = grid.node(i + 1);
      const Vec x1 = path.state(i + 1);
      const Mat ainv1 = inverse_at(model, t1, x1, i + 1, "log_psi1");
      const Vec w = spec.v - x1;
      term3 -= 0.5 * (w / (T - t1)).dot((ainv1 - ainv) * w);
      ainv = ainv1;
    }
  }
  return term1 + term2 + term3;
}

double log_psi2(const SamplePath& path, const DiffusionModel& model, const BridgeSpec& spec,
                const OdeTrajectory& flow) {
  const TimeGrid& grid = *path.grid;
  const std::size_t N = grid.steps();
  if (flow.t.size() != N + 1)
    throw std::invalid_argument("log_psi2: flow does not cover the path grid");
  const double T = grid.horizon();
  const Vec xT = flow.back();
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double t = grid.node(i), h = grid.h(i), tau = T - t;
    const Vec x = path.state(i);
    const Mat ainv = inverse_at(model, t, x, i, "log_psi2");
    const Vec f = model.drift(t, flow.y[i]) - Vec((xT - flow.y[i]) / tau);
    const Vec ainv_f = ainv * f;
    const Vec dx = path.state(i + 1) - x;
    const Vec kappa = (spec.v - x) / tau;
    acc += 0.5 * ainv_f.dot(f) * h - ainv_f.dot(dx) + ainv_f.dot(kappa) * h;
  }
  return acc;
}

double log_const_residual(const DiffusionModel& model, const BridgeSpec& spec) {
  const Mat a0 = model.diffusivity(0.0, spec.u);
  const Mat aT = model.diffusivity(spec.T, spec.v);
  Mat L0, LT;
  try {
    L0 = cholesky_factor(a0);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("log_const_residual: a(0,u) is not positive definite");
  }
  try {
    LT = cholesky_factor(aT);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("log_const_residual: a(T,v) is not positive definite");
  }
  const double lphi = log_normal_density(spec.v, spec.u, Mat(a0 * spec.T));
  return lphi + 0.5 * (cholesky_logdet(L0) - cholesky_logdet(LT));
}

double g_functional(std::size_t i, const Vec& x, const DiffusionModel& model,
                    const LinearAuxiliary& aux, const BackwardTable& table) {
  if (i >= table.grid->steps())
    throw std::invalid_argument(
        "g_functional: requested at the final node, where the guiding term is singular");
  const double t = table.grid->node(i);
  const Vec r = rtilde(table, i, x);
  const Vec db = model.drift(t, x) - aux.drift_at(t, x);
  const Mat da = model.diffusivity(t, x) - aux.a(t);
  const Mat M = table.H[i] - Mat(r * r.transpose());
  return db.dot(r) - 0.5 * (da * M).trace();
}

LogWeight log_weight_guided(const SamplePath& path, const DiffusionModel& model,
                            const LinearAuxiliary& aux, const BackwardTable& table,
                            const BridgeSpec& spec) {
  const TimeGrid& grid = *path.grid;
  if (table.grid->nodes() != grid.nodes())
    throw std::invalid_argument("log_weight_guided: table built on a different grid");
  const std::size_t N = grid.steps();
  double g_int = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    g_int += g_functional(i, path.state(i), model, aux, table) * grid.h(i);
  LogWeight w;
  w.components["log_const"] = log_ptilde_endpoint(aux, spec, path.grid);
  w.components["g_integral"] = g_int;
  w.total = sum_components(w);
  w.omits_transition_constant = true;
  return w;
}

LogWeight log_weight_residual(const SamplePath& path, const DiffusionModel& model,
                              const BridgeSpec& spec, const OdeTrajectory& flow) {
  LogWeight w;
  w.components["log_const"] = log_const_residual(model, spec);
  w.components["log_psi1"] = log_psi1(path, model, spec);
  w.components["log_psi2"] = log_psi2(path, model, spec, flow);
  w.total = sum_components(w);
  w.omits_transition_constant = true;
  return w;
}

LogWeight log_weight_mdb(const SamplePath& path, const DiffusionModel& model,
                         const BridgeSpec& spec) {
  LogWeight w;
  w.components["log_const"] = log_const_residual(model, spec);
  w.components["log_psi1"] = log_psi1(path, model, spec);
  w.total = sum_components(w);
  w.omits_transition_constant = true;
  return w;
}

double ess(const std::vector<double>& log_weights) {
  if (log_weights.empty()) throw std::invalid_argument("ess: empty weight list");
  double m = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw std::invalid_argument("ess: NaN log weight");
    if (lw > m) m = lw;
  }
  if (!std::isfinite(m)) throw std::invalid_argument("ess: all log weights are -inf");
  double s1 = 0.0, s2 = 0.0;
  for (double lw : log_weights) {
    const double e = std::exp(lw - m);
    s1 += e;
    s2 += e * e;
  }
  return s1 * s1 / s2;
}

double mh_log_ratio(const WeightedSample& current, const WeightedSample& candidate) {
  if (current.log_weight.omits_transition_constant !=
      candidate.log_weight.omits_transition_constant)
    throw std::invalid_argument(
        "mh_log_ratio: weights omit different constants; the ratio is not meaningful");
  return candidate.log_weight.total - current.log_weight.total;
}

}  // namespace bridgesim

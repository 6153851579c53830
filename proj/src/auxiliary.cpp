#include "bridgesim/auxiliary.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bridgesim {

namespace {

constexpr double kPi = 3.14159265358979323846;

void finalize_nodes(BackwardTable& table) {
  const std::size_t N = table.grid->steps();
  table.chol.resize(N);
  table.H.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    try {
      table.chol[i] = cholesky_factor(table.K[i]);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("backward table: K not SPD at node " + std::to_string(i) +
                               " (" + e.what() + ")");
    }
    table.H[i] = cholesky_solve_factored(table.chol[i],
                                         Mat(Mat::Identity(table.K[i].rows(), table.K[i].rows())));
  }
}

bool is_zero_matrix(const Mat& M) { return M.cwiseAbs().maxCoeff() == 0.0; }

}  // namespace

BackwardTable backward_tables_ode(const LinearAuxiliary& aux, const GridPtr& grid,
                                  const BridgeSpec& spec) {
  const int d = aux.d;
  const std::size_t N = grid->steps();
  BackwardTable table;
  table.grid = grid;
  table.spec = spec;

  const OdeRhs k_rhs = [&aux, d](double t, const Vec& z) {
    const Mat K = unvec(z, d);
    const Mat B = aux.B(t);
    return vec_of(Mat(B * K + K * B.transpose() - aux.a(t)));
  };
  const OdeRhs v_rhs = [&aux](double t, const Vec& y) { return aux.drift_at(t, y); };

  const OdeTrajectory ktraj = rk_backward(k_rhs, Vec(Vec::Zero(d * d)), grid->nodes());
  const OdeTrajectory vtraj = rk_backward(v_rhs, spec.v, grid->nodes());

  table.K.resize(N + 1);
  table.v.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    Mat K = unvec(ktraj.y[i], d);
    table.K[i] = (K + K.transpose()) / 2.0;
    table.v[i] = vtraj.y[i];
  }
  table.K[N] = Mat::Zero(d, d);
  table.v[N] = spec.v;
  finalize_nodes(table);
  return table;
}

BackwardTable backward_tables_closed(const LinearAuxiliary& aux, const GridPtr& grid,
                                     const BridgeSpec& spec) {
  if (!aux.homogeneous)
    throw std::invalid_argument("backward_tables_closed: auxiliary must be homogeneous");
  const int d = aux.d;
  const std::size_t N = grid->steps();
  const double T = grid->horizon();
  const Mat B = aux.B(0.0);
  const Vec beta = aux.beta(0.0);
  const Mat a = aux.a(0.0);

  BackwardTable table;
  table.grid = grid;
  table.spec = spec;
  table.K.resize(N + 1);
  table.v.resize(N + 1);

  if (is_zero_matrix(B)) {
    for (std::size_t i = 0; i <= N; ++i) {
      const double tau = T - grid->node(i);
      table.K[i] = a * tau;
      table.v[i] = spec.v - beta * tau;
    }
  } else {
    const Mat L = solve_lyapunov(B, a);  // throws if the operator is singular
    Eigen::FullPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(B)};
    if (!lu.isInvertible())
      throw std::runtime_error(
          "backward_tables_closed: B is singular but nonzero; no closed mean form, "
          "use the ODE route");
    const Vec mu = Vec(lu.solve(Eigen::VectorXd(-beta)));
    for (std::size_t i = 0; i <= N; ++i) {
      const double tau = T - grid->node(i);
      const Mat E = expm(Mat(-tau * B));
      table.K[i] = E * L * E.transpose() - L;
      table.K[i] = (table.K[i] + table.K[i].transpose()) / 2.0;
      table.v[i] = E * (spec.v - mu) + mu;
    }
  }
  table.K[N] = Mat::Zero(d, d);
  table.v[N] = spec.v;
  finalize_nodes(table);
  return table;
}

BackwardTable backward_tables_flow(const Mat& sigma_end, const OdeTrajectory& flow,
                                   const GridPtr& grid, const BridgeSpec& spec) {
  const std::size_t N = grid->steps();
  if (flow.t.size() != N + 1)
    throw std::invalid_argument("backward_tables_flow: flow does not cover the grid");
  const Mat a_end = sigma_end * sigma_end.transpose();
  const double T = grid->horizon();
  const Vec w = spec.v - flow.back();

  BackwardTable table;
  table.grid = grid;
  table.spec = spec;
  table.K.resize(N + 1);
  table.v.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    table.K[i] = a_end * (T - grid->node(i));
    table.v[i] = w + flow.y[i];
  }
  table.K[N] = Mat::Zero(a_end.rows(), a_end.cols());
  table.v[N] = spec.v;
  finalize_nodes(table);
  return table;
}

BackwardTable make_backward_table(const LinearAuxiliary& aux, const GridPtr& grid,
                                  const BridgeSpec& spec) {
  if (aux.homogeneous) {
    const Mat B = aux.B(0.0);
    if (is_zero_matrix(B)) return backward_tables_closed(aux, grid, spec);
    Eigen::FullPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(B)};
    if (lu.isInvertible()) {
      try {
        return backward_tables_closed(aux, grid, spec);
      } catch (const std::runtime_error&) {
        // Lyapunov operator singular: fall through to the ODE route
      }
    }
  }
  return backward_tables_ode(aux, grid, spec);
}

Vec rtilde(const BackwardTable& table, std::size_t i, const Vec& x) {
  if (i >= table.grid->steps())
    throw std::invalid_argument("rtilde: requested at the final node, where K is singular");
  return cholesky_solve_factored(table.chol[i], Vec(table.v[i] - x));
}

ForwardMoments forward_moments(const LinearAuxiliary& aux, const Vec& u, const GridPtr& grid) {
  const int d = aux.d;
  const std::size_t N = grid->steps();
  // joint state [m; vec Q]
  const OdeRhs rhs = [&aux, d](double t, const Vec& z) {
    const Vec m = z.head(d);
    const Mat Q = unvec(Vec(z.tail(d * d)), d);
    const Mat B = aux.B(t);
    Vec out(d + d * d);
    out.head(d) = B * m + aux.beta(t);
    out.tail(d * d) = vec_of(Mat(B * Q + Q * B.transpose() + aux.a(t)));
    return out;
  };
  Vec z0 = Vec::Zero(d + d * d);
  z0.head(d) = u;
  const OdeTrajectory traj = rk4_solve(rhs, z0, grid->nodes());

  ForwardMoments fm;
  fm.grid = grid;
  fm.m.resize(N + 1);
  fm.Q.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    fm.m[i] = traj.y[i].head(d);
    Mat Q = unvec(Vec(traj.y[i].tail(d * d)), d);
    fm.Q[i] = (Q + Q.transpose()) / 2.0;
  }
  return fm;
}

double log_normal_density(const Vec& x, const Vec& mean, const Mat& cov) {
  const Mat L = cholesky_factor(cov);
  const Vec r = x - mean;
  const Vec z = L.triangularView<Eigen::Lower>().solve(r);
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * kPi) + cholesky_logdet(L) +
                 z.squaredNorm());
}

double log_ptilde_endpoint(const LinearAuxiliary& aux, const BridgeSpec& spec,
                           const GridPtr& grid) {
  const ForwardMoments fm = forward_moments(aux, spec.u, grid);
  try {
    return log_normal_density(spec.v, fm.m.back(), fm.Q.back());
  } catch (const std::runtime_error&) {
    throw std::runtime_error("log_ptilde_endpoint: endpoint covariance Q(T) is singular");
  }
}

std::function<Mat(double)> sigma_tilde_policy(const DiffusionModel& model,
                                              const BridgeSpec& spec,
                                              const OdeInterpolant& flow,
                                              SigmaPolicy policy,
                                              std::optional<double> t0) {
  const double T = spec.T;
  const Mat sigma_end = model.dispersion(T, spec.v);
  if (policy == SigmaPolicy::kConstantEnd) {
    return [sigma_end](double) { return sigma_end; };
  }
  if (!t0.has_value())
    throw std::invalid_argument("sigma_tilde_policy: INTERPOLATE requires t0");
  const double s0 = *t0;
  if (!(s0 > 0.0 && s0 < T))
    throw std::invalid_argument("sigma_tilde_policy: t0 must lie strictly inside (0, T)");
  const Mat sigma0 = model.dispersion(s0, flow(s0));
  // The schedule may outlive the caller's model object, so capture a copy.
  auto sig_along_flow = [model, flow](double t) { return model.dispersion(t, flow(t)); };
  return [=](double t) -> Mat {
    if (t >= T) return sigma_end;  // endpoint match holds exactly
    if (t <= s0) return sig_along_flow(t);
    return sigma0 + ((t - s0) / (T - s0)) * (sigma_end - sigma0);
  };
}

LinearAuxiliary lna_auxiliary(const DiffusionModel& model, const OdeInterpolant& flow,
                              const std::function<Mat(double)>& sigma_schedule) {
  LinearAuxiliary aux;
  aux.d = model.d;
  aux.d_noise = model.d_noise;
  aux.homogeneous = false;
  // Coefficient closures may outlive the caller's model object; capture copies.
  aux.B = [model, flow](double t) { return model.jacobian(t, flow(t)); };
  aux.beta = [model, flow](double t) {
    const Vec x = flow(t);
    return Vec(model.drift(t, x) - model.jacobian(t, x) * x);
  };
  aux.sigma = sigma_schedule;
  return aux;
}

LinearAuxiliary simple_auxiliary(const DiffusionModel& model, const OdeInterpolant& flow,
                                 const Mat& sigma_end) {
  LinearAuxiliary aux;
  aux.d = model.d;
  aux.d_noise = model.d_noise;
  aux.homogeneous = false;
  aux.B = [d = model.d](double) { return Mat(Mat::Zero(d, d)); };
  aux.beta = [model, flow](double t) { return model.drift(t, flow(t)); };
  aux.sigma = [sigma_end](double) { return sigma_end; };
  return aux;
}

}  // namespace bridgesim

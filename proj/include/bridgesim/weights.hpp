#pragma once

#include <map>
#include <string>
#include <vector>

#include "bridgesim/auxiliary.hpp"
#include "bridgesim/sde.hpp"

namespace bridgesim {

// A log likelihood ratio split into named components; total is their sum.
// Every weight produced here omits the same unknown path-independent factor
// (the reciprocal of the model's own endpoint transition density), recorded by
// omits_transition_constant so that only compatible weights are ever compared.
struct LogWeight {
  double total = 0.0;
  std::map<std::string, double> components;
  bool omits_transition_constant = false;
};

struct WeightedSample {
  SamplePath path;
  LogWeight log_weight;
};

// First Girsanov functional for residual-family paths, discretized as
//   term1 = sum_i b(t_i,X_i)^T a^{-1}(t_i,X_i) (X_{i+1} - X_i)      (left point)
//   term2 = -1/2 sum_i b^T a^{-1} b h_i                              (left point)
//   term3 = -1/2 sum_{i<N-1} kappa(t_{i+1},X_{i+1})^T
//             [a^{-1}(t_{i+1},X_{i+1}) - a^{-1}(t_i,X_i)] (v - X_{i+1})
// with kappa(s,x) = (v - x)/(T - s).  The increments of a^{-1} are evaluated at
// the right limit of each interval; the final increment is zero since X_N = v.
double log_psi1(const SamplePath& path, const DiffusionModel& model, const BridgeSpec& spec);

// Second Girsanov functional: with f(s) = b(s, x(s)) - (x(T) - x(s))/(T - s)
// built from the deterministic flow x(.),
//   1/2 sum_i f_i^T a^{-1} f_i h_i - sum_i f_i^T a^{-1} (X_{i+1} - X_i)
//   + sum_i f_i^T a^{-1} kappa(t_i, X_i) h_i,
// all left-point sums with a^{-1} at (t_i, X_i).
double log_psi2(const SamplePath& path, const DiffusionModel& model, const BridgeSpec& spec,
                const OdeTrajectory& flow);

// Computable part of the residual-weight normalizing constant:
//   log N(v; u, a(0,u) T) + 1/2 log(|a(0,u)| / |a(T,v)|).
double log_const_residual(const DiffusionModel& model, const BridgeSpec& spec);

// Guided-proposal weight integrand at node i < N:
//   G(s,x) = (b(s,x) - btilde(s,x))^T rtilde(s,x)
//            - 1/2 trace[(a(s,x) - atilde(s)) (H(s) - rtilde rtilde^T)]
// with btilde(s,x) = B(s) x + beta(s).
double g_functional(std::size_t i, const Vec& x, const DiffusionModel& model,
                    const LinearAuxiliary& aux, const BackwardTable& table);

// Guided weight: log ptilde(0,u; T,v) plus the left-point sum of G along the
// path.  Components: log_const, g_integral.
LogWeight log_weight_guided(const SamplePath& path, const DiffusionModel& model,
                            const LinearAuxiliary& aux, const BackwardTable& table,
                            const BridgeSpec& spec);

// Residual weight: components log_const, log_psi1, log_psi2.
LogWeight log_weight_residual(const SamplePath& path, const DiffusionModel& model,
                              const BridgeSpec& spec, const OdeTrajectory& flow);

// Weight for the pulling-only proposal (drift (v-x)/(T-t), model drift unused):
// components log_const, log_psi1.
LogWeight log_weight_mdb(const SamplePath& path, const DiffusionModel& model,
                         const BridgeSpec& spec);

// Effective sample size (sum w)^2 / sum w^2 of the exponentiated, max-shifted
// log weights; lies in [1, n].
double ess(const std::vector<double>& log_weights);

// Independence-sampler log acceptance ratio; both weights must omit the same
// constant for the ratio to be meaningful.
double mh_log_ratio(const WeightedSample& current, const WeightedSample& candidate);

}  // namespace bridgesim

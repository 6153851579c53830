#pragma once

#include <cstdint>
#include <vector>

#include "bridgesim/sde.hpp"

namespace bridgesim {

// Built-in scalar example models, all with constant dispersion sigma.
DiffusionModel make_ou(double alpha, double sigma);      // b(x) = -alpha x
DiffusionModel make_sine(double sigma);                  // b(x) = -sin(2 pi x)
DiffusionModel make_ou_sine(double sigma);               // b(x) = -x/2 - sin(2 pi x)

// Exact linear-drift bridge: Euler path of the closed-form conditioned SDE
//   dX = [-alpha X + 2 alpha (e^{alpha (T-t)} v - X) / (e^{2 alpha (T-t)} - 1)] dt
//        + sigma dW,
// componentwise in d dimensions, with the endpoint assigned exactly.
// Requires alpha != 0 (the alpha -> 0 limit is the pulling-only proposal).
SamplePath ou_bridge_exact(double alpha, double sigma, const BridgeSpec& spec,
                           const GridPtr& grid, const WienerIncrements& dw);

// Closed-form conditional mean of the linear-drift bridge at time t:
//   E[X_t] = [u sinh(alpha (T-t)) + v sinh(alpha t)] / sinh(alpha T),
// componentwise; the alpha -> 0 limit is linear interpolation. sigma does not
// enter the mean and is accepted only to mirror the bridge sampler signature.
Vec ou_bridge_mean(double alpha, double sigma, const BridgeSpec& spec, double t);

struct RejectionOracleResult {
  std::vector<SamplePath> paths;  // n_accept paths, ordered by attempt index
  double acceptance_rate = 0.0;   // n_accept / attempts
  std::size_t attempts = 0;       // attempts up to and including the last accept
};

// Brute-force bridge sampler: forward unconditioned paths from u, keeping
// those with |X_T - v|_inf <= eps until n_accept are collected.  Attempts are
// seeded per index, so the result is independent of the thread count.
// max_attempts = 0 chooses max(1e6, 4000 n_accept); exhausting the budget
// raises an error advising a larger eps.
RejectionOracleResult rejection_oracle(const DiffusionModel& model, const BridgeSpec& spec,
                                       const GridPtr& grid, double eps, std::size_t n_accept,
                                       std::uint64_t seed, std::size_t max_attempts = 0,
                                       int threads = 1);

}  // namespace bridgesim

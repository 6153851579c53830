#pragma once

#include "bridgesim/auxiliary.hpp"
#include "bridgesim/sde.hpp"

namespace bridgesim {

// Bridge-proposal simulators. All of them Euler-step over nodes 0..N-2 and
// assign the final state to v exactly; drift terms carrying a 1/(T-t) factor
// are never evaluated at the final node.

// Drift lambda*b(t,x) + (v-x)/(T-t); lambda = 0 ignores the model drift
// entirely (the modified diffusion bridge).
SamplePath delyon_hu(int lambda, const DiffusionModel& model, const BridgeSpec& spec,
                     const GridPtr& grid, const WienerIncrements& dw);

// Deterministic flow plus a pulled residual: C Euler-stepped from
// dC = (v - x(T) - C)/(T-t) dt + sigma(t, x(t)+C) dW, path = x(t) + C.
SamplePath residual(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                    const WienerIncrements& dw, const OdeTrajectory& flow);

// Conditional mean curve z(t) = x(t) + rho(t) for the flow-linearized residual
// process, rho(t) = P(t) Phi(T,t)^T Q(T)^{-1} (v - x(T)); z(T) = v.
struct LnaConditioning {
  std::vector<Vec> z;
};
LnaConditioning lna_conditional_mean(const DiffusionModel& model, const BridgeSpec& spec,
                                     const GridPtr& grid, const OdeInterpolant& flow);

// Path z(t) + C with dC = -C/(T-t) dt + sigma(t, z(t)+C) dW (a zero-to-zero
// residual bridge around the conditioned linearization).
SamplePath lna_residual(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                        const WienerIncrements& dw, const LnaConditioning& cond);

// Euler path of dX = (b + a rtilde) dt + sigma dW with rtilde from the table.
SamplePath guided(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                  const WienerIncrements& dw, const BackwardTable& table);

// Adjusted residual, constant-sigma variant: Euler on the path form
// dX = b(t,X) dt + (v - X - (x(T)-x(t)))/(T-t) dt + sigma dW, which is the
// discretization under which the variant coincides with the guided proposal
// for the drift-matched constant-diffusivity auxiliary.
SamplePath adjusted_residual_v1(const DiffusionModel& model, const BridgeSpec& spec,
                                const GridPtr& grid, const WienerIncrements& dw,
                                const OdeTrajectory& flow);

// Same with the pulling term premultiplied by a(t,X) a(T,v)^{-1}; valid for
// state-dependent sigma as well.
SamplePath adjusted_residual_v2(const DiffusionModel& model, const BridgeSpec& spec,
                                const GridPtr& grid, const WienerIncrements& dw,
                                const OdeTrajectory& flow);

}  // namespace bridgesim

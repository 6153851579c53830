#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bridgesim/auxiliary.hpp"
#include "bridgesim/proposals.hpp"
#include "bridgesim/weights.hpp"

namespace bridgesim {

enum class ProposalKind {
  kDelyonHu0,  // pulling drift only, model drift unused
  kDelyonHu1,  // model drift plus pulling drift
  kResidual,
  kLnaResidual,
  kGuided,
  kAdjustedResidualV1,
  kAdjustedResidualV2,
};

enum class AuxKind { kSimple51, kLna, kBrownian, kCustom };

// Canonical names used by the CLI and config files:
//   delyon-hu-0, delyon-hu-1, residual, lna-residual, guided,
//   adjusted-v1, adjusted-v2; aux: simple51, lna, brownian, custom.
std::string proposal_name(ProposalKind kind);
std::optional<ProposalKind> parse_proposal(const std::string& name);
std::string aux_name(AuxKind kind);
std::optional<AuxKind> parse_aux(const std::string& name);

// Constant-coefficient linear auxiliary supplied by the user.
struct CustomAux {
  Mat B;
  Vec beta;
  Mat sigma;
};

// Structures shared by every path of a batch: the deterministic flow, the
// auxiliary process and its backward table (where the family needs them), and
// the conditioned mean curve of the linearized residual construction.
struct SimPlan {
  DiffusionModel model;
  BridgeSpec spec;
  GridPtr grid;
  ProposalKind proposal = ProposalKind::kGuided;
  AuxKind aux_kind = AuxKind::kSimple51;

  OdeTrajectory flow;
  std::shared_ptr<const OdeInterpolant> flow_interp;
  std::shared_ptr<const LinearAuxiliary> aux;          // guided simulation
  std::shared_ptr<const BackwardTable> table;          // guided simulation
  std::shared_ptr<const LinearAuxiliary> weight_aux;   // weighting (adjusted -> drift-matched)
  std::shared_ptr<const BackwardTable> weight_table;
  std::shared_ptr<const LnaConditioning> lna_cond;

  bool has_weights() const {
    return proposal != ProposalKind::kDelyonHu1 && proposal != ProposalKind::kLnaResidual;
  }
};

// Validates dimensions, solves the flow, and builds whatever auxiliary
// structures the (proposal, aux) pair needs.  `policy`/`t0` shape the LNA
// dispersion schedule; `custom` is required when aux_kind is kCustom.
SimPlan make_plan(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                  ProposalKind proposal, AuxKind aux_kind = AuxKind::kSimple51,
                  SigmaPolicy policy = SigmaPolicy::kConstantEnd,
                  std::optional<double> t0 = std::nullopt,
                  const std::optional<CustomAux>& custom = std::nullopt);

SamplePath simulate_one(const SimPlan& plan, const WienerIncrements& dw);

// Log weight for one path; only valid when plan.has_weights().
LogWeight weigh_one(const SimPlan& plan, const SamplePath& path);

struct Batch {
  std::vector<SamplePath> paths;
  std::vector<LogWeight> weights;  // empty when the family carries no weight
};

// n paths with per-path Wiener streams derived from (seed, path index); the
// result is identical for every thread count.
Batch simulate_batch(const SimPlan& plan, std::size_t n_paths, std::uint64_t seed,
                     int threads = 1);

struct MhResult {
  std::vector<double> chain_log_weight;  // current state's total, per iteration
  std::vector<int> accepted;             // 0/1 per iteration
  double acceptance_rate = 0.0;
  std::vector<std::size_t> stored_iterations;
  std::vector<SamplePath> stored_paths;  // thinned snapshots of the chain state
};

// Independence Metropolis-Hastings over bridge paths; candidates are fresh
// proposal draws, accepted with probability exp(min(0, candidate - current)).
MhResult run_mh(const SimPlan& plan, std::size_t n_iterations, std::uint64_t seed,
                std::size_t thin = 1);

struct IsEstimate {
  double value = 0.0;
  double se = 0.0;  // self-normalized importance-sampling delta-method error
};

// Self-normalized IS estimate of the mean of h-values under the target.
IsEstimate is_estimate(const std::vector<double>& log_weights,
                       const std::vector<double>& h_values);

// Self-normalized weighted mean path, (N+1) x d; equal weights when the batch
// carries none.
Eigen::MatrixXd weighted_mean_path(const Batch& batch);

}  // namespace bridgesim

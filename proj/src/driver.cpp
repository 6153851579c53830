#include "bridgesim/driver.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bridgesim/rng.hpp"

namespace bridgesim {

std::string proposal_name(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::kDelyonHu0: return "delyon-hu-0";
    case ProposalKind::kDelyonHu1: return "delyon-hu-1";
    case ProposalKind::kResidual: return "residual";
    case ProposalKind::kLnaResidual: return "lna-residual";
    case ProposalKind::kGuided: return "guided";
    case ProposalKind::kAdjustedResidualV1: return "adjusted-v1";
    case ProposalKind::kAdjustedResidualV2: return "adjusted-v2";
  }
  return "unknown";
}

std::optional<ProposalKind> parse_proposal(const std::string& name) {
  for (ProposalKind k :
       {ProposalKind::kDelyonHu0, ProposalKind::kDelyonHu1, ProposalKind::kResidual,
        ProposalKind::kLnaResidual, ProposalKind::kGuided, ProposalKind::kAdjustedResidualV1,
        ProposalKind::kAdjustedResidualV2})
    if (name == proposal_name(k)) return k;
  return std::nullopt;
}

std::string aux_name(AuxKind kind) {
  switch (kind) {
    case AuxKind::kSimple51: return "simple51";
    case AuxKind::kLna: return "lna";
    case AuxKind::kBrownian: return "brownian";
    case AuxKind::kCustom: return "custom";
  }
  return "unknown";
}

std::optional<AuxKind> parse_aux(const std::string& name) {
  for (AuxKind k : {AuxKind::kSimple51, AuxKind::kLna, AuxKind::kBrownian, AuxKind::kCustom})
    if (name == aux_name(k)) return k;
  return std::nullopt;
}

namespace {

// Drift-matched constant-dispersion auxiliary plus its exact flow-built table.
void build_simple_pair(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                       const SimPlan& plan, std::shared_ptr<const LinearAuxiliary>& aux_out,
                       std::shared_ptr<const BackwardTable>& table_out) {
  const Mat sigma_end = model.dispersion(spec.T, spec.v);
  aux_out = std::make_shared<const LinearAuxiliary>(
      simple_auxiliary(model, *plan.flow_interp, sigma_end));
  table_out = std::make_shared<const BackwardTable>(
      backward_tables_flow(sigma_end, plan.flow, grid, spec));
}

}  // namespace

SimPlan make_plan(const DiffusionModel& model, const BridgeSpec& spec, const GridPtr& grid,
                  ProposalKind proposal, AuxKind aux_kind, SigmaPolicy policy,
                  std::optional<double> t0, const std::optional<CustomAux>& custom) {
  if (!model.drift || !model.dispersion)
    throw std::invalid_argument("make_plan: model must define drift and dispersion");
  if (spec.u.size() != model.d || spec.v.size() != model.d)
    throw std::invalid_argument("make_plan: endpoint dimension differs from the model's");
  if (!(spec.T > 0.0)) throw std::invalid_argument("make_plan: horizon T must be positive");
  if (grid->horizon() != spec.T)
    throw std::invalid_argument("make_plan: grid horizon differs from the bridge horizon");

  SimPlan plan;
  plan.model = model;
  plan.spec = spec;
  plan.grid = grid;
  plan.proposal = proposal;
  plan.aux_kind = aux_kind;
  plan.flow = solve_flow(plan.model, spec.u, *grid);
  plan.flow_interp = std::make_shared<const OdeInterpolant>(
      plan.flow, [m = plan.model](double t, const Vec& x) { return m.drift(t, x); });

  const bool wants_guided_structs =
      proposal == ProposalKind::kGuided || proposal == ProposalKind::kAdjustedResidualV1 ||
      proposal == ProposalKind::kAdjustedResidualV2;

  if (wants_guided_structs) {
    if (proposal == ProposalKind::kGuided) {
      switch (aux_kind) {
        case AuxKind::kSimple51:
          build_simple_pair(plan.model, spec, grid, plan, plan.aux, plan.table);
          break;
        case AuxKind::kLna: {
          auto schedule = sigma_tilde_policy(plan.model, spec, *plan.flow_interp, policy, t0);
          auto aux = std::make_shared<const LinearAuxiliary>(
              lna_auxiliary(plan.model, *plan.flow_interp, schedule));
          plan.aux = aux;
          plan.table = std::make_shared<const BackwardTable>(make_backward_table(*aux, grid, spec));
          break;
        }
        case AuxKind::kBrownian: {
          LinearAuxiliary aux;
          aux.d = plan.model.d;
          aux.d_noise = plan.model.d_noise;
          aux.homogeneous = true;
          const Mat sigma_end = plan.model.dispersion(spec.T, spec.v);
          aux.B = [d = aux.d](double) { return Mat(Mat::Zero(d, d)); };
          aux.beta = [d = aux.d](double) { return Vec(Vec::Zero(d)); };
          aux.sigma = [sigma_end](double) { return sigma_end; };
          plan.aux = std::make_shared<const LinearAuxiliary>(std::move(aux));
          plan.table =
              std::make_shared<const BackwardTable>(make_backward_table(*plan.aux, grid, spec));
          break;
        }
        case AuxKind::kCustom: {
          if (!custom.has_value())
            throw std::invalid_argument("make_plan: aux 'custom' requires coefficient values");
          if (custom->B.rows() != plan.model.d || custom->B.cols() != plan.model.d ||
              custom->beta.size() != plan.model.d || custom->sigma.rows() != plan.model.d)
            throw std::invalid_argument("make_plan: custom auxiliary dimensions differ from the "
                                        "model's");
          LinearAuxiliary aux;
          aux.d = plan.model.d;
          aux.d_noise = static_cast<int>(custom->sigma.cols());
          aux.homogeneous = true;
          aux.B = [B = custom->B](double) { return B; };
          aux.beta = [b = custom->beta](double) { return b; };
          aux.sigma = [s = custom->sigma](double) { return s; };
          plan.aux = std::make_shared<const LinearAuxiliary>(std::move(aux));
          plan.table =
              std::make_shared<const BackwardTable>(make_backward_table(*plan.aux, grid, spec));
          break;
        }
      }
      plan.weight_aux = plan.aux;
      plan.weight_table = plan.table;
    } else {
      // The adjusted variants are tied to the drift-matched construction, so
      // their weights always use that auxiliary regardless of the aux flag.
      build_simple_pair(plan.model, spec, grid, plan, plan.weight_aux, plan.weight_table);
    }
  }

  if (proposal == ProposalKind::kLnaResidual)
    plan.lna_cond = std::make_shared<const LnaConditioning>(
        lna_conditional_mean(plan.model, spec, grid, *plan.flow_interp));

  return plan;
}

SamplePath simulate_one(const SimPlan& plan, const WienerIncrements& dw) {
  switch (plan.proposal) {
    case ProposalKind::kDelyonHu0:
      return delyon_hu(0, plan.model, plan.spec, plan.grid, dw);
    case ProposalKind::kDelyonHu1:
      return delyon_hu(1, plan.model, plan.spec, plan.grid, dw);
    case ProposalKind::kResidual:
      return residual(plan.model, plan.spec, plan.grid, dw, plan.flow);
    case ProposalKind::kLnaResidual:
      return lna_residual(plan.model, plan.spec, plan.grid, dw, *plan.lna_cond);
    case ProposalKind::kGuided:
      return guided(plan.model, plan.spec, plan.grid, dw, *plan.table);
    case ProposalKind::kAdjustedResidualV1:
      return adjusted_residual_v1(plan.model, plan.spec, plan.grid, dw, plan.flow);
    case ProposalKind::kAdjustedResidualV2:
      return adjusted_residual_v2(plan.model, plan.spec, plan.grid, dw, plan.flow);
  }
  throw std::logic_error("simulate_one: unknown proposal kind");
}

LogWeight weigh_one(const SimPlan& plan, const SamplePath& path) {
  switch (plan.proposal) {
    case ProposalKind::kDelyonHu0:
      return log_weight_mdb(path, plan.model, plan.spec);
    case ProposalKind::kResidual:
      return log_weight_residual(path, plan.model, plan.spec, plan.flow);
    case ProposalKind::kGuided:
    case ProposalKind::kAdjustedResidualV1:
    case ProposalKind::kAdjustedResidualV2:
      return log_weight_guided(path, plan.model, *plan.weight_aux, *plan.weight_table, plan.spec);
    case ProposalKind::kDelyonHu1:
    case ProposalKind::kLnaResidual:
      break;
  }
  throw std::logic_error("weigh_one: proposal '" + proposal_name(plan.proposal) +
                         "' carries no computable weight");
}

Batch simulate_batch(const SimPlan& plan, std::size_t n_paths, std::uint64_t seed, int threads) {
  if (n_paths == 0) throw std::invalid_argument("simulate_batch: n_paths must be positive");
  if (threads < 1) threads = 1;
  Batch batch;
  batch.paths.resize(n_paths);
  if (plan.has_weights()) batch.weights.resize(n_paths);

  const auto worker = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      const WienerIncrements dw =
          sample_wiener(*plan.grid, plan.model.d_noise, Rng::stream_seed(seed, j));
      batch.paths[j] = simulate_one(plan, dw);
      if (plan.has_weights()) batch.weights[j] = weigh_one(plan, batch.paths[j]);
    }
  };

  if (threads == 1 || n_paths < 2) {
    worker(0, n_paths);
    return batch;
  }

  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  const std::size_t per = (n_paths + threads - 1) / static_cast<std::size_t>(threads);
  for (int w = 0; w < threads; ++w) {
    const std::size_t lo = per * static_cast<std::size_t>(w);
    const std::size_t hi = std::min(n_paths, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        worker(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return batch;
}

MhResult run_mh(const SimPlan& plan, std::size_t n_iterations, std::uint64_t seed,
                std::size_t thin) {
  if (n_iterations == 0) throw std::invalid_argument("run_mh: n_iterations must be positive");
  if (!plan.has_weights())
    throw std::invalid_argument("run_mh: proposal '" + proposal_name(plan.proposal) +
                                "' carries no computable weight");
  if (thin == 0) thin = 1;

  const auto draw = [&](std::uint64_t stream) {
    WeightedSample s;
    const WienerIncrements dw =
        sample_wiener(*plan.grid, plan.model.d_noise, Rng::stream_seed(seed, stream));
    s.path = simulate_one(plan, dw);
    s.log_weight = weigh_one(plan, s.path);
    return s;
  };

  Rng accept_rng = Rng::for_stream(seed, ~std::uint64_t{0});
  WeightedSample current = draw(0);
  MhResult out;
  out.chain_log_weight.reserve(n_iterations);
  out.accepted.reserve(n_iterations);
  std::size_t n_accepted = 0;
  for (std::size_t it = 1; it <= n_iterations; ++it) {
    WeightedSample candidate = draw(it);
    const double logr = mh_log_ratio(current, candidate);
    const bool accept = std::log(accept_rng.next_uniform()) < logr;
    if (accept) {
      current = std::move(candidate);
      ++n_accepted;
    }
    out.accepted.push_back(accept ? 1 : 0);
    out.chain_log_weight.push_back(current.log_weight.total);
    if (it % thin == 0) {
      out.stored_iterations.push_back(it);
      out.stored_paths.push_back(current.path);
    }
  }
  out.acceptance_rate = static_cast<double>(n_accepted) / static_cast<double>(n_iterations);
  return out;
}

IsEstimate is_estimate(const std::vector<double>& log_weights,
                       const std::vector<double>& h_values) {
  if (log_weights.size() != h_values.size() || log_weights.empty())
    throw std::invalid_argument("is_estimate: weight and value lists must match and be non-empty");
  double m = log_weights[0];
  for (double lw : log_weights) m = std::max(m, lw);
  double sw = 0.0;
  for (double lw : log_weights) sw += std::exp(lw - m);
  IsEstimate est;
  for (std::size_t i = 0; i < log_weights.size(); ++i)
    est.value += std::exp(log_weights[i] - m) / sw * h_values[i];
  double var = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double wbar = std::exp(log_weights[i] - m) / sw;
    const double dev = h_values[i] - est.value;
    var += wbar * wbar * dev * dev;
  }
  est.se = std::sqrt(var);
  return est;
}

Eigen::MatrixXd weighted_mean_path(const Batch& batch) {
  if (batch.paths.empty())
    throw std::invalid_argument("weighted_mean_path: empty batch");
  const std::size_t n = batch.paths.size();
  std::vector<double> wbar(n, 1.0 / static_cast<double>(n));
  if (!batch.weights.empty()) {
    double m = batch.weights[0].total;
    for (const LogWeight& w : batch.weights) m = std::max(m, w.total);
    double sw = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      wbar[j] = std::exp(batch.weights[j].total - m);
      sw += wbar[j];
    }
    for (double& w : wbar) w /= sw;
  }
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(batch.paths[0].states.rows(),
                                               batch.paths[0].states.cols());
  for (std::size_t j = 0; j < n; ++j) mean += wbar[j] * batch.paths[j].states;
  return mean;
}

}  // namespace bridgesim

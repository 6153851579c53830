#include "bridgesim.h"

#include <cstring>
#include <fstream>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>

#include "bridgesim/csv.hpp"
#include "bridgesim/driver.hpp"
#include "bridgesim/reference.hpp"
#include "bridgesim/rng.hpp"

using namespace bridgesim;

struct bs_model {
  DiffusionModel m;
};
struct bs_grid {
  GridPtr g;
};
struct bs_batch {
  Batch b;
};
struct bs_table {
  BackwardTable t;
};
struct bs_mh {
  MhResult r;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
int guarded(F&& body) {
  try {
    body();
    return BS_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return BS_ERR_CONFIG;
  } catch (const std::logic_error& e) {
    g_last_error = e.what();
    return BS_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BS_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BS_ERR_NUMERIC;
  } catch (...) {
    g_last_error = "unknown failure";
    return BS_ERR_NUMERIC;
  }
}

template <typename T, typename F>
T* guarded_new(F&& make) {
  T* out = nullptr;
  guarded([&] { out = make(); });
  return out;
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

Vec to_vec(const double* p, int d) {
  Vec x(d);
  for (int k = 0; k < d; ++k) x(k) = p[k];
  return x;
}

BridgeSpec make_spec(const bs_model* model, const double* u, const double* v, double T) {
  require(model != nullptr, "model is null");
  require(u != nullptr && v != nullptr, "endpoint arrays are null");
  return BridgeSpec{to_vec(u, model->m.d), to_vec(v, model->m.d), T};
}

struct ParsedOpts {
  ProposalKind proposal;
  AuxKind aux;
  SigmaPolicy policy;
  std::optional<double> t0;
  std::optional<CustomAux> custom;
};

ParsedOpts parse_opts(const DiffusionModel& model, const bs_sim_opts* opts) {
  require(opts != nullptr, "options struct is null");
  ParsedOpts p;
  const std::string prop = opts->proposal ? opts->proposal : "guided";
  const auto kind = parse_proposal(prop);
  require(kind.has_value(), "unknown proposal (expected delyon-hu-0, delyon-hu-1, residual, "
                            "lna-residual, guided, adjusted-v1 or adjusted-v2)");
  p.proposal = *kind;
  const std::string aux = opts->aux ? opts->aux : "simple51";
  const auto auxk = parse_aux(aux);
  require(auxk.has_value(), "unknown aux (expected simple51, lna, brownian or custom)");
  p.aux = *auxk;
  const std::string pol = opts->sigma_policy ? opts->sigma_policy : "constant-end";
  if (pol == "constant-end")
    p.policy = SigmaPolicy::kConstantEnd;
  else if (pol == "interpolate")
    p.policy = SigmaPolicy::kInterpolate;
  else
    throw std::invalid_argument("unknown sigma policy (expected constant-end or interpolate)");
  if (opts->t0 >= 0.0) p.t0 = opts->t0;
  if (p.aux == AuxKind::kCustom) {
    require(opts->aux_B != nullptr && opts->aux_beta != nullptr && opts->aux_sigma != nullptr,
            "aux 'custom' requires aux_B, aux_beta and aux_sigma arrays");
    require(opts->aux_sigma_cols >= 1 && opts->aux_sigma_cols <= 8,
            "aux_sigma_cols must lie in 1..8");
    const int d = model.d;
    CustomAux c;
    c.B = Mat(d, d);
    for (int r = 0; r < d; ++r)
      for (int cidx = 0; cidx < d; ++cidx) c.B(r, cidx) = opts->aux_B[r * d + cidx];
    c.beta = to_vec(opts->aux_beta, d);
    c.sigma = Mat(d, opts->aux_sigma_cols);
    for (int r = 0; r < d; ++r)
      for (int cidx = 0; cidx < opts->aux_sigma_cols; ++cidx)
        c.sigma(r, cidx) = opts->aux_sigma[r * opts->aux_sigma_cols + cidx];
    p.custom = std::move(c);
  }
  return p;
}

void copy_row_major(const Eigen::MatrixXd& m, double* out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r * m.cols() + c] = m(r, c);
}

std::ofstream open_for_write(const char* file) {
  require(file != nullptr, "output file path is null");
  std::ofstream os(file);
  if (!os) throw std::invalid_argument(std::string("cannot open '") + file + "' for writing");
  return os;
}

}  // namespace

extern "C" {

const char* bs_version(void) { return "0.1.0"; }

const char* bs_last_error(void) { return g_last_error.c_str(); }

bs_model* bs_model_ou(double alpha, double sigma) {
  return guarded_new<bs_model>([&] { return new bs_model{make_ou(alpha, sigma)}; });
}

bs_model* bs_model_sine(double sigma) {
  return guarded_new<bs_model>([&] { return new bs_model{make_sine(sigma)}; });
}

bs_model* bs_model_ou_sine(double sigma) {
  return guarded_new<bs_model>([&] { return new bs_model{make_ou_sine(sigma)}; });
}

bs_model* bs_model_custom(int d, int d_noise, bs_vec_fn drift, bs_vec_fn dispersion,
                          bs_vec_fn jacobian, void* ctx) {
  return guarded_new<bs_model>([&] {
    require(d >= 1 && d <= 8, "state dimension must lie in 1..8");
    require(d_noise >= 1 && d_noise <= 8, "noise dimension must lie in 1..8");
    require(drift != nullptr && dispersion != nullptr, "drift and dispersion are required");
    DiffusionModel m;
    m.d = d;
    m.d_noise = d_noise;
    m.drift = [drift, ctx, d](double t, const Vec& x) {
      Vec out(d);
      drift(t, x.data(), out.data(), ctx);
      return out;
    };
    m.dispersion = [dispersion, ctx, d, d_noise](double t, const Vec& x) {
      double buf[64];
      dispersion(t, x.data(), buf, ctx);
      Mat s(d, d_noise);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d_noise; ++c) s(r, c) = buf[r * d_noise + c];
      return s;
    };
    if (jacobian != nullptr) {
      m.drift_jacobian = [jacobian, ctx, d](double t, const Vec& x) {
        double buf[64];
        jacobian(t, x.data(), buf, ctx);
        Mat j(d, d);
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) j(r, c) = buf[r * d + c];
        return j;
      };
    }
    return new bs_model{std::move(m)};
  });
}

int bs_model_dim(const bs_model* model) { return model ? model->m.d : 0; }

void bs_model_free(bs_model* model) { delete model; }

bs_grid* bs_grid_uniform(double T, size_t n_steps) {
  return guarded_new<bs_grid>([&] {
    return new bs_grid{std::make_shared<const TimeGrid>(TimeGrid::uniform(T, n_steps))};
  });
}

size_t bs_grid_steps(const bs_grid* grid) { return grid ? grid->g->steps() : 0; }

double bs_grid_node(const bs_grid* grid, size_t i) { return grid ? grid->g->node(i) : 0.0; }

void bs_grid_free(bs_grid* grid) { delete grid; }

bs_sim_opts bs_sim_opts_default(void) {
  bs_sim_opts o;
  std::memset(&o, 0, sizeof o);
  o.proposal = "guided";
  o.aux = "simple51";
  o.sigma_policy = "constant-end";
  o.t0 = -1.0;
  o.seed = 0;
  o.n_paths = 1;
  o.threads = 1;
  return o;
}

int bs_simulate(const bs_model* model, const double* u, const double* v, double T,
                const bs_grid* grid, const bs_sim_opts* opts, bs_batch** out) {
  return guarded([&] {
    require(grid != nullptr, "grid is null");
    require(out != nullptr, "output pointer is null");
    const BridgeSpec spec = make_spec(model, u, v, T);
    const ParsedOpts p = parse_opts(model->m, opts);
    require(opts->n_paths >= 1, "n_paths must be positive");
    const SimPlan plan =
        make_plan(model->m, spec, grid->g, p.proposal, p.aux, p.policy, p.t0, p.custom);
    Batch batch = simulate_batch(plan, opts->n_paths, opts->seed,
                                 opts->threads < 1 ? 1 : opts->threads);
    *out = new bs_batch{std::move(batch)};
  });
}

int bs_flow(const bs_model* model, const double* u, const bs_grid* grid, double* out) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    require(u != nullptr && out != nullptr, "array pointer is null");
    require(grid != nullptr, "grid is null");
    const OdeTrajectory flow = solve_flow(model->m, to_vec(u, model->m.d), *grid->g);
    for (std::size_t i = 0; i < flow.y.size(); ++i)
      for (int k = 0; k < model->m.d; ++k) out[i * flow.y[i].size() + k] = flow.y[i](k);
  });
}

size_t bs_batch_size(const bs_batch* batch) { return batch ? batch->b.paths.size() : 0; }

size_t bs_batch_nodes(const bs_batch* batch) {
  return batch && !batch->b.paths.empty() ? batch->b.paths[0].nodes() : 0;
}

int bs_batch_dim(const bs_batch* batch) {
  return batch && !batch->b.paths.empty()
             ? static_cast<int>(batch->b.paths[0].states.cols())
             : 0;
}

int bs_batch_path(const bs_batch* batch, size_t j, double* out) {
  return guarded([&] {
    require(batch != nullptr && out != nullptr, "batch or output pointer is null");
    require(j < batch->b.paths.size(), "path index out of range");
    copy_row_major(batch->b.paths[j].states, out);
  });
}

int bs_batch_has_weights(const bs_batch* batch) {
  return batch && !batch->b.weights.empty() ? 1 : 0;
}

int bs_batch_weight_total(const bs_batch* batch, size_t j, double* out) {
  return guarded([&] {
    require(batch != nullptr && out != nullptr, "batch or output pointer is null");
    require(!batch->b.weights.empty(), "this batch carries no weights");
    require(j < batch->b.weights.size(), "path index out of range");
    *out = batch->b.weights[j].total;
  });
}

int bs_batch_weight_component(const bs_batch* batch, size_t j, const char* name, double* out) {
  return guarded([&] {
    require(batch != nullptr && out != nullptr && name != nullptr,
            "batch, name or output pointer is null");
    require(!batch->b.weights.empty(), "this batch carries no weights");
    require(j < batch->b.weights.size(), "path index out of range");
    const auto& comp = batch->b.weights[j].components;
    const auto it = comp.find(name);
    require(it != comp.end(), "this weight family does not carry the requested component");
    *out = it->second;
  });
}

int bs_batch_ess(const bs_batch* batch, double* out) {
  return guarded([&] {
    require(batch != nullptr && out != nullptr, "batch or output pointer is null");
    require(!batch->b.weights.empty(), "this batch carries no weights");
    std::vector<double> lw;
    lw.reserve(batch->b.weights.size());
    for (const LogWeight& w : batch->b.weights) lw.push_back(w.total);
    *out = ess(lw);
  });
}

int bs_batch_is_estimate(const bs_batch* batch, size_t node, int coord, int power,
                         double* value, double* se) {
  return guarded([&] {
    require(batch != nullptr && value != nullptr && se != nullptr,
            "batch or output pointer is null");
    require(!batch->b.weights.empty(), "this batch carries no weights");
    require(power == 1 || power == 2, "power must be 1 or 2");
    require(!batch->b.paths.empty() && node < batch->b.paths[0].nodes(),
            "node index out of range");
    require(coord >= 0 && coord < bs_batch_dim(batch), "coordinate out of range");
    std::vector<double> lw, h;
    lw.reserve(batch->b.paths.size());
    h.reserve(batch->b.paths.size());
    for (std::size_t j = 0; j < batch->b.paths.size(); ++j) {
      lw.push_back(batch->b.weights[j].total);
      const double x = batch->b.paths[j].states(static_cast<Eigen::Index>(node), coord);
      h.push_back(power == 1 ? x : x * x);
    }
    const IsEstimate est = is_estimate(lw, h);
    *value = est.value;
    *se = est.se;
  });
}

int bs_batch_mean_path(const bs_batch* batch, double* out) {
  return guarded([&] {
    require(batch != nullptr && out != nullptr, "batch or output pointer is null");
    copy_row_major(weighted_mean_path(batch->b), out);
  });
}

int bs_batch_write_paths_csv(const bs_batch* batch, const char* file) {
  return guarded([&] {
    require(batch != nullptr, "batch is null");
    std::ofstream os = open_for_write(file);
    write_paths_csv(os, batch->b.paths);
    require(static_cast<bool>(os), "write failed");
  });
}

int bs_batch_write_weights_csv(const bs_batch* batch, const char* file) {
  return guarded([&] {
    require(batch != nullptr, "batch is null");
    std::ofstream os = open_for_write(file);
    write_weights_csv(os, batch->b.paths.size(), batch->b.weights);
    require(static_cast<bool>(os), "write failed");
  });
}

void bs_batch_free(bs_batch* batch) { delete batch; }

int bs_table_build(const bs_model* model, const double* u, const double* v, double T,
                   const bs_grid* grid, const bs_sim_opts* opts, bs_table** out) {
  return guarded([&] {
    require(grid != nullptr, "grid is null");
    require(out != nullptr, "output pointer is null");
    const BridgeSpec spec = make_spec(model, u, v, T);
    ParsedOpts p = parse_opts(model->m, opts);
    // The table belongs to the guided construction irrespective of the
    // proposal named in opts.
    const SimPlan plan =
        make_plan(model->m, spec, grid->g, ProposalKind::kGuided, p.aux, p.policy, p.t0,
                  p.custom);
    *out = new bs_table{*plan.table};
  });
}

size_t bs_table_nodes(const bs_table* table) { return table ? table->t.K.size() : 0; }

int bs_table_row(const bs_table* table, size_t i, double* K, double* v) {
  return guarded([&] {
    require(table != nullptr, "table is null");
    require(i < table->t.K.size(), "node index out of range");
    const Eigen::Index d = table->t.v[i].size();
    if (K != nullptr)
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) K[r * d + c] = table->t.K[i](r, c);
    if (v != nullptr)
      for (Eigen::Index r = 0; r < d; ++r) v[r] = table->t.v[i](r);
  });
}

int bs_table_write_csv(const bs_table* table, const char* file) {
  return guarded([&] {
    require(table != nullptr, "table is null");
    std::ofstream os = open_for_write(file);
    write_table_csv(os, table->t);
    require(static_cast<bool>(os), "write failed");
  });
}

void bs_table_free(bs_table* table) { delete table; }

int bs_ou_bridge_mean(double alpha, double sigma, const double* u, const double* v, int d,
                      double T, double t, double* out) {
  return guarded([&] {
    require(u != nullptr && v != nullptr && out != nullptr, "array pointer is null");
    require(d >= 1 && d <= 8, "dimension must lie in 1..8");
    const BridgeSpec spec{to_vec(u, d), to_vec(v, d), T};
    const Vec m = ou_bridge_mean(alpha, sigma, spec, t);
    for (int k = 0; k < d; ++k) out[k] = m(k);
  });
}

int bs_ou_bridge_exact(double alpha, double sigma, const double* u, const double* v, int d,
                       const bs_grid* grid, uint64_t seed, size_t n_paths, bs_batch** out) {
  return guarded([&] {
    require(u != nullptr && v != nullptr && out != nullptr, "array pointer is null");
    require(d >= 1 && d <= 8, "dimension must lie in 1..8");
    require(grid != nullptr, "grid is null");
    require(n_paths >= 1, "n_paths must be positive");
    const BridgeSpec spec{to_vec(u, d), to_vec(v, d), grid->g->horizon()};
    Batch batch;
    batch.paths.reserve(n_paths);
    for (std::size_t j = 0; j < n_paths; ++j) {
      const WienerIncrements dw = sample_wiener(*grid->g, d, Rng::stream_seed(seed, j));
      batch.paths.push_back(ou_bridge_exact(alpha, sigma, spec, grid->g, dw));
    }
    *out = new bs_batch{std::move(batch)};
  });
}

int bs_rejection_oracle(const bs_model* model, const double* u, const double* v, double T,
                        const bs_grid* grid, double eps, size_t n_accept, uint64_t seed,
                        size_t max_attempts, int threads, bs_batch** out,
                        double* acceptance_rate) {
  return guarded([&] {
    require(grid != nullptr, "grid is null");
    require(out != nullptr, "output pointer is null");
    const BridgeSpec spec = make_spec(model, u, v, T);
    RejectionOracleResult res =
        rejection_oracle(model->m, spec, grid->g, eps, n_accept, seed, max_attempts,
                         threads < 1 ? 1 : threads);
    Batch batch;
    batch.paths = std::move(res.paths);
    if (acceptance_rate != nullptr) *acceptance_rate = res.acceptance_rate;
    *out = new bs_batch{std::move(batch)};
  });
}

int bs_mh_run(const bs_model* model, const double* u, const double* v, double T,
              const bs_grid* grid, const bs_sim_opts* opts, size_t n_iterations, size_t thin,
              bs_mh** out) {
  return guarded([&] {
    require(grid != nullptr, "grid is null");
    require(out != nullptr, "output pointer is null");
    const BridgeSpec spec = make_spec(model, u, v, T);
    const ParsedOpts p = parse_opts(model->m, opts);
    const SimPlan plan =
        make_plan(model->m, spec, grid->g, p.proposal, p.aux, p.policy, p.t0, p.custom);
    MhResult res = run_mh(plan, n_iterations, opts->seed, thin);
    *out = new bs_mh{std::move(res)};
  });
}

size_t bs_mh_iterations(const bs_mh* mh) { return mh ? mh->r.accepted.size() : 0; }

double bs_mh_acceptance_rate(const bs_mh* mh) { return mh ? mh->r.acceptance_rate : 0.0; }

int bs_mh_trace(const bs_mh* mh, double* log_weight, int* accepted) {
  return guarded([&] {
    require(mh != nullptr, "chain is null");
    for (std::size_t i = 0; i < mh->r.accepted.size(); ++i) {
      if (log_weight != nullptr) log_weight[i] = mh->r.chain_log_weight[i];
      if (accepted != nullptr) accepted[i] = mh->r.accepted[i];
    }
  });
}

size_t bs_mh_stored(const bs_mh* mh) { return mh ? mh->r.stored_paths.size() : 0; }

int bs_mh_stored_path(const bs_mh* mh, size_t k, size_t* iteration, double* out) {
  return guarded([&] {
    require(mh != nullptr, "chain is null");
    require(k < mh->r.stored_paths.size(), "snapshot index out of range");
    if (iteration != nullptr) *iteration = mh->r.stored_iterations[k];
    if (out != nullptr) copy_row_major(mh->r.stored_paths[k].states, out);
  });
}

void bs_mh_free(bs_mh* mh) { delete mh; }

}  // extern "C"

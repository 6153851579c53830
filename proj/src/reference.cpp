#include "bridgesim/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "bridgesim/rng.hpp"

namespace bridgesim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

DiffusionModel scalar_model(std::function<double(double)> b, std::function<double(double)> db,
                            double sigma) {
  DiffusionModel m;
  m.d = 1;
  m.d_noise = 1;
  m.drift = [b = std::move(b)](double, const Vec& x) {
    Vec out(1);
    out(0) = b(x(0));
    return out;
  };
  m.dispersion = [sigma](double, const Vec&) {
    Mat s(1, 1);
    s(0, 0) = sigma;
    return s;
  };
  m.drift_jacobian = [db = std::move(db)](double, const Vec& x) {
    Mat j(1, 1);
    j(0, 0) = db(x(0));
    return j;
  };
  return m;
}

}  // namespace

DiffusionModel make_ou(double alpha, double sigma) {
  return scalar_model([alpha](double x) { return -alpha * x; },
                      [alpha](double) { return -alpha; }, sigma);
}

DiffusionModel make_sine(double sigma) {
  return scalar_model([](double x) { return -std::sin(kTwoPi * x); },
                      [](double x) { return -kTwoPi * std::cos(kTwoPi * x); }, sigma);
}

DiffusionModel make_ou_sine(double sigma) {
  return scalar_model([](double x) { return -0.5 * x - std::sin(kTwoPi * x); },
                      [](double x) { return -0.5 - kTwoPi * std::cos(kTwoPi * x); }, sigma);
}

SamplePath ou_bridge_exact(double alpha, double sigma, const BridgeSpec& spec,
                           const GridPtr& grid, const WienerIncrements& dw) {
  if (alpha == 0.0)
    throw std::invalid_argument(
        "ou_bridge_exact: alpha must be nonzero (the driftless case is the pulling-only "
        "proposal)");
  const std::size_t N = grid->steps();
  const double T = grid->horizon();
  SamplePath path;
  path.grid = grid;
  path.states.resize(static_cast<Eigen::Index>(N) + 1, spec.u.size());
  path.set_state(0, spec.u);
  Vec x = spec.u;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double t = grid->node(i), h = grid->h(i), tau = T - t;
    const double gain = 2.0 * alpha / std::expm1(2.0 * alpha * tau);
    const Vec drift = -alpha * x + gain * Vec(std::exp(alpha * tau) * spec.v - x);
    x = x + h * drift + sigma * dw.increment(i);
    if (!x.allFinite())
      throw std::runtime_error("ou_bridge_exact: non-finite state at node " +
                               std::to_string(i + 1));
    path.set_state(i + 1, x);
  }
  path.set_state(N, spec.v);
  return path;
}

Vec ou_bridge_mean(double alpha, double sigma, const BridgeSpec& spec, double t) {
  (void)sigma;
  const double T = spec.T;
  if (t < 0.0 || t > T) throw std::invalid_argument("ou_bridge_mean: t outside [0, T]");
  if (alpha == 0.0) return Vec(spec.u + (t / T) * Vec(spec.v - spec.u));
  const double denom = std::sinh(alpha * T);
  return Vec((std::sinh(alpha * (T - t)) / denom) * spec.u +
             (std::sinh(alpha * t) / denom) * spec.v);
}

RejectionOracleResult rejection_oracle(const DiffusionModel& model, const BridgeSpec& spec,
                                       const GridPtr& grid, double eps, std::size_t n_accept,
                                       std::uint64_t seed, std::size_t max_attempts,
                                       int threads) {
  if (!(eps > 0.0)) throw std::invalid_argument("rejection_oracle: eps must be positive");
  if (n_accept == 0) throw std::invalid_argument("rejection_oracle: n_accept must be positive");
  if (threads < 1) threads = 1;
  if (max_attempts == 0) max_attempts = std::max<std::size_t>(1000000, 4000 * n_accept);

  const std::size_t N = grid->steps();
  const int d = static_cast<int>(spec.u.size());
  std::vector<double> sqrt_h(N);
  for (std::size_t i = 0; i < N; ++i) sqrt_h[i] = std::sqrt(grid->h(i));

  // One attempt: forward Euler from u; returns true when the endpoint lands
  // within eps of v.  The full trajectory is written into `states`.
  const auto attempt = [&](std::size_t index, Eigen::MatrixXd& states) {
    Rng rng = Rng::for_stream(seed, index);
    Vec x = spec.u;
    states.row(0) = x.transpose();
    Vec z(model.d_noise);
    for (std::size_t i = 0; i < N; ++i) {
      const double t = grid->node(i);
      for (int k = 0; k < model.d_noise; ++k) z(k) = sqrt_h[i] * rng.next_normal();
      x = x + grid->h(i) * model.drift(t, x) + model.dispersion(t, x) * z;
      if (!x.allFinite())
        throw std::runtime_error("rejection_oracle: non-finite state in attempt " +
                                 std::to_string(index));
      states.row(static_cast<Eigen::Index>(i) + 1) = x.transpose();
    }
    return (x - spec.v).cwiseAbs().maxCoeff() <= eps;
  };

  std::vector<std::pair<std::size_t, Eigen::MatrixXd>> accepted;  // (attempt index, states)
  std::size_t next_index = 0;

  while (next_index < max_attempts) {
    // Process a block of attempts; acceptance depends only on the attempt
    // index, so block and thread partitioning cannot change the result.
    const std::size_t want = n_accept - std::min(n_accept, accepted.size());
    const std::size_t guess = accepted.empty()
                                  ? std::max<std::size_t>(64, 8 * want)
                                  : (want * std::max<std::size_t>(next_index, 1)) /
                                            std::max<std::size_t>(accepted.size(), 1) +
                                        n_accept;
    const std::size_t block = std::min(std::max<std::size_t>(guess, 64),
                                       max_attempts - next_index);
    const std::size_t lo = next_index, hi = next_index + block;
    next_index = hi;

    if (threads == 1) {
      Eigen::MatrixXd states(static_cast<Eigen::Index>(N) + 1, d);
      for (std::size_t idx = lo; idx < hi; ++idx)
        if (attempt(idx, states)) accepted.emplace_back(idx, states);
    } else {
      std::mutex mu;
      std::exception_ptr first_error;
      std::vector<std::thread> pool;
      const std::size_t per = (block + threads - 1) / threads;
      for (int w = 0; w < threads; ++w) {
        const std::size_t a = lo + per * static_cast<std::size_t>(w);
        const std::size_t b = std::min(hi, a + per);
        if (a >= b) break;
        pool.emplace_back([&, a, b] {
          Eigen::MatrixXd states(static_cast<Eigen::Index>(N) + 1, d);
          try {
            for (std::size_t idx = a; idx < b; ++idx)
              if (attempt(idx, states)) {
                std::lock_guard<std::mutex> lk(mu);
                accepted.emplace_back(idx, states);
              }
          } catch (...) {
            std::lock_guard<std::mutex> lk(mu);
            if (!first_error) first_error = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      if (first_error) std::rethrow_exception(first_error);
    }

    std::sort(accepted.begin(), accepted.end(),
              [](const auto& p, const auto& q) { return p.first < q.first; });
    if (accepted.size() >= n_accept) break;
  }

  if (accepted.size() < n_accept) {
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "rejection_oracle: %zu of %zu attempts accepted; budget exhausted before "
                  "%zu paths; increase the endpoint tolerance eps",
                  accepted.size(), next_index, n_accept);
    throw std::runtime_error(buf);
  }

  RejectionOracleResult out;
  out.attempts = accepted[n_accept - 1].first + 1;
  out.acceptance_rate = static_cast<double>(n_accept) / static_cast<double>(out.attempts);
  out.paths.reserve(n_accept);
  for (std::size_t k = 0; k < n_accept; ++k) {
    SamplePath p;
    p.grid = grid;
    p.states = std::move(accepted[k].second);
    out.paths.push_back(std::move(p));
  }
  return out;
}

}  // namespace bridgesim

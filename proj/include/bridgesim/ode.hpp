#pragma once

#include <functional>
#include <vector>

#include "bridgesim/linalg.hpp"

namespace bridgesim {

struct OdeTrajectory {
  std::vector<double> t;  // strictly increasing grid
  std::vector<Vec> y;     // one state per node

  const Vec& front() const { return y.front(); }
  const Vec& back() const { return y.back(); }
};

using OdeRhs = std::function<Vec(double, const Vec&)>;

// Classical RK4 from t[0] forward over the given nodes.
OdeTrajectory rk4_solve(const OdeRhs& f, const Vec& y0, const std::vector<double>& grid);

// Same tableau integrated from the terminal node down to t[0]; the result is
// stored indexed by the forward grid. RK4 is explicit and of order >= 3 as the
// backward sweep requires.
OdeTrajectory rk_backward(const OdeRhs& f, const Vec& yT, const std::vector<double>& grid);

// Cubic Hermite interpolation of an ODE trajectory, with node slopes taken
// from the right-hand side; exact at the nodes, O(h^4) between them.
class OdeInterpolant {
 public:
  OdeInterpolant(OdeTrajectory traj, OdeRhs f);
  Vec operator()(double t) const;
  const OdeTrajectory& trajectory() const { return traj_; }

 private:
  OdeTrajectory traj_;
  std::vector<Vec> slope_;
};

}  // namespace bridgesim

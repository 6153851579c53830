#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bridgesim/auxiliary.hpp"
#include "bridgesim/sde.hpp"
#include "bridgesim/weights.hpp"

namespace bridgesim {

// All numeric fields are printed with 15 significant digits.
std::string format_number(double x);

// Header: path_id,t,x_0,...,x_{d-1}; one row per (path, node).
void write_paths_csv(std::ostream& os, const std::vector<SamplePath>& paths);

// Header: path_id,log_total,log_psi1,log_psi2,log_const,g_integral.
// Components a family does not carry are left empty; an empty `weights`
// vector writes every value column empty (weightless family).
void write_weights_csv(std::ostream& os, std::size_t n_paths,
                       const std::vector<LogWeight>& weights);

// Header: t,K_00,...,K_{d-1}{d-1},v_0,...,v_{d-1}; one row per node,
// K in row-major order.
void write_table_csv(std::ostream& os, const BackwardTable& table);

// Minimal reader for round-trip checks: rows of comma-separated cells.
std::vector<std::vector<std::string>> read_csv(std::istream& is);

}  // namespace bridgesim

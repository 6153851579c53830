#include "bridgesim/csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bridgesim {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

void write_paths_csv(std::ostream& os, const std::vector<SamplePath>& paths) {
  if (paths.empty()) throw std::invalid_argument("write_paths_csv: no paths");
  const Eigen::Index d = paths[0].states.cols();
  os << "path_id,t";
  for (Eigen::Index k = 0; k < d; ++k) os << ",x_" << k;
  os << "\n";
  for (std::size_t j = 0; j < paths.size(); ++j) {
    const SamplePath& p = paths[j];
    for (std::size_t i = 0; i < p.nodes(); ++i) {
      os << j << ',' << format_number(p.grid->node(i));
      for (Eigen::Index k = 0; k < d; ++k) os << ',' << format_number(p.states(i, k));
      os << '\n';
    }
  }
}

void write_weights_csv(std::ostream& os, std::size_t n_paths,
                       const std::vector<LogWeight>& weights) {
  if (!weights.empty() && weights.size() != n_paths)
    throw std::invalid_argument("write_weights_csv: weight count differs from path count");
  os << "path_id,log_total,log_psi1,log_psi2,log_const,g_integral\n";
  for (std::size_t j = 0; j < n_paths; ++j) {
    os << j;
    if (weights.empty()) {
      os << ",,,,,\n";
      continue;
    }
    const LogWeight& w = weights[j];
    os << ',' << format_number(w.total);
    for (const char* key : {"log_psi1", "log_psi2", "log_const", "g_integral"}) {
      const auto it = w.components.find(key);
      os << ',';
      if (it != w.components.end()) os << format_number(it->second);
    }
    os << '\n';
  }
}

void write_table_csv(std::ostream& os, const BackwardTable& table) {
  const Eigen::Index d = table.v.front().size();
  os << "t";
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) os << ",K_" << r << c;
  for (Eigen::Index r = 0; r < d; ++r) os << ",v_" << r;
  os << "\n";
  for (std::size_t i = 0; i < table.K.size(); ++i) {
    os << format_number(table.grid->node(i));
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) os << ',' << format_number(table.K[i](r, c));
    for (Eigen::Index r = 0; r < d; ++r) os << ',' << format_number(table.v[i](r));
    os << '\n';
  }
}

std::vector<std::vector<std::string>> read_csv(std::istream& is) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace bridgesim

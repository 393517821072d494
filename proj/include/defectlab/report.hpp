#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "defectlab/grassmann.hpp"

namespace defectlab {

struct ResidualEntry {
  std::string equation_id;
  double max_norm = 0.0;
  double mean_norm = 0.0;
};

/// Numerical evidence emitted by a verification operation: one row per
/// checked equation, optionally with a grid-refinement slope attached.
struct ResidualReport {
  std::vector<ResidualEntry> entries;
  std::vector<int> grid_sizes;
  std::optional<double> slope;

  double max_norm() const;
  double mean_norm() const;
  const ResidualEntry* find(const std::string& id) const;
  void add(std::string id, double max_n, double mean_n);

  nlohmann::json to_json() const;
};

/// Per-equation norms across refinement levels, with fitted slopes.
struct ConvergenceRow {
  std::string equation_id;
  std::vector<double> norms;
  double slope = 0.0;
};

struct ConvergenceTable {
  std::vector<int> grid_sizes;
  std::vector<ConvergenceRow> rows;

  void add_level(const ResidualReport& level_report);
  void finalize();  // fit slopes
  const ConvergenceRow* find(const std::string& id) const;
  double min_slope() const;

  nlohmann::json to_json() const;
};

/// log2 decay rate per halving; least-squares fit over consecutive pairs.
/// Norms at round-off (< floor) are treated as fully converged.
double convergence_slope(const std::vector<double>& norms,
                         double floor = 1e-14);

struct ChargeSample {
  double t = 0.0;
  GrassmannElement E, P, Q, Qbar;
  GrassmannElement E_mod, P_mod, Q_mod, Qbar_mod;
  bool boundary_warning = false;

  nlohmann::json to_json() const;
};

}  // namespace defectlab

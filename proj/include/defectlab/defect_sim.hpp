#pragma once

#include <map>
#include <string>

#include "defectlab/super_liouville.hpp"

namespace defectlab {

enum class SimModel { None, BosonicType1, BosonicType2, SuperType2 };

SimModel sim_model_from_string(const std::string& s);
std::string to_string(SimModel m);

/// Two half-line lattices glued at x = 0; absorbing outflow at x = +-L.
struct SimConfig {
  SimModel model = SimModel::BosonicType2;
  double L = 8.0;
  int n = 401;          // points per side, including the shared x = 0 node
  double dt = 0.0;      // 0: pick cfl * dx
  double T = 4.0;
  DefectParams params;
  std::string seed_spec = "packet:a=0.3,x0=-3,s=0.7";
  double tolerance = 1e-6;
  double cfl = 0.5;
  int generators = 6;   // Grassmann context size in super mode
  int sample_every = 4;
  bool disable_defect_terms = false;  // negative control for the monitors
  bool perturb_closure = false;       // fault injection: sign error at x=0

  void validate() const;
};

struct MonitorSeries {
  std::vector<ChargeSample> charges;
  BoundaryTrace trace;
  double final_time = 0.0;
  int steps = 0;
};

MonitorSeries sim_run(const SimConfig& cfg);

struct DriftRow {
  std::string charge;
  double drift = 0.0;       // max_t |Q(t) - Q(0)| / scale
  double scale = 0.0;
};

struct DriftSummary {
  std::vector<DriftRow> rows;
  double modified_max_drift = 0.0;
  double canonical_over_modified = 0.0;  // drift ratio E/P sector
  bool conserved_pass = false;           // modified drift <= tolerance
  bool ratio_pass = false;               // canonical drifts >= 1e3 x modified
  nlohmann::json to_json() const;
};

DriftSummary drift_report(const MonitorSeries& series, const SimConfig& cfg);

/// Monitor-side residual of the defect conditions along the recorded trace.
ResidualReport sim_closure_residual(const MonitorSeries& series,
                                    const SimConfig& cfg);

}  // namespace defectlab

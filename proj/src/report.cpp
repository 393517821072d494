#include "defectlab/report.hpp"

#include <algorithm>
#include <cmath>

namespace defectlab {

double ResidualReport::max_norm() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_norm);
  return m;
}

double ResidualReport::mean_norm() const {
  if (entries.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : entries) s += e.mean_norm;
  return s / static_cast<double>(entries.size());
}

const ResidualEntry* ResidualReport::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.equation_id == id) return &e;
  return nullptr;
}

void ResidualReport::add(std::string id, double max_n, double mean_n) {
  entries.push_back({std::move(id), max_n, mean_n});
}

nlohmann::json ResidualReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries)
    rows.push_back({{"equation_id", e.equation_id},
                    {"max_norm", e.max_norm},
                    {"mean_norm", e.mean_norm}});
  nlohmann::json j = {{"entries", rows}, {"grid_sizes", grid_sizes}};
  if (slope) j["slope"] = *slope;
  return j;
}

double convergence_slope(const std::vector<double>& norms, double floor) {
  if (norms.size() < 2) return 0.0;
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k + 1 < norms.size(); ++k) {
    const double a = norms[k], b = norms[k + 1];
    if (a < floor && b < floor) continue;  // both at round-off
    if (b < floor) {
      sum += 10.0;  // dropped below measurable error
      ++count;
      continue;
    }
    sum += std::log2(a / b);
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 10.0;
}

void ConvergenceTable::add_level(const ResidualReport& level_report) {
  for (const auto& e : level_report.entries) {
    ConvergenceRow* row = nullptr;
    for (auto& r : rows)
      if (r.equation_id == e.equation_id) row = &r;
    if (!row) {
      rows.push_back({e.equation_id, {}, 0.0});
      row = &rows.back();
    }
    row->norms.push_back(e.max_norm);
  }
}

void ConvergenceTable::finalize() {
  for (auto& r : rows) r.slope = convergence_slope(r.norms);
}

const ConvergenceRow* ConvergenceTable::find(const std::string& id) const {
  for (const auto& r : rows)
    if (r.equation_id == id) return &r;
  return nullptr;
}

double ConvergenceTable::min_slope() const {
  double m = 1e300;
  for (const auto& r : rows) m = std::min(m, r.slope);
  return rows.empty() ? 0.0 : m;
}

nlohmann::json ConvergenceTable::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"equation_id", r.equation_id},
                      {"norms", r.norms},
                      {"slope", r.slope}});
  return {{"grid_sizes", grid_sizes}, {"rows", rows_j}};
}

nlohmann::json ChargeSample::to_json() const {
  return {{"t", t},
          {"E", E.to_json()},
          {"P", P.to_json()},
          {"Q", Q.to_json()},
          {"Qbar", Qbar.to_json()},
          {"E_mod", E_mod.to_json()},
          {"P_mod", P_mod.to_json()},
          {"Q_mod", Q_mod.to_json()},
          {"Qbar_mod", Qbar_mod.to_json()},
          {"boundary_warning", boundary_warning}};
}

}  // namespace defectlab

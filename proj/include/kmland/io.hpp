#pragma once

// JSON and CSV encodings shared by the command-line tool and downstream plotting.
// Indices are 1-based in every serialized form.

#include "kmland/classify.hpp"
#include "kmland/geometry.hpp"
#include "kmland/lloyd.hpp"
#include "kmland/model.hpp"
#include "kmland/objective.hpp"
#include "kmland/verify.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace kmland::io {

using json = nlohmann::json;

/// Malformed or unknown configuration content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

/// Shortest decimal that round-trips.
inline std::string num(double x) {
  if (x == 0.0) return "0";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline json to_json(const Matrix& cols_as_points) {
  json out = json::array();
  for (Eigen::Index c = 0; c < cols_as_points.cols(); ++c) {
    json p = json::array();
    for (Eigen::Index t = 0; t < cols_as_points.rows(); ++t) p.push_back(cols_as_points(t, c));
    out.push_back(p);
  }
  return out;
}

inline Matrix points_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of points");
  const auto first = j.front().is_array() ? j.front().size() : 1;
  if (first == 0) throw ConfigError(where + ": points must have at least one coordinate");
  Matrix out(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    const json& p = j[c];
    if (p.is_number()) {
      if (first != 1) throw ConfigError(where + ": inconsistent point dimensions");
      out(0, static_cast<Eigen::Index>(c)) = p.get<double>();
      continue;
    }
    if (!p.is_array() || p.size() != first) throw ConfigError(where + ": inconsistent point dimensions");
    for (std::size_t t = 0; t < first; ++t) {
      if (!p[t].is_number()) throw ConfigError(where + ": coordinates must be numbers");
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = p[t].get<double>();
    }
  }
  return out;
}

inline json to_json(const MixtureModel& model) {
  json j{{"kind", to_string(model.kind())}, {"centers", to_json(model.centers())}, {"scale", model.scale()}};
  if (model.allows_overlap()) j["allow_overlap"] = true;
  return j;
}

inline MixtureModel model_from_json(const json& j) {
  reject_unknown_keys(j, {"kind", "centers", "scale", "allow_overlap"}, "model");
  if (!j.contains("kind") || !j.contains("centers") || !j.contains("scale"))
    throw ConfigError("model: 'kind', 'centers' and 'scale' are required");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "ball" && kind != "gaussian") throw ConfigError("model: kind must be 'ball' or 'gaussian'");
  if (!j.at("scale").is_number()) throw ConfigError("model: scale must be a number");
  const bool overlap = j.value("allow_overlap", false);
  return MixtureModel(kind == "ball" ? MixtureKind::Ball : MixtureKind::Gaussian, points_from_json(j.at("centers"), "model.centers"),
                      j.at("scale").get<double>(), overlap);
}

inline json estimator_to_json(const Estimator& est) {
  json j{{"name", estimator_name(est)}};
  if (const auto* q = std::get_if<Quadrature1D>(&est)) j["nodes"] = q->nodes;
  if (const auto* mc = std::get_if<MonteCarlo>(&est)) {
    j["n"] = mc->n;
    j["seed"] = mc->seed;
  }
  return j;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_sample_csv(std::ostream& os, const SampleSet& s) {
  os << "label";
  for (int t = 0; t < s.dim(); ++t) os << ",x" << t + 1;
  os << '\n';
  for (std::size_t p = 0; p < s.size(); ++p) {
    os << (s.labels.empty() ? 0 : s.labels[p] + 1);
    for (int t = 0; t < s.dim(); ++t) os << ',' << num(s.points(t, static_cast<Eigen::Index>(p)));
    os << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
  const int d = log.iterates.front().dim();
  os << "iter,center_index";
  for (int t = 0; t < d; ++t) os << ",x" << t + 1;
  os << ",objective\n";
  for (std::size_t it = 0; it < log.iterates.size(); ++it) {
    const Solution& s = log.iterates[it];
    for (int i = 0; i < s.m(); ++i) {
      os << it << ',' << i + 1;
      for (int t = 0; t < d; ++t) os << ',' << num(s.centers(t, i));
      os << ',' << num(log.objective[it]) << '\n';
    }
  }
}

inline void write_model_csv(std::ostream& os, const MixtureModel& model) {
  os << "component,kind";
  for (int t = 0; t < model.dim(); ++t) os << ",x" << t + 1;
  os << ",scale\n";
  for (int s = 0; s < model.k(); ++s) {
    os << s + 1 << ',' << to_string(model.kind());
    for (int t = 0; t < model.dim(); ++t) os << ',' << num(model.centers()(t, s));
    os << ',' << num(model.scale()) << '\n';
  }
}

inline void write_slice_csv(std::ostream& os, const DirectionalSlice& sl) {
  os << "t,value,stderr\n";
  for (std::size_t q = 0; q < sl.t.size(); ++q) os << num(sl.t[q]) << ',' << num(sl.values[q]) << ',' << num(sl.std_errs[q]) << '\n';
}

inline std::string index_set(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t q = 0; q < xs.size(); ++q) out += (q ? ";" : "") + std::to_string(xs[q] + 1);
  return out;
}

inline void write_blocks_csv(std::ostream& os, const AssociationReport& rep) {
  os << "kind,fitted,true,error,bound\n";
  for (const Block& b : rep.blocks)
    os << to_string(b.kind) << ',' << index_set(b.fitted) << ',' << index_set(b.truth) << ',' << num(b.error) << ','
       << num(b.bound) << '\n';
}

inline void write_certificate_csv(std::ostream& os, const Certificate& c) {
  os << "name,measured,expected,tolerance,relation,passed,informational\n";
  for (const CheckDetail& d : c.details) {
    std::string name = d.name;
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char ch : name) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      name = q + "\"";
    }
    os << name << ',' << num(d.measured) << ',' << num(d.expected) << ',' << num(d.tolerance) << ',' << d.relation << ','
       << (d.passed ? 1 : 0) << ',' << (d.informational ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSON

inline json indices(const std::vector<int>& xs) {
  json out = json::array();
  for (int x : xs) out.push_back(x + 1);
  return out;
}

inline json to_json(const SnrGateReport& g) {
  json conds = json::array();
  for (const auto& c : g.conditions) conds.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"ok", c.ok}});
  json j{{"status", to_string(g.status)},
         {"separation",
          {{"delta_max", g.separation.delta_max},
           {"delta_min", g.separation.delta_min},
           {"eta_max", g.separation.eta_max},
           {"eta_min", g.separation.eta_min}}},
         {"conditions", conds}};
  if (g.truncation) j["truncation"] = {{"t", g.truncation->t}, {"phi", g.truncation->phi}, {"radius", g.truncation->radius}};
  return j;
}

inline json to_json(const AssociationReport& rep) {
  json blocks = json::array();
  for (const Block& b : rep.blocks)
    blocks.push_back({{"kind", to_string(b.kind)}, {"fitted", indices(b.fitted)}, {"true", indices(b.truth)}, {"error", b.error}, {"bound", b.bound}});
  json thr{{"tau_empty", rep.tau_empty}, {"tau_in", rep.tau_in}, {"c", rep.c}};
  if (rep.t) thr["t"] = *rep.t;
  json j{{"blocks", blocks},
         {"valid_partition", rep.valid_partition},
         {"violations", rep.violations},
         {"thresholds", thr},
         {"cell_mass", std::vector<double>(rep.internals.cell_mass.data(), rep.internals.cell_mass.data() + rep.internals.cell_mass.size())}};
  if (!rep.gate.conditions.empty()) {
    j["gate"] = to_json(rep.gate);
    j["outside_guaranteed_regime"] = !rep.gate.guaranteed();
  }
  return j;
}

inline json to_json(const CellStats& st) {
  json mass = json::array();
  json se = json::array();
  json com = json::array();
  for (int i = 0; i < st.m(); ++i) {
    json row = json::array();
    json row_se = json::array();
    json row_c = json::array();
    for (int s = 0; s < st.k(); ++s) {
      row.push_back(st.mass(i, s));
      row_se.push_back(st.mass_stderr(i, s));
      if (st.mass(i, s) > 0.0) {
        const Vector c = st.center_of_mass(i, s);
        row_c.push_back(std::vector<double>(c.data(), c.data() + c.size()));
      } else {
        row_c.push_back(nullptr);
      }
    }
    mass.push_back(row);
    se.push_back(row_se);
    com.push_back(row_c);
  }
  return {{"mass", mass},
          {"mass_stderr", se},
          {"com", com},
          {"total_mass", std::vector<double>(st.total_mass.data(), st.total_mass.data() + st.total_mass.size())},
          {"monte_carlo", st.monte_carlo}};
}

inline json to_json(const FamilyBoundReport& rep) {
  json entries = json::array();
  for (const auto& e : rep.entries)
    entries.push_back({{"i", e.i + 1},
                       {"j", e.j + 1},
                       {"s", e.s + 1},
                       {"d_ij", e.q.d_ij},
                       {"D_ijs", e.q.D_ijs},
                       {"rho", e.q.rho},
                       {"rho_stderr", e.q.rho_stderr},
                       {"d_rho", e.d_rho},
                       {"D2_rho_over_d", e.D2_rho_over_d},
                       {"violates_first", e.violates_first},
                       {"violates_second", e.violates_second},
                       {"rho_exceeds_lambda", e.rho_exceeds_lambda}});
  return {{"entries", entries}, {"lambda", rep.lambda}, {"threshold", rep.threshold}, {"violations", rep.violations}};
}

inline json to_json(const TrajectoryLog& log) {
  return {{"converged", log.converged},
          {"iterations", log.iterations},
          {"final_objective", log.objective.back()},
          {"final_objective_stderr", log.objective_stderr.back()},
          {"final_centers", to_json(log.final_solution().centers)},
          {"max_final_movement", log.moved.empty() ? 0.0 : log.moved.back()}};
}

inline json to_json(const Certificate& c) {
  json details = json::array();
  for (const auto& d : c.details)
    details.push_back({{"name", d.name},
                       {"measured", d.measured},
                       {"expected", d.expected},
                       {"tolerance", d.tolerance},
                       {"relation", d.relation},
                       {"passed", d.passed},
                       {"informational", d.informational}});
  return {{"name", c.name},
          {"passed", c.passed()},
          {"status", to_string(c.status)},
          {"reason", c.reason},
          {"details", details},
          {"artifacts", c.artifacts}};
}

/// Summary written by `verify`: no timestamps or timings, so equal seeds give equal bytes.
inline json verify_summary(std::uint64_t seed, const std::vector<Certificate>& certs) {
  json counts{{"passed", 0}, {"failed", 0}, {"skipped", 0}, {"inconclusive", 0}};
  json list = json::array();
  for (const auto& c : certs) {
    counts[to_string(c.status)] = counts[to_string(c.status)].get<int>() + 1;
    list.push_back(to_json(c));
  }
  const bool ok = counts["failed"].get<int>() == 0 && counts["inconclusive"].get<int>() == 0;
  return {{"seed", seed}, {"passed", ok}, {"counts", counts}, {"certificates", list}};
}

}  // namespace kmland::io

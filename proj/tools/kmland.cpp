// Command-line front end: sampling, Lloyd runs, classification, landscape
// analysis, certificates and restart surveys with CSV/JSON outputs.
//
// Exit codes: 0 success, 1 runtime error or failed certificate, 2 configuration error.

#include "kmland/io.hpp"
#include "kmland/kmland.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using kmland::io::ConfigError;
using kmland::io::json;

namespace {

struct Params {
  std::string config;
  std::string model;
  std::optional<std::uint64_t> seed;
  std::string out;

  std::size_t n = 1000;
  std::string init = "truth";
  std::string centers;
  int m = 0;
  std::string estimator;
  std::size_t mc_n = 100000;
  std::size_t nodes = 20001;
  int max_iters = 500;
  std::optional<double> tol;
  std::string empty_cell = "reseed";
  std::size_t empirical_n = 0;

  std::optional<double> tau_empty;
  double tau_in = 0.5;
  double c = 3.0;
  double t = 3.0;

  std::string direction;
  double t_max = 0.01;
  int t_steps = 21;
  std::size_t face_n = 20000;

  bool all = false;
  std::size_t aligned_n = 1000000;

  int restarts = 200;
  int workers = 0;
  bool no_trajectories = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": invalid JSON (" + e.what() + ")");
  }
}

/// Inline JSON object, or a path to a JSON file.
json json_arg(const std::string& value, const std::string& what) {
  const auto first = value.find_first_not_of(" \t\n");
  if (first != std::string::npos && (value[first] == '{' || value[first] == '[')) return parse_json(value, what);
  return parse_json(read_file(value), what);
}

/// Applies config-file keys to options that were not given on the command line.
void apply_config(CLI::App& sub, const std::string& path) {
  const json cfg = json_arg(path, "config");
  if (!cfg.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "task") {
      if (!value.is_string() || value.get<std::string>() != sub.get_name())
        throw ConfigError("config: task '" + value.dump() + "' does not match subcommand '" + sub.get_name() + "'");
      continue;
    }
    std::string name = key;
    for (char& ch : name)
      if (ch == '_') ch = '-';
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") throw ConfigError("config: unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    std::string text;
    if (value.is_string())
      text = value.get<std::string>();
    else if (value.is_boolean())
      text = value.get<bool>() ? "true" : "false";
    else
      text = value.dump();
    opt->add_result(text);
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw ConfigError("config: invalid value for '" + key + "': " + e.what());
    }
  }
}

fs::path output_dir(const Params& p) {
  std::string dir = p.out;
  if (dir.empty()) {
    const char* env = std::getenv("KMLAND_OUT_DIR");
    dir = env && *env ? env : "kmland_out";
  }
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kmland::Error("cannot write '" + path.string() + "'");
  out << text;
}

template <class Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_text(path, os.str());
}

std::uint64_t require_seed(const Params& p, const std::string& why) {
  if (!p.seed) throw ConfigError("--seed is required for " + why);
  return *p.seed;
}

kmland::MixtureModel load_model(const Params& p) {
  if (p.model.empty()) throw ConfigError("--model is required");
  try {
    return kmland::io::model_from_json(json_arg(p.model, "model"));
  } catch (const kmland::InvalidModel& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

bool is_1d_ball(const kmland::MixtureModel& model) {
  return model.kind() == kmland::MixtureKind::Ball && model.dim() == 1;
}

kmland::Estimator make_estimator(const Params& p, const kmland::MixtureModel& model) {
  const std::string name = p.estimator.empty() ? (is_1d_ball(model) ? "analytic1d" : "mc") : p.estimator;
  if (name == "analytic1d") return kmland::Analytic1D{};
  if (name == "quadrature1d") return kmland::Quadrature1D{p.nodes};
  if (name == "mc") return kmland::MonteCarlo{p.mc_n, require_seed(p, "the mc estimator")};
  throw ConfigError("unknown estimator '" + name + "' (analytic1d, quadrature1d, mc)");
}

/// Estimator able to produce cell statistics (analytic1d or mc).
kmland::Population cell_population(const kmland::Population& pop, const Params& p) {
  if (!std::holds_alternative<kmland::Quadrature1D>(pop.estimator())) return pop;
  return kmland::Population(pop.model(), kmland::MonteCarlo{p.mc_n, require_seed(p, "cell statistics")});
}

kmland::Solution spurious_solution(const kmland::MixtureModel& model) {
  if (!is_1d_ball(model) || model.k() != 3) throw ConfigError("--init spurious requires a 1D ball model with k = 3");
  std::vector<double> c(model.centers().data(), model.centers().data() + 3);
  std::sort(c.begin(), c.end());
  const double r = model.scale();
  return kmland::Solution::from_1d({c[0] - r / 2.0, c[0] + r / 2.0, 0.5 * (c[1] + c[2])});
}

kmland::Solution given_solution(const Params& p, const kmland::MixtureModel& model) {
  if (p.centers.empty()) throw ConfigError("--centers is required with --init given");
  const kmland::Matrix c = kmland::io::points_from_json(json_arg(p.centers, "centers"), "centers");
  if (c.rows() != model.dim()) throw ConfigError("centers: dimension does not match the model");
  return kmland::Solution(c);
}

kmland::LloydConfig lloyd_config(const Params& p, const kmland::MixtureModel& model, std::uint64_t restart_seed) {
  kmland::LloydConfig cfg;
  cfg.m = p.m > 0 ? p.m : model.k();
  cfg.max_iters = p.max_iters;
  cfg.tol = p.tol;
  if (p.empty_cell == "error")
    cfg.empty_cell_policy = kmland::EmptyCellPolicy::Error;
  else if (p.empty_cell == "reseed")
    cfg.empty_cell_policy = kmland::EmptyCellPolicy::ReseedFarthest;
  else if (p.empty_cell == "keep")
    cfg.empty_cell_policy = kmland::EmptyCellPolicy::Keep;
  else
    throw ConfigError("unknown empty-cell policy '" + p.empty_cell + "' (error, reseed, keep)");
  if (p.init == "truth")
    cfg.init = kmland::InitGiven{kmland::constructions::truth(model)};
  else if (p.init == "spurious")
    cfg.init = kmland::InitGiven{spurious_solution(model)};
  else if (p.init == "given")
    cfg.init = kmland::InitGiven{given_solution(p, model)};
  else if (p.init == "random")
    cfg.init = kmland::InitRandomFromData{restart_seed};
  else if (p.init == "kmeanspp")
    cfg.init = kmland::InitKMeansPP{restart_seed};
  else if (p.init == "box")
    cfg.init = kmland::InitRandomBox{restart_seed, {}, {}};
  else
    throw ConfigError("unknown init '" + p.init + "' (truth, spurious, given, random, kmeanspp, box)");
  return cfg;
}

bool stochastic_init(const Params& p) { return p.init == "random" || p.init == "kmeanspp" || p.init == "box"; }

kmland::Solution fixed_solution(const Params& p, const kmland::MixtureModel& model) {
  if (p.init == "truth") return kmland::constructions::truth(model);
  if (p.init == "spurious") return spurious_solution(model);
  if (p.init == "given") return given_solution(p, model);
  throw ConfigError("--init must be truth, spurious or given for this task");
}

kmland::Thresholds thresholds(const Params& p) {
  kmland::Thresholds th;
  th.tau_empty = p.tau_empty;
  th.tau_in = p.tau_in;
  th.c = p.c;
  th.t = p.t;
  return th;
}

// ---------------------------------------------------------------------------

int cmd_sample(const Params& p) {
  const auto model = load_model(p);
  const auto seed = require_seed(p, "sample");
  const auto data = kmland::sample(model, p.n, seed);
  const fs::path out = output_dir(p);
  write_stream(out / "samples.csv", [&](std::ostream& os) { kmland::io::write_sample_csv(os, data); });
  std::cout << "sample: " << data.size() << " points (d=" << data.dim() << ", k=" << model.k() << ") -> "
            << (out / "samples.csv").string() << "\n";
  return 0;
}

/// trajectory.csv, model.csv and meta.json for one run. Only d = 2 runs are marked as plottable.
void emit_figure_data(const fs::path& dir, const kmland::TrajectoryLog& log, const kmland::MixtureModel& model,
                      const kmland::AssociationReport& rep, json meta) {
  fs::create_directories(dir);
  write_stream(dir / "trajectory.csv", [&](std::ostream& os) { kmland::io::write_trajectory_csv(os, log); });
  write_stream(dir / "model.csv", [&](std::ostream& os) { kmland::io::write_model_csv(os, model); });
  const bool plottable = model.dim() == 2;
  meta["figure"] = plottable ? json("trajectory2d") : json(nullptr);
  meta["tables_only"] = !plottable;
  meta["dimension"] = model.dim();
  meta["run"] = kmland::io::to_json(log);
  meta["classification"] = kmland::io::to_json(rep);
  meta["signature"] = kmland::signature(rep);
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

int cmd_lloyd(const Params& p) {
  const auto model = load_model(p);
  if (stochastic_init(p)) require_seed(p, "random initializations");
  const std::uint64_t seed = p.seed.value_or(0);
  const auto cfg = lloyd_config(p, model, kmland::substream_seed(seed, 0));
  const fs::path out = output_dir(p);
  json meta{{"model", kmland::io::to_json(model)}, {"init", p.init}};
  if (p.seed) meta["seed"] = *p.seed;

  kmland::TrajectoryLog log;
  std::optional<kmland::Population> pop;
  if (p.empirical_n > 0) {
    const auto data = kmland::sample(model, p.empirical_n, kmland::substream_seed(require_seed(p, "empirical Lloyd"), 1));
    log = kmland::run_lloyd(cfg, data);
    meta["target"] = {{"kind", "empirical"}, {"n", p.empirical_n}};
    pop.emplace(model, is_1d_ball(model) ? kmland::Estimator{kmland::Analytic1D{}}
                                         : kmland::Estimator{kmland::MonteCarlo{p.mc_n, seed}});
  } else {
    pop.emplace(model, make_estimator(p, model));
    log = kmland::run_lloyd(cfg, *pop);
    meta["target"] = {{"kind", "population"}, {"estimator", kmland::io::estimator_to_json(pop->estimator())}};
  }
  const auto cls_pop = cell_population(*pop, p);
  const auto rep = kmland::classify(log.final_solution(), cls_pop, thresholds(p));
  emit_figure_data(out, log, model, rep, meta);
  double max_moved = 0.0;
  for (double mv : log.moved) max_moved = std::max(max_moved, mv);
  std::cout << "lloyd: " << (log.converged ? "converged" : "not converged") << " after " << log.iterations
            << " iterations, objective " << kmland::io::num(log.objective.back()) << ", largest step "
            << kmland::io::num(max_moved) << ", classes " << kmland::signature(rep) << "\n";
  return 0;
}

int cmd_classify(const Params& p) {
  const auto model = load_model(p);
  const auto sol = fixed_solution(p, model);
  const kmland::Population pop(model, make_estimator(p, model));
  const auto rep = kmland::classify(sol, cell_population(pop, p), thresholds(p));
  const fs::path out = output_dir(p);
  json j = kmland::io::to_json(rep);
  j["signature"] = kmland::signature(rep);
  write_text(out / "classification.json", j.dump(2) + "\n");
  write_stream(out / "blocks.csv", [&](std::ostream& os) { kmland::io::write_blocks_csv(os, rep); });
  std::cout << "classify: " << kmland::signature(rep) << (rep.valid_partition ? "" : " (invalid partition)") << "\n";
  return 0;
}

int cmd_analyze(const Params& p) {
  const auto model = load_model(p);
  const auto sol = fixed_solution(p, model);
  const kmland::Population pop(model, make_estimator(p, model));
  const auto cpop = cell_population(pop, p);
  const auto st = kmland::cell_stats(sol, cpop);
  kmland::BoundaryOptions bo;
  bo.n = p.face_n;
  bo.seed = p.seed.value_or(0);
  bo.truncation_t = p.t;
  const auto fb = kmland::family_bound_check(sol, model, bo, std::nullopt, p.c);
  const auto vd = kmland::build_voronoi(sol);

  kmland::Direction v = kmland::Direction::Zero(sol.dim(), sol.m());
  if (!p.direction.empty()) {
    v = kmland::io::points_from_json(json_arg(p.direction, "direction"), "direction");
    if (v.rows() != sol.dim() || v.cols() != sol.m()) throw ConfigError("direction: expected one vector per fitted center");
  } else {
    v(0, 0) = 1.0;
  }
  if (p.t_steps < 2) throw ConfigError("--t-steps must be >= 2");
  std::vector<double> grid;
  for (int q = 0; q < p.t_steps; ++q) grid.push_back(-p.t_max + 2.0 * p.t_max * q / (p.t_steps - 1));
  const auto slice = kmland::directional_slice(sol, pop, v, grid);

  json adjacency = json::array();
  for (const auto& [i, j] : vd.adjacency) adjacency.push_back({i + 1, j + 1});
  json j{{"model", kmland::io::to_json(model)},
         {"centers", kmland::io::to_json(sol.centers)},
         {"estimator", kmland::io::estimator_to_json(pop.estimator())},
         {"adjacency", adjacency},
         {"cell_stats", kmland::io::to_json(st)},
         {"family_bounds", kmland::io::to_json(fb)}};
  bool distinct = true;
  try {
    kmland::require_distinct(sol);
  } catch (const kmland::DegenerateSolution&) {
    distinct = false;
  }
  if (distinct) {
    const auto dd = kmland::directional_derivative(sol, pop, v);
    j["directional_derivative"] = {{"analytic", dd.value},
                                   {"stderr", dd.std_err},
                                   {"finite_difference", kmland::finite_diff_derivative(sol, pop, v)}};
  }
  if (model.k() >= 2) j["gate"] = kmland::io::to_json(kmland::snr_gate(model, p.c, p.t));
  const fs::path out = output_dir(p);
  write_text(out / "analysis.json", j.dump(2) + "\n");
  write_stream(out / "slice.csv", [&](std::ostream& os) { kmland::io::write_slice_csv(os, slice); });
  std::cout << "analyze: " << vd.adjacency.size() << " adjacent pairs, max d*rho " << kmland::io::num(fb.max_d_rho())
            << " (k/2 = " << kmland::io::num(fb.threshold) << "), " << fb.violations.size() << " violations\n";
  return 0;
}

int cmd_verify(const Params& p) {
  if (!p.all) throw ConfigError("verify: pass --all");
  const auto seed = require_seed(p, "verify");
  auto certs = kmland::verify_all({seed, p.aligned_n});
  const fs::path out = output_dir(p);
  fs::create_directories(out / "certificates");
  for (auto& c : certs) {
    const std::string rel = "certificates/" + c.name + ".csv";
    c.artifacts.push_back(rel);
    write_stream(out / rel, [&](std::ostream& os) { kmland::io::write_certificate_csv(os, c); });
    std::cout << "verify: " << c.name << " " << kmland::to_string(c.status) << (c.reason.empty() ? "" : " (" + c.reason + ")")
              << "\n";
  }
  const json summary = kmland::io::verify_summary(seed, certs);
  write_text(out / "verify_summary.json", summary.dump(2) + "\n");
  const json& counts = summary["counts"];
  std::cout << "verify: " << counts["passed"] << " passed, " << counts["failed"] << " failed, " << counts["skipped"]
            << " skipped, " << counts["inconclusive"] << " inconclusive\n";
  const bool ok = summary["passed"].get<bool>();
  return ok ? 0 : 1;
}

struct RestartResult {
  kmland::TrajectoryLog log;
  std::string signature;
  bool valid = false;
  bool truth = false;
  std::string error;
};

int cmd_survey(const Params& p) {
  const auto model = load_model(p);
  const auto seed = require_seed(p, "survey");
  if (p.restarts < 1) throw ConfigError("--restarts must be >= 1");
  Params q = p;
  if (q.init == "truth") q.init = "kmeanspp";
  if (!stochastic_init(q)) throw ConfigError("survey: --init must be random, kmeanspp or box");
  const kmland::Population pop(model, make_estimator(q, model));
  const auto cpop = cell_population(pop, q);
  const auto th = thresholds(q);

  std::vector<RestartResult> results(static_cast<std::size_t>(p.restarts));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next++; r < p.restarts; r = next++) {
      RestartResult& res = results[static_cast<std::size_t>(r)];
      try {
        const auto cfg = lloyd_config(q, model, kmland::substream_seed(seed, 1000 + static_cast<std::uint64_t>(r)));
        res.log = kmland::run_lloyd(cfg, pop);
        const auto rep = kmland::classify(res.log.final_solution(), cpop, th);
        res.signature = kmland::signature(rep);
        res.valid = rep.valid_partition;
        res.truth = rep.valid_partition && rep.count(kmland::BlockKind::OneFitOne) == model.k() &&
                    static_cast<int>(rep.blocks.size()) == model.k();
      } catch (const kmland::Error& e) {
        res.error = e.what();
      }
    }
  };
  const int n_workers = std::max(1, p.workers > 0 ? p.workers : static_cast<int>(std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(n_workers, p.restarts); ++w) pool.emplace_back(worker);
  for (auto& th_ : pool) th_.join();

  const fs::path out = output_dir(p);
  if (!p.no_trajectories) fs::create_directories(out / "trajectories");
  std::map<std::string, int> hist;
  json runs = json::array();
  int converged = 0, valid = 0, truth = 0, errors = 0;
  for (int r = 0; r < p.restarts; ++r) {
    const RestartResult& res = results[static_cast<std::size_t>(r)];
    if (!res.error.empty()) {
      ++errors;
      runs.push_back({{"restart", r}, {"error", res.error}});
      continue;
    }
    converged += res.log.converged;
    if (res.log.converged) {
      ++hist[res.signature];
      valid += res.valid;
      truth += res.truth;
    }
    json run{{"restart", r},
             {"converged", res.log.converged},
             {"iterations", res.log.iterations},
             {"objective", res.log.objective.back()},
             {"signature", res.signature},
             {"valid_partition", res.valid},
             {"final_centers", kmland::io::to_json(res.log.final_solution().centers)}};
    if (!p.no_trajectories) {
      char name[64];
      std::snprintf(name, sizeof name, "trajectories/restart_%03d.csv", r);
      write_stream(out / name, [&](std::ostream& os) { kmland::io::write_trajectory_csv(os, res.log); });
      run["trajectory"] = name;
    }
    runs.push_back(run);
  }
  write_stream(out / "model.csv", [&](std::ostream& os) { kmland::io::write_model_csv(os, model); });
  json summary{{"model", kmland::io::to_json(model)},
               {"estimator", kmland::io::estimator_to_json(pop.estimator())},
               {"init", q.init},
               {"seed", seed},
               {"restarts", p.restarts},
               {"converged", converged},
               {"valid_partitions", valid},
               {"truth_recovered", truth},
               {"errors", errors},
               {"histogram", hist},
               {"runs", runs}};
  write_text(out / "survey.json", summary.dump(2) + "\n");
  std::cout << "survey: " << p.restarts << " restarts, " << converged << " converged, " << valid << " valid partitions, "
            << truth << " recovered the truth, " << hist.size() << " distinct classes\n";
  return errors == 0 && valid == converged ? 0 : 1;
}

// ---------------------------------------------------------------------------

void add_common(CLI::App* sub, Params& p, bool with_model = true) {
  sub->add_option("--config", p.config, "JSON config file (keys mirror the long flags; flags win)");
  if (with_model) sub->add_option("--model", p.model, "model JSON file or inline JSON");
  sub->add_option("--seed", p.seed, "RNG seed (required for stochastic tasks)");
  sub->add_option("--out", p.out, "output directory (default: $KMLAND_OUT_DIR or ./kmland_out)");
}

void add_solution(CLI::App* sub, Params& p) {
  sub->add_option("--init", p.init, "truth, spurious, given, random, kmeanspp or box");
  sub->add_option("--centers", p.centers, "fitted centers as JSON [[x1,..],..] (with --init given)");
  sub->add_option("--m", p.m, "number of fitted centers for random inits (default k)");
}

void add_estimator(CLI::App* sub, Params& p) {
  sub->add_option("--estimator", p.estimator, "analytic1d, quadrature1d or mc");
  sub->add_option("--mc-n", p.mc_n, "Monte Carlo sample size");
  sub->add_option("--nodes", p.nodes, "Simpson nodes per ball for quadrature1d");
}

void add_thresholds(CLI::App* sub, Params& p) {
  sub->add_option("--tau-empty", p.tau_empty, "almost-empty mass threshold");
  sub->add_option("--tau-in", p.tau_in, "component mass threshold for one-fit-many cells");
  sub->add_option("--c", p.c, "constant in the separation premises and bounds");
  sub->add_option("--t", p.t, "Gaussian truncation parameter");
}

void add_lloyd(CLI::App* sub, Params& p) {
  sub->add_option("--max-iters", p.max_iters, "iteration cap");
  sub->add_option("--tol", p.tol, "movement tolerance");
  sub->add_option("--empty-cell", p.empty_cell, "error, reseed or keep");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-means landscape toolkit"};
  app.require_subcommand(1);
  Params p;

  auto* sample = app.add_subcommand("sample", "draw labeled points from a mixture model");
  add_common(sample, p);
  sample->add_option("--n", p.n, "number of points");

  auto* lloyd = app.add_subcommand("lloyd", "run Lloyd's algorithm and emit trajectory data");
  add_common(lloyd, p);
  add_solution(lloyd, p);
  add_estimator(lloyd, p);
  add_lloyd(lloyd, p);
  add_thresholds(lloyd, p);
  lloyd->add_option("--empirical-n", p.empirical_n, "run on a sample of this size instead of the population");

  auto* classify = app.add_subcommand("classify", "classify a solution into association blocks");
  add_common(classify, p);
  add_solution(classify, p);
  add_estimator(classify, p);
  add_thresholds(classify, p);

  auto* analyze = app.add_subcommand("analyze", "cell statistics, boundary inequalities and a directional slice");
  add_common(analyze, p);
  add_solution(analyze, p);
  add_estimator(analyze, p);
  analyze->add_option("--c", p.c, "constant for the default lambda");
  analyze->add_option("--t", p.t, "Gaussian truncation parameter");
  analyze->add_option("--direction", p.direction, "direction as JSON [[v1..],..], one vector per center");
  analyze->add_option("--t-max", p.t_max, "slice half-width");
  analyze->add_option("--t-steps", p.t_steps, "slice grid size");
  analyze->add_option("--face-n", p.face_n, "samples per boundary face");

  auto* verify = app.add_subcommand("verify", "run all certificates");
  add_common(verify, p, false);
  verify->add_flag("--all", p.all, "run every certificate");
  verify->add_option("--aligned-n", p.aligned_n, "Monte Carlo size for the aligned 2D construction");

  auto* survey = app.add_subcommand("survey", "random-restart Lloyd runs and a histogram of solution classes");
  add_common(survey, p);
  add_solution(survey, p);
  add_estimator(survey, p);
  add_lloyd(survey, p);
  add_thresholds(survey, p);
  survey->add_option("--restarts", p.restarts, "number of restarts");
  survey->add_option("--workers", p.workers, "worker threads (default: hardware concurrency)");
  survey->add_flag("--no-trajectories", p.no_trajectories, "skip per-restart trajectory CSVs");

  std::string run_config;
  auto* run = app.add_subcommand("run", "run the task named by a config file's \"task\" key");
  run->add_option("--config", run_config, "JSON config file")->required();
  run->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      const json cfg = json_arg(run_config, "config");
      if (!cfg.is_object() || !cfg.contains("task") || !cfg["task"].is_string()) throw ConfigError("config: 'task' is required");
      const std::string task = cfg["task"].get<std::string>();
      std::vector<std::string> args{argv[0], task, "--config", run_config};
      for (const auto& extra : run->remaining()) args.push_back(extra);
      std::vector<char*> raw;
      for (auto& a : args) raw.push_back(a.data());
      if (task == "run") throw ConfigError("config: task 'run' is not allowed");
      return main(static_cast<int>(raw.size()), raw.data());
    }
    CLI::App* sub = app.get_subcommands().front();
    if (!p.config.empty()) apply_config(*sub, p.config);
    if (sample->parsed()) return cmd_sample(p);
    if (lloyd->parsed()) return cmd_lloyd(p);
    if (classify->parsed()) return cmd_classify(p);
    if (analyze->parsed()) return cmd_analyze(p);
    if (verify->parsed()) return cmd_verify(p);
    if (survey->parsed()) return cmd_survey(p);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kmland::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

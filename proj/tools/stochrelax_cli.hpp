#ifndef STOCHRELAX_TOOLS_CLI_HPP
#define STOCHRELAX_TOOLS_CLI_HPP

// Command-line driver: surface | bounds | saa | casestudy.
// Exit codes: 0 success, 2 usage or input error, 3 numeric failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stochrelax/expectation.hpp"
#include "stochrelax/model.hpp"

namespace stochrelax::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
  std::string subcommand;
  std::string model_path;
  std::string pbox;
  std::string cells;
  std::string grid;
  std::string point;
  std::optional<int> steps;
  double rtol = 1e-8;
  double atol = 1e-10;
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  int jobs = default_jobs();
  std::optional<double> tf;
  double width_cap = 1e6;
  std::string out;
};

//! Thrown for malformed flag values; maps to exit code 2
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(field, &used));
      while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw UsageError(std::string("malformed ") + what + " '" + text + "'");
    }
  }
  return out;
}

// "AxB" -> {A, B}; a single number is repeated over `dim` dimensions
inline std::vector<int> parse_counts(const std::string& text, std::size_t dim, int fallback, const char* what) {
  if (text.empty()) return std::vector<int>(dim, fallback);
  std::vector<int> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, 'x')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(field, &used);
      if (used != field.size() || v < 1) throw std::invalid_argument(field);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(std::string("malformed ") + what + " '" + text + "'");
    }
  }
  if (out.size() == 1 && dim > 1) out.assign(dim, out[0]);
  if (out.size() != dim)
    throw UsageError(std::string(what) + " needs " + std::to_string(dim) + " counts");
  return out;
}

// "lo,hi x lo,hi ..." -> box, checked against the model's parameter box
inline IntervalBox parse_pbox(const std::string& text, const Model& model) {
  if (text.empty()) return model.pbox;
  IntervalBox box;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, 'x')) {
    const auto v = parse_list(field, "--pbox component");
    if (v.size() != 2 || !(v[0] <= v[1])) throw UsageError("--pbox components need 'lo,hi' with lo <= hi");
    box.emplace_back(v[0], v[1]);
  }
  if (box.size() != model.pbox.size()) throw UsageError("--pbox has the wrong number of components");
  for (std::size_t i = 0; i < box.size(); ++i)
    if (!model.pbox[i].contains(box[i])) throw UsageError("--pbox must lie inside the model's parameter box");
  return box;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline RelaxConfig relax_config(const RunConfig& cfg) {
  RelaxConfig rc;
  rc.width_cap = cfg.width_cap;
  if (cfg.steps) {
    rc.relax.method = IntegratorConfig::Method::Rk4Fixed;
    rc.relax.steps = *cfg.steps;
    rc.bounds.method = IntegratorConfig::Method::Rk4Fixed;
    rc.bounds.steps = std::max(*cfg.steps, rc.bounds.dense_mesh);
  } else {
    rc.relax.rtol = rc.bounds.rtol = cfg.rtol;
    rc.relax.atol = rc.bounds.atol = cfg.atol;
  }
  return rc;
}

inline IntegratorConfig simulation_config(const RunConfig& cfg) {
  IntegratorConfig ic;
  if (cfg.steps) {
    ic.method = IntegratorConfig::Method::Rk4Fixed;
    ic.steps = *cfg.steps;
  } else {
    ic.rtol = cfg.rtol;
    ic.atol = cfg.atol;
  }
  return ic;
}

inline Model load(const RunConfig& cfg, bool builtin_fallback) {
  Model m;
  if (cfg.model_path.empty()) {
    if (!builtin_fallback) throw UsageError("--model is required");
    m = circuit_model();
  } else {
    if (!std::filesystem::exists(cfg.model_path))
      throw UsageError("model file '" + cfg.model_path + "' does not exist");
    m = load_model(cfg.model_path);
  }
  if (cfg.tf) {
    m.tf = *cfg.tf;
    validate(m);
  }
  return m;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot write '" + path.string() + "'");
  return os;
}

inline void write_surface(std::ostream& os, const Model& model, const std::vector<SurfaceRow>& rows) {
  for (int j = 0; j < model.np; ++j) os << 'p' << j + 1 << ',';
  os << "gcv,gcc\n";
  for (const auto& r : rows) {
    for (double v : r.p) os << fmt(v) << ',';
    os << fmt(r.cv) << ',' << fmt(r.cc) << '\n';
  }
}

inline void emit_json(const RunConfig& cfg, const nlohmann::json& j, std::ostream& out) {
  if (cfg.out.empty()) {
    out << j.dump(2) << '\n';
  } else {
    auto os = open_out(cfg.out);
    os << j.dump(2) << '\n';
  }
}

inline nlohmann::json box_json(const IntervalBox& box) {
  auto arr = nlohmann::json::array();
  for (const auto& iv : box) arr.push_back({iv.lo(), iv.hi()});
  return arr;
}

}  // namespace detail

inline int cmd_surface(const RunConfig& cfg, std::ostream& out) {
  using namespace detail;
  if (cfg.out.empty()) throw UsageError("surface needs --out");
  const auto start = std::chrono::steady_clock::now();
  const Model model = load(cfg, false);
  const IntervalBox P = parse_pbox(cfg.pbox, model);
  const auto cells = parse_counts(cfg.cells, model.nw, 1, "--cells");
  const auto grid = parse_counts(cfg.grid, model.np, 11, "--grid");
  const ExpectedValueRelaxation relax(model, P, uniform_partition(model.dist, cells), relax_config(cfg), cfg.jobs);
  const auto rows = relaxation_surface(relax, grid);
  auto os = open_out(cfg.out);
  write_surface(os, model, rows);
  double min_gap = rows.front().cc - rows.front().cv, max_gap = min_gap;
  for (const auto& r : rows) {
    min_gap = std::min(min_gap, r.cc - r.cv);
    max_gap = std::max(max_gap, r.cc - r.cv);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "rows " << rows.size() << ", cells " << relax.partition().size() << ", min gap " << fmt(min_gap)
      << ", max gap " << fmt(max_gap) << ", wall time " << secs << " s\n";
  return kExitOk;
}

inline int cmd_bounds(const RunConfig& cfg, std::ostream& out) {
  using namespace detail;
  const Model model = load(cfg, false);
  const IntervalBox P = parse_pbox(cfg.pbox, model);
  const auto cells = parse_counts(cfg.cells, model.nw, 1, "--cells");
  const auto report = bound_report(model, P, uniform_partition(model.dist, cells), {}, relax_config(cfg), cfg.jobs);
  nlohmann::json j;
  j["pbox"] = box_json(report.P);
  j["lower"] = report.lower;
  j["upper"] = report.upper;
  j["minimizer_estimate"] = report.minimizer_estimate;
  j["upper_point"] = report.upper_point;
  j["partition_size"] = report.partition_size;
  j["partition_counts"] = report.partition_counts;
  j["search_method"] = "compass";
  j["search_evaluations"] = report.search_evaluations;
  j["search_final_step_fraction"] = report.search_final_step_fraction;
  j["lower_seconds"] = report.lower_seconds;
  j["upper_seconds"] = report.upper_seconds;
  emit_json(cfg, j, out);
  return kExitOk;
}

inline int cmd_saa(const RunConfig& cfg, std::ostream& out) {
  using namespace detail;
  if (cfg.samples < 2) throw UsageError("--samples must be at least 2");
  const Model model = load(cfg, false);
  const IntervalBox P = parse_pbox(cfg.pbox, model);
  std::vector<double> p;
  if (cfg.point.empty()) {
    for (const auto& iv : P) p.push_back(iv.mid());
  } else {
    p = parse_list(cfg.point, "--point");
    if (p.size() != P.size()) throw UsageError("--point has the wrong dimension");
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!model.pbox[i].contains(p[i])) throw UsageError("--point lies outside the parameter box");
  }
  const auto est = saa_estimate(model, p, cfg.samples, cfg.seed, simulation_config(cfg), cfg.jobs);
  nlohmann::json j;
  j["point"] = p;
  j["mean"] = est.mean;
  j["stderr"] = est.standard_error;
  j["samples"] = est.samples;
  j["seed"] = est.seed;
  emit_json(cfg, j, out);
  return kExitOk;
}

//! Surfaces for 1, 16 and 64 cells, an SAA surface and sampled terminal
//! values; everything needed to redraw the relaxation figure externally
inline int cmd_casestudy(const RunConfig& cfg, std::ostream& out) {
  using namespace detail;
  if (cfg.out.empty()) throw UsageError("casestudy needs --out DIRECTORY");
  const Model model = load(cfg, true);
  const IntervalBox P = parse_pbox(cfg.pbox, model);
  const auto grid = parse_counts(cfg.grid, model.np, 11, "--grid");
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  const RelaxConfig rc = relax_config(cfg);
  const IntegratorConfig sim = simulation_config(cfg);

  const auto points = grid_points(P, grid);
  std::vector<SaaEstimate> saa(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    saa[i] = saa_estimate(model, points[i], cfg.samples, cfg.seed, sim, cfg.jobs);
  {
    auto os = open_out(dir / "saa_surface.csv");
    for (int j = 0; j < model.np; ++j) os << 'p' << j + 1 << ',';
    os << "mean,stderr\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (double v : points[i]) os << fmt(v) << ',';
      os << fmt(saa[i].mean) << ',' << fmt(saa[i].standard_error) << '\n';
    }
  }

  std::size_t checks = 0, failures = 0;
  for (int per_dim : {1, 4, 8}) {
    const std::vector<int> counts(model.nw, per_dim);
    const ExpectedValueRelaxation relax(model, P, uniform_partition(model.dist, counts), rc, cfg.jobs);
    const auto rows = relaxation_surface(relax, grid);
    auto os = open_out(dir / ("surface_cells" + std::to_string(relax.partition().size()) + ".csv"));
    write_surface(os, model, rows);
    double max_gap = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double slack = 3.0 * saa[i].standard_error;
      ++checks;
      if (!(rows[i].cv - slack <= saa[i].mean && saa[i].mean <= rows[i].cc + slack)) ++failures;
      max_gap = std::max(max_gap, rows[i].cc - rows[i].cv);
    }
    out << "cells " << relax.partition().size() << ": max gap " << fmt(max_gap) << '\n';
  }

  {
    Rng rng(cfg.seed);
    auto os = open_out(dir / "samples.csv");
    for (int j = 0; j < model.np; ++j) os << 'p' << j + 1 << ',';
    for (int j = 0; j < model.nw; ++j) os << 'w' << j + 1 << ',';
    for (int j = 0; j < model.nx; ++j) os << 'x' << j + 1 << ',';
    os << "g\n";
    for (int s = 0; s < 50; ++s) {
      std::vector<double> p;
      for (const auto& iv : P) p.push_back(iv.lo() + iv.width() * rng.uniform());
      const auto w = sample(model.dist, rng, 1).front();
      const auto x = simulate(model, p, w, sim);
      const double g = evaluate<double>(model.g, {model.tf, p, w, x})[0];
      for (double v : p) os << fmt(v) << ',';
      for (double v : w) os << fmt(v) << ',';
      for (double v : x) os << fmt(v) << ',';
      os << fmt(g) << '\n';
    }
  }
  out << "enclosure checks: " << checks - failures << "/" << checks << " passed\n";
  return kExitOk;
}

//! Parses argv and dispatches; never throws
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Convex/concave relaxations and bounds for expected-value costs of parametric ODEs"};
  app.require_subcommand(1);
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model_path, "model file");
    sub->add_option("--pbox", cfg.pbox, "parameter sub-box 'lo,hi x lo,hi ...'");
    sub->add_option("--steps", cfg.steps, "fixed-step RK4 with N steps instead of adaptive RK45")
        ->check(CLI::PositiveNumber);
    sub->add_option("--rtol", cfg.rtol, "relative tolerance (adaptive)")->check(CLI::PositiveNumber);
    sub->add_option("--atol", cfg.atol, "absolute tolerance (adaptive)")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tf", cfg.tf, "override the final time");
    sub->add_option("--width-cap", cfg.width_cap, "state-bound width that aborts with BoundBlowup");
    sub->add_option("--out", cfg.out, "output path");
  };
  auto* surface = app.add_subcommand("surface", "relaxation surface over a grid of p (CSV)");
  common(surface);
  surface->add_option("--cells", cfg.cells, "uncertainty partition, e.g. 8x8");
  surface->add_option("--grid", cfg.grid, "grid points per parameter, e.g. 11x11");
  auto* bounds = app.add_subcommand("bounds", "lower and upper bounds on P (JSON)");
  common(bounds);
  bounds->add_option("--cells", cfg.cells, "uncertainty partition, e.g. 4x4");
  auto* saa = app.add_subcommand("saa", "sample-average estimate at one p (JSON)");
  common(saa);
  saa->add_option("--samples", cfg.samples, "sample count (>= 2)");
  saa->add_option("--seed", cfg.seed, "random seed");
  saa->add_option("--point", cfg.point, "parameter point 'p1,p2,...' (default: centre of P)");
  auto* casestudy = app.add_subcommand("casestudy", "circuit case study outputs (directory of CSVs)");
  common(casestudy);
  casestudy->add_option("--grid", cfg.grid, "grid points per parameter");
  casestudy->add_option("--samples", cfg.samples, "SAA samples per grid point");
  casestudy->add_option("--seed", cfg.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*surface) return cmd_surface(cfg, out);
    if (*bounds) return cmd_bounds(cfg, out);
    if (*saa) return cmd_saa(cfg, out);
    return cmd_casestudy(cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.numeric() ? kExitNumeric : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace stochrelax::cli

#endif  // STOCHRELAX_TOOLS_CLI_HPP

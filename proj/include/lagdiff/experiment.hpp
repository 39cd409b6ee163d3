#pragma once

// Configuration-driven experiment harness: parses flat key = value files,
// builds the requested mesh and initial datum, marches the solver, and
// writes machine-readable artifacts (per-step reports, snapshots, interface
// history, a JSON summary).  Also hosts the refinement-ladder sweep driver
// and the named presets for the standard experiments.

#include "lagdiff/energy.hpp"
#include "lagdiff/mesh.hpp"
#include "lagdiff/oracle.hpp"
#include "lagdiff/postprocess.hpp"
#include "lagdiff/radial.hpp"
#include "lagdiff/solver.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lagdiff {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Law law = Law::law2;
  double alpha = 0.0;
  int dim = 0;
  std::string mesh;   ///< builtin spec ("interval:...", "disk:...", ...) or "file:<path>"
  std::string datum;  ///< barenblatt | sine_power | cosine_bump | donut | two_peaks | uniform
  double datum_theta = 0.0;
  double datum_c0 = 1.0;
  double datum_t0 = 1.0;
  double tau = 0.0;
  double T = 0.0;
  BoundaryMode boundary = BoundaryMode::free_support;
  Integrator integrator = Integrator::backward_euler;
  int cadence = 1;
  bool axisym = false;
  /// Support-radius increase that counts as the onset of motion.  The default
  /// is a fifth of the finest boundary spacing among the shipped presets, so
  /// sub-mesh-resolution creep (accumulated solver tolerance) never triggers
  /// detection while genuine onset is resolved to a few time steps.
  double onset_margin = 1e-3;
  NewtonOptions newton;
  std::string out = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& key, const std::string& value) {
  size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &used);
  } catch (const std::exception&) {
    throw config_error("config: key '" + key + "' expects a number, got '" + value + "'");
  }
  if (used != value.size())
    throw config_error("config: key '" + key + "' expects a number, got '" + value + "'");
  return x;
}

inline int parse_int(const std::string& key, const std::string& value) {
  const double x = parse_number(key, value);
  const int i = static_cast<int>(std::lround(x));
  if (std::abs(x - i) > 0.0)
    throw config_error("config: key '" + key + "' expects an integer, got '" + value + "'");
  return i;
}

inline std::string format(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

}  // namespace detail

/// Parses a flat `key = value` configuration (one pair per line, '#' starts
/// a comment).  Unknown keys and malformed values raise config_error naming
/// the key; missing required fields are reported after the scan.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  bool has_alpha = false, has_dim = false, has_tau = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty() || value.empty())
      throw config_error("config line " + std::to_string(line_no) + ": expected key = value");

    if (key == "law") {
      if (value == "1" || value == "law1") cfg.law = Law::law1;
      else if (value == "2" || value == "law2") cfg.law = Law::law2;
      else throw config_error("config: key 'law' expects 1 or 2, got '" + value + "'");
    } else if (key == "alpha") {
      cfg.alpha = detail::parse_number(key, value);
      has_alpha = true;
    } else if (key == "dim") {
      cfg.dim = detail::parse_int(key, value);
      has_dim = true;
    } else if (key == "mesh") {
      cfg.mesh = value;
    } else if (key == "datum") {
      cfg.datum = value;
    } else if (key == "datum_theta") {
      cfg.datum_theta = detail::parse_number(key, value);
    } else if (key == "datum_c0") {
      cfg.datum_c0 = detail::parse_number(key, value);
    } else if (key == "datum_t0") {
      cfg.datum_t0 = detail::parse_number(key, value);
    } else if (key == "tau") {
      cfg.tau = detail::parse_number(key, value);
      has_tau = true;
    } else if (key == "T") {
      cfg.T = detail::parse_number(key, value);
    } else if (key == "boundary") {
      if (value == "free") cfg.boundary = BoundaryMode::free_support;
      else if (value == "pinned") cfg.boundary = BoundaryMode::pinned_boundary;
      else throw config_error("config: key 'boundary' expects free or pinned, got '" + value + "'");
    } else if (key == "integrator") {
      if (value == "backward") cfg.integrator = Integrator::backward_euler;
      else if (value == "explicit") cfg.integrator = Integrator::explicit_euler;
      else
        throw config_error("config: key 'integrator' expects backward or explicit, got '" +
                           value + "'");
    } else if (key == "cadence") {
      cfg.cadence = detail::parse_int(key, value);
    } else if (key == "axisym") {
      cfg.axisym = detail::parse_int(key, value) != 0;
    } else if (key == "onset_margin") {
      cfg.onset_margin = detail::parse_number(key, value);
    } else if (key == "newton_tol") {
      cfg.newton.tol = detail::parse_number(key, value);
    } else if (key == "newton_max_iter") {
      cfg.newton.max_iterations = detail::parse_int(key, value);
    } else if (key == "newton_damping") {
      cfg.newton.damping = detail::parse_number(key, value);
    } else if (key == "out") {
      cfg.out = value;
    } else {
      throw config_error("config: unknown key '" + key + "'");
    }
  }

  if (!has_alpha) throw config_error("config: missing required key 'alpha'");
  if (!has_dim) throw config_error("config: missing required key 'dim'");
  if (!has_tau) throw config_error("config: missing required key 'tau'");
  if (cfg.mesh.empty()) throw config_error("config: missing required key 'mesh'");
  if (cfg.datum.empty()) throw config_error("config: missing required key 'datum'");
  if (!(cfg.alpha > 1.0)) throw config_error("config: key 'alpha' must exceed 1");
  if (cfg.dim != 1 && cfg.dim != 2) throw config_error("config: key 'dim' must be 1 or 2");
  if (!(cfg.tau > 0.0)) throw config_error("config: key 'tau' must be positive");
  if (cfg.T < 0.0) throw config_error("config: key 'T' must be nonnegative");
  if (cfg.cadence < 1) throw config_error("config: key 'cadence' must be at least 1");
  if (cfg.axisym && cfg.dim != 2) throw config_error("config: key 'axisym' requires dim = 2");
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open '" + path + "'");
  return parse_config(in);
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  std::stringstream ss(text);
  return parse_config(ss);
}

// ---------------------------------------------------------------------------
// Datum and mesh resolution

namespace detail {

/// Everything run_experiment needs to know about the initial datum: the
/// density field, the support radius (for mesh autosizing), and the exact
/// evolved profile when one is known.
template <int D>
struct ResolvedDatum {
  std::function<double(const Vec<D>&)> density;
  std::function<double(double)> radial;  ///< density as a function of radius, if radial
  double support_radius = 0.0;
  std::optional<Barenblatt> exact;  ///< evolved profile is exact(|x|, t0 + t)
  double support_lo = 0.0, support_hi = 0.0;  ///< 1D support interval
};

template <int D>
ResolvedDatum<D> resolve_datum(const ExperimentConfig& cfg) {
  ResolvedDatum<D> d;
  if (cfg.datum == "barenblatt") {
    const Barenblatt bb{cfg.alpha, D, cfg.datum_c0};
    const double t0 = cfg.datum_t0;
    if (!(t0 > 0.0)) throw config_error("config: key 'datum_t0' must be positive");
    d.density = [bb, t0](const Vec<D>& X) { return bb.value(X.norm(), t0); };
    d.radial = [bb, t0](double r) { return bb.value(r, t0); };
    d.support_radius = bb.radius(t0);
    d.support_lo = -d.support_radius;
    d.support_hi = d.support_radius;
    d.exact = bb;
  } else if (cfg.datum == "sine_power") {
    if constexpr (D != 1) {
      throw config_error("config: datum 'sine_power' requires dim = 1");
    } else {
      const SinePowerDatum sp{cfg.alpha, cfg.datum_theta};
      d.density = [sp](const Vec<D>& X) { return sp(X); };
      d.support_lo = -M_PI;
      d.support_hi = 0.0;
      d.support_radius = M_PI;
    }
  } else if (cfg.datum == "cosine_bump") {
    if constexpr (D != 2) {
      throw config_error("config: datum 'cosine_bump' requires dim = 2");
    } else {
      const CosineBumpDatum cb;
      d.density = [cb](const Vec<D>& X) { return cb(X); };
      d.radial = [cb](double r) { return cb(r); };
      d.support_radius = 1.0;
    }
  } else if (cfg.datum == "donut") {
    if constexpr (D != 2) {
      throw config_error("config: datum 'donut' requires dim = 2");
    } else {
      const DonutDatum dn{cfg.alpha};
      d.density = [dn](const Vec<D>& X) { return dn(X); };
      d.support_radius = 1.0;
    }
  } else if (cfg.datum == "two_peaks") {
    if constexpr (D != 2) {
      throw config_error("config: datum 'two_peaks' requires dim = 2");
    } else {
      const TwoPeaksDatum tp;
      d.density = [tp](const Vec<D>& X) { return tp(X); };
      // positive everywhere: no support radius, so meshes cannot autosize
    }
  } else if (cfg.datum == "uniform") {
    d.density = [](const Vec<D>&) { return 1.0; };
    d.radial = [](double) { return 1.0; };
    d.support_radius = 1.0;
    d.support_lo = -1.0;
    d.support_hi = 1.0;
  } else {
    throw config_error("config: unknown datum '" + cfg.datum + "'");
  }
  return d;
}

inline double mesh_arg_radius(const std::string& token, double auto_radius,
                              const std::string& spec) {
  if (token == "auto") {
    if (!(auto_radius > 0.0))
      throw config_error("config: mesh '" + spec + "' cannot autosize for this datum");
    return auto_radius;
  }
  return parse_number("mesh", token);
}

template <int D>
Triangulation<D> build_mesh(const ExperimentConfig& cfg, const ResolvedDatum<D>& datum) {
  const std::string& spec = cfg.mesh;
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::vector<std::string> args =
      colon == std::string::npos ? std::vector<std::string>{} : split(spec.substr(colon + 1), ',');
  auto need_args = [&](size_t lo, size_t hi) {
    if (args.size() < lo || args.size() > hi)
      throw config_error("config: malformed mesh spec '" + spec + "'");
  };

  if (kind == "file") {
    need_args(1, 1);
    return load_mesh<D>(args[0]);
  }
  if constexpr (D == 1) {
    if (kind == "interval") {
      need_args(3, 4);
      return build_interval(parse_number("mesh", args[0]), parse_number("mesh", args[1]),
                            parse_int("mesh", args[2]),
                            args.size() > 3 ? parse_int("mesh", args[3]) : 0);
    }
    if (kind == "support") {
      need_args(1, 2);
      if (!(datum.support_hi > datum.support_lo))
        throw config_error("config: mesh 'support' cannot autosize for this datum");
      return build_interval(datum.support_lo, datum.support_hi, parse_int("mesh", args[0]),
                            args.size() > 1 ? parse_int("mesh", args[1]) : 0);
    }
  } else {
    if (kind == "square") {
      need_args(3, 3);
      return build_square(parse_number("mesh", args[0]), parse_number("mesh", args[1]),
                          parse_int("mesh", args[2]));
    }
    if (kind == "disk") {
      need_args(2, 5);
      return build_disk(mesh_arg_radius(args[0], datum.support_radius, spec),
                        parse_int("mesh", args[1]),
                        args.size() > 2 ? parse_number("mesh", args[2]) : 1.0,
                        args.size() > 3 ? parse_number("mesh", args[3]) : 1.0,
                        args.size() > 4 ? parse_number("mesh", args[4]) : 1.0);
    }
    if (kind == "horseshoe") {
      need_args(4, 4);
      return build_horseshoe(parse_number("mesh", args[0]), parse_number("mesh", args[1]),
                             parse_int("mesh", args[2]), parse_int("mesh", args[3]));
    }
  }
  throw config_error("config: unknown mesh spec '" + spec + "' for dim " + std::to_string(D));
}

// ---------------------------------------------------------------------------
// Artifact writers

struct CsvFile {
  std::ofstream out;
  CsvFile(const std::filesystem::path& path, const std::string& header) {
    out.open(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << header << '\n';
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }
};

inline void write_step_row(CsvFile& csv, int step, double t, const StepReport& rep) {
  csv.row({std::to_string(step), format(t), std::to_string(rep.newton_iterations),
           format(rep.residual), format(rep.energy_before), format(rep.energy_after),
           format(rep.dissipation), format(rep.margin), rep.accepted ? "1" : "0"});
}

template <int D>
void write_snapshot(const std::filesystem::path& dir, int step, const Triangulation<D>& mesh,
                    const std::vector<double>& rho0_c, const Configuration<D>& cfg) {
  CsvFile csv(dir / (std::to_string(step) + ".csv"), "elem,xc,yc,detF,rho");
  const auto rho = density_at_centroids(mesh, rho0_c, cfg);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Vec<D> xc = Vec<D>::Zero();
    for (const int v : mesh.elements[e]) xc += cfg.pos(v);
    xc /= static_cast<double>(D + 1);
    const double yc = D == 2 ? xc[D - 1] : 0.0;
    csv.row({std::to_string(e), format(xc[0]), format(yc), format(det_F(mesh, cfg, e)),
             format(rho[e])});
  }
}

template <int D>
void write_nodes(const std::filesystem::path& dir, int step, const Triangulation<D>& mesh,
                 const std::vector<double>& rho0_n, const Configuration<D>& cfg) {
  CsvFile csv(dir / (std::to_string(step) + ".csv"), "node,x,y,rho");
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const Vec<D> p = cfg.pos(i);
    const double y = D == 2 ? p[D - 1] : 0.0;
    csv.row({std::to_string(i), format(p[0]), format(y),
             format(pointwise_nodal_density(mesh, cfg, i, rho0_n[i]))});
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single experiment

struct ExperimentSummary {
  int steps_taken = 0;
  double final_time = 0.0;
  bool completed = true;
  std::string error;  ///< empty on success

  std::optional<bool> energy_monotone;  ///< unset in the formal regime
  double max_mass_drift = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  /// Worst relative excess of E_next + dt * dissipation over E_prev across
  /// accepted steps; the per-step energy inequality holds iff this stays <= 0
  /// (up to roundoff).  Zero when energies are not tracked.
  double max_energy_law_violation = 0.0;

  std::optional<double> l2_error, linf_error, origin_error, interface_error;
  std::optional<double> waiting_time;
  double wall_clock_seconds = 0.0;

  /// interface trace: per accepted step (plus t = 0)
  std::vector<double> times;
  std::vector<double> xi_left, xi_right;  ///< 1D endpoints; 2D stores the radius in xi_right
  int n_mesh_nodes = 0;
};

namespace detail {

inline nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["law"] = cfg.law == Law::law1 ? "law1" : "law2";
  j["alpha"] = cfg.alpha;
  j["dim"] = cfg.dim;
  j["mesh"] = cfg.mesh;
  j["datum"] = cfg.datum;
  j["datum_theta"] = cfg.datum_theta;
  j["datum_c0"] = cfg.datum_c0;
  j["datum_t0"] = cfg.datum_t0;
  j["tau"] = cfg.tau;
  j["T"] = cfg.T;
  j["boundary"] = cfg.boundary == BoundaryMode::free_support ? "free" : "pinned";
  j["integrator"] = cfg.integrator == Integrator::backward_euler ? "backward" : "explicit";
  j["cadence"] = cfg.cadence;
  j["axisym"] = cfg.axisym;
  j["onset_margin"] = cfg.onset_margin;
  j["newton_tol"] = cfg.newton.tol;
  j["newton_max_iter"] = cfg.newton.max_iterations;
  j["newton_damping"] = cfg.newton.damping;
  return j;
}

inline void write_summary(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          const ExperimentSummary& s) {
  nlohmann::ordered_json j;
  j["config"] = config_json(cfg);
  j["n_mesh_nodes"] = s.n_mesh_nodes;
  j["steps"] = s.steps_taken;
  j["final_time"] = s.final_time;
  j["completed"] = s.completed;
  j["error"] = s.error;
  if (s.energy_monotone) j["energy_monotone"] = *s.energy_monotone;
  else j["energy_monotone"] = nullptr;
  j["max_mass_drift"] = s.max_mass_drift;
  j["max_energy_law_violation"] = s.max_energy_law_violation;
  j["min_margin"] = std::isfinite(s.min_margin) ? nlohmann::ordered_json(s.min_margin)
                                                : nlohmann::ordered_json(nullptr);
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["l2_error"] = opt(s.l2_error);
  j["linf_error"] = opt(s.linf_error);
  j["origin_error"] = opt(s.origin_error);
  j["interface_error"] = opt(s.interface_error);
  j["waiting_time"] = opt(s.waiting_time);
  j["wall_clock_seconds"] = s.wall_clock_seconds;
  std::ofstream out(dir / "summary.json");
  if (!out) throw std::runtime_error("cannot open summary.json for writing");
  out << j.dump(2) << '\n';
}

/// The planar / segment-chain experiment path.
template <int D>
ExperimentSummary run_mesh_experiment(const ExperimentConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  const ResolvedDatum<D> datum = resolve_datum<D>(cfg);
  const Triangulation<D> mesh = build_mesh<D>(cfg, datum);
  const std::vector<double> rho0_c = sample_centroid_density(mesh, datum.density);
  std::vector<double> rho0_n(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) rho0_n[i] = datum.density(mesh.nodes[i]);
  const EnergyLaw law(cfg.law, cfg.alpha);

  const std::filesystem::path out(cfg.out);
  std::filesystem::create_directories(out / "snapshots");
  std::filesystem::create_directories(out / "nodes");

  ExperimentSummary s;
  s.n_mesh_nodes = mesh.n_nodes();
  const Configuration<D> cfg0 = Configuration<D>::identity(mesh);
  const double mass0 = total_mass(mesh, rho0_c);

  CsvFile steps_csv(out / "steps.csv",
                    "step,t,newton_iterations,residual,energy_before,energy_after,"
                    "dissipation,margin,accepted");
  CsvFile itf_csv(out / "interface.csv", D == 1 ? "t,xi_left,xi_right" : "t,xi_radial");

  auto record_interface = [&](double t, const Configuration<D>& c) {
    if constexpr (D == 1) {
      const Interface1d itf = interface_extract(mesh, c);
      itf_csv.row({format(t), format(itf.left), format(itf.right)});
      s.times.push_back(t);
      s.xi_left.push_back(itf.left);
      s.xi_right.push_back(itf.right);
    } else {
      const double r = interface_radius(mesh, c);
      itf_csv.row({format(t), format(r)});
      s.times.push_back(t);
      s.xi_right.push_back(r);
    }
  };

  auto reconstructed_mass = [&](const Configuration<D>& c) {
    double m = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e)
      m += rho0_c[e] / det_F(mesh, c, e) * mesh.measures[e] * det_F(mesh, c, e);
    return m;
  };

  write_snapshot(out / "snapshots", 0, mesh, rho0_c, cfg0);
  write_nodes(out / "nodes", 0, mesh, rho0_n, cfg0);
  record_interface(0.0, cfg0);

  bool monotone = true;
  bool any_energy = false;
  int last_snapshot = 0;
  double t_prev = 0.0;
  auto callback = [&](int step, double t, const Configuration<D>& c, const StepReport& rep) {
    write_step_row(steps_csv, step, t, rep);
    record_interface(t, c);
    if (rep.accepted) {
      s.min_margin = std::min(s.min_margin, rep.margin);
      const double drift = std::abs(reconstructed_mass(c) - mass0) / std::max(1.0, mass0);
      s.max_mass_drift = std::max(s.max_mass_drift, drift);
      if (std::isfinite(rep.energy_before) && std::isfinite(rep.energy_after)) {
        any_energy = true;
        const double slack = 1e-9 * std::max(1.0, std::abs(rep.energy_before));
        if (rep.energy_after > rep.energy_before + slack) monotone = false;
        const double dt = t - t_prev;
        const double excess = (rep.energy_after + dt * rep.dissipation - rep.energy_before) /
                              std::max(1.0, std::abs(rep.energy_before));
        s.max_energy_law_violation = std::max(s.max_energy_law_violation, excess);
      }
      t_prev = t;
      if (step % cfg.cadence == 0) {
        write_snapshot(out / "snapshots", step, mesh, rho0_c, c);
        write_nodes(out / "nodes", step, mesh, rho0_n, c);
        last_snapshot = step;
      }
    }
  };

  const RunResult<D> result = lagdiff::run(mesh, rho0_c, law, cfg0, cfg.tau, cfg.T,
                                           cfg.boundary, cfg.integrator, cfg.newton, callback);
  s.steps_taken = static_cast<int>(result.steps.size());
  s.final_time = result.steps.empty() ? 0.0 : result.steps.back().t;
  s.completed = result.completed;
  s.error = result.error;
  if (any_energy) s.energy_monotone = monotone;

  const int final_step = s.steps_taken;
  if (result.completed && final_step > 0 && final_step != last_snapshot) {
    write_snapshot(out / "snapshots", final_step, mesh, rho0_c, result.final_configuration);
    write_nodes(out / "nodes", final_step, mesh, rho0_n, result.final_configuration);
  }

  if (result.completed && datum.exact) {
    const Barenblatt& bb = *datum.exact;
    const double t_end = cfg.datum_t0 + cfg.T;
    auto ref = [&](const Vec<D>& x) { return bb.value(x.norm(), t_end); };
    s.l2_error = l2_error<D>(mesh, rho0_c, result.final_configuration, ref);
    s.linf_error = linf_error<D>(mesh, rho0_c, result.final_configuration, ref);
    const int centre = nearest_node(mesh, Vec<D>(Vec<D>::Zero()));
    const double nodal =
        pointwise_nodal_density(mesh, result.final_configuration, centre, rho0_n[centre]);
    const Vec<D> pos = result.final_configuration.pos(centre);
    s.origin_error = std::abs(nodal - bb.value(pos.norm(), t_end));
    const double xi = bb.radius(t_end);
    if constexpr (D == 1) {
      const Interface1d itf = interface_extract(mesh, result.final_configuration);
      s.interface_error = std::abs(itf.right - xi);
    } else {
      s.interface_error = std::abs(interface_radius(mesh, result.final_configuration) - xi);
    }
  }
  if (result.completed)
    s.waiting_time = onset_of_motion(s.times, s.xi_right, cfg.onset_margin);

  s.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  write_summary(out, cfg, s);
  return s;
}

/// The axisymmetric (annulus chain) experiment path.  The mesh spec must be
/// `radial:<R | auto>,<n>`; snapshots list one annulus per row.
inline ExperimentSummary run_axisym_experiment(const ExperimentConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  const ResolvedDatum<2> datum = resolve_datum<2>(cfg);
  if (!datum.radial)
    throw config_error("config: axisym runs need a radially symmetric datum");
  const auto colon = cfg.mesh.find(':');
  const std::string kind = cfg.mesh.substr(0, colon);
  const auto args = colon == std::string::npos ? std::vector<std::string>{}
                                               : split(cfg.mesh.substr(colon + 1), ',');
  if (kind != "radial" || args.size() != 2)
    throw config_error("config: axisym runs need mesh = radial:<R|auto>,<n>, got '" + cfg.mesh +
                       "'");
  const double R = mesh_arg_radius(args[0], datum.support_radius, cfg.mesh);
  const int n = parse_int("mesh", args[1]);
  const radial::AxisymmetricGrid grid = radial::make_uniform_grid(R, n, datum.radial);
  const EnergyLaw law(cfg.law, cfg.alpha);

  const std::filesystem::path out(cfg.out);
  std::filesystem::create_directories(out / "snapshots");
  std::filesystem::create_directories(out / "nodes");

  ExperimentSummary s;
  s.n_mesh_nodes = grid.n_nodes();
  CsvFile steps_csv(out / "steps.csv",
                    "step,t,newton_iterations,residual,energy_before,energy_after,"
                    "dissipation,margin,accepted");
  CsvFile itf_csv(out / "interface.csv", "t,xi_radial");

  auto write_state = [&](int step, const Eigen::VectorXd& r) {
    CsvFile snap(out / "snapshots" / (std::to_string(step) + ".csv"), "elem,xc,yc,detF,rho");
    const auto rho = radial::density(grid, r);
    for (int e = 0; e < grid.n_annuli(); ++e) {
      const double mid = 0.5 * (r[e] + r[e + 1]);
      const double A = M_PI * (r[e + 1] * r[e + 1] - r[e] * r[e]);
      snap.row({std::to_string(e), format(mid), format(0.0), format(A / grid.area0[e]),
                format(rho[e])});
    }
    CsvFile nodes(out / "nodes" / (std::to_string(step) + ".csv"), "node,x,y,rho");
    for (int i = 0; i < grid.n_nodes(); ++i) {
      double mass = 0.0, area = 0.0;
      for (int e = std::max(0, i - 1); e < std::min(grid.n_annuli(), i + 1); ++e) {
        mass += grid.rho_mid[e] * grid.area0[e];
        area += M_PI * (r[e + 1] * r[e + 1] - r[e] * r[e]);
      }
      nodes.row({std::to_string(i), format(r[i]), format(0.0), format(mass / area)});
    }
  };

  Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(grid.R.data(), grid.n_nodes());
  double mass0 = 0.0;
  for (int e = 0; e < grid.n_annuli(); ++e) mass0 += grid.rho_mid[e] * grid.area0[e];

  write_state(0, r);
  itf_csv.row({format(0.0), format(r[r.size() - 1])});
  s.times.push_back(0.0);
  s.xi_right.push_back(r[r.size() - 1]);

  bool monotone = true;
  int last_snapshot = 0;
  const long n_steps = std::lround(std::ceil(cfg.T / cfg.tau - 1e-12));
  double t = 0.0;
  for (long k = 1; k <= n_steps; ++k) {
    const double dt = std::min(cfg.tau, cfg.T - t);
    StepReport rep;
    try {
      rep = radial::step(grid, law, r, dt, cfg.newton);
    } catch (const std::runtime_error& err) {
      s.completed = false;
      s.error = "step " + std::to_string(k) + ": " + err.what();
      break;
    }
    t += dt;
    s.steps_taken = static_cast<int>(k);
    s.final_time = t;
    write_step_row(steps_csv, static_cast<int>(k), t, rep);
    itf_csv.row({format(t), format(r[r.size() - 1])});
    s.times.push_back(t);
    s.xi_right.push_back(r[r.size() - 1]);
    s.min_margin = std::min(s.min_margin, rep.margin);
    const double slack = 1e-9 * std::max(1.0, std::abs(rep.energy_before));
    if (rep.energy_after > rep.energy_before + slack) monotone = false;
    if (std::isfinite(rep.energy_before) && std::isfinite(rep.energy_after)) {
      const double excess = (rep.energy_after + dt * rep.dissipation - rep.energy_before) /
                            std::max(1.0, std::abs(rep.energy_before));
      s.max_energy_law_violation = std::max(s.max_energy_law_violation, excess);
    }
    double mass = 0.0;
    const auto rho = radial::density(grid, r);
    for (int e = 0; e < grid.n_annuli(); ++e)
      mass += rho[e] * M_PI * (r[e + 1] * r[e + 1] - r[e] * r[e]);
    s.max_mass_drift =
        std::max(s.max_mass_drift, std::abs(mass - mass0) / std::max(1.0, mass0));
    if (k % cfg.cadence == 0) {
      write_state(static_cast<int>(k), r);
      last_snapshot = static_cast<int>(k);
    }
  }
  if (s.completed) s.energy_monotone = monotone;
  if (s.completed && s.steps_taken > 0 && s.steps_taken != last_snapshot)
    write_state(s.steps_taken, r);

  if (s.completed && datum.exact) {
    const Barenblatt& bb = *datum.exact;
    const double t_end = cfg.datum_t0 + cfg.T;
    const auto rho = radial::density(grid, r);
    double acc = 0.0;
    for (int e = 0; e < grid.n_annuli(); ++e) {
      const double mid = 0.5 * (r[e] + r[e + 1]);
      const double A = M_PI * (r[e + 1] * r[e + 1] - r[e] * r[e]);
      const double diff = rho[e] - bb.value(mid, t_end);
      acc += diff * diff * A;
    }
    s.l2_error = std::sqrt(acc);
    s.interface_error = std::abs(r[r.size() - 1] - bb.radius(t_end));
  }
  if (s.completed) s.waiting_time = onset_of_motion(s.times, s.xi_right, cfg.onset_margin);

  s.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  write_summary(out, cfg, s);
  return s;
}

}  // namespace detail

/// Runs one experiment, writing all artifacts under cfg.out.  Solver
/// failures are reported in the summary (and returned), not thrown.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  if (cfg.axisym) return detail::run_axisym_experiment(cfg);
  if (cfg.dim == 1) return detail::run_mesh_experiment<1>(cfg);
  return detail::run_mesh_experiment<2>(cfg);
}

// ---------------------------------------------------------------------------
// Refinement-ladder sweeps

struct LadderRow {
  int n = 0;           ///< requested node count (recorded; 1D meshes use it directly)
  double tau = 0.0;
  std::string mesh;    ///< optional per-row mesh spec; empty = substitute {N}
};

/// Ladder file: one `N tau [mesh-spec]` row per line, '#' comments.
inline std::vector<LadderRow> parse_ladder(std::istream& in) {
  std::vector<LadderRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    std::stringstream ss(text);
    LadderRow row;
    std::string n_tok, tau_tok;
    if (!(ss >> n_tok >> tau_tok))
      throw config_error("ladder line " + std::to_string(line_no) + ": expected N tau");
    row.n = detail::parse_int("ladder N", n_tok);
    row.tau = detail::parse_number("ladder tau", tau_tok);
    ss >> row.mesh;  // optional
    if (row.n < 2 || !(row.tau > 0.0))
      throw config_error("ladder line " + std::to_string(line_no) + ": need N >= 2 and tau > 0");
    rows.push_back(row);
  }
  if (rows.empty()) throw config_error("ladder: no rows");
  return rows;
}

inline std::vector<LadderRow> parse_ladder_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("ladder: cannot open '" + path + "'");
  return parse_ladder(in);
}

struct SweepResult {
  std::vector<ExperimentSummary> rows;
  std::vector<double> mesh_sizes;  ///< from the actual node counts
};

/// Runs the base configuration once per ladder row (mesh and tau swapped in,
/// outputs under <out>/row<k>/) and writes <out>/convergence.csv with the
/// errors of each row and the observed orders between consecutive rows.
inline SweepResult run_sweep(const ExperimentConfig& base, const std::vector<LadderRow>& ladder) {
  SweepResult result;
  const std::filesystem::path out(base.out);
  std::filesystem::create_directories(out);

  for (size_t k = 0; k < ladder.size(); ++k) {
    ExperimentConfig cfg = base;
    cfg.tau = ladder[k].tau;
    if (!ladder[k].mesh.empty()) {
      cfg.mesh = ladder[k].mesh;
    } else {
      const std::string placeholder = "{N}";
      const auto pos = cfg.mesh.find(placeholder);
      if (pos == std::string::npos)
        throw config_error("sweep: ladder row has no mesh spec and base mesh '" + cfg.mesh +
                           "' has no {N} placeholder");
      cfg.mesh = cfg.mesh.substr(0, pos) + std::to_string(ladder[k].n) +
                 cfg.mesh.substr(pos + placeholder.size());
    }
    cfg.out = (out / ("row" + std::to_string(k))).string();
    ExperimentSummary s = run_experiment(cfg);
    if (!s.completed)
      throw std::runtime_error("sweep row " + std::to_string(k) + " failed: " + s.error);
    result.mesh_sizes.push_back(base.dim == 1 ? mesh_size_for<1>(s.n_mesh_nodes)
                                              : mesh_size_for<2>(s.n_mesh_nodes));
    result.rows.push_back(std::move(s));
  }

  detail::CsvFile csv(out / "convergence.csv",
                      "N,tau,l2_error,l2_order,origin_error,origin_order,"
                      "interface_error,interface_order");
  auto order_cell = [&](size_t k, const std::optional<double>& prev,
                        const std::optional<double>& cur) -> std::string {
    if (k == 0 || !prev || !cur || !(*prev > 0.0) || !(*cur > 0.0)) return "";
    return detail::format(std::log(*prev / *cur) /
                          std::log(result.mesh_sizes[k - 1] / result.mesh_sizes[k]));
  };
  auto value_cell = [](const std::optional<double>& v) {
    return v ? detail::format(*v) : std::string{};
  };
  for (size_t k = 0; k < result.rows.size(); ++k) {
    const ExperimentSummary& s = result.rows[k];
    const ExperimentSummary* prev = k ? &result.rows[k - 1] : nullptr;
    csv.row({std::to_string(s.n_mesh_nodes), detail::format(ladder[k].tau),
             value_cell(s.l2_error), order_cell(k, prev ? prev->l2_error : std::nullopt, s.l2_error),
             value_cell(s.origin_error),
             order_cell(k, prev ? prev->origin_error : std::nullopt, s.origin_error),
             value_cell(s.interface_error),
             order_cell(k, prev ? prev->interface_error : std::nullopt, s.interface_error)});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Presets

struct Preset {
  std::string config;  ///< flat key = value text
  std::string ladder;  ///< empty for single runs
};

/// Named, self-contained experiment definitions.  Sweep presets carry their
/// refinement ladder; single runs just a configuration.
inline const std::map<std::string, Preset>& preset_catalog() {
  static const std::map<std::string, Preset> catalog = {
      // -- 1D self-similar convergence (error tables) --------------------
      {"table1-scheme2-alpha4-N51",
       {"law = 2\nalpha = 4\ndim = 1\nmesh = support:51\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 20\n",
        ""}},
      {"table1-scheme1-alpha4-N51",
       {"law = 1\nalpha = 4\ndim = 1\nmesh = support:51\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 20\n",
        ""}},
      {"table1-scheme2-alpha3",
       {"law = 2\nalpha = 3\ndim = 1\nmesh = support:{N}\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 1000000\n",
        "51 0.01\n101 0.0025\n201 0.000625\n"}},
      {"table1-scheme2-alpha4",
       {"law = 2\nalpha = 4\ndim = 1\nmesh = support:{N}\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 1000000\n",
        "51 0.01\n101 0.0025\n201 0.000625\n"}},
      {"table1-scheme1-alpha3",
       {"law = 1\nalpha = 3\ndim = 1\nmesh = support:{N}\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 1000000\n",
        "51 0.01\n101 0.0025\n201 0.000625\n"}},
      // -- 1D right-interface errors -------------------------------------
      {"table2-alpha4",
       {"law = 2\nalpha = 4\ndim = 1\nmesh = support:{N}\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 1000000\n",
        "51 0.01\n101 0.0025\n"}},
      {"table2-alpha5",
       {"law = 2\nalpha = 5\ndim = 1\nmesh = support:{N}\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 1000000\n",
        "51 0.01\n101 0.0025\n"}},
      {"table2-alpha6",
       {"law = 2\nalpha = 6\ndim = 1\nmesh = support:{N}\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 1000000\n",
        "51 0.01\n101 0.0025\n"}},
      {"table2-alpha8",
       {"law = 2\nalpha = 8\ndim = 1\nmesh = support:{N}\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 1000000\n",
        "51 0.01\n101 0.0025\n"}},
      // -- 1D qualitative runs --------------------------------------------
      {"fig1-barenblatt-1d",
       {"law = 2\nalpha = 4\ndim = 1\nmesh = support:101\ndatum = barenblatt\n"
        "tau = 0.005\nT = 2\ncadence = 50\n",
        ""}},
      {"fig3-alpha5over3",
       {"law = 2\nalpha = 1.6666666666666667\ndim = 1\nmesh = support:101\n"
        "datum = barenblatt\ntau = 0.01\nT = 1\ncadence = 20\n",
        ""}},
      {"fig3-alpha1p1",
       {"law = 2\nalpha = 1.1\ndim = 1\nmesh = support:101\ndatum = barenblatt\n"
        "tau = 0.01\nT = 1\ncadence = 20\n",
        ""}},
      // -- 1D waiting time --------------------------------------------------
      {"waiting-1d-theta0-alpha4",
       {"law = 2\nalpha = 4\ndim = 1\nmesh = support:105,1\ndatum = sine_power\n"
        "datum_theta = 0\ntau = 0.0001\nT = 0.15\ncadence = 200\n",
        ""}},
      {"waiting-1d-theta05-alpha7",
       {"law = 2\nalpha = 7\ndim = 1\nmesh = support:105,1\ndatum = sine_power\n"
        "datum_theta = 0.5\ntau = 0.0001\nT = 0.2\ncadence = 200\n",
        ""}},
      // -- 2D self-similar convergence (bundled irregular disk meshes; see
      //    tools/make_disk_meshes.py; run from the repository root) -----------
      {"table3-alpha2",
       {"law = 2\nalpha = 2\ndim = 2\nmesh = file:meshes/disk_a2_n132.txt\n"
        "datum = barenblatt\ndatum_c0 = 0.1\ntau = 0.01\nT = 0.1\ncadence = 1000000\n",
        "132 0.01 file:meshes/disk_a2_n132.txt\n"
        "524 0.0025 file:meshes/disk_a2_n524.txt\n"
        "2103 0.000625 file:meshes/disk_a2_n2103.txt\n"}},
      {"table3-alpha4",
       {"law = 2\nalpha = 4\ndim = 2\nmesh = file:meshes/disk_a4_n135.txt\n"
        "datum = barenblatt\ndatum_c0 = 0.1\ntau = 0.01\nT = 0.1\ncadence = 1000000\n",
        "135 0.01 file:meshes/disk_a4_n135.txt\n"
        "516 0.0025 file:meshes/disk_a4_n516.txt\n"
        "2124 0.000625 file:meshes/disk_a4_n2124.txt\n"}},
      {"barenblatt-2d-alpha4-n516",
       {"law = 2\nalpha = 4\ndim = 2\nmesh = file:meshes/disk_a4_n516_graded.txt\n"
        "datum = barenblatt\ndatum_c0 = 0.1\ntau = 0.01\nT = 1\ncadence = 20\n",
        ""}},
      // -- 2D waiting time ----------------------------------------------------
      {"waiting-2d",
       {"law = 2\nalpha = 4\ndim = 2\nmesh = disk:1.0,19,0.98,4,3\ndatum = cosine_bump\n"
        "tau = 0.001\nT = 0.5\ncadence = 100\n",
        ""}},
      {"waiting-2d-axisym",
       {"law = 2\nalpha = 4\ndim = 2\naxisym = 1\nmesh = radial:1.0,201\n"
        "datum = cosine_bump\ntau = 0.0001\nT = 0.5\ncadence = 1000\n",
        ""}},
      // -- 2D qualitative runs -------------------------------------------------
      {"donut-alpha3",
       {"law = 2\nalpha = 3\ndim = 2\nmesh = horseshoe:0.5,1.0,10,74\ndatum = donut\n"
        "tau = 0.01\nT = 0.2\ncadence = 2\n",
        ""}},
      {"peaks-merge-alpha4",
       {"law = 2\nalpha = 4\ndim = 2\nmesh = square:-1,1,28\ndatum = two_peaks\n"
        "boundary = pinned\ntau = 0.01\nT = 5\ncadence = 50\n",
        ""}},
  };
  return catalog;
}

/// Materializes a preset under out_dir (config.txt plus ladder.txt for
/// sweeps) and runs it.  Unknown names list the catalog in the error.
inline ExperimentSummary run_preset(const std::string& name, const std::string& out_dir) {
  const auto& catalog = preset_catalog();
  const auto it = catalog.find(name);
  if (it == catalog.end()) {
    std::string known;
    for (const auto& [k, v] : catalog) known += (known.empty() ? "" : ", ") + k;
    throw config_error("unknown preset '" + name + "'; available: " + known);
  }
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream cfg_file(std::filesystem::path(out_dir) / "config.txt");
    cfg_file << it->second.config;
  }
  ExperimentConfig cfg = parse_config_text(it->second.config);
  cfg.out = out_dir;
  if (it->second.ladder.empty()) return run_experiment(cfg);
  {
    std::ofstream ladder_file(std::filesystem::path(out_dir) / "ladder.txt");
    ladder_file << it->second.ladder;
  }
  std::stringstream ss(it->second.ladder);
  const SweepResult sweep = run_sweep(cfg, parse_ladder(ss));
  return sweep.rows.back();
}

}  // namespace lagdiff

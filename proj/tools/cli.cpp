// CLI11 must precede Eigen: the LAPACKE backend pulls in <complex.h>, which defines I.
#include "CLI11.hpp"

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "dgtau/conforming.hpp"
#include "dgtau/error.hpp"
#include "dgtau/mesh.hpp"
#include "dgtau/refelem.hpp"
#include "dgtau/spectral.hpp"
#include "dgtau/tauanalysis.hpp"
#include "dgtau/timedomain.hpp"
#include "dgtau/version.hpp"

namespace dgtau::cli {

namespace fs = std::filesystem;
using io::Json;

const std::vector<std::string> kCommands = {"assemble",      "spectrum",        "sweep",       "track",
                                            "verify-lemma",  "conforming-dims", "expand-mode", "integrate"};
const std::vector<std::string> kPresets = {"fig1", "fig2", "fig3", "fig4", "fig5",
                                           "fig6", "fig7", "fig8", "fig9", "fig10"};

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  throw InvalidInput("config field '" + field + "': " + msg);
}

template <typename T>
T get_field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    field_error(key, "has the wrong type");
  }
}

void validate(const RunConfig& c) {
  try {
    make_system(c.system, Eigen::Vector2d(c.beta[0], c.beta[1]));
  } catch (const InvalidInput& e) {
    field_error("system", e.what());
  }
  try {
    flux_kind_from_string(c.flux);
  } catch (const InvalidInput& e) {
    field_error("flux", e.what());
  }
  for (double t : c.taus)
    if (!(t >= 0.0) || !std::isfinite(t)) field_error("taus", "samples must be finite and >= 0");
  if (c.elements < 1) field_error("elements", "must be >= 1");
  if (c.nx < 1) field_error("nx", "must be >= 1");
  if (c.ny < 1) field_error("ny", "must be >= 1");
  if (c.degree < 0) field_error("degree", "must be >= 0");
  if (!c.domain.empty() && c.domain.size() != 2 && c.domain.size() != 4)
    field_error("domain", "expects [a, b] in 1D or [x0, x1, y0, y1] in 2D");
  if (!c.bc.empty()) {
    try {
      boundary_kind_from_string(c.bc);
    } catch (const InvalidInput& e) {
      field_error("bc", e.what());
    }
  }
  if (!(c.mode_tau > 0.0)) field_error("mode_tau", "must be > 0");
  if (!(c.basis_tau >= 0.0)) field_error("basis_tau", "must be >= 0");
  if (!(c.return_factor > 1.0)) field_error("return_factor", "must be > 1");
  if (!(c.coefficient_threshold > 0.0)) field_error("coefficient_threshold", "must be > 0");
  if (c.candidates < 1) field_error("candidates", "must be >= 1");
  if (c.steps < 0) field_error("steps", "must be >= 0");
  if (!(c.dt >= 0.0)) field_error("dt", "must be >= 0 (0 selects the cap)");
  if (!(c.cfl > 0.0)) field_error("cfl", "must be > 0");
  if (c.init != "gaussian" && c.init != "random" && c.init != "mode")
    field_error("init", "expects gaussian, random or mode");
  if (c.mode_index < 0) field_error("mode_index", "must be >= 0");
  if (c.snapshot_every < 0) field_error("snapshot_every", "must be >= 0");
  if (!c.preset.empty() && std::find(kPresets.begin(), kPresets.end(), c.preset) == kPresets.end())
    field_error("preset", "unknown preset '" + c.preset + "'");
}

}  // namespace

std::vector<double> parse_tau_range(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  auto fail = [&](const std::string& why) -> std::vector<double> {
    throw InvalidInput("tau range '" + spec + "': " + why + " (expected a:b:n or a:b:logn)");
  };
  if (parts.size() != 3) return fail("needs three fields");
  double a = 0.0, b = 0.0;
  int n = 0;
  bool geometric = false;
  try {
    std::size_t pos = 0;
    a = std::stod(parts[0], &pos);
    if (pos != parts[0].size()) return fail("bad start");
    b = std::stod(parts[1], &pos);
    if (pos != parts[1].size()) return fail("bad end");
    std::string count = parts[2];
    if (count.rfind("log", 0) == 0) {
      geometric = true;
      count = count.substr(3);
    }
    n = std::stoi(count, &pos);
    if (pos != count.size()) return fail("bad count");
  } catch (const std::logic_error&) {
    return fail("not a number");
  }
  if (!(a >= 0.0) || !(b > a) || !std::isfinite(b)) return fail("need 0 <= a < b");
  if (n < 2) return fail("need at least two samples");
  if (geometric && !(a > 0.0)) return fail("geometric ranges need a > 0");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    out[i] = geometric ? a * std::pow(b / a, s) : a + (b - a) * s;
  }
  out.front() = a;
  out.back() = b;
  return out;
}

RunConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  static const std::vector<std::string> known = {
      "system", "flux",      "tau",           "taus",       "tau_range",     "elements",
      "nx",     "ny",        "domain",        "bc",         "degree",        "beta",
      "track",  "export_matrices", "mode_tau", "basis_tau", "return_factor", "coefficient_threshold",
      "candidates", "steps", "dt",            "cfl",        "init",          "mode_index",
      "snapshot_every", "preset", "output"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) field_error(key, "unknown field");

  RunConfig c;
  c.system = get_field(j, "system", c.system);
  c.flux = get_field(j, "flux", c.flux);
  const int tau_sources = j.contains("tau") + j.contains("taus") + j.contains("tau_range");
  if (tau_sources > 1) field_error("tau", "give only one of tau, taus, tau_range");
  if (j.contains("tau")) c.taus = {get_field(j, "tau", 0.0)};
  if (j.contains("taus")) c.taus = get_field(j, "taus", std::vector<double>{});
  if (j.contains("tau_range")) {
    try {
      c.taus = parse_tau_range(get_field(j, "tau_range", std::string()));
    } catch (const InvalidInput& e) {
      field_error("tau_range", e.what());
    }
  }
  c.elements = get_field(j, "elements", c.elements);
  c.nx = get_field(j, "nx", c.nx);
  c.ny = get_field(j, "ny", c.ny);
  c.domain = get_field(j, "domain", c.domain);
  c.bc = get_field(j, "bc", c.bc);
  c.degree = get_field(j, "degree", c.degree);
  if (j.contains("beta")) {
    const auto beta = get_field(j, "beta", std::vector<double>{});
    if (beta.size() != 2) field_error("beta", "expects two components");
    c.beta = {beta[0], beta[1]};
  }
  c.track = get_field(j, "track", c.track);
  c.export_matrices = get_field(j, "export_matrices", c.export_matrices);
  c.mode_tau = get_field(j, "mode_tau", c.mode_tau);
  c.basis_tau = get_field(j, "basis_tau", c.basis_tau);
  c.return_factor = get_field(j, "return_factor", c.return_factor);
  c.coefficient_threshold = get_field(j, "coefficient_threshold", c.coefficient_threshold);
  c.candidates = get_field(j, "candidates", c.candidates);
  c.steps = get_field(j, "steps", c.steps);
  c.dt = get_field(j, "dt", c.dt);
  c.cfl = get_field(j, "cfl", c.cfl);
  c.init = get_field(j, "init", c.init);
  c.mode_index = get_field(j, "mode_index", c.mode_index);
  c.snapshot_every = get_field(j, "snapshot_every", c.snapshot_every);
  c.preset = get_field(j, "preset", c.preset);
  validate(c);
  return c;
}

Json config_to_json(const RunConfig& c) {
  Json j;
  j["system"] = c.system;
  j["flux"] = c.flux;
  j["taus"] = c.taus;
  j["elements"] = c.elements;
  j["nx"] = c.nx;
  j["ny"] = c.ny;
  j["domain"] = c.domain;
  j["bc"] = c.bc;
  j["degree"] = c.degree;
  j["beta"] = {c.beta[0], c.beta[1]};
  j["track"] = c.track;
  j["export_matrices"] = c.export_matrices;
  j["mode_tau"] = c.mode_tau;
  j["basis_tau"] = c.basis_tau;
  j["return_factor"] = c.return_factor;
  j["coefficient_threshold"] = c.coefficient_threshold;
  j["candidates"] = c.candidates;
  j["steps"] = c.steps;
  j["dt"] = c.dt;
  j["cfl"] = c.cfl;
  j["init"] = c.init;
  j["mode_index"] = c.mode_index;
  j["snapshot_every"] = c.snapshot_every;
  j["preset"] = c.preset;
  return j;
}

fs::path output_root() {
  const char* env = std::getenv("DGTAU_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::current_path();
}

namespace {

struct Problem {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const ReferenceElement> ref;
  HyperbolicSystem system;
};

Problem make_problem(const RunConfig& c) {
  Problem p;
  p.system = make_system(c.system, Eigen::Vector2d(c.beta[0], c.beta[1]));
  const bool acoustic = p.system.has_wall_rule();
  const BoundaryKind bc = c.bc.empty() ? (acoustic ? BoundaryKind::Wall : BoundaryKind::Periodic)
                                       : boundary_kind_from_string(c.bc);
  if (p.system.dim == 1) {
    std::vector<double> d = c.domain.empty() ? std::vector<double>{-1.0, 1.0} : c.domain;
    if (d.size() != 2) field_error("domain", "1D systems expect [a, b]");
    p.mesh = std::make_shared<Mesh>(build_mesh_1d(c.elements, d[0], d[1], bc));
  } else {
    std::vector<double> d = c.domain.empty() ? std::vector<double>{-1.0, 1.0, -1.0, 1.0} : c.domain;
    if (d.size() != 4) field_error("domain", "2D systems expect [x0, x1, y0, y1]");
    p.mesh = std::make_shared<Mesh>(build_mesh_2d_bisected(c.nx, c.ny, d[0], d[1], d[2], d[3], bc));
  }
  p.ref = std::make_shared<ReferenceElement>(build_reference_element(p.system.dim, c.degree));
  return p;
}

DGOperator make_operator(const Problem& p, const std::string& flux, double tau) {
  return assemble(p.mesh, p.ref, p.system, make_flux(flux_kind_from_string(flux), tau));
}

/// The split induced by the penalization; central flux borrows the penalty constraint.
FluxKind split_kind(const DGOperator& op) {
  const FluxKind k = op.config().flux.kind;
  return k == FluxKind::Central ? FluxKind::Penalty : k;
}

double single_tau(const RunConfig& c, const char* command) {
  if (c.taus.empty()) return 1.0;
  if (c.taus.size() != 1) throw InvalidInput(std::string(command) + " takes a single tau");
  return c.taus.front();
}

std::vector<double> taus_or(const RunConfig& c, const std::string& fallback) {
  return c.taus.empty() ? parse_tau_range(fallback) : c.taus;
}

std::string tau_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

struct Out {
  fs::path dir;
  std::vector<std::string> files;

  fs::path operator()(const std::string& name) {
    if (std::find(files.begin(), files.end(), name) == files.end()) files.push_back(name);
    return dir / name;
  }
};

Json spectrum_stats(const Spectrum& s) {
  Json j;
  j["tau"] = s.tau;
  j["n"] = s.size();
  j["max_re"] = s.size() ? s.eigenvalues.real().maxCoeff() : 0.0;
  j["min_re"] = s.size() ? s.eigenvalues.real().minCoeff() : 0.0;
  j["spectral_radius"] = s.size() ? s.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  j["max_residual"] = s.max_residual;
  return j;
}

Json returning_to_json(const ReturningMode& m) {
  return {{"path", m.path},
          {"peak_tau", m.peak_tau},
          {"peak", io::complex_to_json(m.peak_value)},
          {"end", io::complex_to_json(m.end_value)},
          {"ratio", m.ratio}};
}

// ---------------------------------------------------------------- commands

void cmd_assemble(const RunConfig& c, Out& out, Json& summary) {
  const Problem p = make_problem(c);
  const DGOperator op = make_operator(p, c.flux, single_tau(c, "assemble"));
  const Eigen::MatrixXd k0 = op.congruence(op.central_part());
  const double k0_norm = k0.norm();
  summary["n"] = op.size();
  summary["n_elements"] = op.dofs().n_elements;
  summary["n_nodes"] = op.dofs().n_nodes;
  summary["n_fields"] = op.dofs().n_fields;
  summary["tau"] = op.tau();
  summary["central_skew_defect"] = k0_norm > 0.0 ? (k0 + k0.transpose()).norm() / k0_norm : 0.0;
  summary["k_norm"] = op.k_matrix().norm();
  io::write_json(out("mesh.json"), io::mesh_to_json(*p.mesh));
  if (c.export_matrices) {
    io::write_matrix_market(out("K.mtx"), op.k_matrix());
    io::write_matrix_market(out("M.mtx"), op.m_matrix());
  }
}

void cmd_spectrum(const RunConfig& c, Out& out, Json& summary, const std::string& name = "spectrum.csv") {
  const Problem p = make_problem(c);
  const std::vector<double> taus = c.taus.empty() ? std::vector<double>{1.0} : c.taus;
  const DGOperator base = make_operator(p, c.flux, taus.front());
  if (taus.size() > 1 && !base.config().flux.tau_dependent())
    throw InvalidInput("flux '" + c.flux + "' does not depend on tau; give a single tau");
  const ConformingSplit split = build_conforming_split(base, split_kind(base));
  std::vector<Spectrum> spectra;
  std::vector<std::vector<PartitionNorms>> parts;
  Json stats = Json::array();
  for (double t : taus) {
    const DGOperator op = t == taus.front() ? base : base.at_tau(t);
    spectra.push_back(compute_spectrum(op));
    parts.push_back(eigenvector_partition(spectra.back(), split, op.m_matrix()));
    stats.push_back(spectrum_stats(spectra.back()));
  }
  io::write_spectrum_csv(out(name), spectra, parts);
  summary["spectra"] = stats;
  summary["n_conforming"] = split.n_conforming();
  summary["n_nonconforming"] = split.n_nonconforming();
}

SpectrumSweep run_sweep(const DGOperator& op, const std::vector<double>& taus, bool track, bool eigenvectors) {
  SweepOptions so;
  so.track = track;
  so.eigenvectors = eigenvectors;
  return sweep(op, taus, so);
}

void cmd_sweep(const RunConfig& c, Out& out, Json& summary) {
  const Problem p = make_problem(c);
  const std::vector<double> taus = taus_or(c, "0:4:201");
  const DGOperator op = make_operator(p, c.flux, taus.front());
  const SpectrumSweep sw = run_sweep(op, taus, c.track, false);
  io::write_sweep_csv(out("sweep.csv"), sw);
  Json s = io::sweep_summary(sw);
  s["tracked"] = c.track;
  const BlockDecomposition blocks = block_decompose(op, build_conforming_split(op));
  s["gerschgorin_tau_star"] = minimal_disjoint_tau(gerschgorin_basis(blocks));
  Json ret = Json::array();
  const double hi = std::min(100.0, taus.back());
  if (c.track && hi > taus.front())
    for (const auto& m : find_returning_modes(sw, taus.front(), hi, c.return_factor)) ret.push_back(returning_to_json(m));
  s["returning"] = ret;
  summary["sweep"] = s;
}

/// Returning candidates continued from tau_hi down to tau_lo, optionally extended further down.
struct Family {
  std::vector<ContinuedReturningMode> modes;
  std::vector<EigenpairPath> extended;  ///< tau_lo -> extend_to, same order as the returning modes
};

Family continue_family(const DGOperator& op, double lo, double hi, double factor, int candidates, double extend_to) {
  Family f;
  f.modes = find_returning_modes_continued(op, lo, hi, factor, candidates);
  if (extend_to < lo) {
    const Eigen::MatrixXd k0 = op.congruence(op.central_part());
    const Eigen::MatrixXd k1 = op.congruence(op.penalty_part());
    for (const auto& m : f.modes)
      if (m.returning)
        f.extended.push_back(continue_eigenpair(k0, k1, lo, m.path.values.back(), m.path.vector, extend_to));
  }
  return f;
}

void write_family(const Family& f, Out& out, Json& summary) {
  std::vector<EigenpairPath> paths;
  Json cands = Json::array();
  std::size_t ext = 0;
  for (const auto& m : f.modes) {
    Json j = returning_to_json(m.mode);
    j["returning"] = m.returning;
    if (!m.failure.empty()) {
      j["failure"] = m.failure;
      cands.push_back(j);
      continue;
    }
    j["value_at_tau_lo"] = io::complex_to_json(m.path.values.back());
    j["steps"] = m.path.taus.size();
    j["rejected_steps"] = m.path.rejected_steps;
    if (m.returning) {
      EigenpairPath merged = m.path;
      if (ext < f.extended.size()) {
        const auto& e = f.extended[ext++];
        merged.taus.insert(merged.taus.end(), e.taus.begin() + 1, e.taus.end());
        merged.values.insert(merged.values.end(), e.values.begin() + 1, e.values.end());
        j["value_at_extension_end"] = io::complex_to_json(e.values.back());
      }
      j["path_id"] = paths.size();
      paths.push_back(std::move(merged));
    }
    cands.push_back(j);
  }
  io::write_paths_csv(out("paths.csv"), paths, to_string(PathClass::ConformingLimit));
  summary["candidates"] = cands;
  summary["n_returning"] = paths.size();
}

void cmd_track(const RunConfig& c, Out& out, Json& summary) {
  const Problem p = make_problem(c);
  const std::vector<double> taus = c.taus.empty() ? std::vector<double>{1.0, 100.0} : c.taus;
  if (taus.size() != 2) throw InvalidInput("track takes a window [tau_lo, tau_hi] (two samples)");
  const DGOperator op = make_operator(p, c.flux, taus.back());
  const Family f = continue_family(op, taus.front(), taus.back(), c.return_factor, c.candidates, taus.front());
  Json s;
  s["tau_lo"] = taus.front();
  s["tau_hi"] = taus.back();
  write_family(f, out, s);
  summary["track"] = s;
}

void cmd_verify_lemma(const RunConfig& c, Out& out, Json& summary) {
  const Problem p = make_problem(c);
  const std::vector<double> taus = taus_or(c, "100:10000:log21");
  const DGOperator op = make_operator(p, c.flux, taus.front());
  const SpectrumSweep sw = run_sweep(op, taus, true, false);
  const BlockDecomposition blocks = block_decompose(op, build_conforming_split(op));
  const LemmaReport rep = verify_lemma_rates(sw, blocks);
  Json j = io::lemma_to_json(rep);
  const bool div_ok = rep.max_divergent_error <= 0.05 && rep.n_divergent == sw.n_nonconforming;
  const bool conv_ok = rep.n_convergent == sw.n_conforming && rep.n_convergent > rep.n_roundoff &&
                       rep.min_convergent_slope >= -1.3 && rep.max_convergent_slope <= -0.7;
  const bool dist_ok = rep.max_final_distance <= 1e-3;
  j["criteria"] = {{"divergence_slopes_within_5_percent", div_ok},
                   {"convergence_slopes_in_range", conv_ok},
                   {"final_distance_at_most_1e-3", dist_ok}};
  j["passed"] = div_ok && conv_ok && dist_ok;
  j["unresolved_crossings"] = sw.unresolved.size();
  io::write_json(out("lemma.json"), j);
  summary["lemma_passed"] = j["passed"];
}

void cmd_conforming_dims(const RunConfig& c, Out& out, Json& summary) {
  const Problem p = make_problem(c);
  const DGOperator op = make_operator(p, "penalty", 1.0);
  Json j;
  j["n"] = op.size();
  for (FluxKind k : {FluxKind::Penalty, FluxKind::Upwind, FluxKind::LaxFriedrichs}) {
    const ConformingSplit s = build_conforming_split(op, k);
    j[to_string(k)] = {{"n_conforming", s.n_conforming()}, {"n_nonconforming", s.n_nonconforming()}, {"rank", s.rank}};
  }
  try {
    j["closed_form_n_conforming"] = expected_conforming_dimension(p.system, *p.mesh, c.degree);
  } catch (const InvalidInput&) {
    j["closed_form_n_conforming"] = nullptr;
  }
  io::write_json(out("conforming_dims.json"), j);
  summary["conforming_dims"] = j;
}

/// Default expansion grid: zero plus 20 samples per decade on [1e-2, mode_tau].
std::vector<double> expansion_grid(const RunConfig& c) {
  if (!c.taus.empty()) return c.taus;
  return log_grid(1e-2, c.mode_tau, 20, true);
}

void write_path_modes(const DGOperator& op, const SpectrumSweep& sw, int path, const std::vector<double>& taus,
                      Out& out, const std::string& prefix) {
  for (double t : taus) {
    const int s = sw.sample_index(t);
    if (s < 0) throw InvalidInput("tau " + tau_label(t) + " is not a sweep sample");
    io::write_mode_csv(out(prefix + "_tau_" + tau_label(t) + ".csv"), op, sw.spectra[s].eigenvectors.col(sw.paths[path][s]));
  }
}

void cmd_expand_mode(const RunConfig& c, Out& out, Json& summary, const std::vector<double>& mode_taus = {}) {
  const Problem p = make_problem(c);
  const std::vector<double> taus = expansion_grid(c);
  const DGOperator op = make_operator(p, c.flux, taus.front());
  const SpectrumSweep sw = run_sweep(op, taus, true, true);
  const int end = sw.sample_index(c.mode_tau);
  if (end < 0) throw InvalidInput("mode_tau must be one of the sweep samples");
  const auto modes = find_returning_modes(sw, taus.front(), c.mode_tau, c.return_factor);
  const int pick = highest_frequency_returning_mode(sw, modes);
  if (pick < 0) throw NumericalFailure("expand-mode: no returning conforming-limit mode in the window");
  const int path = modes[pick].path;

  const Spectrum basis = compute_spectrum(op.at_tau(c.basis_tau));
  Json j;
  j["mode"] = returning_to_json(modes[pick]);
  j["basis_tau"] = c.basis_tau;
  Json exps;
  for (int s : {0, end}) {
    const ModalExpansion e = expand_in_tau1_basis(sw.spectra[s].eigenvectors.col(sw.paths[path][s]), basis);
    exps["tau_" + tau_label(sw.taus[s])] = io::expansion_to_json(e, c.coefficient_threshold);
  }
  j["expansions"] = exps;
  io::write_json(out("expansion.json"), j);
  std::vector<double> shown = mode_taus.empty() ? std::vector<double>{sw.taus.front(), c.mode_tau} : mode_taus;
  write_path_modes(op, sw, path, shown, out, "mode");
  summary["expand_mode"] = {{"path", path}, {"end", io::complex_to_json(modes[pick].end_value)}};
}

Eigen::VectorXd initial_state(const RunConfig& c, const DGOperator& op) {
  const DofMap& dofs = op.dofs();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(op.size());
  if (c.init == "random") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = dist(rng);
  } else if (c.init == "gaussian") {
    const Mesh& mesh = *op.config().mesh;
    Eigen::RowVectorXd center = mesh.vertices.colwise().minCoeff() + mesh.vertices.colwise().maxCoeff();
    center *= 0.5;
    for (int k = 0; k < dofs.n_elements; ++k) {
      const Eigen::MatrixXd x = mesh.map_to_physical(k, op.config().ref->nodes);
      for (int j = 0; j < dofs.n_nodes; ++j) {
        const double r2 = (x.row(j).leftCols(center.size()) - center).squaredNorm();
        u(dofs.index(k, 0, j)) = std::exp(-r2 / (2.0 * 0.2 * 0.2));
      }
    }
  } else {
    const Spectrum s = compute_spectrum(op.at_tau(c.mode_tau));
    if (c.mode_index >= s.size()) field_error("mode_index", "exceeds the number of eigenpairs");
    u = s.eigenvectors.col(c.mode_index).real();
    const double e = op.energy(u);
    if (e > 0.0) u /= std::sqrt(e);
  }
  return u;
}

void cmd_integrate(const RunConfig& c, Out& out, Json& summary) {
  const Problem p = make_problem(c);
  const DGOperator op = make_operator(p, c.flux, single_tau(c, "integrate"));
  const Eigen::VectorXd u0 = initial_state(c, op);
  IntegrateOptions opts;
  opts.cfl = c.cfl;
  opts.spectral_radius = spectral_radius(op);
  opts.snapshot_every = c.snapshot_every;
  const double dt = c.dt > 0.0 ? c.dt : c.cfl / std::max(opts.spectral_radius, std::numeric_limits<double>::min());
  const EnergyTrace tr = integrate(op, u0, dt, c.steps, opts);
  io::write_energy_csv(out("energy.csv"), tr);
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof name, "snapshot_%06d.csv", static_cast<int>(i) * c.snapshot_every);
    io::write_mode_csv(out(name), op, tr.snapshots[i].cast<Complex>());
  }
  double growth = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < tr.energies.size(); ++i)
    if (tr.energies[i - 1] > 0.0) growth = std::max(growth, tr.energies[i] / tr.energies[i - 1] - 1.0);
  summary["integrate"] = {{"dt", dt},
                          {"steps", c.steps},
                          {"spectral_radius", opts.spectral_radius},
                          {"energy_initial", tr.energies.front()},
                          {"energy_final", tr.energies.back()},
                          {"max_step_relative_growth", std::isfinite(growth) ? Json(growth) : Json(nullptr)},
                          {"energy_rate_t0", energy_rate(op, u0)},
                          {"jump_dissipation_t0", jump_dissipation(op, u0)}};
}

// ---------------------------------------------------------------- presets

RunConfig preset_base(const std::string& system, int elements) {
  RunConfig c;
  c.system = system;
  c.elements = elements;
  c.degree = 3;
  c.flux = "penalty";
  return c;
}

/// Continued returning modes written as DG mode files at the requested taus (all > 0 except possibly the last).
void preset_continued_modes(const RunConfig& c, double lo, double hi, double extend_to, Out& out, Json& summary) {
  const Problem p = make_problem(c);
  const DGOperator op = make_operator(p, c.flux, hi);
  const Family f = continue_family(op, lo, hi, c.return_factor, c.candidates, extend_to);
  Json s;
  write_family(f, out, s);
  std::size_t ext = 0;
  for (const auto& m : f.modes) {
    if (!m.returning) continue;
    // The first returning candidate is the one shown.
    io::write_mode_csv(out("mode_tau_" + tau_label(hi) + ".csv"), op, op.back_transform(m.path.initial_vector));
    io::write_mode_csv(out("mode_tau_" + tau_label(lo) + ".csv"), op, op.back_transform(m.path.vector));
    if (ext < f.extended.size())
      io::write_mode_csv(out("mode_tau_" + tau_label(extend_to) + ".csv"), op,
                         op.back_transform(f.extended[ext].vector));
    break;
  }
  summary["continued"] = s;
}

void run_preset(const std::string& name, Out& out, Json& summary) {
  if (name == "fig1" || name == "fig4") {
    RunConfig c = preset_base(name == "fig1" ? "advection1d" : "acoustics1d", 8);
    c.taus = parse_tau_range("0:4:201");
    c.track = true;
    cmd_sweep(c, out, summary);
    c.taus = {0.0, 1.0, 4.0};
    cmd_spectrum(c, out, summary);
  } else if (name == "fig2") {
    RunConfig c = preset_base("advection1d", 4);
    const DGOperator op = make_operator(make_problem(c), c.flux, 0.0);
    const SpectrumSweep sw = run_sweep(op, parse_tau_range("0:10:101"), true, true);
    io::write_sweep_csv(out("sweep.csv"), sw);
    // Most strongly damped divergent mode at the last sample, upper half plane.
    const int last = static_cast<int>(sw.taus.size()) - 1;
    int pick = -1;
    for (int q = 0; q < sw.num_paths(); ++q) {
      if (sw.classification[q] != PathClass::Divergent || sw.value(q, last).imag() < 0.0) continue;
      if (pick < 0 || sw.value(q, last).real() < sw.value(pick, last).real()) pick = q;
    }
    if (pick < 0) throw NumericalFailure("fig2: no divergent path");
    write_path_modes(op, sw, pick, {0.0, 1.0, 10.0}, out, "mode");
    summary["fig2"] = {{"path", pick}, {"end", io::complex_to_json(sw.value(pick, last))}};
  } else if (name == "fig3" || name == "fig6") {
    RunConfig c = preset_base("advection1d", 4);
    cmd_expand_mode(c, out, summary, name == "fig3" ? std::vector<double>{0.0, 1.0, 10.0, 100.0}
                                                    : std::vector<double>{0.0, 100.0});
  } else if (name == "fig5") {
    RunConfig c = preset_base("acoustics2d", 8);
    c.taus = {1.0, 10.0, 100.0};
    cmd_spectrum(c, out, summary);
  } else if (name == "fig7" || name == "fig10") {
    RunConfig c = preset_base(name == "fig7" ? "acoustics2d" : "advection2d", 8);
    c.candidates = 1;
    preset_continued_modes(c, 1.0, 100.0, name == "fig7" ? 0.1 : 0.0, out, summary);
  } else if (name == "fig8" || name == "fig9") {
    RunConfig c = preset_base(name == "fig8" ? "acoustics2d" : "advection2d", 8);
    c.candidates = name == "fig8" ? 2 : 4;
    c.taus = {0.0, 1.0, 50.0};
    cmd_spectrum(c, out, summary);
    preset_continued_modes(c, 1.0, 100.0, 0.0, out, summary);
  } else {
    throw InvalidInput("unknown preset '" + name + "'");
  }
}

}  // namespace

RunResult run_command(const std::string& command, const RunConfig& config, const fs::path& out_dir) {
  validate(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  Out out{out_dir, {}};
  Json summary;
  if (command == "assemble") cmd_assemble(config, out, summary);
  else if (command == "spectrum") cmd_spectrum(config, out, summary);
  else if (command == "sweep") cmd_sweep(config, out, summary);
  else if (command == "track") cmd_track(config, out, summary);
  else if (command == "verify-lemma") cmd_verify_lemma(config, out, summary);
  else if (command == "conforming-dims") cmd_conforming_dims(config, out, summary);
  else if (command == "expand-mode") cmd_expand_mode(config, out, summary);
  else if (command == "integrate") cmd_integrate(config, out, summary);
  else if (command == "preset") run_preset(config.preset, out, summary);
  else throw InvalidInput("unknown command '" + command + "'");

  io::write_json(out("summary.json"), summary);
  std::sort(out.files.begin(), out.files.end());
  Json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["config"] = config_to_json(config);
  manifest["files"] = out.files;
  io::write_json(out_dir / "manifest.json", manifest);
  RunResult r;
  r.files = out.files;
  r.files.push_back("manifest.json");
  std::sort(r.files.begin(), r.files.end());
  r.summary = summary;
  return r;
}

RunResult replay_manifest(const fs::path& manifest, const fs::path& out_dir) {
  const Json m = io::read_json(manifest);
  if (!m.contains("command") || !m.contains("config")) throw InvalidInput("manifest lacks 'command' or 'config'");
  const std::string command = m.at("command").get<std::string>();
  const std::string version = m.value("version", std::string());
  if (version != kVersion)
    std::cerr << "warning: manifest was written by version " << version << ", running " << kVersion << "\n";
  return run_command(command, config_from_json(m.at("config")), out_dir);
}

namespace {

struct FlagValues {
  std::string config_file, output, system, flux, tau_range, domain, bc, beta, init, preset;
  double tau = 0.0, mode_tau = 0.0, basis_tau = 0.0, return_factor = 0.0, threshold = 0.0, dt = 0.0, cfl = 0.0;
  int elements = 0, nx = 0, ny = 0, degree = 0, candidates = 0, steps = 0, mode_index = 0, snapshot_every = 0;
  bool track = false, export_matrices = false;
};

std::vector<double> parse_list(const std::string& s, const char* field) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) field_error(field, "bad number '" + item + "'");
    } catch (const std::logic_error&) {
      field_error(field, "bad number '" + item + "'");
    }
  }
  return v;
}

void add_config_options(CLI::App* sub, FlagValues& f) {
  sub->add_option("--config", f.config_file, "JSON config file; flags override its fields");
  sub->add_option("--output", f.output, "Output directory (relative paths resolve against $DGTAU_OUTPUT_ROOT)");
  sub->add_option("--system", f.system, "advection1d | advection2d | acoustics1d | acoustics2d");
  sub->add_option("--flux", f.flux, "central | penalty | upwind | lf");
  sub->add_option("--tau", f.tau, "Single penalty parameter");
  sub->add_option("--tau-range", f.tau_range, "a:b:n (linear) or a:b:logn (geometric)");
  sub->add_option("--elements", f.elements, "1D element count");
  sub->add_option("--nx", f.nx, "2D quads in x");
  sub->add_option("--ny", f.ny, "2D quads in y");
  sub->add_option("--domain", f.domain, "a,b (1D) or x0,x1,y0,y1 (2D)");
  sub->add_option("--bc", f.bc, "periodic | wall");
  sub->add_option("--degree", f.degree, "Polynomial degree N");
  sub->add_option("--beta", f.beta, "Advection vector bx,by");
  sub->add_flag("--track", f.track, "Track eigenvalue paths");
  sub->add_flag("--export-matrices", f.export_matrices, "Write K and M in Matrix Market format");
  sub->add_option("--mode-tau", f.mode_tau, "tau of the expanded or initial mode");
  sub->add_option("--basis-tau", f.basis_tau, "tau of the expansion basis");
  sub->add_option("--return-factor", f.return_factor, "Peak-to-end |Re| ratio that marks a returning mode");
  sub->add_option("--threshold", f.threshold, "Coefficient magnitude threshold");
  sub->add_option("--candidates", f.candidates, "Returning candidates continued by track");
  sub->add_option("--steps", f.steps, "RK4 steps");
  sub->add_option("--dt", f.dt, "Time step (0 selects cfl / rho)");
  sub->add_option("--cfl", f.cfl, "Step cap constant");
  sub->add_option("--init", f.init, "gaussian | random | mode");
  sub->add_option("--mode-index", f.mode_index, "Eigenpair index for --init mode");
  sub->add_option("--snapshot-every", f.snapshot_every, "Write the state every this many steps");
}

Json overlay(const CLI::App* sub, const FlagValues& f, Json j) {
  auto given = [&](const char* flag) { return sub->count(flag) > 0; };
  if (given("--system")) j["system"] = f.system;
  if (given("--flux")) j["flux"] = f.flux;
  if (given("--tau") || given("--tau-range")) {
    j.erase("tau");
    j.erase("taus");
    j.erase("tau_range");
    if (given("--tau") && given("--tau-range")) throw InvalidInput("give only one of --tau and --tau-range");
    if (given("--tau")) j["tau"] = f.tau;
    else j["tau_range"] = f.tau_range;
  }
  if (given("--elements")) j["elements"] = f.elements;
  if (given("--nx")) j["nx"] = f.nx;
  if (given("--ny")) j["ny"] = f.ny;
  if (given("--domain")) j["domain"] = parse_list(f.domain, "domain");
  if (given("--bc")) j["bc"] = f.bc;
  if (given("--degree")) j["degree"] = f.degree;
  if (given("--beta")) j["beta"] = parse_list(f.beta, "beta");
  if (given("--track")) j["track"] = f.track;
  if (given("--export-matrices")) j["export_matrices"] = f.export_matrices;
  if (given("--mode-tau")) j["mode_tau"] = f.mode_tau;
  if (given("--basis-tau")) j["basis_tau"] = f.basis_tau;
  if (given("--return-factor")) j["return_factor"] = f.return_factor;
  if (given("--threshold")) j["coefficient_threshold"] = f.threshold;
  if (given("--candidates")) j["candidates"] = f.candidates;
  if (given("--steps")) j["steps"] = f.steps;
  if (given("--dt")) j["dt"] = f.dt;
  if (given("--cfl")) j["cfl"] = f.cfl;
  if (given("--init")) j["init"] = f.init;
  if (given("--mode-index")) j["mode_index"] = f.mode_index;
  if (given("--snapshot-every")) j["snapshot_every"] = f.snapshot_every;
  return j;
}

fs::path resolve_output(const std::string& given, const std::string& fallback) {
  const fs::path p = given.empty() ? fs::path(fallback) : fs::path(given);
  return p.is_absolute() ? p : output_root() / p;
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"DG penalty-parameter spectral analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  FlagValues f;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : kCommands) {
    subs[name] = app.add_subcommand(name);
    add_config_options(subs[name], f);
  }
  CLI::App* preset = app.add_subcommand("preset", "Reproduce one of the figure experiments");
  preset->add_option("name", f.preset, "fig1 ... fig10")->required();
  preset->add_option("--output", f.output, "Output directory");
  CLI::App* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", f.config_file, "manifest.json")->required();
  replay->add_option("--output", f.output, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunResult r;
    fs::path out_dir;
    if (preset->parsed()) {
      RunConfig c;
      c.preset = f.preset;
      out_dir = resolve_output(f.output, f.preset);
      r = run_command("preset", c, out_dir);
    } else if (replay->parsed()) {
      out_dir = f.output.empty() ? fs::path(fs::absolute(f.config_file).parent_path().string() + "_replay")
                                 : resolve_output(f.output, "");
      r = replay_manifest(f.config_file, out_dir);
    } else {
      std::string command;
      CLI::App* sub = nullptr;
      for (auto& [name, s] : subs)
        if (s->parsed()) command = name, sub = s;
      Json j = f.config_file.empty() ? Json::object() : io::read_json(f.config_file);
      j.erase("output");
      const RunConfig c = config_from_json(overlay(sub, f, j));
      out_dir = resolve_output(f.output, command);
      r = run_command(command, c, out_dir);
    }
    std::cout << "wrote " << r.files.size() << " files to " << out_dir.string() << "\n";
    return 0;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace dgtau::cli

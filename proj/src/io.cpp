#include "dgtau/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "dgtau/error.hpp"

namespace dgtau::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path) {
  file_ = std::fopen(path.c_str(), "w");
  if (!file_) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  for (const auto& h : header) *this << h;
  end_row();
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void CsvWriter::separator() {
  if (row_started_) std::fputc(',', file_);
  row_started_ = true;
}

CsvWriter& CsvWriter::operator<<(double x) {
  separator();
  std::fputs(format_double(x).c_str(), file_);
  return *this;
}

CsvWriter& CsvWriter::operator<<(int x) {
  separator();
  std::fprintf(file_, "%d", x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  separator();
  std::fputs(s.c_str(), file_);
  return *this;
}

void CsvWriter::end_row() {
  std::fputc('\n', file_);
  row_started_ = false;
}

void CsvWriter::close() {
  if (file_ && std::fclose(file_) != 0) {
    file_ = nullptr;
    throw InvalidInput("failed to write '" + path_.string() + "'");
  }
  file_ = nullptr;
}

void write_spectrum_csv(const std::filesystem::path& path, const std::vector<Spectrum>& spectra,
                        const std::vector<std::vector<PartitionNorms>>& partitions) {
  CsvWriter csv(path, {"tau", "index", "re", "im", "wc_norm", "wnc_norm"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t s = 0; s < spectra.size(); ++s) {
    const bool has = s < partitions.size() && !partitions[s].empty();
    for (int i = 0; i < spectra[s].size(); ++i) {
      csv << spectra[s].tau << i << spectra[s].eigenvalues(i).real() << spectra[s].eigenvalues(i).imag()
          << (has ? partitions[s][i].wc : nan) << (has ? partitions[s][i].wnc : nan);
      csv.end_row();
    }
  }
  csv.close();
}

void write_sweep_csv(const std::filesystem::path& path, const SpectrumSweep& sweep) {
  CsvWriter csv(path, {"tau", "path_id", "re", "im", "class"});
  for (std::size_t s = 0; s < sweep.taus.size(); ++s)
    for (int p = 0; p < sweep.num_paths(); ++p) {
      const Complex z = sweep.value(p, static_cast<int>(s));
      const PathClass c = p < static_cast<int>(sweep.classification.size()) ? sweep.classification[p]
                                                                             : PathClass::Unclassified;
      csv << sweep.taus[s] << p << z.real() << z.imag() << to_string(c);
      csv.end_row();
    }
  csv.close();
}

void write_paths_csv(const std::filesystem::path& path, const std::vector<EigenpairPath>& paths,
                     const std::string& cls) {
  CsvWriter csv(path, {"tau", "path_id", "re", "im", "class"});
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (std::size_t s = 0; s < paths[p].taus.size(); ++s) {
      csv << paths[p].taus[s] << static_cast<int>(p) << paths[p].values[s].real() << paths[p].values[s].imag() << cls;
      csv.end_row();
    }
  csv.close();
}

void write_energy_csv(const std::filesystem::path& path, const EnergyTrace& trace) {
  CsvWriter csv(path, {"t", "energy"});
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    csv << trace.times[i] << trace.energies[i];
    csv.end_row();
  }
  csv.close();
}

void write_mode_csv(const std::filesystem::path& path, const DGOperator& op, const Eigen::VectorXcd& mode) {
  if (mode.size() != op.size()) throw InvalidInput("write_mode_csv: mode has the wrong length");
  const auto& cfg = op.config();
  const DofMap& dofs = op.dofs();
  CsvWriter csv(path, {"elem", "node", "x", "y", "field", "re", "im"});
  for (int k = 0; k < dofs.n_elements; ++k) {
    const Eigen::MatrixXd xy = cfg.mesh->map_to_physical(k, cfg.ref->nodes);
    for (int f = 0; f < dofs.n_fields; ++f)
      for (int j = 0; j < dofs.n_nodes; ++j) {
        const Complex v = mode(dofs.index(k, f, j));
        csv << k << j << xy(j, 0) << (xy.cols() > 1 ? xy(j, 1) : 0.0) << cfg.system.field_names[f] << v.real()
            << v.imag();
        csv.end_row();
      }
  }
  csv.close();
}

void write_matrix_market(const std::filesystem::path& path, const Eigen::MatrixXd& a) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  out << "%%MatrixMarket matrix array real general\n" << a.rows() << ' ' << a.cols() << '\n';
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out << format_double(a(i, j)) << '\n';
  if (!out) throw InvalidInput("failed to write '" + path.string() + "'");
}

Eigen::MatrixXd read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("%%MatrixMarket matrix array real general", 0) != 0)
    throw InvalidInput("'" + path.string() + "' is not a dense real Matrix Market file");
  while (std::getline(in, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream dims(line);
  Eigen::Index rows = 0, cols = 0;
  if (!(dims >> rows >> cols) || rows < 0 || cols < 0) throw InvalidInput("bad Matrix Market size line");
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      if (!(in >> a(i, j))) throw InvalidInput("truncated Matrix Market file '" + path.string() + "'");
  return a;
}

Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json mesh_to_json(const Mesh& mesh) {
  Json j;
  j["dim"] = mesh.dim;
  Json verts = Json::array();
  for (Eigen::Index v = 0; v < mesh.vertices.rows(); ++v) {
    Json row = Json::array();
    for (Eigen::Index d = 0; d < mesh.vertices.cols(); ++d) row.push_back(mesh.vertices(v, d));
    verts.push_back(row);
  }
  j["vertices"] = verts;
  j["elements"] = mesh.elements;
  Json faces = Json::array();
  for (const auto& f : mesh.faces)
    faces.push_back({{"elem_minus", f.elem_minus},
                     {"face_minus", f.face_minus},
                     {"elem_plus", f.elem_plus},
                     {"face_plus", f.face_plus},
                     {"reversed", f.reversed},
                     {"periodic", f.periodic}});
  j["faces"] = faces;
  Json boundary = Json::array();
  for (const auto& b : mesh.boundary_faces) boundary.push_back({{"elem", b.elem}, {"face", b.face}, {"tag", b.tag}});
  j["boundary_faces"] = boundary;
  return j;
}

namespace {

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json sweep_summary(const SpectrumSweep& sweep) {
  Json j;
  j["tau_min"] = sweep.taus.front();
  j["tau_max"] = sweep.taus.back();
  j["samples"] = sweep.taus.size();
  j["requested_samples"] = std::count(sweep.requested.begin(), sweep.requested.end(), true);
  j["paths"] = sweep.num_paths();
  j["rho0"] = sweep.rho0;
  j["n_conforming"] = sweep.n_conforming;
  j["n_nonconforming"] = sweep.n_nonconforming;
  j["gerschgorin_disjoint_at_tau_max"] = sweep.gerschgorin_disjoint;
  j["counts"] = {{"conforming_limit", sweep.count(PathClass::ConformingLimit)},
                 {"divergent", sweep.count(PathClass::Divergent)},
                 {"unclassified", sweep.count(PathClass::Unclassified)}};
  Json unresolved = Json::array();
  for (const auto& u : sweep.unresolved)
    unresolved.push_back({{"tau_lo", u.tau_lo}, {"tau_hi", u.tau_hi}, {"path", u.path}});
  j["unresolved_crossings"] = unresolved;
  return j;
}

Json lemma_to_json(const LemmaReport& r) {
  Json j;
  j["tau_lo"] = r.tau_lo;
  j["tau_hi"] = r.tau_hi;
  j["n_divergent"] = r.n_divergent;
  j["n_convergent"] = r.n_convergent;
  j["n_roundoff"] = r.n_roundoff;
  j["max_divergent_relative_error"] = finite_or_null(r.max_divergent_error);
  j["min_convergent_slope"] = finite_or_null(r.min_convergent_slope);
  j["max_convergent_slope"] = finite_or_null(r.max_convergent_slope);
  j["max_final_distance"] = r.max_final_distance;
  Json div = Json::array();
  for (const auto& d : r.divergent)
    div.push_back({{"path", d.path}, {"slope", d.slope}, {"s_eigenvalue", d.s_eigenvalue},
                   {"relative_error", d.relative_error}});
  j["divergent"] = div;
  Json conv = Json::array();
  for (const auto& c : r.convergent)
    conv.push_back({{"path", c.path}, {"slope", c.slope}, {"final_distance", c.final_distance},
                    {"roundoff_level", c.roundoff_level}});
  j["convergent"] = conv;
  return j;
}

Json expansion_to_json(const ModalExpansion& e, double threshold) {
  Json j;
  j["threshold"] = threshold;
  j["residual"] = e.residual;
  j["condition"] = e.condition;
  Json coeffs = Json::array();
  int above = 0;
  for (Eigen::Index i = 0; i < e.coefficients.size(); ++i) {
    const double mag = std::abs(e.coefficients(i));
    if (mag > threshold) ++above;
    coeffs.push_back({{"index", i},
                      {"abs", mag},
                      {"re", e.coefficients(i).real()},
                      {"im", e.coefficients(i).imag()},
                      {"damping", e.damping(i)}});
  }
  j["n_above_threshold"] = above;
  j["coefficients"] = coeffs;
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw InvalidInput("failed to write '" + path.string() + "'");
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace dgtau::io

#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <unistd.h>

#include "dgtau/error.hpp"
#include "dgtau/io.hpp"
#include "support.hpp"

using namespace dgtau;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dgtau_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("doubles round-trip through their text form") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::ldexp(mant(gen), ex(gen));
    CHECK(std::strtod(io::format_double(x).c_str(), nullptr) == x);
  }
  for (double x : {0.0, -0.0, 1.0, 0.1, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max()})
    CHECK(std::strtod(io::format_double(x).c_str(), nullptr) == x);
  CHECK(io::format_double(std::nan("")) == "nan");
  CHECK(io::format_double(INFINITY) == "inf");
  CHECK(io::format_double(-INFINITY) == "-inf");
}

TEST_CASE("Matrix Market round trip") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(7, 4);
  a(2, 3) = 1e-300;
  a(0, 0) = -0.0;
  const fs::path p = scratch("a.mtx");
  io::write_matrix_market(p, a);
  CHECK(io::read_matrix_market(p) == a);
  const DGOperator op = testing::acoustics_2d(2, 2, 2);
  io::write_matrix_market(p, op.k_matrix());
  CHECK(io::read_matrix_market(p) == op.k_matrix());

  std::ofstream(scratch("bad.mtx")) << "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n";
  CHECK_THROWS_AS(io::read_matrix_market(scratch("bad.mtx")), InvalidInput);
  std::ofstream(scratch("short.mtx")) << "%%MatrixMarket matrix array real general\n2 2\n1.0\n2.0\n";
  CHECK_THROWS_AS(io::read_matrix_market(scratch("short.mtx")), InvalidInput);
  CHECK_THROWS_AS(io::read_matrix_market(scratch("missing.mtx")), InvalidInput);
}

TEST_CASE("CSV writers: headers and row counts") {
  const DGOperator op = testing::advection_1d(3, 2);
  const SpectrumSweep s = sweep(op, {0.0, 1.0, 10.0});

  io::write_sweep_csv(scratch("sweep.csv"), s);
  auto rows = read_csv(scratch("sweep.csv"));
  REQUIRE(rows.size() == 1 + s.taus.size() * op.size());
  CHECK(rows[0] == std::vector<std::string>{"tau", "path_id", "re", "im", "class"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 5u);
    const int p = std::stoi(rows[i][1]);
    const int sample = static_cast<int>((i - 1) / op.size());
    CHECK(std::stod(rows[i][0]) == s.taus[sample]);
    CHECK(std::stod(rows[i][2]) == s.value(p, sample).real());
    CHECK(rows[i][4] == to_string(s.classification[p]));
  }

  std::vector<Spectrum> spectra = {compute_spectrum(op.at_tau(1.0))};
  const auto parts = eigenvector_partition(spectra[0], build_conforming_split(op), op.m_matrix());
  io::write_spectrum_csv(scratch("spectrum.csv"), spectra, {parts});
  rows = read_csv(scratch("spectrum.csv"));
  REQUIRE(rows.size() == 1u + op.size());
  CHECK(rows[0] == std::vector<std::string>{"tau", "index", "re", "im", "wc_norm", "wnc_norm"});
  CHECK(std::stod(rows[1][4]) == parts[0].wc);
  io::write_spectrum_csv(scratch("spectrum_nan.csv"), spectra, {});
  CHECK(read_csv(scratch("spectrum_nan.csv"))[1][5] == "nan");

  EnergyTrace t;
  t.times = {0.0, 0.5};
  t.energies = {2.0, 1.5};
  io::write_energy_csv(scratch("energy.csv"), t);
  rows = read_csv(scratch("energy.csv"));
  CHECK(rows == std::vector<std::vector<std::string>>{{"t", "energy"},
                                                      {io::format_double(0.0), io::format_double(2.0)},
                                                      {io::format_double(0.5), io::format_double(1.5)}});

  io::write_mode_csv(scratch("mode.csv"), op, spectra[0].eigenvectors.col(0));
  rows = read_csv(scratch("mode.csv"));
  CHECK(rows.size() == 1u + op.size());
  CHECK(rows[0] == std::vector<std::string>{"elem", "node", "x", "y", "field", "re", "im"});
  CHECK_THROWS_AS(io::write_mode_csv(scratch("mode.csv"), op, Eigen::VectorXcd::Zero(2)), InvalidInput);

  EigenpairPath path;
  path.taus = {2.0, 1.0};
  path.values = {Complex(-1, 2), Complex(-0.5, 2)};
  io::write_paths_csv(scratch("paths.csv"), {path, path}, "conforming_limit");
  rows = read_csv(scratch("paths.csv"));
  CHECK(rows.size() == 5u);
  CHECK(rows[4][1] == "1");
  CHECK(rows[4][4] == "conforming_limit");
  CHECK_THROWS_AS(io::CsvWriter(fs::path("/nonexistent_dir/x.csv"), {"a"}), InvalidInput);
}

TEST_CASE("JSON round trip and errors") {
  io::Json j = {{"b", 1.5}, {"a", {1, 2, 3}}, {"z", io::complex_to_json(Complex(0.25, -3.0))}};
  io::write_json(scratch("x.json"), j);
  CHECK(io::read_json(scratch("x.json")) == j);
  // Key order is preserved.
  CHECK(io::read_json(scratch("x.json")).begin().key() == "b");
  std::ofstream(scratch("broken.json")) << "{\"a\": [1, 2";
  CHECK_THROWS_AS(io::read_json(scratch("broken.json")), InvalidInput);
  CHECK_THROWS_AS(io::read_json(scratch("missing.json")), InvalidInput);
}

TEST_CASE("summaries") {
  LemmaReport r;
  r.max_divergent_error = INFINITY;
  r.min_convergent_slope = INFINITY;
  r.max_convergent_slope = -INFINITY;
  const io::Json lj = io::lemma_to_json(r);
  CHECK(lj["max_divergent_relative_error"].is_null());
  CHECK(lj["min_convergent_slope"].is_null());
  CHECK(lj["divergent"].empty());

  const auto mesh = testing::mesh_2d(2, 2, BoundaryKind::Wall);
  const io::Json mj = io::mesh_to_json(*mesh);
  CHECK(mj["elements"].size() == 8u);
  CHECK(mj["faces"].size() == mesh->faces.size());
  CHECK(mj["boundary_faces"].size() == 8u);

  ModalExpansion e;
  e.coefficients = Eigen::VectorXcd::Zero(3);
  e.coefficients(1) = Complex(0.0, 2.0);
  e.damping = Eigen::VectorXd::Constant(3, -1.0);
  const io::Json ej = io::expansion_to_json(e, 1e-13);
  CHECK(ej["n_above_threshold"] == 1);
  CHECK(ej["coefficients"][1]["abs"] == 2.0);

  const DGOperator op = testing::advection_1d(3, 2);
  const SpectrumSweep s = sweep(op, {0.0, 1.0, 1e4});
  const io::Json sj = io::sweep_summary(s);
  CHECK(sj["paths"] == op.size());
  CHECK(sj["counts"]["conforming_limit"].get<int>() + sj["counts"]["divergent"].get<int>() +
            sj["counts"]["unclassified"].get<int>() ==
        op.size());
}

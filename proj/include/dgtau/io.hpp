#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dgtau/assembly.hpp"
#include "dgtau/spectral.hpp"
#include "dgtau/tauanalysis.hpp"
#include "dgtau/timedomain.hpp"
#include "json.hpp"

namespace dgtau::io {

using Json = nlohmann::ordered_json;

/// 17 significant digits, scientific; round-trips every double.
std::string format_double(double x);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  ~CsvWriter();
  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(int x);
  CsvWriter& operator<<(const std::string& s);
  void end_row();
  void close();

 private:
  void separator();
  std::FILE* file_ = nullptr;
  std::filesystem::path path_;
  bool row_started_ = false;
};

/// Columns tau,index,re,im,wc_norm,wnc_norm; partition norms may be empty (written as nan).
void write_spectrum_csv(const std::filesystem::path& path, const std::vector<Spectrum>& spectra,
                        const std::vector<std::vector<PartitionNorms>>& partitions);

/// Columns tau,path_id,re,im,class.
void write_sweep_csv(const std::filesystem::path& path, const SpectrumSweep& sweep);

/// Same columns for continued paths; path ids are positions in `paths`.
void write_paths_csv(const std::filesystem::path& path, const std::vector<EigenpairPath>& paths,
                     const std::string& cls);

/// Columns t,energy.
void write_energy_csv(const std::filesystem::path& path, const EnergyTrace& trace);

/// Columns elem,node,x,y,field,re,im for a DG coefficient vector.
void write_mode_csv(const std::filesystem::path& path, const DGOperator& op, const Eigen::VectorXcd& mode);

/// Dense Matrix Market array format.
void write_matrix_market(const std::filesystem::path& path, const Eigen::MatrixXd& a);
Eigen::MatrixXd read_matrix_market(const std::filesystem::path& path);

Json mesh_to_json(const Mesh& mesh);
Json complex_to_json(Complex z);
Json sweep_summary(const SpectrumSweep& sweep);
Json lemma_to_json(const LemmaReport& report);
Json expansion_to_json(const ModalExpansion& e, double threshold);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace dgtau::io

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qlab/config.hpp"
#include "qlab/continuation.hpp"
#include "qlab/equilibria.hpp"
#include "qlab/quartic.hpp"
#include "qlab/simulate.hpp"

namespace qlab {

/// 17 significant digits, '.' decimal, independent of the global locale.
std::string format_number(double x);

/// Rows are buffered and written when the writer is destroyed.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path file, const std::vector<std::string>& header);
  ~CsvWriter() noexcept(false);
  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(const std::string& s);
  void end_row();

 private:
  void cell(const std::string& s);
  std::filesystem::path file_;
  std::string buf_;
  std::size_t columns_ = 0, in_row_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 when absent
};

/// Throws MissingArtifact when the file does not exist.
CsvTable read_csv(const std::filesystem::path& file);

void write_trajectory(const std::filesystem::path& file, const Trajectory& traj);
void write_events(const std::filesystem::path& file, const Trajectory& traj);
void write_branch(const std::filesystem::path& file, const Branch& br);
/// Hopf points of the equilibrium branch and folds of cycles (alpha reversals) of the
/// limit-cycle branches.
void write_markers(const std::filesystem::path& file, const std::vector<HopfPoint>& hopfs,
                   const std::vector<Branch>& cycles);
void write_json(const std::filesystem::path& file, const nlohmann::json& doc);

nlohmann::json classification_json(const Classification& c);
nlohmann::json branch_json(const Branch& br);

/// Config, its hash, tolerances and build versions.
nlohmann::json manifest_json(const RunConfig& cfg, const std::string& command,
                             const std::vector<std::string>& artifacts);

extern const char* const kVersion;

}  // namespace qlab

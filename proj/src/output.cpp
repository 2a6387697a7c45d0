#include "qlab/output.hpp"

#include <boost/version.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Core>

#include "qlab/error.hpp"

namespace qlab {

const char* const kVersion = "1.0.0";

namespace fs = std::filesystem;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(fs::path file, const std::vector<std::string>& header)
    : file_(std::move(file)), columns_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter::~CsvWriter() noexcept(false) {
  if (std::uncaught_exceptions() > 0) return;
  if (file_.has_parent_path()) fs::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::binary);
  out << buf_;
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + file_.string());
}

void CsvWriter::cell(const std::string& s) {
  if (in_row_++ > 0) buf_ += ',';
  buf_ += s;
}

CsvWriter& CsvWriter::operator<<(double x) {
  cell(format_number(x));
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  cell(s);
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw Error(ErrorKind::InvalidInput, "csv row width mismatch in " + file_.string());
  buf_ += '\n';
  in_row_ = 0;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::MissingArtifact, "missing artifact " + file.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  if (std::getline(in, line)) t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

void write_trajectory(const fs::path& file, const Trajectory& traj) {
  std::vector<std::string> header{"t", "p1", "p2"};
  if (traj.full_model) header.insert(header.end(), {"d", "f", "g_syn", "v"});
  CsvWriter w(file, header);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    w << traj.times[i];
    for (Eigen::Index k = 0; k < traj.states[i].size(); ++k) w << traj.states[i][k];
    w.end_row();
  }
}

void write_events(const fs::path& file, const Trajectory& traj) {
  CsvWriter w(file, {"kind", "time", "p1", "p2"});
  for (const auto& e : traj.events) {
    w << std::string(to_string(e.kind)) << e.time << e.state[0] << e.state[1];
    w.end_row();
  }
}

void write_branch(const fs::path& file, const Branch& br) {
  CsvWriter w(file, {"alpha", "p1_max", "p1_min", "period", "stability", "n_segments", "p2_max", "log_p2_min",
                     "trivial_multiplier", "log_abs_multiplier", "residual"});
  for (const auto& pt : br.points) {
    w << pt.alpha << pt.p1_max << pt.p1_min;
    if (pt.period) w << *pt.period;
    else w << std::string();
    w << std::string(to_string(pt.stability)) << static_cast<double>(pt.n_segments) << pt.p2_max << pt.log_p2_min;
    if (pt.floquet.empty()) w << std::string();
    else w << pt.floquet.front().real();
    w << pt.log_abs_mu << pt.residual;
    w.end_row();
  }
}

void write_markers(const fs::path& file, const std::vector<HopfPoint>& hopfs, const std::vector<Branch>& cycles) {
  CsvWriter w(file, {"kind", "label", "alpha", "p1", "p2", "value"});
  for (const auto& h : hopfs) {
    w << std::string("hopf") << h.label << h.alpha << h.location.p1 << h.location.p2 << h.frequency;
    w.end_row();
  }
  for (const auto& br : cycles) {
    const auto& pts = br.points;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
      const double d0 = pts[i].alpha - pts[i - 1].alpha, d1 = pts[i + 1].alpha - pts[i].alpha;
      if (d0 * d1 >= 0.0) continue;
      w << std::string("fold_of_cycles") << br.origin << pts[i].alpha << pts[i].p1_max << pts[i].p2_max
        << (pts[i].period ? *pts[i].period : 0.0);
      w.end_row();
    }
  }
}

void write_json(const fs::path& file, const nlohmann::json& doc) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + file.string());
}

nlohmann::json classification_json(const Classification& c) {
  nlohmann::json j = {{"kind", std::string(to_string(c.kind))}, {"transient_loops", c.transient_loops}};
  if (c.kind == AsymptoticKind::equilibrium) j["equilibrium"] = std::string(to_string(c.equilibrium));
  if (c.kind == AsymptoticKind::limit_cycle) {
    j["period"] = c.period;
    j["amplitude_p2"] = c.amplitude;
    j["p1_min"] = c.p1_min;
    j["p1_max"] = c.p1_max;
  }
  j["onset_time"] = c.onset_time;
  return j;
}

nlohmann::json branch_json(const Branch& br) {
  nlohmann::json j = {{"kind", std::string(to_string(br.kind))},
                      {"origin", br.origin},
                      {"termination", std::string(to_string(br.termination))},
                      {"points", br.points.size()},
                      {"folds", br.folds}};
  if (br.termination == Termination::connects_to) j["connects_to"] = br.connects_to;
  if (!br.points.empty()) {
    const auto& e = br.points.back();
    j["end"] = {{"alpha", e.alpha}, {"p1_max", e.p1_max}, {"p1_min", e.p1_min}};
    if (e.period) j["end"]["period"] = *e.period;
  }
  return j;
}

nlohmann::json manifest_json(const RunConfig& cfg, const std::string& command,
                             const std::vector<std::string>& artifacts) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  const LcOptions& l = cfg.cont.lc;
  return {{"command", command},
          {"config", to_json(cfg)},
          {"config_hash", std::string("fnv1a64:") + hash},
          {"tolerances",
           {{"simulation_rtol", cfg.rtol},
            {"simulation_atol", cfg.atol},
            {"event_time_tol", 1e-10},
            {"continuation_rtol", l.rtol},
            {"continuation_atol", l.atol},
            {"newton_tol", l.newton_tol},
            {"ds_min", l.ds_min},
            {"T_max", l.T_max}}},
          {"versions",
           {{"qlab", kVersion},
            {"compiler", __VERSION__},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
          {"artifacts", artifacts}};
}

}  // namespace qlab

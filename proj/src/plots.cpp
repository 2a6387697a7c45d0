#include "qlab/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>

#include "qlab/config.hpp"
#include "qlab/error.hpp"
#include "qlab/output.hpp"
#include "qlab/quartic.hpp"

namespace qlab {
namespace {

namespace fs = std::filesystem;

std::string f2(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", x);
  return b;
}

std::string tick_label(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", std::abs(x) < 1e-12 ? 0.0 : x);
  return b;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double x) {
    if (!std::isfinite(x)) return;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  Range padded(double frac = 0.05) const {
    Range r = *this;
    if (!std::isfinite(lo)) return {0.0, 1.0};
    double span = hi - lo;
    if (span <= 0.0) span = std::max(1.0, std::abs(hi));
    r.lo -= frac * span;
    r.hi += frac * span;
    return r;
  }
};

double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

class Panel {
 public:
  Panel(double x0, double y0, double w, double h, Range xr, Range yr)
      : x0_(x0), y0_(y0), w_(w), h_(h), xr_(xr), yr_(yr) {}
  double px(double x) const { return x0_ + (x - xr_.lo) / (xr_.hi - xr_.lo) * w_; }
  double py(double y) const { return y0_ + h_ - (y - yr_.lo) / (yr_.hi - yr_.lo) * h_; }

  void axes(std::string& s, const std::string& xlabel, const std::string& ylabel) const {
    s += "<rect x=\"" + f2(x0_) + "\" y=\"" + f2(y0_) + "\" width=\"" + f2(w_) + "\" height=\"" + f2(h_) +
         "\" fill=\"none\" stroke=\"#000\"/>\n";
    const double sx = nice_step(xr_.hi - xr_.lo, 6), sy = nice_step(yr_.hi - yr_.lo, 5);
    for (double x = std::ceil(xr_.lo / sx) * sx; x <= xr_.hi; x += sx) {
      s += "<line x1=\"" + f2(px(x)) + "\" y1=\"" + f2(y0_ + h_) + "\" x2=\"" + f2(px(x)) + "\" y2=\"" +
           f2(y0_ + h_ + 5) + "\" stroke=\"#000\"/>\n";
      s += "<text x=\"" + f2(px(x)) + "\" y=\"" + f2(y0_ + h_ + 18) + "\" text-anchor=\"middle\">" +
           tick_label(x) + "</text>\n";
    }
    for (double y = std::ceil(yr_.lo / sy) * sy; y <= yr_.hi; y += sy) {
      s += "<line x1=\"" + f2(x0_ - 5) + "\" y1=\"" + f2(py(y)) + "\" x2=\"" + f2(x0_) + "\" y2=\"" + f2(py(y)) +
           "\" stroke=\"#000\"/>\n";
      s += "<text x=\"" + f2(x0_ - 8) + "\" y=\"" + f2(py(y) + 4) + "\" text-anchor=\"end\">" + tick_label(y) +
           "</text>\n";
    }
    s += "<text x=\"" + f2(x0_ + w_ / 2) + "\" y=\"" + f2(y0_ + h_ + 36) + "\" text-anchor=\"middle\">" + xlabel +
         "</text>\n";
    s += "<text x=\"" + f2(x0_ - 48) + "\" y=\"" + f2(y0_ + h_ / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 " +
         f2(x0_ - 48) + " " + f2(y0_ + h_ / 2) + ")\">" + ylabel + "</text>\n";
  }

  // Consecutive points closer than half a pixel are merged.
  void polyline(std::string& s, const std::vector<std::pair<double, double>>& pts, const std::string& style,
                const std::string& cls) const {
    if (pts.size() < 2) return;
    std::string d;
    double lx = 1e300, ly = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double x = std::clamp(px(pts[i].first), x0_ - 1e4, x0_ + w_ + 1e4);
      const double y = std::clamp(py(pts[i].second), y0_ - 1e4, y0_ + h_ + 1e4);
      if (i + 1 < pts.size() && std::hypot(x - lx, y - ly) < 0.5) continue;
      d += (d.empty() ? "M" : " L") + f2(x) + "," + f2(y);
      lx = x;
      ly = y;
    }
    s += "<path class=\"" + cls + "\" d=\"" + d + "\" fill=\"none\" " + style + " clip-path=\"url(#" + clip_id() +
         ")\"/>\n";
  }

  std::string clip_def(int id) {
    id_ = id;
    return "<clipPath id=\"" + clip_id() + "\"><rect x=\"" + f2(x0_) + "\" y=\"" + f2(y0_) + "\" width=\"" + f2(w_) +
           "\" height=\"" + f2(h_) + "\"/></clipPath>\n";
  }

 private:
  std::string clip_id() const { return "clip" + std::to_string(id_); }
  double x0_, y0_, w_, h_;
  Range xr_, yr_;
  int id_ = 0;
};

const std::string kSolid = "stroke=\"#000\" stroke-width=\"1.5\"";
const std::string kDashed = "stroke=\"#000\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"";

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(w) + "\" height=\"" + f2(h) + "\" viewBox=\"0 0 " +
         f2(w) + " " + f2(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
}

void save(const fs::path& file, const std::string& body) {
  std::ofstream out(file, std::ios::binary);
  out << body;
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + file.string());
}

double cell(const CsvTable& t, std::size_t row, int col) {
  if (col < 0 || row >= t.rows.size() || col >= static_cast<int>(t.rows[row].size())) return std::nan("");
  const std::string& s = t.rows[row][col];
  if (s.empty()) return std::nan("");
  return std::strtod(s.c_str(), nullptr);
}

std::string text_cell(const CsvTable& t, std::size_t row, int col) {
  if (col < 0 || col >= static_cast<int>(t.rows[row].size())) return {};
  return t.rows[row][col];
}

// Splits a polyline into runs of equal style key; neighbouring runs share their boundary point.
template <class Key>
std::vector<std::pair<Key, std::vector<std::pair<double, double>>>> runs(
    const std::vector<std::pair<double, double>>& pts, const std::vector<Key>& keys) {
  std::vector<std::pair<Key, std::vector<std::pair<double, double>>>> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (out.empty() || out.back().first != keys[i]) {
      out.push_back({keys[i], {}});
      if (i > 0) out.back().second.push_back(pts[i - 1]);
    }
    out.back().second.push_back(pts[i]);
  }
  return out;
}

ModelParams model_from_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error(ErrorKind::MissingArtifact, "missing artifact " + (dir / "manifest.json").string());
  return parse_config(nlohmann::json::parse(in).at("config")).model;
}

std::string phase_plane(const ModelParams& m, const CsvTable& traj) {
  const int c1 = traj.column("p1"), c2 = traj.column("p2");
  std::vector<std::pair<double, double>> orbit;
  Range xr, yr;
  for (std::size_t i = 0; i < traj.rows.size(); ++i) {
    orbit.emplace_back(cell(traj, i, c1), cell(traj, i, c2));
    xr.add(orbit.back().first);
    yr.add(orbit.back().second);
  }
  const auto zeros = gamma_zeros(m.quartic);
  yr.add(0.0);
  yr.add(zeros.back());
  const Range ypad = yr.padded();
  const int n = 800;
  std::vector<std::pair<double, double>> curve;
  std::vector<int> stab;
  for (int i = 0; i <= n; ++i) {
    const double p2 = std::max(0.0, ypad.lo) + (ypad.hi - std::max(0.0, ypad.lo)) * i / n;
    curve.emplace_back(gamma_eval(m.quartic, p2), p2);
    stab.push_back(p2 > 0.0 && fast_branch_stability(m.quartic, p2) == BranchStability::repelling ? 1 : 0);
  }
  for (const auto& f : fold_points(m.quartic)) xr.add(f.p1);
  xr.add(gamma_eval(m.quartic, 0.0));
  const Range xpad = xr.padded();

  std::string s = header(640, 480);
  Panel pn(80, 20, 540, 400, xpad, ypad);
  s += "<defs>" + pn.clip_def(0) + "</defs>\n";
  pn.axes(s, "p1", "p2");
  for (const auto& [k, seg] : runs(curve, stab)) pn.polyline(s, seg, k ? kDashed : kSolid, "quartic");
  // axis p2 = 0: attracting left of the transcritical point
  const double tc = gamma_eval(m.quartic, 0.0);
  pn.polyline(s, {{std::min(xpad.lo, tc), 0.0}, {tc, 0.0}}, kSolid, "axis");
  pn.polyline(s, {{tc, 0.0}, {std::max(xpad.hi, tc), 0.0}}, kDashed, "axis");
  pn.polyline(s, orbit, "stroke=\"#1f4fbf\" stroke-width=\"1\"", "trajectory");
  s += "</svg>\n";
  return s;
}

std::string time_series(const CsvTable& traj) {
  std::vector<std::string> names{"p1", "p2"};
  if (traj.column("v") >= 0) names.push_back("v");
  const int ct = traj.column("t");
  Range tr;
  for (std::size_t i = 0; i < traj.rows.size(); ++i) tr.add(cell(traj, i, ct));
  const double ph = 180;
  std::string s = header(720, 40 + names.size() * (ph + 50));
  std::string defs, body;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const int c = traj.column(names[k]);
    std::vector<std::pair<double, double>> pts;
    Range yr;
    for (std::size_t i = 0; i < traj.rows.size(); ++i) {
      pts.emplace_back(cell(traj, i, ct), cell(traj, i, c));
      yr.add(pts.back().second);
    }
    Panel pn(80, 20 + k * (ph + 50), 600, ph, tr.padded(0.0), yr.padded());
    defs += pn.clip_def(static_cast<int>(k));
    pn.axes(body, "t", names[k]);
    pn.polyline(body, pts, "stroke=\"#1f4fbf\" stroke-width=\"1\"", "series");
  }
  return s + "<defs>" + defs + "</defs>\n" + body + "</svg>\n";
}

std::string bifurcation(const CsvTable& eq, const std::vector<std::pair<std::string, CsvTable>>& cycles,
                        const CsvTable* markers) {
  Range xr, yr;
  auto collect = [&](const CsvTable& t, const char* ycol) {
    const int ca = t.column("alpha"), cy = t.column(ycol);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      xr.add(cell(t, i, ca));
      yr.add(cell(t, i, cy));
    }
  };
  collect(eq, "p1_max");
  for (const auto& [name, t] : cycles) {
    collect(t, "p1_max");
    collect(t, "p1_min");
  }
  std::string s = header(720, 520);
  Panel pn(80, 20, 600, 440, xr.padded(0.02), yr.padded());
  s += "<defs>" + pn.clip_def(0) + "</defs>\n";
  pn.axes(s, "alpha", "p1");

  auto draw = [&](const CsvTable& t, const char* ycol, bool cycle) {
    const int ca = t.column("alpha"), cy = t.column(ycol), cs = t.column("stability");
    std::vector<std::pair<double, double>> pts;
    std::vector<int> st;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      pts.emplace_back(cell(t, i, ca), cell(t, i, cy));
      st.push_back(text_cell(t, i, cs) == "stable" ? 0 : 1);
    }
    for (const auto& [k, seg] : runs(pts, st)) {
      std::string style;
      if (cycle) style = k == 0 ? "stroke=\"#1a7f37\" stroke-width=\"1.5\"" : "stroke=\"#cf222e\" stroke-width=\"1.5\" stroke-dasharray=\"4,3\"";
      else style = k == 0 ? kSolid : kDashed;
      pn.polyline(s, seg, style, cycle ? "cycle" : "equilibrium");
    }
  };
  draw(eq, "p1_max", false);
  for (const auto& [name, t] : cycles) {
    draw(t, "p1_max", true);
    draw(t, "p1_min", true);
  }
  if (markers) {
    const int ck = markers->column("kind"), cl = markers->column("label"), ca = markers->column("alpha"),
              cp = markers->column("p1");
    for (std::size_t i = 0; i < markers->rows.size(); ++i) {
      const std::string kind = text_cell(*markers, i, ck);
      const double x = pn.px(cell(*markers, i, ca)), y = pn.py(cell(*markers, i, cp));
      if (kind == "hopf") {
        s += "<rect class=\"hopf\" x=\"" + f2(x - 4) + "\" y=\"" + f2(y - 4) + "\" width=\"8\" height=\"8\" fill=\"#000\"/>\n";
        s += "<text x=\"" + f2(x + 6) + "\" y=\"" + f2(y - 6) + "\">" + text_cell(*markers, i, cl) + "</text>\n";
      } else {
        s += "<circle class=\"fold\" cx=\"" + f2(x) + "\" cy=\"" + f2(y) + "\" r=\"3\" fill=\"none\" stroke=\"#8250df\"/>\n";
      }
    }
  }
  return s + "</svg>\n";
}

}  // namespace

std::vector<std::string> emit_plots(const fs::path& dir) {
  const ModelParams m = model_from_manifest(dir);
  std::vector<std::string> written;
  const bool have_traj = fs::exists(dir / "trajectory.csv");
  const bool have_eq = fs::exists(dir / "branch_eq.csv");
  if (!have_traj && !have_eq)
    throw Error(ErrorKind::MissingArtifact, "no trajectory.csv or branch_eq.csv in " + dir.string());
  if (have_traj) {
    const CsvTable traj = read_csv(dir / "trajectory.csv");
    save(dir / "phase_plane.svg", phase_plane(m, traj));
    save(dir / "time_series.svg", time_series(traj));
    written.insert(written.end(), {"phase_plane.svg", "time_series.svg"});
  }
  if (have_eq) {
    const CsvTable eq = read_csv(dir / "branch_eq.csv");
    std::map<std::string, fs::path> files;  // sorted for deterministic output
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("branch_lc_", 0) == 0 && e.path().extension() == ".csv") files[name] = e.path();
    }
    std::vector<std::pair<std::string, CsvTable>> cycles;
    for (const auto& [name, path] : files) cycles.emplace_back(name, read_csv(path));
    std::optional<CsvTable> markers;
    if (fs::exists(dir / "markers.csv")) markers = read_csv(dir / "markers.csv");
    save(dir / "bifurcation.svg", bifurcation(eq, cycles, markers ? &*markers : nullptr));
    written.push_back("bifurcation.svg");
  }
  return written;
}

}  // namespace qlab

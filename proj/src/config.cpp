#include "qlab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "qlab/error.hpp"

namespace qlab {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, path + ": " + msg);
}

// Strict view of one JSON object: every key must be read exactly by name, leftovers are errors.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }
  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(path_ + "." + k, "unknown key");
  }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& at(const std::string& k, bool required) {
    seen_.insert(k);
    if (!j_.contains(k)) {
      if (required) fail(path_ + "." + k, "missing key");
      return null_;
    }
    return j_.at(k);
  }
  void num(const std::string& k, double& out, bool required = false) {
    const json& v = at(k, required);
    if (v.is_null()) return;
    if (!v.is_number()) fail(path_ + "." + k, "expected a number");
    out = v.get<double>();
  }
  void integer(const std::string& k, int& out) {
    const json& v = at(k, false);
    if (v.is_null()) return;
    if (!v.is_number_integer()) fail(path_ + "." + k, "expected an integer");
    out = v.get<int>();
  }
  void boolean(const std::string& k, bool& out) {
    const json& v = at(k, false);
    if (v.is_null()) return;
    if (!v.is_boolean()) fail(path_ + "." + k, "expected a boolean");
    out = v.get<bool>();
  }
  void str(const std::string& k, std::string& out) {
    const json& v = at(k, false);
    if (v.is_null()) return;
    if (!v.is_string()) fail(path_ + "." + k, "expected a string");
    out = v.get<std::string>();
  }
  void numbers(const std::string& k, std::vector<double>& out, int exact = -1, bool required = false) {
    const json& v = at(k, required);
    if (v.is_null()) return;
    if (!v.is_array()) fail(path_ + "." + k, "expected an array");
    if (exact >= 0 && static_cast<int>(v.size()) != exact)
      fail(path_ + "." + k, "expected " + std::to_string(exact) + " entries");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) fail(path_ + "." + k, "expected numbers");
      out.push_back(e.get<double>());
    }
  }
  std::string sub(const std::string& k) const { return path_ + "." + k; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
  static inline const json null_ = nullptr;
};

void read_model(const json& j, ModelParams& m) {
  Obj o(j, "model");
  o.num("epsilon", m.epsilon, true);
  o.num("a", m.a, true);
  o.num("b", m.b, true);
  o.num("a_tilde", m.a_tilde, true);
  o.num("b_tilde", m.b_tilde, true);
  o.num("alpha", m.alpha, true);
  o.num("Q", m.quartic.Q, true);
  std::vector<double> v;
  o.numbers("c", v, 4, true);
  std::copy(v.begin(), v.end(), m.quartic.c.begin());
  o.numbers("r", v, 4, true);
  std::copy(v.begin(), v.end(), m.quartic.r.begin());
  {
    Obj s(o.at("stimulus", true), o.sub("stimulus"));
    s.num("V", m.stimulus.V, true);
    s.num("t_start", m.stimulus.t_start, true);
    s.num("t_end", m.stimulus.t_end, true);
    std::string ts = "fast";
    s.str("timescale", ts);
    if (ts == "fast") m.stimulus.timescale = Timescale::fast;
    else if (ts == "slow") m.stimulus.timescale = Timescale::slow;
    else fail(s.sub("timescale"), "expected \"fast\" or \"slow\"");
  }
  {
    Obj t(o.at("tail", true), o.sub("tail"));
    TailParams& tp = m.tail;
    t.num("tau_D", tp.tau_D, true);
    t.num("tau_F", tp.tau_F, true);
    t.num("f0", tp.f0, true);
    t.num("F_fac", tp.F, true);
    t.num("tau_syn", tp.tau_syn, true);
    t.num("gbar_syn", tp.gbar_syn, true);
    t.num("C_cap", tp.C, true);
    t.num("g_L", tp.g_L, true);
    t.num("E_L", tp.E_L, true);
    t.num("E_syn", tp.E_syn, true);
  }
}

void read_simulate(const json& j, SimulateBlock& s) {
  Obj o(j, "simulate");
  o.boolean("full_model", s.full_model);
  o.num("t_end", s.sim.t_end);
  o.num("delta", s.sim.delta);
  o.num("spike_threshold", s.sim.spike_threshold);
  o.num("h_max", s.sim.h_max);
  if (o.has("init")) {
    std::vector<double> v;
    o.numbers("init", v, 2);
    s.init = {v[0], v[1]};
  }
  o.numbers("init_full", s.init_full, 6);
  if (o.has("classify")) {
    Obj c(o.at("classify", false), o.sub("classify"));
    c.num("drift_tol", s.classify.drift_tol);
    c.integer("consecutive_loops", s.classify.consecutive_loops);
    c.num("equilibrium_tol", s.classify.equilibrium_tol);
    c.num("sustain_fraction", s.classify.sustain_fraction);
  }
}

void read_entry_exit(const json& j, EntryExitBlock& e) {
  Obj o(j, "entry_exit");
  o.numbers("p10", e.p10);
  o.integer("samples", e.samples);
  o.num("margin", e.margin);
  o.num("delta", e.delta);
  o.num("p11_max", e.p11_max);
  o.boolean("simulate", e.simulate);
}

void read_continue(const json& j, ContinueBlock& c) {
  Obj o(j, "continue");
  o.num("alpha_lo", c.alpha_lo);
  o.num("alpha_hi", c.alpha_hi);
  o.integer("samples", c.samples);
  o.numbers("r1_sweep", c.r1_sweep);
  LcOptions& l = c.lc;
  o.num("seed_radius", l.seed_radius);
  o.num("ds_init", l.ds_init);
  o.num("ds_min", l.ds_min);
  o.num("ds_max", l.ds_max);
  o.num("alpha_param_share", l.alpha_param_share);
  o.num("alpha_step_max", l.alpha_step_max);
  o.num("T_max", l.T_max);
  o.integer("max_points", l.max_points);
  o.integer("min_segments", l.min_segments);
  o.integer("max_segments", l.max_segments);
  o.num("growth_target", l.growth_target);
  o.num("rtol", l.rtol);
  o.num("atol", l.atol);
  o.num("newton_tol", l.newton_tol);
  o.integer("newton_max_iter", l.newton_max_iter);
  o.num("alpha_min", l.alpha_min);
  o.num("alpha_max", l.alpha_max);
  o.num("connect_alpha_tol", l.connect_alpha_tol);
  o.num("connect_summary_rtol", l.connect_summary_rtol);
  o.integer("max_folds", l.max_folds);
  o.num("max_seconds", l.max_seconds);
}

void check(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) fail(path, msg);
}

void validate(const RunConfig& c) {
  try {
    c.model.validate();
  } catch (const Error& e) {
    fail("model", std::string(to_string(e.kind())) + ": " + e.what());
  }
  check(c.model.stimulus.t_end >= c.model.stimulus.t_start, "model.stimulus", "t_end before t_start");
  check(c.rtol > 0 && c.atol > 0, "tolerances", "must be positive");
  check(c.simulate.sim.t_end > 0, "simulate.t_end", "must be positive");
  check(c.simulate.sim.delta >= 0, "simulate.delta", "must be non-negative");
  check(std::isfinite(c.simulate.init.p1) && std::isfinite(c.simulate.init.p2), "simulate.init", "must be finite");
  check(c.entry_exit.samples >= 1, "entry_exit.samples", "must be at least 1");
  check(c.entry_exit.margin >= 0, "entry_exit.margin", "must be non-negative");
  check(c.cont.alpha_lo > 0 && c.cont.alpha_hi > c.cont.alpha_lo, "continue", "need 0 < alpha_lo < alpha_hi");
  check(c.cont.samples >= 2, "continue.samples", "must be at least 2");
  const LcOptions& l = c.cont.lc;
  check(l.ds_min > 0 && l.ds_init >= l.ds_min && l.ds_max >= l.ds_init, "continue", "need 0 < ds_min <= ds_init <= ds_max");
  check(l.T_max > 0, "continue.T_max", "must be positive");
  check(l.min_segments >= 32 && l.max_segments >= l.min_segments, "continue", "need 32 <= min_segments <= max_segments");
  check(l.rtol > 0 && l.atol > 0 && l.newton_tol > 0, "continue", "tolerances must be positive");
  check(l.max_points >= 1, "continue.max_points", "must be at least 1");
  for (double r1 : c.cont.r1_sweep) {
    ModelParams m = c.model;
    m.quartic.r[0] = r1;
    try {
      m.validate();
    } catch (const Error& e) {
      fail("continue.r1_sweep", "r1 = " + std::to_string(r1) + " gives an invalid model: " + e.what());
    }
  }
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig c;
  {
    Obj o(doc, "config");
    o.str("name", c.name);
    o.str("output_dir", c.output_dir);
    read_model(o.at("model", true), c.model);
    if (o.has("tolerances")) {
      Obj t(o.at("tolerances", false), "tolerances");
      t.num("rtol", c.rtol);
      t.num("atol", c.atol);
    }
    if (o.has("simulate")) read_simulate(o.at("simulate", false), c.simulate);
    if (o.has("entry_exit")) read_entry_exit(o.at("entry_exit", false), c.entry_exit);
    if (o.has("continue")) read_continue(o.at("continue", false), c.cont);
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  const ModelParams& m = c.model;
  const TailParams& t = m.tail;
  json model = {
      {"epsilon", m.epsilon}, {"a", m.a}, {"b", m.b}, {"a_tilde", m.a_tilde}, {"b_tilde", m.b_tilde},
      {"alpha", m.alpha}, {"Q", m.quartic.Q}, {"c", m.quartic.c}, {"r", m.quartic.r},
      {"stimulus",
       {{"V", m.stimulus.V}, {"t_start", m.stimulus.t_start}, {"t_end", m.stimulus.t_end},
        {"timescale", std::string(to_string(m.stimulus.timescale))}}},
      {"tail",
       {{"tau_D", t.tau_D}, {"tau_F", t.tau_F}, {"f0", t.f0}, {"F_fac", t.F}, {"tau_syn", t.tau_syn},
        {"gbar_syn", t.gbar_syn}, {"C_cap", t.C}, {"g_L", t.g_L}, {"E_L", t.E_L}, {"E_syn", t.E_syn}}}};
  const SimulateBlock& s = c.simulate;
  json sim = {{"full_model", s.full_model},
              {"t_end", s.sim.t_end},
              {"delta", s.sim.delta},
              {"spike_threshold", s.sim.spike_threshold},
              {"h_max", s.sim.h_max},
              {"init", {s.init.p1, s.init.p2}},
              {"classify",
               {{"drift_tol", s.classify.drift_tol},
                {"consecutive_loops", s.classify.consecutive_loops},
                {"equilibrium_tol", s.classify.equilibrium_tol},
                {"sustain_fraction", s.classify.sustain_fraction}}}};
  if (!s.init_full.empty()) sim["init_full"] = s.init_full;
  const EntryExitBlock& e = c.entry_exit;
  json ee = {{"p10", e.p10},         {"samples", e.samples}, {"margin", e.margin},
             {"delta", e.delta},     {"p11_max", e.p11_max}, {"simulate", e.simulate}};
  const LcOptions& l = c.cont.lc;
  json cont = {{"alpha_lo", c.cont.alpha_lo},
               {"alpha_hi", c.cont.alpha_hi},
               {"samples", c.cont.samples},
               {"r1_sweep", c.cont.r1_sweep},
               {"seed_radius", l.seed_radius},
               {"ds_init", l.ds_init},
               {"ds_min", l.ds_min},
               {"ds_max", l.ds_max},
               {"alpha_param_share", l.alpha_param_share},
               {"alpha_step_max", l.alpha_step_max},
               {"T_max", l.T_max},
               {"max_points", l.max_points},
               {"min_segments", l.min_segments},
               {"max_segments", l.max_segments},
               {"growth_target", l.growth_target},
               {"rtol", l.rtol},
               {"atol", l.atol},
               {"newton_tol", l.newton_tol},
               {"newton_max_iter", l.newton_max_iter},
               {"alpha_min", l.alpha_min},
               {"alpha_max", l.alpha_max},
               {"connect_alpha_tol", l.connect_alpha_tol},
               {"connect_summary_rtol", l.connect_summary_rtol},
               {"max_folds", l.max_folds},
               {"max_seconds", l.max_seconds}};
  return {{"name", c.name},
          {"output_dir", c.output_dir},
          {"model", model},
          {"tolerances", {{"rtol", c.rtol}, {"atol", c.atol}}},
          {"simulate", sim},
          {"entry_exit", ee},
          {"continue", cont}};
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.name = name;
  c.output_dir = "out/" + name;
  if (name == "fig3") c.model = preset_fig3();
  else if (name == "fig4") c.model = preset_fig4();
  else if (name == "fig5") c.model = preset_fig5();
  else if (name == "fig6") c.model = preset_fig6();
  else if (name == "fig7") c.model = preset_fig3();
  else if (name == "fig9") c.model = preset_fig6();
  else if (name == "fig11") {
    c.model = preset_fig3();
    c.cont.r1_sweep = {6.0, 6.08, 6.15};
  } else {
    throw Error(ErrorKind::ConfigError, "unknown preset " + name);
  }
  return c;
}

std::vector<std::string> preset_names() { return {"fig3", "fig4", "fig5", "fig6", "fig7", "fig9", "fig11"}; }

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : to_json(cfg).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace qlab

#include "nullglide/config.hpp"

#include "nullglide/io.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

namespace nullglide {

ConfigError::ConfigError(const std::string& source, int line, int column, const std::string& what)
    : Error(line > 0 ? source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what
                     : source + ": " + what),
      line_(line),
      column_(column) {}

namespace {

// ---- emission ----

std::string yd(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  if (std::isnan(v)) return ".nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest form that reads back exactly
  return std::string(buf, res.ptr);
}

std::string yb(bool b) { return b ? "true" : "false"; }

std::string ylist(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + yd(v[i]);
  return s + "]";
}

std::string ylist(const Vec& v) { return ylist(std::vector<double>(v.data(), v.data() + v.size())); }

std::string yints(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

std::string yregion(const Region& r) {
  std::string s = "{box: [";
  for (std::size_t i = 0; i < r.box.size(); ++i) s += (i ? ", " : "") + ylist(std::vector<double>{r.box[i].first, r.box[i].second});
  return s + "], periods: " + ylist(r.periods) + "}";
}

std::string ytargets(const std::vector<TargetSpec>& ts, const std::string& ind) {
  if (ts.empty()) return " []\n";
  std::string s = "\n";
  for (const auto& t : ts) {
    s += ind + "- point: " + ylist(t.point) + "\n" + ind + "  basis: [";
    for (std::size_t i = 0; i < t.basis.size(); ++i) s += (i ? ", " : "") + ylist(t.basis[i]);
    s += "]\n";
  }
  return s;
}

void emit_scenario(std::ostringstream& os, const ScenarioSpec& s, const std::string& ind) {
  const auto& f = s.oneform;
  const auto& c = s.conformal;
  const auto& t = s.tol;
  os << ind << "kind: " << s.kind << "\n"
     << ind << "name: \"" << s.name << "\"\n"
     << ind << "n: " << s.n << "\n"
     << ind << "radius: " << yd(s.radius) << "\n"
     << ind << "lapse_a: " << yd(s.lapse_a) << "\n"
     << ind << "lapse_inverse: " << yb(s.lapse_inverse) << "\n"
     << ind << "exterior: " << yb(s.exterior) << "\n"
     << ind << "disc_a: " << yd(s.disc_a) << "\n"
     << ind << "disc_b: " << yd(s.disc_b) << "\n"
     << ind << "potential: " << yd(s.potential) << "\n"
     << ind << "oneform:\n"
     << ind << "  constant: " << ylist(f.constant) << "\n"
     << ind << "  rotation: " << yd(f.rotation) << "\n"
     << ind << "  psi_amplitude: " << yd(f.psi_amplitude) << "\n"
     << ind << "  psi_radius: " << yd(f.psi_radius) << "\n"
     << ind << "  psi_center: " << ylist(f.psi_center) << "\n"
     << ind << "conformal:\n"
     << ind << "  mode: " << c.mode << "\n"
     << ind << "  c: " << yd(c.c) << "\n"
     << ind << "  psi_amplitude: " << yd(c.psi_amplitude) << "\n"
     << ind << "  broken_amplitude: " << yd(c.broken_amplitude) << "\n"
     << ind << "  transition: " << yd(c.transition) << "\n"
     << ind << "tolerances:\n"
     << ind << "  h_fd: " << yd(t.h_fd) << "\n"
     << ind << "  tol_g: " << yd(t.tol_g) << "\n"
     << ind << "  tol_shell: " << yd(t.tol_shell) << "\n"
     << ind << "  tol_ode: " << yd(t.tol_ode) << "\n"
     << ind << "  tol_event: " << yd(t.tol_event) << "\n"
     << ind << "  h_lens: " << yd(t.h_lens) << "\n"
     << ind << "  tol_symp: " << yd(t.tol_symp) << "\n"
     << ind << "  reproject_shell: " << yb(t.reproject_shell) << "\n";
}

// ---- reading ----

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& what) const {
    const YAML::Mark m = n.Mark();
    if (m.is_null()) throw ConfigError(source_, 0, 0, what);
    throw ConfigError(source_, m.line + 1, m.column + 1, what);
  }

  YAML::Node map(const YAML::Node& parent, const std::string& key, std::initializer_list<const char*> keys) const {
    YAML::Node n = parent[key];
    if (!n) return n;
    if (!n.IsMap()) fail(n, "'" + key + "' must be a mapping");
    check_keys(n, keys, key);
    return n;
  }

  void check_keys(const YAML::Node& n, std::initializer_list<const char*> keys, const std::string& where) const {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : n) {
      const std::string k = kv.first.as<std::string>();
      if (!ok.count(k)) fail(kv.first, "unknown key '" + k + "' in " + where);
    }
  }

  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + ": expected a number");
    double v = 0.0;
    if (YAML::convert<double>::decode(n, v)) return v;
    // Multiples of pi with an optional offset: "pi", "-pi/2", "2pi", "1.5*pi", "pi-0.5".
    static const std::regex re(
        R"(^\s*([+-]?)\s*([0-9]*\.?[0-9]*(?:[eE][+-]?[0-9]+)?)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*)"
        R"((?:([+-])\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?))?\s*$)");
    std::smatch m;
    const std::string s = n.Scalar();
    if (std::regex_match(s, m, re)) {
      double f = m[2].length() ? std::stod(m[2]) : 1.0;
      if (m[3].length()) f /= std::stod(m[3]);
      const double base = (m[1] == "-" ? -1.0 : 1.0) * f * std::numbers::pi;
      if (!m[5].length()) return base;
      return m[4] == "-" ? base - std::stod(m[5]) : base + std::stod(m[5]);
    }
    fail(n, what + ": cannot read '" + s + "' as a number");
  }

  void get(const YAML::Node& p, const char* key, double& out) const {
    if (p && p[key]) out = number(p[key], key);
  }
  void get(const YAML::Node& p, const char* key, int& out) const {
    if (!p || !p[key]) return;
    const YAML::Node n = p[key];
    int v = 0;
    if (!n.IsScalar() || !YAML::convert<int>::decode(n, v)) fail(n, std::string(key) + ": expected an integer");
    out = v;
  }
  void get(const YAML::Node& p, const char* key, std::uint64_t& out) const {
    if (!p || !p[key]) return;
    const YAML::Node n = p[key];
    unsigned long long v = 0;
    if (!n.IsScalar() || !YAML::convert<unsigned long long>::decode(n, v))
      fail(n, std::string(key) + ": expected a non-negative integer");
    out = v;
  }
  void get(const YAML::Node& p, const char* key, bool& out) const {
    if (!p || !p[key]) return;
    const YAML::Node n = p[key];
    bool v = false;
    if (!n.IsScalar() || !YAML::convert<bool>::decode(n, v)) fail(n, std::string(key) + ": expected true or false");
    out = v;
  }
  void get(const YAML::Node& p, const char* key, std::string& out) const {
    if (!p || !p[key]) return;
    if (!p[key].IsScalar()) fail(p[key], std::string(key) + ": expected a string");
    out = p[key].Scalar();
  }
  std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + ": expected a list");
    std::vector<double> v;
    for (const auto& e : n) v.push_back(number(e, what));
    return v;
  }
  void get(const YAML::Node& p, const char* key, std::vector<double>& out) const {
    if (p && p[key]) out = numbers(p[key], key);
  }
  void get(const YAML::Node& p, const char* key, std::vector<int>& out) const {
    if (!p || !p[key]) return;
    const YAML::Node n = p[key];
    if (!n.IsSequence()) fail(n, std::string(key) + ": expected a list");
    out.clear();
    for (const auto& e : n) {
      int v = 0;
      if (!YAML::convert<int>::decode(e, v)) fail(e, std::string(key) + ": expected integers");
      out.push_back(v);
    }
  }
  Vec vec(const YAML::Node& n, const std::string& what) const {
    const auto v = numbers(n, what);
    if (v.size() > static_cast<std::size_t>(kMaxState)) fail(n, what + ": too many entries");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
  }

  Region region(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping with 'box'");
    check_keys(n, {"box", "periods"}, what);
    Region r;
    if (!n["box"] || !n["box"].IsSequence()) fail(n, what + ": 'box' must be a list of [lo, hi] intervals");
    for (const auto& iv : n["box"]) {
      const auto b = numbers(iv, what + " box");
      if (b.size() != 2 || !(b[0] < b[1])) fail(iv, what + ": each interval needs lo < hi");
      r.box.emplace_back(b[0], b[1]);
    }
    r.periods = Vec::Zero(r.dim());
    if (n["periods"]) {
      r.periods = vec(n["periods"], what + " periods");
      if (r.periods.size() != r.dim()) fail(n["periods"], what + ": one period per axis (0 for none)");
    }
    return r;
  }

  std::vector<TargetSpec> targets(const YAML::Node& n, const std::string& what) const {
    std::vector<TargetSpec> out;
    if (!n) return out;
    if (!n.IsSequence()) fail(n, what + ": expected a list");
    for (const auto& e : n) {
      if (!e.IsMap()) fail(e, what + ": entries need 'point' and 'basis'");
      check_keys(e, {"point", "basis"}, what);
      TargetSpec t;
      if (!e["point"] || !e["basis"]) fail(e, what + ": entries need 'point' and 'basis'");
      t.point = vec(e["point"], "point");
      if (!e["basis"].IsSequence()) fail(e["basis"], "basis: expected a list of covectors");
      for (const auto& b : e["basis"]) t.basis.push_back(vec(b, "basis"));
      out.push_back(std::move(t));
    }
    return out;
  }

  ScenarioSpec scenario(const YAML::Node& n) const {
    check_keys(n, {"kind", "name", "n", "radius", "lapse_a", "lapse_inverse", "exterior", "disc_a", "disc_b",
                   "potential", "oneform", "conformal", "tolerances"},
               "scenario");
    ScenarioSpec s;
    get(n, "kind", s.kind);
    if (s.kind != "cylinder" && s.kind != "product_disc") fail(n["kind"], "kind must be cylinder or product_disc");
    s.name = s.kind;
    get(n, "name", s.name);
    get(n, "n", s.n);
    if (s.n != 3 && s.n != 4) fail(n["n"] ? n["n"] : n, "n must be 3 or 4");
    get(n, "radius", s.radius);
    get(n, "lapse_a", s.lapse_a);
    get(n, "lapse_inverse", s.lapse_inverse);
    get(n, "exterior", s.exterior);
    get(n, "disc_a", s.disc_a);
    get(n, "disc_b", s.disc_b);
    get(n, "potential", s.potential);
    const YAML::Node f = map(n, "oneform", {"constant", "rotation", "psi_amplitude", "psi_radius", "psi_center"});
    get(f, "constant", s.oneform.constant);
    get(f, "rotation", s.oneform.rotation);
    get(f, "psi_amplitude", s.oneform.psi_amplitude);
    get(f, "psi_radius", s.oneform.psi_radius);
    get(f, "psi_center", s.oneform.psi_center);
    const YAML::Node c = map(n, "conformal", {"mode", "c", "psi_amplitude", "broken_amplitude", "transition"});
    get(c, "mode", s.conformal.mode);
    static const std::set<std::string> modes = {"none", "gauge", "v_scale", "broken"};
    if (!modes.count(s.conformal.mode)) fail(c["mode"], "conformal mode must be none, gauge, v_scale or broken");
    get(c, "c", s.conformal.c);
    get(c, "psi_amplitude", s.conformal.psi_amplitude);
    get(c, "broken_amplitude", s.conformal.broken_amplitude);
    get(c, "transition", s.conformal.transition);
    const YAML::Node t = map(n, "tolerances",
                             {"h_fd", "tol_g", "tol_shell", "tol_ode", "tol_event", "h_lens", "tol_symp",
                              "reproject_shell"});
    get(t, "h_fd", s.tol.h_fd);
    get(t, "tol_g", s.tol.tol_g);
    get(t, "tol_shell", s.tol.tol_shell);
    get(t, "tol_ode", s.tol.tol_ode);
    get(t, "tol_event", s.tol.tol_event);
    get(t, "h_lens", s.tol.h_lens);
    get(t, "tol_symp", s.tol.tol_symp);
    get(t, "reproject_shell", s.tol.reproject_shell);
    for (const char* k : {"h_fd", "tol_g", "tol_shell", "tol_ode", "tol_event", "h_lens", "tol_symp"}) {
      double v = 0.0;
      get(t, k, v);
      if (t && t[k] && !(v > 0.0)) fail(t[k], std::string(k) + " must be positive");
    }
    if (n["radius"] && !(s.radius > 0.0)) fail(n["radius"], "radius must be positive");
    return s;
  }

  YAML::Node load(const std::string& text) const {
    try {
      YAML::Node root = YAML::Load(text);
      if (!root || root.IsNull()) throw ConfigError(source_, 0, 0, "empty configuration");
      if (!root.IsMap()) fail(root, "top level must be a mapping");
      if (root["schema"]) {
        int v = 0;
        get(root, "schema", v);
        if (v != kConfigSchema) fail(root["schema"], "unsupported schema " + std::to_string(v));
      }
      return root;
    } catch (const YAML::ParserException& e) {
      throw ConfigError(source_, e.mark.line + 1, e.mark.column + 1, e.msg);
    }
  }

 private:
  std::string source_;
};

}  // namespace

std::string scenario_yaml(const ScenarioSpec& spec) {
  std::ostringstream os;
  os << "schema: " << kConfigSchema << "\n";
  emit_scenario(os, spec, "");
  return os.str();
}

ScenarioSpec parse_scenario_yaml(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root = r.load(text);
  YAML::Node body = YAML::Clone(root);
  body.remove("schema");
  return r.scenario(body);
}

std::string run_config_yaml(const RunConfig& c) {
  std::ostringstream os;
  const auto& p = c.probes;
  os << "schema: " << kConfigSchema << "\n"
     << "scenario:\n";
  emit_scenario(os, c.scenario, "  ");
  os << "regions:\n"
     << "  U: " << yregion(c.U) << "\n"
     << "  V: " << yregion(c.V) << "\n"
     << "window:\n"
     << "  tau_min: " << yd(c.window.tau_min) << "\n"
     << "  tau_max: " << yd(c.window.tau_max) << "\n"
     << "  max_events: " << c.window.max_events << "\n"
     << "probes:\n"
     << "  base_counts: " << yints(p.base_counts) << "\n"
     << "  inset: " << yd(p.inset) << "\n"
     << "  fan: " << p.fan << "\n"
     << "  glancing: " << yb(p.glancing) << "\n"
     << "  glancing_angles: " << ylist(p.glancing_angles) << "\n"
     << "  eps: " << ylist(p.eps) << "\n"
     << "  closure: " << yb(p.closure) << "\n"
     << "  hit_targets:" << ytargets(p.hit_targets, "    ")
     << "  source_targets:" << ytargets(p.source_targets, "    ")
     << "trace:\n"
     << "  count: " << c.trace.count << "\n"
     << "  bounces: " << c.trace.bounces << "\n"
     << "  glide_length: " << yd(c.trace.glide_length) << "\n"
     << "  lens_k: " << c.trace.lens_k << "\n"
     << "reconstruct:\n"
     << "  match_tol: " << yd(c.recon.match_tol) << "\n"
     << "  separation: " << yd(c.recon.separation) << "\n"
     << "  min_directions: " << c.recon.min_directions << "\n"
     << "  patches: " << c.recon.patches << "\n"
     << "  residual_threshold: " << yd(c.recon.residual_threshold) << "\n"
     << "  cone_threshold: " << yd(c.recon.cone_threshold) << "\n"
     << "  oneform_threshold: " << yd(c.recon.oneform_threshold) << "\n"
     << "  metric_threshold: " << yd(c.recon.metric_threshold) << "\n"
     << "gauge:\n"
     << "  c: " << yd(c.gauge.c) << "\n"
     << "  psi_amplitude: " << yd(c.gauge.psi_amplitude) << "\n"
     << "run:\n"
     << "  out: \"" << c.out << "\"\n"
     << "  seed: " << c.seed << "\n"
     << "  jobs: " << c.jobs << "\n";
  return os.str();
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  const YAML::Node root = r.load(text);
  r.check_keys(root, {"schema", "scenario", "regions", "window", "probes", "trace", "reconstruct", "gauge", "run"},
               "configuration");
  RunConfig c = default_run_config();
  if (root["scenario"]) {
    if (!root["scenario"].IsMap()) r.fail(root["scenario"], "'scenario' must be a mapping");
    c.scenario = r.scenario(root["scenario"]);
  }
  const YAML::Node reg = r.map(root, "regions", {"U", "V"});
  if (reg && reg["U"]) c.U = r.region(reg["U"], "U");
  if (reg && reg["V"]) c.V = r.region(reg["V"], "V");
  const YAML::Node w = r.map(root, "window", {"tau_min", "tau_max", "max_events"});
  r.get(w, "tau_min", c.window.tau_min);
  r.get(w, "tau_max", c.window.tau_max);
  r.get(w, "max_events", c.window.max_events);
  if (w && !(c.window.tau_min < c.window.tau_max)) r.fail(w, "window needs tau_min < tau_max");
  const YAML::Node p = r.map(root, "probes",
                             {"base_counts", "inset", "fan", "glancing", "glancing_angles", "eps", "closure",
                              "hit_targets", "source_targets"});
  r.get(p, "base_counts", c.probes.base_counts);
  r.get(p, "inset", c.probes.inset);
  r.get(p, "fan", c.probes.fan);
  r.get(p, "glancing", c.probes.glancing);
  r.get(p, "glancing_angles", c.probes.glancing_angles);
  r.get(p, "eps", c.probes.eps);
  r.get(p, "closure", c.probes.closure);
  if (p) {
    if (p["hit_targets"]) c.probes.hit_targets = r.targets(p["hit_targets"], "hit_targets");
    if (p["source_targets"]) c.probes.source_targets = r.targets(p["source_targets"], "source_targets");
    for (const char* k : {"eps"})
      if (p[k])
        for (double e : c.probes.eps)
          if (!(e > 0.0)) r.fail(p[k], "eps levels must be positive");
  }
  const YAML::Node t = r.map(root, "trace", {"count", "bounces", "glide_length", "lens_k"});
  r.get(t, "count", c.trace.count);
  r.get(t, "bounces", c.trace.bounces);
  r.get(t, "glide_length", c.trace.glide_length);
  r.get(t, "lens_k", c.trace.lens_k);
  const YAML::Node rc = r.map(root, "reconstruct",
                              {"match_tol", "separation", "min_directions", "patches", "residual_threshold",
                               "cone_threshold", "oneform_threshold", "metric_threshold"});
  r.get(rc, "match_tol", c.recon.match_tol);
  r.get(rc, "separation", c.recon.separation);
  r.get(rc, "min_directions", c.recon.min_directions);
  r.get(rc, "patches", c.recon.patches);
  r.get(rc, "residual_threshold", c.recon.residual_threshold);
  r.get(rc, "cone_threshold", c.recon.cone_threshold);
  r.get(rc, "oneform_threshold", c.recon.oneform_threshold);
  r.get(rc, "metric_threshold", c.recon.metric_threshold);
  for (const char* k : {"match_tol", "separation"})
    if (rc && rc[k] && !(r.number(rc[k], k) > 0.0)) r.fail(rc[k], std::string(k) + " must be positive");
  const YAML::Node g = r.map(root, "gauge", {"c", "psi_amplitude"});
  r.get(g, "c", c.gauge.c);
  r.get(g, "psi_amplitude", c.gauge.psi_amplitude);
  const YAML::Node run = r.map(root, "run", {"out", "seed", "jobs"});
  r.get(run, "out", c.out);
  r.get(run, "seed", c.seed);
  r.get(run, "jobs", c.jobs);
  if (run && run["jobs"] && c.jobs < 1) r.fail(run["jobs"], "jobs must be at least 1");

  const int N = c.scenario.n - 1;
  for (const auto& [name, reg_node, region] : {std::tuple{"U", reg ? reg["U"] : YAML::Node(), &c.U},
                                               std::tuple{"V", reg ? reg["V"] : YAML::Node(), &c.V}}) {
    if (!region->empty() && region->dim() != N)
      r.fail(reg_node ? reg_node : root, std::string(name) + " needs " + std::to_string(N) + " intervals for n = " +
                                             std::to_string(c.scenario.n));
  }
  if (!regions_disjoint(c.U, c.V)) r.fail(reg ? reg : root, "U and V must be disjoint");
  if (!c.probes.base_counts.empty() && static_cast<int>(c.probes.base_counts.size()) != N)
    r.fail(p && p["base_counts"] ? p["base_counts"] : root, "base_counts needs one entry per boundary axis");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text_file(path), path.string()); }

EnvLookup process_env() {
  return [](const std::string& k) -> std::optional<std::string> {
    const char* v = std::getenv(k.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

void apply_env_overrides(RunConfig& cfg, const EnvLookup& env) {
  Tolerances& t = cfg.scenario.tol;
  const std::pair<const char*, double*> keys[] = {
      {"NULLGLIDE_TOL_ODE", &t.tol_ode},     {"NULLGLIDE_TOL_G", &t.tol_g},       {"NULLGLIDE_TOL_SHELL", &t.tol_shell},
      {"NULLGLIDE_TOL_EVENT", &t.tol_event}, {"NULLGLIDE_TOL_SYMP", &t.tol_symp}, {"NULLGLIDE_H_FD", &t.h_fd},
      {"NULLGLIDE_H_LENS", &t.h_lens},       {"NULLGLIDE_MATCH_TOL", &cfg.recon.match_tol}};
  for (const auto& [k, dst] : keys) {
    const auto v = env(k);
    if (!v) continue;
    char* end = nullptr;
    const double d = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0' || !(d > 0.0))
      throw ConfigError(std::string("environment ") + k, 0, 0, "expected a positive number, got '" + *v + "'");
    *dst = d;
  }
}

void validate(const RunConfig& c) {
  const Tolerances& t = c.scenario.tol;
  for (double v : {t.h_fd, t.tol_g, t.tol_shell, t.tol_ode, t.tol_event, t.h_lens, t.tol_symp, c.recon.match_tol})
    if (!(v > 0.0)) throw ConfigError("config", 0, 0, "all tolerances must be positive");
  if (c.scenario.n != 3 && c.scenario.n != 4) throw ConfigError("config", 0, 0, "n must be 3 or 4");
  const int N = c.scenario.n - 1;
  if (c.U.dim() != N || c.V.dim() != N) throw ConfigError("config", 0, 0, "U and V need one interval per boundary axis");
  if (!regions_disjoint(c.U, c.V)) throw ConfigError("config", 0, 0, "U and V must be disjoint");
  if (c.jobs < 1) throw ConfigError("config", 0, 0, "jobs must be at least 1");
}

RunConfig default_run_config() {
  RunConfig c;
  const double pi = std::numbers::pi;
  c.U.box = {{0.0, 6.0}, {-0.5, 0.5}};
  c.U.periods = make_vec({0.0, 2.0 * pi});
  c.V.box = {{0.0, 12.0}, {pi - 0.5, pi + 0.5}};
  c.V.periods = make_vec({0.0, 2.0 * pi});
  c.window.tau_min = -2.0;
  c.window.tau_max = 14.0;
  c.window.max_events = 400;
  c.probes.base_counts = {3, 3};
  c.probes.inset = 0.1;
  c.probes.fan = 8;
  const std::vector<Vec> basis = {make_vec({-1.0, 0.1}), make_vec({-1.0, -0.1})};
  for (double t : {3.5, 4.5, 5.5, 6.5, 7.5})
    for (double th : {pi - 0.1, pi + 0.1}) c.probes.hit_targets.push_back({make_vec({t, th}), basis});
  return c;
}

}  // namespace nullglide

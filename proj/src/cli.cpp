#include "nullglide/cli.hpp"

#include "nullglide/gauge.hpp"
#include "nullglide/io.hpp"
#include "nullglide/lens.hpp"
#include "nullglide/parallel.hpp"
#include "nullglide/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace nullglide {

namespace fs = std::filesystem;

std::string polyline_svg(const std::vector<std::vector<std::pair<double, double>>>& lines, const std::string& title) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& l : lines)
    for (const auto& [x, y] : l) {
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (x0 > x1) x0 = y0 = 0.0, x1 = y1 = 1.0;
  const double w = 640.0, h = 480.0, pad = 20.0;
  const double sx = (w - 2 * pad) / std::max(x1 - x0, 1e-12), sy = (h - 2 * pad) / std::max(y1 - y0, 1e-12);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\">\n<title>" << title << "</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  for (std::size_t i = 0; i < lines.size(); ++i) {
    os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << colors[i % 6] << "\" points=\"";
    for (std::size_t k = 0; k < lines[i].size(); ++k) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", k ? " " : "", pad + (lines[i][k].first - x0) * sx,
                    h - pad - (lines[i][k].second - y0) * sy);
      os << buf;
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

struct Artifacts {
  fs::path dir;
  Json files = Json::object();

  void write(const std::string& name, const std::string& content, const std::string& schema) {
    write_text_file(dir / name, content);
    files[name] = {{"schema", schema}, {"version", 1}};
  }

  // Merges with an existing manifest so successive commands share one listing.
  void finish(const std::string& command) {
    Json m = {{"schema", "nullglide.manifest"}, {"version", 1}, {"files", Json::object()}, {"commands", Json::object()}};
    const fs::path p = dir / "manifest.json";
    if (fs::exists(p)) {
      try {
        m = Json::parse(read_text_file(p));
      } catch (const std::exception&) {
      }
    }
    for (auto it = files.begin(); it != files.end(); ++it) {
      m["files"][it.key()] = it.value();
      m["commands"][command].push_back(it.key());
    }
    Json& list = m["commands"][command];
    if (list.is_array()) {
      std::vector<std::string> v = list.get<std::vector<std::string>>();
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      list = v;
    }
    write_text_file(p, dump_json(m));
  }
};

std::string csv_header(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s + "\n";
}

// Random hyperbolic sources over U: past-directed time component, tangential part inside the cone.
std::vector<BoundaryCovector> random_sources(const Scenario& s, const Region& U, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<BoundaryCovector> out;
  for (int tries = 0; static_cast<int>(out.size()) < count && tries < 100 * count; ++tries) {
    Vec xb(U.dim());
    for (int a = 0; a < U.dim(); ++a) xb(a) = U.box[a].first + u01(rng) * (U.box[a].second - U.box[a].first);
    Vec xi = Vec::Zero(U.dim());
    xi(0) = -1.0;
    for (int a = 1; a < U.dim(); ++a) xi(a) = 1.6 * (u01(rng) - 0.5);
    const BoundaryCovector bc = classify_covector(s.model, xb, xi);
    if (bc.cls == CovectorClass::Hyperbolic) out.push_back(bc);
  }
  return out;
}

std::pair<double, double> spatial_xy(const Vec& x) { return {x(1), x(2)}; }

struct Context {
  RunConfig cfg;
  Scenario scenario;
  Artifacts art;
  bool strict = false;
  std::string input;
  std::string truth;
  std::ostream* out = nullptr;
};

int cmd_check(Context& c) {
  const auto grid = boundary_sample_grid(c.scenario, 5, 16);
  const AdmissibilityReport rep = check_admissibility(c.scenario.model, grid);
  std::ostringstream csv;
  csv << csv_header({"point", "dtau_timelike", "boundary_lorentzian", "min_second_fundamental_form", "convex"});
  for (const auto& p : rep.points)
    csv << num_list(p.xb, " ") << ',' << p.dtau_timelike << ',' << p.boundary_lorentzian << ','
        << num(p.min_second_fundamental_form) << ',' << p.convex << '\n';
  c.art.write("admissibility.csv", csv.str(), "nullglide.admissibility.csv");
  c.art.write("admissibility.json",
              dump_json({{"schema", "nullglide.admissibility"},
                         {"version", 1},
                         {"scenario", c.scenario.spec.name},
                         {"pass", rep.pass},
                         {"points", rep.points.size()},
                         {"min_second_fundamental_form", rep.min_second_fundamental_form}}),
              "nullglide.admissibility");
  *c.out << "check: " << (rep.pass ? "pass" : "fail") << ", min II = " << num(rep.min_second_fundamental_form)
         << "\n";
  return rep.pass ? 0 : 3;
}

int cmd_trace(Context& c) {
  const auto sources = random_sources(c.scenario, c.cfg.U, c.cfg.trace.count, c.cfg.seed);
  std::vector<BrokenTrajectory> trs(sources.size());
  TraceWindow w = c.cfg.window;
  w.max_events = c.cfg.trace.bounces;
  parallel_for(sources.size(), c.cfg.jobs, [&](std::size_t i) { trs[i] = trace_broken(c.scenario.model, sources[i], w); });
  std::ostringstream tcsv, ecsv, pcsv;
  std::vector<std::vector<std::pair<double, double>>> lines;
  pcsv << "traj_id,x,y\n";
  for (std::size_t i = 0; i < trs.size(); ++i) {
    write_trajectory_csv(tcsv, static_cast<int>(i), trs[i], i == 0);
    write_event_csv(ecsv, static_cast<int>(i), trs[i], i == 0);
    std::vector<std::pair<double, double>> line;
    for (const auto& a : trs[i].arcs)
      for (const auto& nd : a.nodes) {
        line.push_back(spatial_xy(nd.y));
        pcsv << i << ',' << num(line.back().first) << ',' << num(line.back().second) << '\n';
      }
    lines.push_back(std::move(line));
  }
  c.art.write("trajectories.csv", tcsv.str(), "nullglide.trajectory.csv");
  c.art.write("events.csv", ecsv.str(), "nullglide.events.csv");
  c.art.write("trajectories_polyline.csv", pcsv.str(), "nullglide.polyline.csv");
  c.art.write("trajectories.svg", polyline_svg(lines, "broken trajectories, spatial projection"), "svg");
  double shell = 0.0;
  for (const auto& t : trs) shell = std::max(shell, t.max_shell_residual);
  *c.out << "trace: " << trs.size() << " trajectories, max shell residual " << num(shell) << "\n";
  return 0;
}

int cmd_glide(Context& c) {
  std::vector<BoundaryCovector> src;
  for (const Vec& x : c.cfg.U.grid(c.cfg.probes.base_counts, c.cfg.probes.inset))
    for (const Vec& g : null_boundary_covectors(c.scenario.model, x, c.cfg.probes.glancing_angles))
      src.push_back({x, g, CovectorClass::Glancing, orientation_of(c.scenario.model, x, g)});
  std::vector<GlidingRay> rays(src.size());
  TraceWindow w;
  w.s_max = c.cfg.trace.glide_length;
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(c.cfg.trace.glide_length * i / 200.0);
  parallel_for(src.size(), c.cfg.jobs, [&](std::size_t i) { rays[i] = trace_gliding(c.scenario.model, src[i], w, {}, grid); });
  std::ostringstream csv, pcsv;
  pcsv << "traj_id,x,y\n";
  std::vector<std::vector<std::pair<double, double>>> lines;
  bool header = true;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    write_gliding_csv(csv, static_cast<int>(i), rays[i], header);
    if (!rays[i].samples.empty()) header = false;
    std::vector<std::pair<double, double>> line;
    for (const auto& s : rays[i].samples) {
      line.push_back({s.xb(1), s.xb(0)});
      pcsv << i << ',' << num(s.xb(1)) << ',' << num(s.xb(0)) << '\n';
    }
    lines.push_back(std::move(line));
  }
  c.art.write("gliding.csv", csv.str(), "nullglide.gliding.csv");
  c.art.write("gliding_polyline.csv", pcsv.str(), "nullglide.polyline.csv");
  c.art.write("gliding.svg", polyline_svg(lines, "gliding rays, boundary chart (angle, t)"), "svg");
  *c.out << "glide: " << rays.size() << " gliding rays\n";
  return 0;
}

int cmd_lens(Context& c) {
  std::vector<BoundaryCovector> src;
  ProbeDesign d = c.cfg.probes;
  d.glancing = d.closure = false;
  d.hit_targets.clear();
  d.source_targets.clear();
  for (const Probe& p : make_probe_plan(c.scenario.model, c.cfg.U, c.cfg.V, d, c.cfg.window)) {
    const BoundaryCovector bc = classify_covector(c.scenario.model, p.base, p.covec);
    if (bc.cls == CovectorClass::Hyperbolic) src.push_back(bc);
  }
  std::vector<LensSample> rows(src.size());
  std::vector<double> res(src.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<char> ok(src.size(), 0);
  parallel_for(src.size(), c.cfg.jobs, [&](std::size_t i) {
    try {
      rows[i] = lens_map(c.scenario.model, src[i], c.cfg.trace.lens_k);
      res[i] = symplectic_residual(lens_differential(c.scenario.model, src[i], c.cfg.trace.lens_k));
      ok[i] = 1;
    } catch (const Error&) {
    }
  });
  std::vector<LensSample> kept;
  std::vector<double> kres;
  double worst = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i)
    if (ok[i]) {
      kept.push_back(rows[i]);
      kres.push_back(res[i]);
      worst = std::max(worst, res[i]);
    }
  std::ostringstream csv;
  write_lens_csv(csv, kept, kres, true);
  c.art.write("lens.csv", csv.str(), "nullglide.lens.csv");
  *c.out << "lens: " << kept.size() << " samples, max symplectic residual " << num(worst) << "\n";
  return 0;
}

std::vector<Probe> probe_plan(const Context& c, const ManifoldModel& model) {
  return make_probe_plan(model, c.cfg.U, c.cfg.V, c.cfg.probes, c.cfg.window);
}

Measurements synth_measurements(const Context& c, const ManifoldModel& model, const std::vector<Probe>& plan) {
  return synthesize(model, c.cfg.U, c.cfg.V, plan, c.cfg.window, c.cfg.probes, c.cfg.jobs);
}

int cmd_synth(Context& c) {
  const Measurements m = synth_measurements(c, c.scenario.model, probe_plan(c, c.scenario.model));
  c.art.write("blinded.json", blinded_json(blind(m)), "nullglide.blinded");
  c.art.write("truth.json", truth_json(m), "nullglide.truth");
  std::size_t hits = 0;
  for (const auto& p : m.probes) hits += p.hits.size();
  *c.out << "synth: " << m.probes.size() << " probes, " << hits << " hit records\n";
  return 0;
}

int cmd_reconstruct(Context& c) {
  const fs::path in = c.input.empty() ? c.art.dir / "blinded.json" : fs::path(c.input);
  if (!fs::exists(in)) throw DataError("blinded measurements not found: " + in.string());
  const BlindedView b = parse_blinded_json(read_text_file(in));
  if (b.n != c.scenario.spec.n) throw DataError("blinded view dimension does not match the configuration");
  const MetricPrior prior = region_prior(c.scenario, c.cfg.U);
  const MetricPrior prior_v = region_prior(c.scenario, c.cfg.V);
  const ReconstructionResult r = reconstruct(b, c.cfg.recon, c.cfg.probes.hit_targets, c.cfg.probes.source_targets,
                                             &prior, &prior_v, c.cfg.jobs);
  Json report = reconstruction_json(r);
  bool breach = r.max_residual > c.cfg.recon.residual_threshold;
  // Only step that may touch the sidecar.
  const fs::path tp = c.truth.empty() ? c.art.dir / "truth.json" : fs::path(c.truth);
  const auto sidecar = TruthSidecar::open(tp);
  report["truth"] = sidecar ? "present" : "absent";
  c.art.write("reconstruction.json", dump_json(report), "nullglide.reconstruction");
  std::size_t forms = 0, metrics = 0;
  for (const auto& f : r.oneforms) forms += f.ok;
  for (const auto& m : r.metrics) metrics += m.recovery.has_value();
  *c.out << "reconstruct: " << r.table.groups.size() << " weak-lens groups, " << r.sets.u_points.size() << " + "
         << r.sets.v_points.size() << " recoverable points, max residual " << num(r.max_residual) << ", "
         << r.patches.size() << " lens patches, " << forms << " one-form points, " << metrics << " metric points\n";
  if (sidecar) {
    const TruthDeltas d = truth_deltas(r, c.scenario, *sidecar, b, c.cfg.recon);
    c.art.write("deltas.json", dump_json(d.json), "nullglide.deltas");
    *c.out << "deltas: cone " << num(d.max_cone) << ", one-form " << num(d.max_oneform) << ", metric "
           << num(d.max_metric) << ", mixed patches " << d.mixed_patches << "\n";
    breach = breach || d.breach;
  }
  if (breach) *c.out << "reconstruct: threshold breach\n";
  return breach && c.strict ? 3 : 0;
}

int cmd_gauge(Context& c) {
  ConformalSpec cs;
  cs.mode = "gauge";
  cs.c = c.cfg.gauge.c;
  cs.psi_amplitude = c.cfg.gauge.psi_amplitude;
  ScenarioSpec base_spec = c.scenario.spec;
  base_spec.conformal = {};
  const Scenario base = build_scenario(base_spec, c.cfg.U, c.cfg.V);
  const Scenario var = make_conformal_variant(base, cs, c.cfg.U, c.cfg.V);
  // One plan for both sides: targeted probes are located by tracing in the base model.
  const auto plan = probe_plan(c, base.model);
  const Measurements m1 = synth_measurements(c, base.model, plan), m2 = synth_measurements(c, var.model, plan);
  const auto r1 = m1.records(), r2 = m2.records();
  // Records are paired by source and hit position; hits on a region edge may exist on one side only.
  auto key = [](const MeasurementRecord& r) {
    std::vector<long long> k;
    for (const Vec* v : {&r.source.base, &r.source.covec, &r.hit.base})
      for (Eigen::Index i = 0; i < v->size(); ++i) k.push_back(std::llround((*v)(i) * 1e6));
    return k;
  };
  std::map<std::vector<long long>, std::size_t> other;
  for (std::size_t i = 0; i < r2.size(); ++i) other.emplace(key(r2[i]), i);
  std::ostringstream csv;
  csv << "record,source_x,source_xi,hit_x,abs_Q1,abs_Q2,rel_dQ\n";
  double worst = 0.0;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    const auto it = other.find(key(r1[i]));
    if (it == other.end()) continue;
    const MeasurementRecord& b = r2[it->second];
    const double rel = std::abs(r1[i].Q - b.Q) / std::abs(r1[i].Q);
    worst = std::max(worst, rel);
    ++matched;
    csv << i << ',' << num_list(r1[i].source.base, " ") << ',' << num_list(r1[i].source.covec, " ") << ','
        << num_list(r1[i].hit.base, " ") << ',' << num(std::abs(r1[i].Q)) << ',' << num(std::abs(b.Q)) << ','
        << num(rel) << '\n';
  }
  const std::size_t unmatched = r1.size() + r2.size() - 2 * matched;
  const ConstancyReport con =
      validate_local_constancy(var.model, var.conformal_phi, c.cfg.U, c.cfg.V, {3, 3}, c.cfg.window);
  c.art.write("gauge.csv", csv.str(), "nullglide.gauge.csv");
  c.art.write("gauge.json",
              dump_json({{"schema", "nullglide.gauge"},
                         {"version", 1},
                         {"c", cs.c},
                         {"psi_amplitude", cs.psi_amplitude},
                         {"records", matched},
                         {"unmatched", unmatched},
                         {"max_rel_dQ", worst},
                         {"constancy_samples", con.samples},
                         {"constancy_violation", con.max_violation}}),
              "nullglide.gauge");
  *c.out << "gauge-test: " << matched << " records (" << unmatched << " unmatched), max |dQ|/|Q| = " << num(worst) << "\n";
  return worst <= 1e-6 || !c.strict ? 0 : 3;
}

int cmd_report(Context& c) {
  std::ostringstream os;
  os << "nullglide report\n"
     << "scenario: " << c.scenario.spec.name << " (" << c.scenario.spec.kind << ", n = " << c.scenario.spec.n << ")\n";
  auto load = [&](const char* name) -> std::optional<Json> {
    const fs::path p = c.art.dir / name;
    if (!fs::exists(p)) return std::nullopt;
    return Json::parse(read_text_file(p));
  };
  if (auto j = load("admissibility.json"))
    os << "admissibility: " << ((*j)["pass"].get<bool>() ? "pass" : "fail") << ", min II "
       << num((*j)["min_second_fundamental_form"].get<double>()) << "\n";
  if (auto j = load("blinded.json")) os << "measurements: " << (*j)["probes"].size() << " probes\n";
  if (auto j = load("reconstruction.json")) {
    std::size_t forms = 0, metrics = 0;
    for (const auto& f : (*j)["one_form"]) forms += f["ok"].get<bool>();
    for (const auto& m : (*j)["metric"]) metrics += m.contains("gbar");
    os << "reconstruction: " << (*j)["weak_lens"]["groups"].size() << " weak-lens groups, "
       << (*j)["recoverable"]["U"].size() << " recoverable points in U, max conformal residual "
       << num((*j)["max_residual"].get<double>()) << ", " << (*j)["lens_patches"].size() << " lens patches, "
       << forms << " one-form points, " << metrics << " metric points\n";
  }
  if (auto j = load("deltas.json"))
    os << "truth deltas: cone " << num((*j)["max_cone_deviation"].get<double>()) << ", one-form "
       << num((*j)["max_one_form_error"].get<double>()) << ", metric "
       << num((*j)["max_metric_error"].get<double>()) << ", mixed patches " << (*j)["mixed_patches"].get<int>()
       << ((*j)["breach"].get<bool>() ? ", breach\n" : "\n");
  if (auto j = load("gauge.json"))
    os << "gauge test: " << (*j)["records"].get<int>() << " records, max |dQ|/|Q| "
       << num((*j)["max_rel_dQ"].get<double>()) << "\n";
  c.art.write("report.txt", os.str(), "text");
  *c.out << os.str();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"nullglide: broken null rays, gliding rays and boundary reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();  // inherited by subcommands, so global flags may follow the command
  std::string config_path, out_dir, input, truth;
  int jobs = 0;
  std::uint64_t seed = 0;
  bool strict = false;
  bool have_seed = false;
  app.add_option("--config", config_path, "YAML run configuration");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { seed = s, have_seed = true; },
                                         "seed for randomized sampling");
  app.add_flag("--strict", strict, "nonzero exit on threshold breaches");
  const char* names[] = {"check", "trace", "glide", "lens", "synth", "reconstruct", "gauge-test", "report"};
  for (const char* n : names) {
    CLI::App* sub = app.add_subcommand(n);
    if (std::string(n) == "reconstruct") {
      sub->add_option("--input", input, "blinded measurements (default OUT/blinded.json)");
      sub->add_option("--truth", truth, "truth sidecar for deltas (default OUT/truth.json)");
    }
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }
  Context c;
  c.out = &out;
  try {
    c.cfg = config_path.empty() ? default_run_config() : load_run_config(config_path);
    apply_env_overrides(c.cfg, env);
    if (!out_dir.empty()) c.cfg.out = out_dir;
    if (jobs > 0) c.cfg.jobs = jobs;
    if (have_seed) c.cfg.seed = seed;
    validate(c.cfg);
  } catch (const Error& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  }
  c.strict = strict;
  c.input = input;
  c.truth = truth;
  c.art.dir = c.cfg.out;
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    c.scenario = build_scenario(c.cfg.scenario, c.cfg.U, c.cfg.V);
    fs::create_directories(c.art.dir);
    // Output location and worker count do not change results; normalized so runs compare byte for byte.
    RunConfig echo = c.cfg;
    echo.out = ".";
    echo.jobs = 1;
    c.art.write("config.yaml", run_config_yaml(echo), "nullglide.config");
    int code = 0;
    if (command == "check") code = cmd_check(c);
    else if (command == "trace") code = cmd_trace(c);
    else if (command == "glide") code = cmd_glide(c);
    else if (command == "lens") code = cmd_lens(c);
    else if (command == "synth") code = cmd_synth(c);
    else if (command == "reconstruct") code = cmd_reconstruct(c);
    else if (command == "gauge-test") code = cmd_gauge(c);
    else code = cmd_report(c);
    c.art.finish(command);
    return code;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nullglide

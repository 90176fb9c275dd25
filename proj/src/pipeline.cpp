#include "nullglide/pipeline.hpp"

#include "nullglide/parallel.hpp"

#include <cmath>
#include <fstream>
#include <map>

namespace nullglide {

namespace {

Json mat_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json phase_json(const PhaseCovector& p) { return {{"x", vec_json(p.x)}, {"xi", vec_json(p.xi)}}; }

Json lens_json(const LocalLens& l) {
  Json steps = Json::array();
  for (const auto& [a, b] : l.steps) steps.push_back({{"from", phase_json(a)}, {"to", phase_json(b)}});
  return {{"steps", steps},
          {"chains", l.chains.size()},
          {"time_covector", vec_json(l.time_covector)},
          {"patch_too_large", l.patch_too_large}};
}

}  // namespace

MetricPrior region_prior(const Scenario& s, const Region& side) {
  MetricPrior p;
  p.gbar = [&s, side](const Vec& x) {
    if (!side.contains(x)) throw DataError("prior requested outside its region");
    return boundary_metric(s.model, x).g;
  };
  p.orientation = [&s, side](const Vec& x, const Vec& xi) {
    if (!side.contains(x)) throw DataError("prior requested outside its region");
    return orientation_of(s.model, x, xi);
  };
  return p;
}

ReconstructionResult reconstruct(const BlindedView& b, const ReconSettings& st, const std::vector<TargetSpec>& hit_targets,
                                 const std::vector<TargetSpec>& source_targets, const MetricPrior* prior_u,
                                 const MetricPrior* prior_v, int jobs) {
  ReconstructionResult r;
  r.n = b.n;
  r.table = build_weak_lens(b, st.match_tol, st.separation);
  RecoverableOptions ro;
  ro.min_directions = st.min_directions;
  r.sets = detect_recoverable(b, ro);

  std::vector<const RecoverablePoint*> pts;
  for (const auto& p : r.sets.u_points) pts.push_back(&p);
  for (const auto& p : r.sets.v_points) pts.push_back(&p);
  r.classes.resize(pts.size());
  r.class_notes.resize(pts.size());
  parallel_for(pts.size(), jobs, [&](std::size_t i) {
    try {
      r.classes[i] = fit_conformal_class(pts[i]->x, pts[i]->directions);
    } catch (const DataError& e) {
      r.classes[i].x = pts[i]->x;
      r.class_notes[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (r.class_notes[i].empty()) r.max_residual = std::max(r.max_residual, r.classes[i].residual);

  const std::size_t nu = r.sets.u_points.size();
  for (std::size_t i = 0; i < nu && static_cast<int>(r.patches.size()) < st.patches; ++i) {
    if (!r.class_notes[i].empty()) continue;
    for (const Vec& g : pts[i]->directions) {
      if (static_cast<int>(r.patches.size()) >= st.patches) break;
      LensPatch patch;
      patch.x = pts[i]->x;
      patch.xi = g;
      LocalLens l = recover_lens_orientation(b, r.table, r.classes[i], patch);
      if (l.steps.empty()) continue;
      r.patches.push_back({pts[i]->x, g, std::move(l), recover_lens_orientation(b, r.table, r.classes[i], patch, true)});
    }
  }

  r.oneforms.resize(nu);
  parallel_for(nu, jobs, [&](std::size_t i) {
    if (!r.class_notes[i].empty()) {
      r.oneforms[i].x = pts[i]->x;
      r.oneforms[i].note = "no conformal class";
      return;
    }
    LensPatch patch;
    patch.x = pts[i]->x;
    patch.xi = pts[i]->directions.front();
    OneFormOptions opt;
    opt.match_tol = st.match_tol;
    r.oneforms[i] = recover_one_form(b, r.table, r.classes[i], pts[i]->directions, patch, opt);
  });

  auto add_metrics = [&](const std::vector<TargetSpec>& targets, PriorSide side, const MetricPrior* prior) {
    const std::size_t base = r.metrics.size();
    for (const auto& t : targets) r.metrics.push_back({t, side, std::nullopt, prior ? "" : "no prior"});
    if (!prior) return;
    parallel_for(targets.size(), jobs, [&](std::size_t i) {
      auto& m = r.metrics[base + i];
      try {
        m.recovery = recover_metric_with_prior(b, *prior, side, m.target.point, m.target.basis, st.match_tol);
      } catch (const DataError& e) {
        m.note = e.what();
      }
    });
  };
  add_metrics(hit_targets, PriorSide::U, prior_u);
  add_metrics(source_targets, PriorSide::V, prior_v);
  return r;
}

Json reconstruction_json(const ReconstructionResult& r) {
  Json groups = Json::array();
  for (const auto& g : r.table.groups) {
    Json bu = Json::array(), bv = Json::array();
    for (const auto& p : g.b_u) bu.push_back(phase_json(p));
    for (const auto& p : g.b_v) bv.push_back(phase_json(p));
    groups.push_back({{"B_U", bu}, {"B_V", bv}});
  }
  Json ambiguous = Json::array();
  for (const auto& [a, b] : r.table.ambiguous) ambiguous.push_back({a, b});
  auto point_list = [](const std::vector<RecoverablePoint>& v) {
    Json out = Json::array();
    for (const auto& p : v) {
      Json dirs = Json::array();
      for (const auto& d : p.directions) dirs.push_back(vec_json(d));
      out.push_back({{"x", vec_json(p.x)}, {"directions", dirs}, {"sampled", p.sampled}});
    }
    return out;
  };
  Json undersampled = Json::array();
  for (const auto& x : r.sets.undersampled) undersampled.push_back(vec_json(x));
  Json classes = Json::array();
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    const auto& c = r.classes[i];
    Json e = {{"x", vec_json(c.x)}, {"side", i < r.sets.u_points.size() ? "U" : "V"}};
    if (r.class_notes[i].empty()) {
      e["q"] = mat_json(c.q);
      e["residual"] = c.residual;
      e["second_singular"] = c.second_singular;
    } else {
      e["error"] = r.class_notes[i];
    }
    classes.push_back(e);
  }
  Json patches = Json::array();
  for (const auto& p : r.patches)
    patches.push_back({{"x", vec_json(p.x)}, {"glancing", vec_json(p.glancing)}, {"lens", lens_json(p.lens)},
                       {"flipped", lens_json(p.flipped)}});
  Json forms = Json::array();
  for (const auto& f : r.oneforms) {
    Json dirs = Json::array();
    for (const auto& d : f.directions) {
      Json levels = Json::array();
      for (std::size_t k = 0; k < d.eps.size(); ++k)
        levels.push_back({{"eps", d.eps[k]}, {"slope", d.slopes[k]}, {"points", d.points[k]}});
      dirs.push_back({{"glancing", vec_json(d.glancing)},
                      {"u", vec_json(d.u)},
                      {"value", d.value},
                      {"levels", levels},
                      {"extrapolation_residual", d.extrapolation_residual},
                      {"ok", d.ok},
                      {"note", d.note}});
    }
    Json e = {{"x", vec_json(f.x)}, {"ok", f.ok}, {"note", f.note}, {"directions", dirs}};
    if (f.ok) e["A"] = vec_json(f.A);
    forms.push_back(e);
  }
  Json metrics = Json::array();
  for (const auto& m : r.metrics) {
    Json basis = Json::array();
    for (const auto& z : m.target.basis) basis.push_back(vec_json(z));
    Json e = {{"point", vec_json(m.target.point)},
              {"basis", basis},
              {"prior", m.side == PriorSide::U ? "U" : "V"},
              {"note", m.note}};
    if (m.recovery) {
      e["gbar"] = mat_json(m.recovery->gbar);
      e["C"] = mat_json(m.recovery->C);
      e["det_factor"] = m.recovery->det_factor;
      e["S"] = m.recovery->S;
      e["orientation"] = to_string(m.recovery->orientation);
    }
    metrics.push_back(e);
  }
  return {{"schema", "nullglide.reconstruction"},
          {"version", 1},
          {"n", r.n},
          {"weak_lens", {{"groups", groups}, {"ambiguous", ambiguous}, {"match_tol", r.table.match_tol}}},
          {"recoverable",
           {{"U", point_list(r.sets.u_points)}, {"V", point_list(r.sets.v_points)}, {"undersampled", undersampled}}},
          {"conformal_class", classes},
          {"max_residual", r.max_residual},
          {"lens_patches", patches},
          {"one_form", forms},
          {"metric", metrics}};
}

std::optional<TruthSidecar> TruthSidecar::open(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) return std::nullopt;
  Json j;
  try {
    j = Json::parse(read_text_file(p));
  } catch (const std::exception& e) {
    throw DataError(std::string("truth sidecar is not valid JSON: ") + e.what());
  }
  if (j.value("schema", "") != "nullglide.truth") throw DataError("not a truth sidecar file");
  return TruthSidecar(std::move(j));
}

Vec boundary_one_form(const ManifoldModel& model, const Vec& xb) {
  return model.chart->jacobian(xb).transpose() * model.oneform(model.chart->embed(xb));
}

TruthDeltas truth_deltas(const ReconstructionResult& r, const Scenario& s, const TruthSidecar& sidecar,
                         const BlindedView& b, const ReconSettings& st) {
  TruthDeltas d;
  const ManifoldModel& m = s.model;
  Json cones = Json::array();
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    if (!r.class_notes[i].empty()) continue;
    const double dev = cone_angle_deviation(r.classes[i].q, boundary_metric(m, r.classes[i].x).g_inv);
    d.max_cone = std::max(d.max_cone, dev);
    cones.push_back({{"x", vec_json(r.classes[i].x)}, {"cone_deviation", dev}});
  }
  Json lenses = Json::array();
  for (const auto& p : r.patches) {
    const int br = lens_branch(m, p.lens), bf = lens_branch(m, p.flipped);
    if (br == 0 || bf != -br) ++d.mixed_patches;
    lenses.push_back({{"x", vec_json(p.x)}, {"glancing", vec_json(p.glancing)}, {"branch", br}, {"flipped", bf}});
  }
  Json forms = Json::array();
  for (const auto& f : r.oneforms) {
    if (!f.ok) continue;
    const Vec truth = boundary_one_form(m, f.x);
    const double scale = truth.cwiseAbs().maxCoeff();
    const double err = (f.A - truth).cwiseAbs().maxCoeff() / (scale > 1e-3 ? scale : 1.0);
    d.max_oneform = std::max(d.max_oneform, err);
    forms.push_back({{"x", vec_json(f.x)}, {"A_true", vec_json(truth)}, {"error", err}});
  }
  Json metrics = Json::array();
  for (const auto& mt : r.metrics) {
    if (!mt.recovery) continue;
    const Mat truth = boundary_metric(m, mt.target.point).g;
    const double rel = (mt.recovery->gbar - truth).norm() / truth.norm();
    const double det = std::abs(truth.determinant());
    const double det_rel = std::abs(mt.recovery->det_factor - det) / det;
    const bool orient_ok = mt.side == PriorSide::V ||
                           mt.recovery->orientation == orientation_of(m, mt.target.point, mt.target.basis.front());
    d.max_metric = std::max(d.max_metric, rel);
    metrics.push_back({{"point", vec_json(mt.target.point)},
                       {"relative_error", rel},
                       {"det_identity_error", det_rel},
                       {"orientation_ok", orient_ok}});
  }
  // Weak lens against the sidecar: hits shared inside a group are one physical event (equal tau).
  std::map<std::vector<long long>, const Json*> truth_by_source;
  auto key = [](const Vec& x, const Vec& xi) {
    std::vector<long long> k;
    for (Eigen::Index i = 0; i < x.size(); ++i) k.push_back(std::llround(x(i) * 1e9));
    for (Eigen::Index i = 0; i < xi.size(); ++i) k.push_back(std::llround(xi(i) * 1e9));
    return k;
  };
  for (const auto& p : sidecar.data().at("probes"))
    truth_by_source[key(json_vec(p.at("source").at("x")), json_vec(p.at("source").at("xi")))] = &p;
  for (const auto& g : r.table.groups) {
    std::map<std::vector<long long>, double> tau_of_hit;
    bool ok = true;
    for (int pi : g.probes) {
      const auto it = truth_by_source.find(key(b.probes[pi].x, b.probes[pi].xi));
      if (it == truth_by_source.end()) {
        ok = false;
        break;
      }
      for (const auto& h : it->second->at("hits")) {
        const Vec hx = b.V.canonical(json_vec(h.at("x")));
        std::vector<long long> hk;
        for (Eigen::Index i = 0; i < hx.size(); ++i) hk.push_back(std::llround(hx(i) * 1e6));
        const double tau = h.at("tau").get<double>();
        const auto [pos, fresh] = tau_of_hit.emplace(hk, tau);
        if (!fresh && std::abs(pos->second - tau) > 1e-6) ok = false;
      }
    }
    if (!ok) ++d.inconsistent_groups;
  }
  d.breach = d.max_cone > st.cone_threshold || d.max_oneform > st.oneform_threshold ||
             d.max_metric > st.metric_threshold || d.mixed_patches > 0 || d.inconsistent_groups > 0;
  d.json = {{"schema", "nullglide.deltas"},
            {"version", 1},
            {"conformal_class", cones},
            {"max_cone_deviation", d.max_cone},
            {"lens_patches", lenses},
            {"mixed_patches", d.mixed_patches},
            {"one_form", forms},
            {"max_one_form_error", d.max_oneform},
            {"metric", metrics},
            {"max_metric_error", d.max_metric},
            {"inconsistent_groups", d.inconsistent_groups},
            {"breach", d.breach}};
  return d;
}

}  // namespace nullglide

#include "nullglide/lens.hpp"

#include "nullglide/io.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <ostream>
#include <optional>
#include <set>

namespace nullglide {

FlowOptions lens_flow_options() {
  FlowOptions o;
  o.tol_ode = 1e-13;
  o.reproject = false;
  return o;
}

namespace {

LensSample run_lens(const ManifoldModel& model, const BoundaryCovector& source, int k, const FlowOptions& opt,
                    bool forward) {
  if (k < 1) throw Error("lens power must be at least 1");
  if (source.cls != CovectorClass::Hyperbolic) throw ClassificationError("lens source must be hyperbolic");
  const double xin = lift_normal_magnitude(model, source.base, source.covec);
  if (xin < 1e-6 * source.covec.norm()) throw TangencyError("lens source is near glancing");
  TraceWindow w;
  w.max_events = k;
  w.forward = forward;
  const BrokenTrajectory tr = trace_broken(model, source, w, opt);
  if (static_cast<int>(tr.events.size()) < k) throw DataError("trajectory has fewer than k boundary events");
  const ReflectionEvent& ev = tr.events[static_cast<std::size_t>(k - 1)];
  LensSample out;
  out.source = source;
  out.target = ev.covector;
  out.k = k;
  out.flight = ev.s;
  out.arrival_tau = ev.tau;
  return out;
}

Vec unwrap_like(const ManifoldModel& model, Vec x, const Vec& ref) {
  const Vec per = model.chart->periods();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (per(i) > 0.0) x(i) = ref(i) + std::remainder(x(i) - ref(i), per(i));
  return x;
}

}  // namespace

LensSample lens_map(const ManifoldModel& model, const BoundaryCovector& source, int k, const FlowOptions& opt) {
  return run_lens(model, source, k, opt, true);
}

LensSample lens_inverse(const ManifoldModel& model, const BoundaryCovector& target, int k, const FlowOptions& opt) {
  LensSample s = run_lens(model, target, k, opt, false);
  std::swap(s.source, s.target);
  return s;
}

MatX canonical_symplectic(int dim) {
  const int m = dim / 2;
  MatX j = MatX::Zero(dim, dim);
  j.topRightCorner(m, m) = MatX::Identity(m, m);
  j.bottomLeftCorner(m, m) = -MatX::Identity(m, m);
  return j;
}

double symplectic_residual(const MatX& d) {
  const MatX j = canonical_symplectic(static_cast<int>(d.rows()));
  return (d.transpose() * j * d - j).norm();
}

MatX lens_differential(const ManifoldModel& model, const BoundaryCovector& source, int k, double h_lens,
                       const FlowOptions& opt) {
  if (h_lens <= 0.0) h_lens = model.tol.h_lens;
  const int m = static_cast<int>(source.base.size());
  const LensSample center = lens_map(model, source, k, opt);
  Vec zc(2 * m);
  zc << center.target.base, center.target.covec;
  MatX d(2 * m, 2 * m);
  for (int j = 0; j < 2 * m; ++j) {
    const double h = j < m ? h_lens * model.chart_scale : h_lens * source.covec.norm();
    Vec side[2];
    for (int s = 0; s < 2; ++s) {
      Vec xb = source.base, xi = source.covec;
      const double step = s == 0 ? h : -h;
      if (j < m)
        xb(j) += step;
      else
        xi(j - m) += step;
      BoundaryCovector bc;
      try {
        bc = classify_covector(model, xb, xi);
        if (bc.cls != CovectorClass::Hyperbolic || bc.orientation != source.orientation)
          throw DataError("stencil leaves the hyperbolic set");
        const LensSample ls = lens_map(model, bc, k, opt);
        side[s].resize(2 * m);
        side[s] << unwrap_like(model, ls.target.base, center.target.base), ls.target.covec;
      } catch (const DataError&) {
        throw;
      } catch (const Error& e) {
        throw DataError(std::string("lens discontinuity within the stencil: ") + e.what());
      }
    }
    d.col(j) = (side[0] - side[1]) / (2.0 * h);
    // A different k-th event inside the stencil shows up as an O(1) second difference.
    if ((side[0] + side[1] - 2.0 * zc).norm() > 1e-6 * (1.0 + zc.norm()))
      throw DataError("lens discontinuity within the stencil");
  }
  return d;
}

// ---------------------------------------------------------------------------------------------

Vec unit_direction(const Vec& psi) {
  if (psi.size() == 1) return make_vec({std::cos(psi(0)), std::sin(psi(0))});
  if (psi.size() == 2) {
    const double a = psi(0), b = psi(1);
    return make_vec({std::cos(a), std::sin(a) * std::cos(b), std::sin(a) * std::sin(b)});
  }
  throw Error("direction angles must have 1 or 2 entries");
}

Mat unit_direction_jacobian(const Vec& psi) {
  if (psi.size() == 1) {
    Mat j(2, 1);
    j << -std::sin(psi(0)), std::cos(psi(0));
    return j;
  }
  if (psi.size() == 2) {
    const double a = psi(0), b = psi(1);
    Mat j(3, 2);
    j << -std::sin(a), 0.0, std::cos(a) * std::cos(b), -std::sin(a) * std::sin(b), std::cos(a) * std::sin(b),
        std::sin(a) * std::cos(b);
    return j;
  }
  throw Error("direction angles must have 1 or 2 entries");
}

std::size_t DirectionalLensPatch::node_count() const {
  std::size_t c = 1;
  for (const auto& a : axes) c *= a.size();
  return c;
}

std::vector<int> DirectionalLensPatch::index(std::size_t flat) const {
  std::vector<int> idx(axes.size());
  for (std::size_t d = axes.size(); d-- > 0;) {
    idx[d] = static_cast<int>(flat % axes[d].size());
    flat /= axes[d].size();
  }
  return idx;
}

std::size_t DirectionalLensPatch::flat(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (std::size_t d = 0; d < axes.size(); ++d) f = f * axes[d].size() + static_cast<std::size_t>(idx[d]);
  return f;
}

DirectionalLensPatch sample_directional_patch(const ManifoldModel& model, const Vec& x0, const Vec& psi0,
                                              double half_width, int count, int k, bool unit_targets) {
  if (count < 1) throw Error("patch needs at least one node per axis");
  DirectionalLensPatch p;
  p.m = static_cast<int>(x0.size());
  p.k = k;
  if (psi0.size() != p.m - 1) throw Error("direction angle count must be one less than the boundary dimension");
  auto axis = [&](double c) {
    std::vector<double> a(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      a[static_cast<std::size_t>(i)] = count == 1 ? c : c - half_width + 2.0 * half_width * i / (count - 1);
    return a;
  };
  for (int i = 0; i < p.m; ++i) p.axes.push_back(axis(x0(i)));
  for (int i = 0; i < p.m - 1; ++i) p.axes.push_back(axis(psi0(i)));
  const std::size_t nn = p.node_count();
  p.target_base.resize(nn);
  p.target_dir.resize(nn);
  std::optional<Vec> ref;
  for (std::size_t f = 0; f < nn; ++f) {
    const auto idx = p.index(f);
    Vec xb(p.m), psi(p.m - 1);
    for (int i = 0; i < p.m; ++i) xb(i) = p.axes[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[i])];
    for (int i = 0; i < p.m - 1; ++i)
      psi(i) = p.axes[static_cast<std::size_t>(p.m + i)][static_cast<std::size_t>(idx[p.m + i])];
    const BoundaryCovector bc = classify_covector(model, xb, unit_direction(psi));
    const LensSample ls = lens_map(model, bc, k);
    if (!ref) ref = ls.target.base;
    p.target_base[f] = unwrap_like(model, ls.target.base, *ref);
    p.target_dir[f] = unit_targets ? Vec(ls.target.covec / ls.target.covec.norm()) : ls.target.covec;
  }
  return p;
}

namespace {

struct ScalingProblem {
  const DirectionalLensPatch& p;
  int m;
  int q;  // grid dimension 2m-1

  // Second-order derivative of field values along axis a at node idx.
  template <class F>
  auto axis_derivative(const std::vector<int>& idx, int a, F&& value) const {
    const auto& ax = p.axes[static_cast<std::size_t>(a)];
    const int n = static_cast<int>(ax.size());
    const double h = (ax.back() - ax.front()) / (n - 1);
    std::vector<int> j = idx;
    auto at = [&](int i) {
      j[static_cast<std::size_t>(a)] = i;
      return value(p.flat(j));
    };
    const int i = idx[static_cast<std::size_t>(a)];
    if (i == 0) return decltype(at(0))((-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h));
    if (i == n - 1) return decltype(at(0))((3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h));
    return decltype(at(0))((at(i + 1) - at(i - 1)) / (2.0 * h));
  }

  MatX differential(std::size_t node, const VecX& u) const {
    const auto idx = p.index(node);
    MatX dq(2 * m, q);
    for (int a = 0; a < q; ++a) {
      const VecX dy = axis_derivative(idx, a, [&](std::size_t f) -> VecX { return p.target_base[f]; });
      const VecX dp = axis_derivative(
          idx, a, [&](std::size_t f) -> VecX { return std::exp(u(static_cast<Eigen::Index>(f))) * p.target_dir[f]; });
      dq.col(a) << dy, dp;
    }
    Vec psi(m - 1);
    for (int i = 0; i < m - 1; ++i)
      psi(i) = p.axes[static_cast<std::size_t>(m + i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(m + i)])];
    MatX mm(m, m);
    mm.col(0) = unit_direction(psi);
    mm.rightCols(m - 1) = unit_direction_jacobian(psi);
    MatX dr(2 * m, m);
    dr.col(0).head(m).setZero();
    dr.col(0).tail(m) = std::exp(u(static_cast<Eigen::Index>(node))) * p.target_dir[node];
    dr.rightCols(m - 1) = dq.rightCols(m - 1);
    MatX d(2 * m, 2 * m);
    d.leftCols(m) = dq.leftCols(m);
    d.rightCols(m) = dr * mm.inverse();
    return d;
  }

  VecX node_entries(std::size_t node, const VecX& u) const {
    const MatX d = differential(node, u);
    const MatX j = canonical_symplectic(2 * m);
    const MatX r = d.transpose() * j * d - j;
    VecX e(m * (2 * m - 1));
    int c = 0;
    for (int a = 0; a < 2 * m; ++a)
      for (int b = a + 1; b < 2 * m; ++b) e(c++) = r(a, b) * std::sqrt(2.0);
    return e;
  }

  // Nodes whose stencils read u at `node`.
  std::vector<std::size_t> influenced(std::size_t node) const {
    std::set<std::size_t> out{node};
    const auto idx = p.index(node);
    for (int a = 0; a < q; ++a) {
      const int n = static_cast<int>(p.axes[static_cast<std::size_t>(a)].size());
      for (int off = -2; off <= 2; ++off) {
        const int i = idx[static_cast<std::size_t>(a)] + off;
        if (i < 0 || i >= n) continue;
        auto j = idx;
        j[static_cast<std::size_t>(a)] = i;
        out.insert(p.flat(j));
      }
    }
    return {out.begin(), out.end()};
  }
};

}  // namespace

ScaledLens recover_scaling(const DirectionalLensPatch& patch, double tikhonov) {
  const int m = patch.m;
  if (m < 2 || static_cast<int>(patch.axes.size()) != 2 * m - 1) throw Error("malformed directional patch");
  for (const auto& a : patch.axes)
    if (a.size() < 3 || !(a.back() > a.front()))
      throw DataError("rank-deficient scaling system: patch needs at least three distinct nodes per axis");
  const std::size_t nn = patch.node_count();
  if (patch.target_base.size() != nn || patch.target_dir.size() != nn) throw Error("patch data size mismatch");
  ScalingProblem prob{patch, m, 2 * m - 1};
  const int ne = m * (2 * m - 1);
  const auto nu = static_cast<Eigen::Index>(nn);

  auto residual = [&](const VecX& u) {
    VecX r(nu * ne);
    for (std::size_t f = 0; f < nn; ++f) r.segment(static_cast<Eigen::Index>(f) * ne, ne) = prob.node_entries(f, u);
    return r;
  };

  std::vector<std::vector<std::size_t>> infl(nn);
  for (std::size_t f = 0; f < nn; ++f) infl[f] = prob.influenced(f);

  VecX u = VecX::Zero(nu);
  ScaledLens out;
  VecX r = residual(u);
  out.residual_before = r.norm() / std::sqrt(static_cast<double>(nn));
  const double du = 1e-6;
  for (int it = 0; it < 40; ++it) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < nn; ++i) {
      VecX up = u, um = u;
      up(static_cast<Eigen::Index>(i)) += du;
      um(static_cast<Eigen::Index>(i)) -= du;
      for (std::size_t f : infl[i]) {
        const VecX col = (prob.node_entries(f, up) - prob.node_entries(f, um)) / (2.0 * du);
        for (int e = 0; e < ne; ++e)
          if (col(e) != 0.0)
            trip.emplace_back(static_cast<int>(f) * ne + e, static_cast<int>(i), col(e));
      }
    }
    Eigen::SparseMatrix<double> jac(nu * ne, nu);
    jac.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<double> nrm = jac.transpose() * jac;
    if (it == 0) {
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> plain(nrm);
      const VecX piv = plain.vectorD();
      if (plain.info() != Eigen::Success || !(piv.minCoeff() > 1e-12 * piv.maxCoeff()))
        throw DataError("rank-deficient scaling system");
    }
    Eigen::SparseMatrix<double> eye(nu, nu);
    eye.setIdentity();
    nrm += tikhonov * eye;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(nrm);
    if (solver.info() != Eigen::Success) throw DataError("rank-deficient scaling system");
    const VecX step = solver.solve(-(jac.transpose() * r + tikhonov * u));
    u += step;
    const double before = r.norm();
    r = residual(u);
    out.iterations = it + 1;
    // Stop once the step reaches the noise floor of the finite-difference Jacobian.
    if (step.lpNorm<Eigen::Infinity>() < 1e-10 || r.norm() > before * (1.0 - 1e-12)) break;
  }
  out.residual_after = r.norm() / std::sqrt(static_cast<double>(nn));
  out.mu.resize(nn);
  out.target_covec.resize(nn);
  out.node_residual.resize(nn);
  for (std::size_t f = 0; f < nn; ++f) {
    out.mu[f] = std::exp(u(static_cast<Eigen::Index>(f)));
    out.target_covec[f] = out.mu[f] * patch.target_dir[f];
    out.node_residual[f] = r.segment(static_cast<Eigen::Index>(f) * ne, ne).norm();
  }
  return out;
}

void write_lens_csv(std::ostream& os, const std::vector<LensSample>& samples, const std::vector<double>& residuals,
                    bool header) {
  if (header) os << "source_x,source_xi,k,target_x,target_xi,flight,arrival_tau,residual\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LensSample& s = samples[i];
    os << num_list(s.source.base, " ") << ',' << num_list(s.source.covec, " ") << ',' << s.k << ','
       << num_list(s.target.base, " ") << ',' << num_list(s.target.covec, " ") << ',' << num(s.flight) << ','
       << num(s.arrival_tau) << ',' << (i < residuals.size() ? num(residuals[i]) : std::string("nan")) << '\n';
  }
}

}  // namespace nullglide

#include "cfs/pair_engine.hpp"

#include <algorithm>
#include <cmath>

namespace cfs {

namespace {

double norm4(const Vec4& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]); }

Vec4 axpy(const Vec4& x, double s, const Vec4& v) {
  return {x[0] + s * v[0], x[1] + s * v[1], x[2] + s * v[2], x[3] + s * v[3]};
}

double max_norm(const GridVectorField& w) {
  double m = 0.0;
  for (const auto& x : w.values) m = std::max(m, norm4(x));
  return m;
}

// The analytic divergence is a finite-difference estimate; values at its noise level are
// snapped to zero so that divergence-free fields give exactly vanishing terms.
void snap(std::vector<double>& a, double floor) {
  for (double& x : a)
    if (std::abs(x) <= floor) x = 0.0;
}

}  // namespace

LatticePairs::LatticePairs(const LatticeChart& chart, const KernelParams& p, DivMode mode)
    : chart_(chart), p_(p), mode_(mode), rho_(chart.measure()) {
  const std::size_t N = rho_.size();
  bv_.assign(N, 0.0);
  dv_bv_.assign(N, 0.0);
  au_.assign(N, 0.0);
  du_bv_.assign(N, 0.0);
  active_flag_.assign(N, 0);
}

FieldPool LatticePairs::build_pool(const GridVectorField& w) const {
  if (!w.has_function()) throw Error(ErrorKind::Config, "pair engine needs analytic vector fields");
  const std::size_t N = size();
  if (w.values.size() != N) throw Error(ErrorKind::Dimension, "field does not match the chart");
  FieldPool pool;
  pool.present = true;
  pool.slot.assign(N, -1);
  double wmax = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double n = norm4(w.values[i]);
    wmax = std::max(wmax, n);
    if (n > 0) {
      pool.slot[i] = static_cast<int>(pool.nodes.size());
      pool.nodes.push_back(i);
    }
  }
  if (wmax == 0.0) return pool;
  const double box = chart_.box_scale();
  pool.s1 = 1e-5 * box / wmax;
  pool.s2 = 1e-4 * box / wmax;
  const long M = static_cast<long>(pool.nodes.size());
  pool.line1.resize(M);
  pool.line2.resize(M);
  bool bad = false;
#pragma omp parallel for schedule(dynamic, 8)
  for (long k = 0; k < M; ++k) {
    const std::size_t i = pool.nodes[k];
    const Vec4 x = chart_.coords(i);
    const Vec4& d = w.values[i];
    try {
      for (int q = 0; q < 4; ++q) {
        pool.line1[k][q] = chart_.embed.at(axpy(x, kLine[q] * pool.s1, d));
        pool.line2[k][q] = chart_.embed.at(axpy(x, kLine[q] * pool.s2, d));
      }
    } catch (const Error&) {
      bad = true;
    }
  }
  if (bad) throw Error(ErrorKind::Numerical, "displaced embedding left the regular set");
  return pool;
}

NestedPool LatticePairs::build_nested(const GridVectorField& w1, const GridVectorField& w2, double a,
                                      double b) const {
  const std::size_t N = size();
  NestedPool np;
  np.present = true;
  np.a = a;
  np.b = b;
  np.slot.assign(N, -1);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < N; ++i)
    if (norm4(w1.values[i]) > 0 && a > 0 && b > 0) {
      np.slot[i] = static_cast<int>(nodes.size());
      nodes.push_back(i);
    }
  const long M = static_cast<long>(nodes.size());
  np.ops.resize(M);
  bool bad = false;
#pragma omp parallel for schedule(dynamic, 8)
  for (long k = 0; k < M; ++k) {
    const std::size_t i = nodes[k];
    const Vec4 x = chart_.coords(i);
    const Vec4 d1 = w1.values[i];
    try {
      for (int q = 0; q < 8; ++q) {
        Vec4 xs = axpy(x, kMixedS[q] * a, d1);
        Vec4 xt = axpy(xs, kMixedT[q] * b, w2.fn(xs));
        np.ops[k][q] = chart_.embed.at(xt);
      }
    } catch (const Error&) {
      bad = true;
    }
  }
  if (bad) throw Error(ErrorKind::Numerical, "displaced embedding left the regular set");
  return np;
}

std::vector<double> LatticePairs::directional_of_div(const GridVectorField& along, const GridVectorField& of) const {
  const std::size_t N = size();
  std::vector<double> out(N, 0.0);
  if (mode_ == DivMode::Analytic) {
    const double box = chart_.box_scale();
    const double inner = 2e-4 * box, outer = 2e-3 * box;
    const VectorFn vf = of.fn;
    const ScalarFn h = chart_.h;
    ScalarFn b = [&](const Vec4& x) { return analytic_divergence(vf, h, x, inner); };
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < N; ++i)
      if (norm4(along.values[i]) > 0) out[i] = coordinate_derivative(b, chart_.coords(i), along.values[i], outer);
    return out;
  }
  auto b = divergence(of, chart_, mode_);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec4& w = along.values[i];
    if (norm4(w) == 0) continue;
    Index4 m = chart_.multi(i);
    double s = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (w[j] == 0) continue;
      const int e = chart_.extent[j];
      auto at = [&](int off) {
        Index4 k = m;
        k[j] += off;
        return b[chart_.index(k)];
      };
      const double d = chart_.spacing(j);
      double g;
      if (m[j] >= 1 && m[j] <= e - 2)
        g = (at(1) - at(-1)) / (2 * d);
      else if (m[j] == 0)
        g = (at(1) - at(0)) / d;
      else
        g = (at(0) - at(-1)) / d;
      s += w[j] * g;
    }
    out[i] = s;
  }
  return out;
}

void LatticePairs::snap_noise() {
  if (mode_ != DivMode::Analytic) return;
  const double box = chart_.box_scale();
  const double v = max_norm(vf_) / box;
  snap(bv_, kDivNoise * v);
  snap(dv_bv_, kDivNoise * v * v);
  if (u_.present) {
    const double u = max_norm(uf_) / box;
    snap(au_, kDivNoise * u);
    snap(du_bv_, kDivNoise * u * v);
  }
}

void LatticePairs::refresh_active() {
  active_.clear();
  active_flag_.assign(size(), 0);
  for (std::size_t i = 0; i < size(); ++i) {
    bool a = v_.active(i) || u_.active(i) || bv_[i] != 0 || dv_bv_[i] != 0 || au_[i] != 0 || du_bv_[i] != 0;
    if (!a) continue;
    active_flag_[i] = 1;
    active_.push_back(i);
  }
}

void LatticePairs::set_v(const GridVectorField& v) {
  vf_ = v;
  v_ = build_pool(v);
  vv_ = build_nested(v, v, v_.s2, v_.s2);
  bv_ = divergence(v, chart_, mode_);
  dv_bv_ = directional_of_div(v, v);
  if (u_.present) {
    uv_ = build_nested(uf_, vf_, u_.s2, v_.s2);
    du_bv_ = directional_of_div(uf_, vf_);
  }
  snap_noise();
  refresh_active();
}

void LatticePairs::set_u(const GridVectorField& u) {
  if (!v_.present) throw Error(ErrorKind::Config, "set the v field before the u field");
  uf_ = u;
  u_ = build_pool(u);
  uv_ = build_nested(u, vf_, u_.s2, v_.s2);
  au_ = divergence(u, chart_, mode_);
  du_bv_ = directional_of_div(u, vf_);
  snap_noise();
  refresh_active();
}

double LatticePairs::L(std::size_t i, std::size_t j) const {
  return pair_lagrangian(rho_.points[i].view(), rho_.points[j].view(), p_);
}

double LatticePairs::L_at(const Operator& x, std::size_t j) const {
  return pair_lagrangian(x.view(), rho_.points[j].view(), p_);
}

double LatticePairs::first(const FieldPool& f, std::size_t i, std::size_t j, int side) const {
  const std::size_t node = side == 0 ? i : j;
  if (!f.active(node)) return 0.0;
  const auto& ops = f.line1[f.slot[node]];
  const FactorView other = rho_.points[side == 0 ? j : i].view();
  double v[4];
  for (int q = 0; q < 4; ++q) v[q] = pair_lagrangian(ops[q].view(), other, p_);
  return richardson_first(v[0], v[1], v[2], v[3], f.s1);
}

double LatticePairs::cross(const FieldPool& A, std::size_t i, const FieldPool& B, std::size_t j,
                           NestingOrder order) const {
  if (!A.active(i) || !B.active(j)) return 0.0;
  const auto& a = A.line2[A.slot[i]];
  const auto& b = B.line2[B.slot[j]];
  // kLine is {+1, −1, +2, −2}; map the mixed stencil onto it.
  auto idx = [](double k) { return k == 1 ? 0 : k == -1 ? 1 : k == 2 ? 2 : 3; };
  double v[8];
  for (int q = 0; q < 8; ++q) v[q] = pair_lagrangian(a[idx(kMixedS[q])].view(), b[idx(kMixedT[q])].view(), p_);
  return mixed_from(v, A.s2, B.s2, order);
}

double LatticePairs::nested(const NestedPool& n, std::size_t i, std::size_t j, int side, NestingOrder order) const {
  const std::size_t node = side == 0 ? i : j;
  if (!n.active(node)) return 0.0;
  const auto& ops = n.ops[n.slot[node]];
  const FactorView other = rho_.points[side == 0 ? j : i].view();
  double v[8];
  for (int q = 0; q < 8; ++q) v[q] = pair_lagrangian(ops[q].view(), other, p_);
  return mixed_from(v, n.a, n.b, order);
}

}  // namespace cfs

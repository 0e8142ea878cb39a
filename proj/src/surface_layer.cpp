#include "cfs/surface_layer.hpp"

#include <algorithm>
#include <cmath>

namespace cfs {

namespace {

double fd_step(const Operator& x, const CMat& u, double rel) {
  const double un = u.norm();
  if (!(un > 0.0)) return 0.0;
  return rel * std::max(x.norm(), 1e-300) / un;
}

double central(const std::function<double(double)>& g, double h) {
  if (h == 0.0) return 0.0;
  return richardson_first(g(h), g(-h), g(2 * h), g(-2 * h), h);
}

double mixed(const std::function<double(double, double)>& f, double a, double b, NestingOrder order) {
  if (a == 0.0 || b == 0.0) return 0.0;
  double v[8];
  for (int q = 0; q < 8; ++q) v[q] = f(kMixedS[q] * a, kMixedT[q] * b);
  return mixed_from(v, a, b, order);
}

struct DiscreteKernel {
  const DiscreteMeasure& rho;
  KernelParams p;
  FdSteps steps;

  double L(const Operator& a, const Operator& b) const { return pair_lagrangian(a.view(), b.view(), p); }

  // D_{1,w} L(x_i, x_j) along the jet direction at x_i.
  double d1(const Jet& w, std::size_t i, std::size_t j) const {
    const Operator& x = rho.points[i];
    const Operator& y = rho.points[j];
    return central([&](double s) { return L(displace(x, w.vector[i], s), y); },
                   fd_step(x, w.vector[i], steps.first));
  }
  double d2(const Jet& w, std::size_t i, std::size_t j) const { return d1(w, j, i); }

  // D_{1,u} D_{1,v} L: derivative along u of the v-derivative at the displaced first argument.
  double d1u1v(const Jet& u, const Jet& v, std::size_t i, std::size_t j, NestingOrder order) const {
    const Operator& x = rho.points[i];
    const Operator& y = rho.points[j];
    const CMat& ui = u.vector[i];
    const CMat& vi = v.vector[i];
    const double a = fd_step(x, ui, steps.nested), b = fd_step(x, vi, steps.nested);
    const int n = x.spin_dim();
    const double c = x.trace();
    if (v.extension)
      return mixed(
          [&](double s, double t) {
            Operator xs = displace(x, ui, s);
            return L(project_to_freg(xs.matrix() + t * v.extension(xs), n, c), y);
          },
          a, b, order);
    return mixed([&](double s, double t) { return L(project_to_freg(x.matrix() + s * ui + t * vi, n, c), y); }, a,
                 b, order);
  }
  double d2u2v(const Jet& u, const Jet& v, std::size_t i, std::size_t j, NestingOrder order) const {
    return d1u1v(u, v, j, i, order);
  }
  // D_{1,u} D_{2,v} L with the u difference outermost for OuterFirst.
  double d1u2v(const Jet& u, const Jet& v, std::size_t i, std::size_t j, NestingOrder order) const {
    const Operator& x = rho.points[i];
    const Operator& y = rho.points[j];
    const double a = fd_step(x, u.vector[i], steps.nested), b = fd_step(y, v.vector[j], steps.nested);
    return mixed([&](double s, double t) { return L(displace(x, u.vector[i], s), displace(y, v.vector[j], t)); },
                 a, b, order);
  }
  // D_{2,u} D_{1,v} L with the u difference outermost for OuterFirst.
  double d2u1v(const Jet& u, const Jet& v, std::size_t i, std::size_t j, NestingOrder order) const {
    return d1u2v(u, v, j, i, order);
  }
};

void check_jet(const Jet& v, const DiscreteMeasure& rho) {
  if (v.size() != rho.size()) throw Error(ErrorKind::Dimension, "jet does not match the measure");
}

void check_omega(const std::vector<bool>& omega, const DiscreteMeasure& rho) {
  if (omega.size() != rho.size()) throw Error(ErrorKind::Dimension, "region does not match the measure");
}

}  // namespace

double antisymmetric_integrand(const Jet& v, const DiscreteMeasure& rho, const MultiplierSet& mult, std::size_t i,
                               std::size_t j, const FdSteps& steps) {
  DiscreteKernel k{rho, {mult.kappa, 0.0}, steps};
  const double L = k.L(rho.points[i], rho.points[j]);
  return (v.scalar[i] - v.scalar[j]) * L + (k.d1(v, i, j) - k.d2(v, i, j));
}

OsiResult osi_antisymmetric(const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                            const MultiplierSet& mult, const FdSteps& steps) {
  check_jet(v, rho);
  check_omega(omega, rho);
  DiscreteKernel k{rho, {mult.kappa, 0.0}, steps};
  const std::size_t N = rho.size();
  std::vector<std::array<double, 3>> rows(N, {0, 0, 0});
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < N; ++i) {
    if (!omega[i]) continue;
    double sc = 0, der = 0, cnt = 0;
    for (std::size_t j = 0; j < N; ++j) {
      if (omega[j]) continue;
      const double w = rho.weights[i] * rho.weights[j];
      const double L = k.L(rho.points[i], rho.points[j]);
      sc += w * (v.scalar[i] - v.scalar[j]) * L;
      der += w * (k.d1(v, i, j) - k.d2(v, i, j));
      cnt += 1;
    }
    rows[i] = {sc, der, cnt};
  }
  OsiResult r;
  double sc = 0, der = 0;
  for (const auto& a : rows) {
    sc += a[0];
    der += a[1];
    r.pair_count += static_cast<std::size_t>(a[2]);
  }
  r.value = sc + der;
  r.decomposition = {{"scalar", sc}, {"derivative", der}};
  return r;
}

double omega_omega_sum(const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                       const MultiplierSet& mult, const FdSteps& steps) {
  check_jet(v, rho);
  check_omega(omega, rho);
  const std::size_t N = rho.size();
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!omega[i]) continue;
    for (std::size_t j = i + 1; j < N; ++j) {
      if (!omega[j]) continue;
      const double w = rho.weights[i] * rho.weights[j];
      total += w * antisymmetric_integrand(v, rho, mult, i, j, steps) +
               w * antisymmetric_integrand(v, rho, mult, j, i, steps);
    }
  }
  return total;
}

ConservationResult conservation_check(const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                                      const MultiplierSet& mult, const FdSteps& steps) {
  check_jet(v, rho);
  check_omega(omega, rho);
  ConservationResult out;
  out.lhs = osi_antisymmetric(v, omega, rho, mult, steps).value;
  FdSteps coarse = steps;
  coarse.first *= 2;
  out.fd_error = std::abs(out.lhs - osi_antisymmetric(v, omega, rho, mult, coarse).value);

  DiscreteKernel k{rho, {mult.kappa, 0.0}, steps};
  const double s = mult.s_param;
  PointFunction g = [&](const Operator& y) { return ell_kappa(y, rho, mult) + s; };
  const std::size_t N = rho.size();
  std::vector<double> terms(N, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < N; ++i) {
    if (!omega[i]) continue;
    const double bi = v.scalar[i];
    const double nab = nabla(v, g, rho, i, steps);  // ∇_𝔳(ℓ_κ + 𝔰)
    double delta = -bi * s;                         // (Δ𝔳)(x_i)
    for (std::size_t j = 0; j < N; ++j) {
      const double L = k.L(rho.points[i], rho.points[j]);
      delta += rho.weights[j] * ((bi + v.scalar[j]) * L + k.d1(v, i, j) + k.d2(v, i, j));
    }
    terms[i] = rho.weights[i] * (2 * nab - delta - bi * s);
  }
  double proof = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    proof += terms[i];
    if (omega[i]) rhs += rho.weights[i] * v.scalar[i] * s;
  }
  out.rhs = rhs;
  out.proof_identity_defect = std::abs(out.lhs - proof);
  return out;
}

namespace {

double bilinear_once(const Jet& u, const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                     const MultiplierSet& mult, const FdSteps& steps, NestingOrder order, std::size_t* count) {
  DiscreteKernel k{rho, {mult.kappa, 0.0}, steps};
  const std::size_t N = rho.size();
  std::vector<double> rows(N, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < N; ++i) {
    if (!omega[i]) continue;
    double acc = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (omega[j]) continue;
      const double L = k.L(rho.points[i], rho.points[j]);
      const double bsum = v.scalar[i] + v.scalar[j];
      const double g = bsum * L + k.d1(v, i, j) + k.d2(v, i, j);
      const double t1 = u.scalar[i] * g + bsum * k.d1(u, i, j) + k.d1u1v(u, v, i, j, order) +
                        k.d1u2v(u, v, i, j, order);
      const double t2 = u.scalar[j] * g + bsum * k.d2(u, i, j) + k.d2u1v(u, v, i, j, order) +
                        k.d2u2v(u, v, i, j, order);
      acc += rho.weights[i] * rho.weights[j] * (t1 - t2);
    }
    rows[i] = acc;
  }
  double total = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < N; ++i) {
    total += rows[i];
    if (omega[i]) c += N - static_cast<std::size_t>(std::count(omega.begin(), omega.end(), true));
  }
  if (count) *count = c;
  return total;
}

}  // namespace

OsiResult osi_bilinear(const Jet& u, const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                       const MultiplierSet& mult, const FdSteps& steps, NestingOrder order) {
  check_jet(u, rho);
  check_jet(v, rho);
  check_omega(omega, rho);
  OsiResult r;
  const double uv = bilinear_once(u, v, omega, rho, mult, steps, order, &r.pair_count);
  const double vu = bilinear_once(v, u, omega, rho, mult, steps, order, nullptr);
  r.value = uv;
  r.decomposition = {{"symmetric", 0.5 * uv + 0.5 * vu}, {"antisymmetric", 0.5 * uv - 0.5 * vu}};
  return r;
}

// ---- Lattice ---------------------------------------------------------------------------

namespace {

double vdot_normal(const GridVectorField& v, const Facet& f) { return v.fn(f.center)[f.axis] * f.sign; }

std::vector<std::size_t> rows_where(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] * b[i] != 0.0) rows.push_back(i);
  return rows;
}

template <std::size_t K>
std::array<double, K> total(const std::vector<std::array<double, K>>& rows) {
  std::array<double, K> t{};
  for (const auto& r : rows)
    for (std::size_t k = 0; k < K; ++k) t[k] += r[k];
  return t;
}

// Σ_y ρ_y w(y) L(X(ξ), y) for a point off the grid.
double weighted_row(const LatticePairs& eng, const Operator& x, const std::vector<double>* wy) {
  double s = 0.0;
  for (std::size_t j = 0; j < eng.size(); ++j) {
    const double w = wy ? (*wy)[j] : 1.0;
    if (w == 0.0) continue;
    s += eng.weight(j) * w * eng.L_at(x, j);
  }
  return s;
}

}  // namespace

void validate_surface_config(const SurfaceConfig& cfg, const LatticeChart& chart) {
  if (!cfg.V.sharp) throw Error(ErrorKind::Config, "the region V must be sharp");
  if (!cfg.v.has_function()) throw Error(ErrorKind::Config, "surface configurations need analytic fields");
  bool meets = false;
  for (const auto& f : cfg.V.facets) {
    Index4 m = chart.multi(f.node);
    m[f.axis] += f.sign;
    if (m[f.axis] < 0 || m[f.axis] >= chart.extent[f.axis]) continue;  // chart face, not ∂V
    if (std::abs(vdot_normal(cfg.v, f)) > cfg.tol_tangent)
      throw Error(ErrorKind::Numerical, "v is not tangential to the boundary of V");
    if (cfg.omega.chi[f.node] > 0.5) meets = true;
  }
  if (!meets) throw Error(ErrorKind::Numerical, "the surface S = ∂Ω ∩ ∂V is empty");
  if (cfg.u.has_function() && cfg.omega.sharp)
    for (const auto& f : cfg.omega.facets) {
      Index4 m = chart.multi(f.node);
      m[f.axis] += f.sign;
      if (m[f.axis] < 0 || m[f.axis] >= chart.extent[f.axis]) continue;
      if (std::abs(vdot_normal(cfg.u, f)) > cfg.tol_tangent)
        throw Error(ErrorKind::Numerical, "u is not tangential to the boundary of Ω");
    }
}

LemmaResult boundary_lemma(const LatticePairs& eng, const Region& omega, const GridVectorField& v, bool parallel) {
  if (!omega.sharp) throw Error(ErrorKind::Config, "the boundary lemma needs a sharp region");
  const auto& b = eng.bv();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < eng.size(); ++i)
    if (omega.chi[i] != 0.0) rows.push_back(i);
  auto sums = eng.row_sums<1>(
      rows,
      [&](std::size_t i, std::size_t j, std::array<double, 1>& acc) {
        const double w = omega.chi[i] * (1.0 - omega.chi[j]);
        if (w == 0.0) return;
        const double L = eng.L(i, j);
        const double I = (b[i] - b[j]) * L + (eng.first(eng.v(), i, j, 0) - eng.first(eng.v(), i, j, 1));
        acc[0] += eng.weight(i) * eng.weight(j) * w * I;
      },
      true, parallel);
  LemmaResult r;
  r.bulk = total(sums)[0];

  auto dmu = boundary_flux_measure(v, omega, eng.chart());
  const long F = static_cast<long>(dmu.size());
  std::vector<double> face(F, 0.0);
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long k = 0; k < F; ++k) {
    if (dmu[k] == 0.0) continue;
    Operator xf = eng.chart().embed.at(omega.facets[k].center);
    face[k] = dmu[k] * weighted_row(eng, xf, nullptr);
  }
  for (double f : face) r.boundary += f;
  r.defect = std::abs(r.bulk - r.boundary);
  return r;
}

AreaResult area(const LatticePairs& eng, const SurfaceConfig& cfg, bool parallel) {
  const auto& b = eng.bv();
  const auto& cO = cfg.omega.chi;
  const auto& cV = cfg.V.chi;
  auto rows = rows_where(cO, cV);
  auto sums = eng.row_sums<2>(
      rows,
      [&](std::size_t i, std::size_t j, std::array<double, 2>& acc) {
        const double w = cO[i] * cV[i] * (1.0 - cV[j]);
        if (w == 0.0) return;
        const double L = eng.L(i, j);
        const double d1 = eng.first(eng.v(), i, j, 0), d2 = eng.first(eng.v(), i, j, 1);
        const double ww = eng.weight(i) * eng.weight(j) * w;
        acc[0] += ww * ((b[i] - b[j]) * L + (d1 - d2));
        acc[1] += ww * ((b[i] + b[j]) * L + (d1 + d2));
      },
      true, parallel);
  auto t = total(sums);
  AreaResult r;
  r.bulk_form = t[0];
  r.bulk_plus = t[1];

  if (!cfg.omega.sharp) throw Error(ErrorKind::Config, "the boundary form needs a sharp Ω");
  auto dmu = boundary_flux_measure(cfg.v, cfg.omega, eng.chart());
  std::vector<double> outside(eng.size());
  for (std::size_t j = 0; j < eng.size(); ++j) outside[j] = 1.0 - cV[j];
  const long F = static_cast<long>(dmu.size());
  std::vector<double> face(F, 0.0);
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long k = 0; k < F; ++k) {
    const Facet& f = cfg.omega.facets[k];
    if (dmu[k] == 0.0 || cfg.V.indicator(f.center) <= 0.5) continue;
    Operator xf = eng.chart().embed.at(f.center);
    face[k] = dmu[k] * weighted_row(eng, xf, &outside);
  }
  for (double f : face) r.boundary_form += f;
  return r;
}

AreaChange area_change_analytic(const LatticePairs& eng, const SurfaceConfig& cfg, bool parallel) {
  const auto& b = eng.bv();
  const auto& db = eng.dv_bv();
  const auto& cO = cfg.omega.chi;
  const auto& cV = cfg.V.chi;
  auto rows = rows_where(cO, cV);
  auto sums = eng.row_sums<3>(
      rows,
      [&](std::size_t i, std::size_t j, std::array<double, 3>& acc) {
        const double w = cO[i] * cV[i] * (1.0 - cV[j]);
        if (w == 0.0) return;
        const double L = eng.L(i, j);
        const double d1 = eng.first(eng.v(), i, j, 0), d2 = eng.first(eng.v(), i, j, 1);
        const double d11 = eng.nested(eng.vv(), i, j, 0), d22 = eng.nested(eng.vv(), i, j, 1);
        const double d12 = eng.cross(eng.v(), i, eng.v(), j, NestingOrder::OuterFirst);
        const double d21 = eng.cross(eng.v(), i, eng.v(), j, NestingOrder::InnerFirst);
        const double I = (b[i] - b[j]) * L + (d1 - d2);
        const double ww = eng.weight(i) * eng.weight(j) * w;
        acc[0] += ww * ((b[i] - b[j]) * (d1 + d2) + d11 - d12 + d21 - d22);
        acc[1] += ww * (L * (db[i] - db[j]));
        acc[2] += ww * ((b[i] + b[j]) * I);
      },
      true, parallel);
  auto t = total(sums);
  AreaChange r{t[0], t[1], t[2], 0.0};
  r.total = r.dtA1 + r.dtA2 + r.dtA3;
  return r;
}

AreaFd area_fd_derivative(const LatticePairs& eng, const SurfaceConfig& cfg, double tau, bool parallel) {
  if (!(tau > 0)) throw Error(ErrorKind::Config, "tau must be positive");
  const auto& b = eng.bv();
  const auto& cV = cfg.V.chi;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < eng.size(); ++i)
    if (cV[i] != 0.0) rows.push_back(i);
  auto sums = eng.row_sums<1>(
      rows,
      [&](std::size_t i, std::size_t j, std::array<double, 1>& acc) {
        const double w = 1.0 - cV[j];
        if (w == 0.0) return;
        const double L = eng.L(i, j);
        acc[0] += eng.weight(j) * w * ((b[i] - b[j]) * L + (eng.first(eng.v(), i, j, 0) - eng.first(eng.v(), i, j, 1)));
      },
      true, parallel);
  std::vector<std::size_t> live;
  std::vector<double> G;
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (sums[r][0] != 0.0) {
      live.push_back(rows[r]);
      G.push_back(sums[r][0]);
    }
  AreaFd out;
  const LatticeChart& chart = eng.chart();
  for (double t : {tau, -tau, 2 * tau, -2 * tau}) {
    std::vector<double> terms(live.size());
    bool left = false;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t k = 0; k < live.size(); ++k) {
      const std::size_t i = live[k];
      try {
        Vec4 back = flow_point(cfg.v.fn, chart.coords(i), -t, chart);
        double chi = cfg.omega.indicator(back);
        if (cfg.omega.sharp) chi = chi > 0.5 ? 1.0 : 0.0;
        terms[k] = chi * cV[i] * eng.weight(i) * G[k];
      } catch (const Error&) {
        left = true;
      }
    }
    if (left) throw Error(ErrorKind::Numerical, "flow trajectory leaves the chart");
    double A = 0.0;
    for (double x : terms) A += x;
    out.samples.push_back(A);
  }
  const auto& A = out.samples;
  out.central = (A[0] - A[1]) / (2 * tau);
  out.derivative = (8 * (A[0] - A[1]) - (A[2] - A[3])) / (12 * tau);
  return out;
}

double matter_flux(const LatticePairs& eng, const SurfaceConfig& cfg, bool parallel) {
  if (!eng.u().present) throw Error(ErrorKind::Config, "matter flux needs the u field");
  const auto& b = eng.bv();
  const auto& a = eng.au();
  const auto& dub = eng.du_bv();
  const auto& cO = cfg.omega.chi;
  const auto& cV = cfg.V.chi;
  auto rows = rows_where(cO, cV);
  auto sums = eng.row_sums<1>(
      rows,
      [&](std::size_t i, std::size_t j, std::array<double, 1>& acc) {
        const double w = cO[i] * cV[i] * (1.0 - cV[j]);
        if (w == 0.0) return;
        const double L = eng.L(i, j);
        const double bsum = b[i] + b[j];
        const double g = bsum * L + eng.first(eng.v(), i, j, 0) + eng.first(eng.v(), i, j, 1);
        const double t1 = a[i] * g + dub[i] * L + bsum * eng.first(eng.u(), i, j, 0) + eng.nested(eng.uv(), i, j, 0) +
                          eng.cross(eng.u(), i, eng.v(), j, NestingOrder::OuterFirst);
        const double t2 = a[j] * g + dub[j] * L + bsum * eng.first(eng.u(), i, j, 1) +
                          eng.cross(eng.v(), i, eng.u(), j, NestingOrder::InnerFirst) + eng.nested(eng.uv(), i, j, 1);
        acc[0] += eng.weight(i) * eng.weight(j) * w * (t1 - t2);
      },
      true, parallel);
  return total(sums)[0];
}

KillingResult killing_check(const LatticePairs& eng, double threshold, std::size_t sample_rows, double div_tol) {
  KillingResult r;
  for (double d : eng.bv()) r.max_div = std::max(r.max_div, std::abs(d));
  const auto& act = eng.v().nodes;
  std::vector<std::size_t> rows;
  if (!act.empty()) {
    const std::size_t stride = std::max<std::size_t>(1, act.size() / std::max<std::size_t>(1, sample_rows));
    for (std::size_t k = 0; k < act.size() && rows.size() < sample_rows; k += stride) rows.push_back(act[k]);
  }
  std::vector<double> worst(rows.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t j = 0; j < eng.size(); ++j)
      worst[k] = std::max(worst[k], std::abs(eng.first(eng.v(), rows[k], j, 0) + eng.first(eng.v(), rows[k], j, 1)));
  for (double w : worst) r.max_sym_defect = std::max(r.max_sym_defect, w);
  r.pass = r.max_div <= div_tol && r.max_sym_defect <= threshold;
  return r;
}

JacobsonResult jacobson_check(const LatticePairs& eng, const SurfaceConfig& cfg, bool parallel) {
  JacobsonResult r;
  double maxdiv = 0.0;
  for (double d : eng.bv()) maxdiv = std::max(maxdiv, std::abs(d));
  r.div_free = maxdiv <= 1e-12;
  r.u_equals_v = cfg.u.values == cfg.v.values;
  r.dA_dtau = area_change_analytic(eng, cfg, parallel).total;
  r.flux = matter_flux(eng, cfg, parallel);
  r.defect = std::abs(r.dA_dtau - r.flux);
  return r;
}

}  // namespace cfs

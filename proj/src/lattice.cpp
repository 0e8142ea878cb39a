#include "cfs/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace cfs {

namespace {

Vec4 axpy(const Vec4& x, double s, const Vec4& v) {
  return {x[0] + s * v[0], x[1] + s * v[1], x[2] + s * v[2], x[3] + s * v[3]};
}

double norm4(const Vec4& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]); }

double richardson(const std::function<double(double)>& g, double d) {
  return (8 * (g(d) - g(-d)) - (g(2 * d) - g(-2 * d))) / (12 * d);
}

}  // namespace

Embedding commuting_embedding(double a, double b, const Vec4& beta) {
  Embedding e;
  e.name = "commuting";
  e.f = 2;
  e.n = 1;
  e.at = [a, b, beta](const Vec4& x) {
    double t = beta[0] * x[0] + beta[1] * x[1] + beta[2] * x[2] + beta[3] * x[3];
    RVec lam(2);
    lam << a + t, -(b + t);
    if (!(lam(0) >= kEtaSig) || !(lam(1) <= -kEtaSig))
      throw Error(ErrorKind::Infeasible, "commuting embedding leaves the regular set");
    return Operator::from_factor(CMat::Identity(2, 2), lam, 1);
  };
  return e;
}

Embedding unitary_orbit_embedding(const RVec& D, int n, const std::array<CMat, 4>& H) {
  const int f = static_cast<int>(D.size());
  std::vector<int> pos, neg;
  for (int i = 0; i < f; ++i) {
    if (D(i) > 0) pos.push_back(i);
    if (D(i) < 0) neg.push_back(i);
  }
  if (static_cast<int>(pos.size()) != n || static_cast<int>(neg.size()) != n)
    throw Error(ErrorKind::Config, "unitary orbit needs n positive and n negative eigenvalues");
  for (const auto& h : H)
    if (h.rows() != f || h.cols() != f) throw Error(ErrorKind::Dimension, "generator has the wrong size");
  Embedding e;
  e.name = "unitary_orbit";
  e.f = f;
  e.n = n;
  e.at = [D, n, H, pos, neg, f](const Vec4& x) {
    CMat K = CMat::Zero(f, f);
    for (int j = 0; j < 4; ++j) K += x[j] * H[j];
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(K));
    CVec phase = es.eigenvalues().unaryExpr([](double t) { return std::exp(cd(0, t)); });
    CMat U = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
    CMat B(f, 2 * n);
    RVec lam(2 * n);
    for (int i = 0; i < n; ++i) {
      B.col(i) = U.col(pos[i]);
      lam(i) = D(pos[i]);
      B.col(n + i) = U.col(neg[i]);
      lam(n + i) = D(neg[i]);
    }
    return Operator::from_factor(B, lam, n);
  };
  return e;
}

Embedding unitary_orbit_embedding(std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  RVec D(3);
  D << 2.0, -1.0, 0.0;
  std::array<CMat, 4> H;
  for (auto& h : H) h = random_hermitian(3, amp, rng);
  return unitary_orbit_embedding(D, 1, H);
}

void LatticeChart::validate() const {
  for (int j = 0; j < 4; ++j) {
    if (extent[j] < 2) throw Error(ErrorKind::Config, "chart needs at least two nodes per axis");
    if (!(hi[j] > lo[j])) throw Error(ErrorKind::Config, "chart box must have positive extent");
  }
  if (!embed.at) throw Error(ErrorKind::Config, "chart has no embedding");
  if (!h) throw Error(ErrorKind::Config, "chart has no weight function");
}

double LatticeChart::cell_volume() const { return spacing(0) * spacing(1) * spacing(2) * spacing(3); }

double LatticeChart::box_scale() const {
  double s = 0;
  for (int j = 0; j < 4; ++j) s = std::max(s, hi[j] - lo[j]);
  return s;
}

std::size_t LatticeChart::node_count() const {
  return static_cast<std::size_t>(extent[0]) * extent[1] * extent[2] * extent[3];
}

Index4 LatticeChart::multi(std::size_t idx) const {
  Index4 m;
  for (int j = 3; j >= 0; --j) {
    m[j] = static_cast<int>(idx % extent[j]);
    idx /= extent[j];
  }
  return m;
}

std::size_t LatticeChart::index(const Index4& m) const {
  std::size_t idx = 0;
  for (int j = 0; j < 4; ++j) idx = idx * extent[j] + m[j];
  return idx;
}

Vec4 LatticeChart::coords(std::size_t idx) const {
  Index4 m = multi(idx);
  Vec4 x;
  for (int j = 0; j < 4; ++j) x[j] = lo[j] + m[j] * spacing(j);
  return x;
}

bool LatticeChart::inside(const Vec4& x, double slack) const {
  for (int j = 0; j < 4; ++j)
    if (x[j] < lo[j] - slack * spacing(j) || x[j] > hi[j] + slack * spacing(j)) return false;
  return true;
}

DiscreteMeasure LatticeChart::measure() const {
  validate();
  const std::size_t N = node_count();
  DiscreteMeasure rho;
  rho.points.resize(N);
  rho.weights.resize(N);
  bool bad = false;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    try {
      Vec4 x = coords(i);
      rho.points[i] = embed.at(x);
      rho.weights[i] = h(x) * cell_volume();
      if (!(rho.weights[i] > 0)) bad = true;
    } catch (const Error&) {
      bad = true;
    }
  }
  if (bad) throw Error(ErrorKind::Config, "chart weight must be positive and the embedding regular on every node");
  rho.trace_c = rho.points[0].trace();
  return rho;
}

GridVectorField GridVectorField::sample(const LatticeChart& chart, VectorFn fn) {
  GridVectorField g;
  g.values.resize(chart.node_count());
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = fn(chart.coords(i));
  g.fn = std::move(fn);
  return g;
}

Vec4 GridVectorField::at(const Vec4& x) const {
  if (!fn) throw Error(ErrorKind::Config, "vector field has no analytic form");
  return fn(x);
}

double analytic_divergence(const VectorFn& v, const ScalarFn& h, const Vec4& x, double step) {
  double out = 0.0;
  for (int j = 0; j < 4; ++j) {
    Vec4 e{0, 0, 0, 0};
    e[j] = 1.0;
    out += richardson([&](double s) { Vec4 y = axpy(x, s, e); return h(y) * v(y)[j]; }, step);
  }
  return out / h(x);
}

double coordinate_derivative(const ScalarFn& g, const Vec4& x, const Vec4& w, double step) {
  const double wn = norm4(w);
  if (wn == 0.0) return 0.0;
  return richardson([&](double s) { return g(axpy(x, s, w)); }, step / wn);
}

std::vector<double> divergence(const GridVectorField& v, const LatticeChart& chart, DivMode mode) {
  chart.validate();
  const std::size_t N = chart.node_count();
  if (v.values.size() != N) throw Error(ErrorKind::Dimension, "field does not match the chart");
  std::vector<double> out(N, 0.0);
  if (mode == DivMode::Analytic) {
    if (!v.has_function()) throw Error(ErrorKind::Config, "analytic divergence needs the field function");
    const double step = 2e-4 * chart.box_scale();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < N; ++i) out[i] = analytic_divergence(v.fn, chart.h, chart.coords(i), step);
    return out;
  }
  std::vector<double> hv(N), hn(N);
  for (std::size_t i = 0; i < N; ++i) hn[i] = chart.h(chart.coords(i));
  for (int j = 0; j < 4; ++j) {
    for (std::size_t i = 0; i < N; ++i) hv[i] = hn[i] * v.values[i][j];
    const double d = chart.spacing(j);
    const int e = chart.extent[j];
    for (std::size_t i = 0; i < N; ++i) {
      Index4 m = chart.multi(i);
      auto at = [&](int off) {
        Index4 k = m;
        k[j] += off;
        return hv[chart.index(k)];
      };
      const int p = m[j];
      double g;
      if (mode == DivMode::Central4 && p >= 2 && p <= e - 3)
        g = (8 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12 * d);
      else if (p >= 1 && p <= e - 2)
        g = (at(1) - at(-1)) / (2 * d);
      else if (e == 2)
        g = p == 0 ? (at(1) - at(0)) / d : (at(0) - at(-1)) / d;
      else if (p == 0)
        g = (4 * (at(1) - at(0)) - (at(2) - at(0))) / (2 * d);
      else
        g = (4 * (at(0) - at(-1)) - (at(0) - at(-2))) / (2 * d);
      out[i] += g;
    }
  }
  for (std::size_t i = 0; i < N; ++i) out[i] /= hn[i];
  return out;
}

std::size_t Region::count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < chi.size(); ++i) c += contains(i);
  return c;
}

namespace {

void build_facets(Region& r, const LatticeChart& chart) {
  r.facets.clear();
  const double vol = chart.cell_volume();
  for (std::size_t i = 0; i < r.chi.size(); ++i) {
    if (!r.contains(i)) continue;
    Index4 m = chart.multi(i);
    Vec4 x = chart.coords(i);
    for (int j = 0; j < 4; ++j)
      for (int s : {-1, 1}) {
        Index4 k = m;
        k[j] += s;
        bool open = k[j] < 0 || k[j] >= chart.extent[j] || !r.contains(chart.index(k));
        if (!open) continue;
        Facet f{i, j, s, vol / chart.spacing(j), x};
        f.center[j] += 0.5 * s * chart.spacing(j);
        r.facets.push_back(f);
      }
  }
}

}  // namespace

Region region_from_indicator(const LatticeChart& chart, ScalarFn indicator, bool sharp) {
  Region r;
  r.sharp = sharp;
  const std::size_t N = chart.node_count();
  r.chi.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    double c = indicator(chart.coords(i));
    r.chi[i] = sharp ? (c > 0.5 ? 1.0 : 0.0) : c;
  }
  r.indicator = std::move(indicator);
  if (sharp) build_facets(r, chart);
  return r;
}

Region box_region(const LatticeChart& chart, const Vec4& lo, const Vec4& hi) {
  Vec4 tol;
  for (int j = 0; j < 4; ++j) tol[j] = 1e-9 * chart.spacing(j);
  return region_from_indicator(
      chart,
      [lo, hi, tol](const Vec4& x) {
        for (int j = 0; j < 4; ++j)
          if (x[j] < lo[j] - tol[j] || x[j] > hi[j] + tol[j]) return 0.0;
        return 1.0;
      },
      true);
}

Region half_space(const LatticeChart& chart, int axis, double value, bool below, double width) {
  if (axis < 0 || axis > 3) throw Error(ErrorKind::Config, "axis must be 0..3");
  const double sgn = below ? -1.0 : 1.0;
  if (width > 0)
    return region_from_indicator(
        chart, [=](const Vec4& x) { return 0.5 * (1 + std::tanh(sgn * (x[axis] - value) / width)); }, false);
  const double tol = 1e-9 * chart.spacing(axis);
  return region_from_indicator(
      chart, [=](const Vec4& x) { return sgn * (x[axis] - value) > -tol ? 1.0 : 0.0; }, true);
}

std::vector<double> boundary_flux_measure(const GridVectorField& v, const Region& region, const LatticeChart& chart) {
  if (!region.sharp) throw Error(ErrorKind::Config, "flux measure needs a sharp region");
  std::vector<double> out(region.facets.size());
  for (std::size_t k = 0; k < region.facets.size(); ++k) {
    const Facet& f = region.facets[k];
    if (f.sign != 1 && f.sign != -1) throw Error(ErrorKind::Numerical, "facet orientation is inconsistent");
    double vn;
    if (v.has_function()) {
      vn = v.fn(f.center)[f.axis];
    } else {
      Index4 m = chart.multi(f.node);
      m[f.axis] += f.sign;
      bool in = m[f.axis] >= 0 && m[f.axis] < chart.extent[f.axis];
      vn = in ? 0.5 * (v.values[f.node][f.axis] + v.values[chart.index(m)][f.axis]) : v.values[f.node][f.axis];
    }
    out[k] = chart.h(f.center) * vn * f.sign * f.area;
  }
  return out;
}

Jet inner_solution(const GridVectorField& v, const LatticeChart& chart, DivMode mode) {
  DiscreteMeasure rho = chart.measure();
  Jet j = Jet::zero(rho);
  j.scalar = divergence(v, chart, mode);
  const double base = 1e-4 * chart.box_scale();
  const std::size_t N = rho.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    const Vec4& w = v.values[i];
    const double wn = norm4(w);
    if (wn == 0.0) continue;
    const Vec4 x = chart.coords(i);
    const double d = base / wn;
    auto X = [&](double s) { return chart.embed.at(axpy(x, s, w)).matrix(); };
    CMat D = (8.0 * (X(d) - X(-d)) - (X(2 * d) - X(-2 * d))) / (12 * d);
    j.vector[i] = tangent_project(rho.points[i], D);
  }
  return j;
}

GaussCheck gauss_divergence_check(const GridVectorField& v, const ScalarFn& f, const LatticeChart& chart,
                                  DivMode mode) {
  GaussCheck out;
  auto div = divergence(v, chart, mode);
  const double step = 1e-3 * chart.box_scale();
  double sum = 0.0, fmax = 0.0, face = 0.0;
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    Vec4 x = chart.coords(i);
    double fx = f(x);
    fmax = std::max(fmax, std::abs(fx));
    Index4 m = chart.multi(i);
    for (int j = 0; j < 4; ++j)
      if (m[j] == 0 || m[j] == chart.extent[j] - 1) face = std::max(face, std::abs(fx));
    sum += chart.weight(i) * (div[i] * fx + coordinate_derivative(f, x, v.values[i], step));
  }
  out.defect = std::abs(sum);
  out.compact = face <= 1e-12 * std::max(fmax, 1e-300);
  return out;
}

Vec4 flow_point(const VectorFn& v, const Vec4& x, double tau, const LatticeChart& chart, int substeps) {
  if (substeps < 1) throw Error(ErrorKind::Config, "flow needs at least one substep");
  Vec4 y = x;
  const double dt = tau / substeps;
  for (int k = 0; k < substeps; ++k) {
    Vec4 k1 = v(y);
    Vec4 k2 = v(axpy(y, 0.5 * dt, k1));
    Vec4 k3 = v(axpy(y, 0.5 * dt, k2));
    Vec4 k4 = v(axpy(y, dt, k3));
    for (int j = 0; j < 4; ++j) y[j] += dt / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    if (!chart.inside(y, 1.0 + 1e-9)) throw Error(ErrorKind::Numerical, "flow trajectory leaves the chart");
  }
  return y;
}

Region flow_region(const Region& region, const GridVectorField& v, double tau, const LatticeChart& chart,
                   int substeps) {
  if (!v.has_function()) throw Error(ErrorKind::Config, "flowing a region needs the field function");
  if (tau == 0.0) return region;
  const std::size_t N = chart.node_count();
  std::vector<Vec4> back(N);
  bool left = false;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    try {
      back[i] = flow_point(v.fn, chart.coords(i), -tau, chart, substeps);
    } catch (const Error&) {
      left = true;
    }
  }
  if (left) throw Error(ErrorKind::Numerical, "flow trajectory leaves the chart");
  ScalarFn base = region.indicator;
  VectorFn fn = v.fn;
  Region r;
  r.sharp = region.sharp;
  r.indicator = [base, fn, tau, chart, substeps](const Vec4& x) {
    return base(flow_point(fn, x, -tau, chart, substeps));
  };
  r.chi.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    double c = base(back[i]);
    r.chi[i] = region.sharp ? (c > 0.5 ? 1.0 : 0.0) : c;
  }
  if (r.sharp) build_facets(r, chart);
  return r;
}

namespace {
constexpr double kPiL = 3.14159265358979323846;
}

double Bump::value(const Vec4& x) const {
  double p = 1.0;
  for (int j = 0; j < 4; ++j) {
    const double u = (x[j] - center[j]) / radius;
    if (std::abs(u) >= 1.0) return 0.0;
    double c = std::cos(kPiL * u / 2);
    if (power == 8) {
      c *= c;
      c *= c;
      p *= c * c;
    } else {
      p *= std::pow(c, power);
    }
  }
  return p;
}

double Bump::partial(const Vec4& x, int j) const {
  double p = 1.0;
  for (int k = 0; k < 4; ++k) {
    const double u = (x[k] - center[k]) / radius;
    if (std::abs(u) >= 1.0) return 0.0;
    const double c = std::cos(kPiL * u / 2);
    if (k == j)
      p *= -0.5 * power * kPiL / radius * std::pow(c, power - 1) * std::sin(kPiL * u / 2);
    else
      p *= std::pow(c, power);
  }
  return p;
}

VectorFn stream_field(const Bump& bump, const ScalarFn& h, double amp, double div_part, const Vec4& dir) {
  return [bump, h, amp, div_part, dir](const Vec4& x) {
    const double hx = h(x);
    const double psi = div_part != 0.0 ? bump.value(x) : 0.0;
    Vec4 v{amp * bump.partial(x, 1) / hx, -amp * bump.partial(x, 0) / hx, 0.0, 0.0};
    for (int j = 0; j < 4; ++j) v[j] += div_part * psi * dir[j];
    return v;
  };
}

void write_field_csv(std::ostream& os, const LatticeChart& chart, const std::vector<double>& values) {
  os << "node,x0,x1,x2,x3,value\n";
  os.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    Vec4 x = chart.coords(i);
    os << i << ',' << x[0] << ',' << x[1] << ',' << x[2] << ',' << x[3] << ',' << values[i] << '\n';
  }
}

}  // namespace cfs

#include "cfs/vacuum_kernel.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_bessel.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

namespace cfs {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Momentum cutoff in units of 1/ε; the e^{−εω} damping makes the tail of order e^{−60}.
constexpr double kCutoff = 60.0;

struct GslQuad {
  gsl_integration_workspace* w;
  GslQuad() : w(gsl_integration_workspace_alloc(2000)) {}
  ~GslQuad() { gsl_integration_workspace_free(w); }
  GslQuad(const GslQuad&) = delete;
  GslQuad& operator=(const GslQuad&) = delete;
};

double trampoline(double x, void* params) { return (*static_cast<std::function<double(double)>*>(params))(x); }

// epsabs is set from the magnitude of the non-oscillating envelope, so integrals that cancel to
// nearly zero still terminate at the requested accuracy relative to the kernel scale.
double integrate(std::function<double(double)> f, double a, double b, double rel_tol, double envelope,
                 double& abserr) {
  static thread_local GslQuad quad;
  gsl_function F;
  F.function = &trampoline;
  F.params = &f;
  double result = 0.0, err = 0.0;
  const double epsabs = rel_tol * envelope;
  int status = gsl_integration_qag(&F, a, b, epsabs, rel_tol, 2000, GSL_INTEG_GAUSS41, quad.w, &result, &err);
  if (status == GSL_EROUND && err <= 10 * std::max(epsabs, rel_tol * std::abs(result))) status = GSL_SUCCESS;
  if (status != GSL_SUCCESS) {
    std::ostringstream os;
    os << "kernel quadrature did not converge: " << gsl_strerror(status) << ", achieved relative error "
       << (result != 0.0 ? err / std::abs(result) : err);
    throw Error(ErrorKind::Numerical, os.str());
  }
  abserr = std::max(abserr, err);
  return result;
}

struct GslInit {
  GslInit() { gsl_set_error_handler_off(); }
};
const GslInit gsl_init;

SpinMatrix make_gamma(int mu) {
  SpinMatrix g = SpinMatrix::Zero();
  const cd I(0, 1);
  if (mu == 0) {
    g.diagonal() << 1, 1, -1, -1;
    return g;
  }
  Eigen::Matrix2cd s;
  if (mu == 1) s << 0, 1, 1, 0;
  if (mu == 2) s << 0, -I, I, 0;
  if (mu == 3) s << 1, 0, 0, -1;
  g.block<2, 2>(0, 2) = s;
  g.block<2, 2>(2, 0) = -s;
  return g;
}

double modulus_lagrangian(const std::array<cd, 4>& ev) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double d = std::abs(ev[i]) - std::abs(ev[j]);
      s += d * d;
    }
  return s / 8.0;
}

}  // namespace

std::string RegParams::validate() const {
  if (!(epsilon > 0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  if (!(m >= 0)) throw Error(ErrorKind::Config, "mass must be non-negative");
  if (!(lambda_scale > 0)) throw Error(ErrorKind::Config, "lambda_scale must be positive");
  if (!(delta > 0)) throw Error(ErrorKind::Config, "delta must be positive");
  if (epsilon > delta) throw Error(ErrorKind::Config, "epsilon must not exceed delta");
  if (!(rel_tol > 0 && rel_tol < 1)) throw Error(ErrorKind::Config, "quadrature tolerance must lie in (0,1)");
  if (epsilon * m >= 1e-2) return "epsilon*m >= 1e-2: outside the scaling regime";
  return {};
}

const SpinMatrix& gamma_matrix(int mu) {
  static const std::array<SpinMatrix, 4> g{make_gamma(0), make_gamma(1), make_gamma(2), make_gamma(3)};
  if (mu < 0 || mu > 3) throw Error(ErrorKind::Dimension, "gamma index out of range");
  return g[mu];
}

SpinMatrix spin_adjoint(const SpinMatrix& A) { return gamma_matrix(0) * A.adjoint() * gamma_matrix(0); }

KernelIntegrals kernel_integrals(double t, double r, const RegParams& p) {
  p.validate();
  if (r < 0) throw Error(ErrorKind::Config, "radius must be non-negative");
  const double eps = p.epsilon, m = p.m;
  const double C = 1.0 / (4.0 * kPi * kPi * kPi);
  KernelIntegrals out;
  // Substitute k = x/ε, x ∈ [0, kCutoff].
  auto weight = [&](double x, double& k, double& w, double& phase) {
    k = x / eps;
    w = std::sqrt(k * k + m * m);
    phase = w * t;
    return std::exp(-eps * w);
  };
  auto j0 = [&](double k) { return r == 0.0 ? 1.0 : gsl_sf_bessel_j0(k * r); };
  auto j1 = [&](double k) { return r == 0.0 ? 0.0 : gsl_sf_bessel_j1(k * r); };
  auto part = [&](int which, bool imag, bool envelope) {
    return [=, &weight, &j0, &j1](double x) {
      double k, w, ph;
      const double damp = weight(x, k, w, ph);
      if (envelope) {
        const double f = which == 0 ? k * k / (2 * w) : which == 1 ? k * k / 2 : k * k * k / (2 * w) * std::min(1.0, k * r);
        return f * damp / eps;
      }
      const double osc = imag ? std::sin(ph) : std::cos(ph);
      double f;
      if (which == 0)
        f = k * k / (2 * w) * j0(k);
      else if (which == 1)
        f = k * k / 2 * j0(k);
      else
        f = k * k * k / (2 * w) * j1(k);
      return f * damp * osc / eps;
    };
  };
  double err = 0.0;
  auto complex_integral = [&](int which) {
    double env_err = 0.0;
    const double env = integrate(part(which, false, true), 0.0, kCutoff, p.rel_tol, 0.0, env_err);
    double re = integrate(part(which, false, false), 0.0, kCutoff, p.rel_tol, env, err);
    double im = t == 0.0 ? 0.0 : integrate(part(which, true, false), 0.0, kCutoff, p.rel_tol, env, err);
    return C * cd(re, im);
  };
  out.scalar = complex_integral(0);
  out.energy = complex_integral(1);
  // radial = i C ∫ k³/(2ω) e^{−ω(ε−it)} j1(kr) dk
  out.radial = r == 0.0 ? cd(0, 0) : cd(0, 1) * complex_integral(2);
  out.abs_error = C * err;
  const double X = kCutoff;
  out.tail = C * std::exp(-X) * (X * X * X + 3 * X * X + 6 * X + 6) / std::pow(eps, 4);
  return out;
}

SpinMatrix kernel_P(const Vec4& xi, const RegParams& p) {
  const double r = std::sqrt(xi[1] * xi[1] + xi[2] * xi[2] + xi[3] * xi[3]);
  KernelIntegrals I = kernel_integrals(xi[0], r, p);
  SpinMatrix P = p.m * I.scalar * SpinMatrix::Identity() - I.energy * gamma_matrix(0);
  if (r > 0) {
    SpinMatrix gr = (xi[1] * gamma_matrix(1) + xi[2] * gamma_matrix(2) + xi[3] * gamma_matrix(3)) / r;
    P -= I.radial * gr;
  }
  return p.lambda_scale * P;
}

double local_trace(const RegParams& p) { return kernel_P({0, 0, 0, 0}, p).trace().real(); }

SpinMatrix closed_chain(const Vec4& xi, const RegParams& p) {
  SpinMatrix P = kernel_P(xi, p);
  return P * spin_adjoint(P);
}

std::array<cd, 4> chain_eigenvalues(const Vec4& xi, const RegParams& p) {
  Eigen::ComplexEigenSolver<SpinMatrix> es(closed_chain(xi, p), false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "closed chain eigensolve failed");
  std::array<cd, 4> ev;
  for (int i = 0; i < 4; ++i) ev[i] = es.eigenvalues()[i];
  std::sort(ev.begin(), ev.end(), [](cd a, cd b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

double chain_lagrangian(const Vec4& xi, const RegParams& p) { return modulus_lagrangian(chain_eigenvalues(xi, p)); }

const char* separation_name(Separation s) {
  switch (s) {
    case Separation::Timelike:
      return "timelike";
    case Separation::Spacelike:
      return "spacelike";
    default:
      return "boundary";
  }
}

Separation chain_classify(const Vec4& xi, const RegParams& p) {
  auto ev = chain_eigenvalues(xi, p);
  double scale = 0.0, lo = INFINITY, hi = 0.0, imag = 0.0;
  for (cd z : ev) {
    scale = std::max(scale, std::abs(z));
    lo = std::min(lo, std::abs(z));
    hi = std::max(hi, std::abs(z));
    imag = std::max(imag, std::abs(z.imag()));
  }
  if (scale == 0.0) return Separation::Boundary;
  const double spread = (hi - lo) / scale;
  const bool real = imag <= kClassifyBand * scale;
  const bool equal = spread <= kClassifyBand;
  if (real && !equal) return Separation::Timelike;
  if (!real && equal) return Separation::Spacelike;
  return Separation::Boundary;
}

double cylinder_radius(const RegParams& p, double t, double rel_tol) {
  auto cls = [&](double r) { return chain_classify({t, r, 0, 0}, p); };
  if (cls(0.0) != Separation::Timelike)
    throw Error(ErrorKind::Numerical, "no timelike region at the origin (no transition found in bracket)");
  double lo = 0.0;
  double hi = std::max(p.m, 1e-300) * p.epsilon * p.epsilon;
  int grow = 0;
  while (cls(hi) == Separation::Timelike) {
    lo = hi;
    hi *= 2;
    if (++grow > 80 || hi > p.epsilon * 1e3) throw Error(ErrorKind::Numerical, "no transition found in bracket");
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (cls(mid) == Separation::Timelike)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::Config, "slope fit needs matching samples");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0) || y[i] == 0.0) throw Error(ErrorKind::Numerical, "log-log fit needs nonzero samples");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(std::abs(y[i]));
  }
  double c0, c1, cov00, cov01, cov11, sumsq;
  gsl_fit_linear(lx.data(), 1, ly.data(), 1, n, &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
  double mean = 0.0;
  for (double v : ly) mean += v;
  mean /= n;
  double tot = 0.0;
  for (double v : ly) tot += (v - mean) * (v - mean);
  SlopeFit f;
  f.slope = c1;
  f.intercept = c0;
  f.r2 = tot > 0 ? 1.0 - sumsq / tot : 1.0;
  return f;
}

void SweepConfig::validate() const {
  if (epsilons.size() < 4 || masses.size() < 4)
    throw Error(ErrorKind::Config, "slope fit needs at least 4 points per sweep");
  if (!(lambda_scale > 0) || !(rel_tol > 0)) throw Error(ErrorKind::Config, "invalid sweep parameters");
  if (!(m_fixed > 0) || !(epsilon_fixed > 0)) throw Error(ErrorKind::Config, "sweep needs positive m and epsilon");
  for (double e : epsilons)
    if (!(e > 0) || e * m_fixed > 1e-2) throw Error(ErrorKind::Config, "epsilon sweep needs 0 < epsilon*m <= 1e-2");
  for (double m : masses)
    if (!(m > 0) || m * epsilon_fixed > 1e-2) throw Error(ErrorKind::Config, "mass sweep needs 0 < epsilon*m <= 1e-2");
}

SweepResult scaling_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const long ne = static_cast<long>(cfg.epsilons.size());
  const long nm = static_cast<long>(cfg.masses.size());
  std::vector<std::array<double, 4>> eps_vals(ne);
  std::vector<double> m_vals(nm);
  std::vector<std::string> errors(ne + nm);
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < ne + nm; ++k) {
    try {
      RegParams p;
      p.lambda_scale = cfg.lambda_scale;
      p.rel_tol = cfg.rel_tol;
      if (k < ne) {
        p.epsilon = cfg.epsilons[k];
        p.m = cfg.m_fixed;
        p.delta = std::max(1.0, p.epsilon);
        auto ev = chain_eigenvalues({0, 0, 0, 0}, p);
        double mod = 0.0;
        for (cd z : ev) mod = std::max(mod, std::abs(z));
        eps_vals[k] = {local_trace(p), mod, modulus_lagrangian(ev), cylinder_radius(p)};
      } else {
        p.epsilon = cfg.epsilon_fixed;
        p.m = cfg.masses[k - ne];
        p.delta = std::max(1.0, p.epsilon);
        m_vals[k - ne] = cylinder_radius(p);
      }
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorKind::Numerical, e);

  SweepResult out;
  const char* names[4] = {"local_trace", "chain_modulus", "lagrangian_xx", "cylinder_radius"};
  const double expected[4] = {-2.0, -6.0, -10.0, 2.0};
  const double tol[4] = {0.05, 0.2, 0.3, 0.1};
  for (int o = 0; o < 4; ++o) {
    std::vector<double> y(ne);
    for (long k = 0; k < ne; ++k) {
      y[k] = eps_vals[k][o];
      out.rows.push_back({"epsilon", cfg.epsilons[k], cfg.m_fixed, names[o], y[k]});
    }
    SlopeFit f = fit_loglog(cfg.epsilons, y);
    f.observable = names[o];
    f.variable = "epsilon";
    f.expected = expected[o];
    f.tolerance = tol[o];
    f.pass = std::abs(f.slope - f.expected) <= f.tolerance;
    out.fits.push_back(f);
  }
  for (long k = 0; k < nm; ++k) out.rows.push_back({"m", cfg.epsilon_fixed, cfg.masses[k], "cylinder_radius", m_vals[k]});
  SlopeFit f = fit_loglog(cfg.masses, m_vals);
  f.observable = "cylinder_radius";
  f.variable = "m";
  f.expected = 1.0;
  f.tolerance = 0.1;
  f.pass = std::abs(f.slope - f.expected) <= f.tolerance;
  out.fits.push_back(f);
  return out;
}

RescalingDefects rescaling_covariance_check(const DiscreteMeasure& rho, const MultiplierSet& mult, double sigma,
                                            double lam) {
  rho.validate();
  if (!(sigma > 0) || !(lam > 0)) throw Error(ErrorKind::Config, "rescaling needs sigma, lambda > 0");
  DiscreteMeasure sc;
  sc.trace_c = lam * rho.trace_c;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const Operator& x = rho.points[i];
    sc.points.push_back(Operator::from_factor(x.basis(), lam * x.eigenvalues(), x.spin_dim()));
    sc.weights.push_back(sigma * rho.weights[i]);
  }
  const double l4 = lam * lam * lam * lam;
  MultiplierSet m2 = mult;
  m2.trace_c = lam * mult.trace_c;
  m2.s_param = sigma * l4 * mult.s_param;

  RescalingDefects d;
  d.trace_c_new = m2.trace_c;
  d.s_new = m2.s_param;
  for (std::size_t i = 0; i < rho.size(); ++i)
    d.trace_defect = std::max(d.trace_defect, std::abs(sc.points[i].trace() - lam * rho.points[i].trace()));
  auto ratio_defect = [](double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a / b - 1.0); };
  const KernelParams kp{mult.kappa, 0.0};
  d.action_ratio_defect = ratio_defect(causal_action(sc, kp), sigma * sigma * l4 * causal_action(rho, kp));
  const ConstraintValues c0 = constraint_values(rho), c1 = constraint_values(sc);
  d.boundedness_ratio_defect = ratio_defect(c1.boundedness, sigma * sigma * l4 * c0.boundedness);
  d.trace_integral_ratio_defect = ratio_defect(c1.trace_integral, sigma * lam * c0.trace_integral);
  double scale = std::abs(mult.s_param);
  for (std::size_t i = 0; i < rho.size(); ++i) scale = std::max(scale, std::abs(ell_kappa(rho.points[i], rho, mult) + mult.s_param));
  if (scale == 0.0) scale = 1.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double a = ell_kappa(sc.points[i], sc, m2);
    const double b = sigma * l4 * ell_kappa(rho.points[i], rho, mult);
    d.ell_defect = std::max(d.ell_defect, std::abs(a - b) / (sigma * l4 * scale));
  }
  d.el_residual_original = el_residual(rho, mult, 0, 0.0, 1).support_residual;
  d.el_residual_rescaled = el_residual(sc, m2, 0, 0.0, 1).support_residual;
  return d;
}

}  // namespace cfs

#include <algorithm>
#include <cmath>
#include <random>

#include <gsl/gsl_sf_bessel.h>

#include "cfs/vacuum_kernel.hpp"
#include "doctest.h"

using namespace cfs;

namespace {

constexpr double kPi = 3.14159265358979323846;

RegParams params(double eps, double m, double lam = 1.0) {
  RegParams p;
  p.epsilon = eps;
  p.m = m;
  p.lambda_scale = lam;
  return p;
}

double rel_diff(const SpinMatrix& a, const SpinMatrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// λ/(2π)⁴ ∫ d³k/(2ω) (m − ωγ⁰ − k·γ) e^{−εω} e^{i(ωt + k·ξ)} with k ~ Gamma(2, 1/ε) radially and
// a uniform direction, antithetic in the direction.
SpinMatrix monte_carlo_P(const Vec4& xi, const RegParams& p, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> radial(2.0, 1.0 / p.epsilon);
  std::normal_distribution<double> g(0.0, 1.0);
  cd s0 = 0, se = 0;
  std::array<cd, 3> sv{0, 0, 0};
  for (int n = 0; n < samples; ++n) {
    const double k = radial(rng);
    double d[3] = {g(rng), g(rng), g(rng)};
    const double dn = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const double w = std::sqrt(k * k + p.m * p.m);
    const double weight = 4 * kPi * k * std::exp(-p.epsilon * (w - k)) / (2 * w * p.epsilon * p.epsilon);
    for (int sgn : {1, -1}) {
      double kx[3], dot = 0;
      for (int j = 0; j < 3; ++j) {
        kx[j] = sgn * k * d[j] / dn;
        dot += kx[j] * xi[j + 1];
      }
      const cd ph = weight * std::exp(cd(0, w * xi[0] + dot));
      s0 += ph;
      se += w * ph;
      for (int j = 0; j < 3; ++j) sv[j] += kx[j] * ph;
    }
  }
  const double norm = p.lambda_scale / std::pow(2 * kPi, 4) / (2.0 * samples);
  SpinMatrix P = p.m * s0 * SpinMatrix::Identity() - se * gamma_matrix(0);
  for (int j = 0; j < 3; ++j) P -= sv[j] * gamma_matrix(j + 1);
  return norm * P;
}

}  // namespace

TEST_CASE("Dirac matrices satisfy the Clifford relations") {
  const SpinMatrix eta = Eigen::Vector4cd(1, -1, -1, -1).asDiagonal();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const SpinMatrix ac = gamma_matrix(a) * gamma_matrix(b) + gamma_matrix(b) * gamma_matrix(a);
      CHECK((ac - 2.0 * eta(a, b) * SpinMatrix::Identity()).norm() < 1e-15);
    }
  for (int a = 0; a < 4; ++a) CHECK((spin_adjoint(gamma_matrix(a)) - gamma_matrix(a)).norm() < 1e-15);
}

TEST_CASE("kernel agrees with a Monte-Carlo evaluation of the momentum integral") {
  const RegParams p = params(1.0, 0.7);
  for (const Vec4& xi : {Vec4{0.2, 0.1, -0.15, 0.2}, Vec4{-0.3, 0.0, 0.25, 0.05}}) {
    const SpinMatrix P = kernel_P(xi, p);
    const SpinMatrix mc = monte_carlo_P(xi, p, 2000000, 99);
    MESSAGE("monte carlo relative difference " << rel_diff(mc, P));
    CHECK(rel_diff(mc, P) <= 1e-3);
  }
}

TEST_CASE("scalar integral at equal times matches the Bessel closed form") {
  for (double r : {0.0, 0.3, 2.0}) {
    const RegParams p = params(0.5, 1.3);
    const double a = std::sqrt(p.epsilon * p.epsilon + r * r);
    const double expected = p.m / 2 * gsl_sf_bessel_K1(p.m * a) / a / (4 * kPi * kPi * kPi);
    const KernelIntegrals I = kernel_integrals(0.0, r, p);
    CHECK(I.scalar.real() == doctest::Approx(expected).epsilon(1e-7));
    CHECK(std::abs(I.scalar.imag()) == 0.0);
  }
}

TEST_CASE("local trace examples") {
  CHECK(local_trace(params(1e-2, 0.0)) == 0.0);
  const double t1 = local_trace(params(1e-2, 0.5, 1.0));
  CHECK(local_trace(params(1e-2, 0.5, 2.0)) == doctest::Approx(2 * t1).epsilon(1e-14));
  // Linear in m at leading order; corrections are O((εm)² log(εm)).
  const double tm = local_trace(params(1e-3, 1.0)), t2m = local_trace(params(1e-3, 2.0));
  CHECK(t2m / tm == doctest::Approx(2).epsilon(1e-3));
  const SpinMatrix P0 = kernel_P({0, 0, 0, 0}, params(1e-2, 0.5));
  CHECK(std::abs(P0.trace().imag()) <= 1e-10 * std::abs(P0.trace()));
}

TEST_CASE("kernel at the origin has the expected leading structure") {
  // P(0) = λ(a·𝟙 + b·γ⁰) with b ∼ 1/ε³ and a ∼ m/ε².
  double prev_b = 0, prev_a = 0;
  for (double eps : {1e-2, 1e-3}) {
    const RegParams p = params(eps, 0.5);
    const SpinMatrix P = kernel_P({0, 0, 0, 0}, p);
    const cd a = (P.trace() / 4.0), b = (gamma_matrix(0) * P).trace() / 4.0;
    for (int j = 1; j < 4; ++j) CHECK(std::abs((gamma_matrix(j) * P).trace()) <= 1e-12 * P.norm());
    const double bs = std::abs(b) * eps * eps * eps, as = std::abs(a) * eps * eps / p.m;
    if (prev_b > 0) {
      CHECK(bs == doctest::Approx(prev_b).epsilon(1e-3));
      CHECK(as == doctest::Approx(prev_a).epsilon(2e-2));
    }
    prev_b = bs;
    prev_a = as;
  }
}

TEST_CASE("property: kernel symmetry under reflection of the argument") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const RegParams p = params(0.2, 0.8);
  for (int k = 0; k < 10; ++k) {
    const Vec4 xi{U(rng), U(rng), U(rng), U(rng)};
    const Vec4 mxi{-xi[0], -xi[1], -xi[2], -xi[3]};
    const SpinMatrix P = kernel_P(xi, p), Pm = kernel_P(mxi, p);
    CHECK(rel_diff(Pm, spin_adjoint(P)) <= 1e-8);
  }
}

TEST_CASE("property: closed chain is spin-adjoint symmetric with a conjugation-closed spectrum") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  const RegParams p = params(0.1, 1.0);
  for (int k = 0; k < 10; ++k) {
    const Vec4 xi{U(rng), U(rng), U(rng), U(rng)};
    const SpinMatrix A = closed_chain(xi, p);
    CHECK(rel_diff(spin_adjoint(A), A) <= 1e-10);
    const auto ev = chain_eigenvalues(xi, p);
    for (const cd& z : ev) {
      double best = INFINITY;
      for (const cd& w : ev) best = std::min(best, std::abs(std::conj(z) - w));
      CHECK(best <= 1e-8 * std::abs(ev[3]));
    }
  }
}

TEST_CASE("chain spectrum at the origin") {
  // m = 0: degenerate leading term; m > 0 splits it into two real pairs.
  const auto e0 = chain_eigenvalues({0, 0, 0, 0}, params(1e-2, 0.0));
  for (const cd& z : e0) CHECK(std::abs(z - e0[0]) <= 1e-10 * std::abs(e0[0]));
  const auto e1 = chain_eigenvalues({0, 0, 0, 0}, params(1e-2, 0.5));
  for (const cd& z : e1) CHECK(std::abs(z.imag()) <= 1e-12 * std::abs(z));
  CHECK(std::abs(e1[0] - e1[1]) <= 1e-10 * std::abs(e1[0]));
  CHECK(std::abs(e1[2] - e1[3]) <= 1e-10 * std::abs(e1[2]));
  CHECK(std::abs(e1[0] - e1[2]) > 1e-6 * std::abs(e1[0]));
}

TEST_CASE("classification examples") {
  const RegParams p = params(1e-2, 1.0);
  CHECK(chain_classify({0, 0, 0, 0}, p) == Separation::Timelike);
  CHECK(chain_classify({0, 100 * p.m * p.epsilon * p.epsilon, 0, 0}, p) == Separation::Spacelike);
  CHECK(chain_classify({0, 0, 0, 0}, params(1e-2, 0.0)) == Separation::Boundary);
  CHECK(std::string(separation_name(Separation::Spacelike)) == "spacelike");
}

TEST_CASE("cylinder radius is positive and scales like m eps^2") {
  for (double m : {0.5, 1.0}) {
    for (double eps : {1e-3, 2e-3}) {
      const double r = cylinder_radius(params(eps, m));
      CHECK(r > 0);
      CHECK(r / (m * eps * eps) == doctest::Approx(0.5).epsilon(0.05));
    }
  }
}

TEST_CASE("scaling sweep reproduces the power laws") {
  SweepConfig cfg;
  cfg.epsilons = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  cfg.masses = {0.25, 0.5, 1.0, 2.0};
  const SweepResult r = scaling_sweep(cfg);
  REQUIRE(r.fits.size() == 5);
  for (const auto& f : r.fits) {
    CAPTURE(f.observable);
    CAPTURE(f.slope);
    CHECK(f.pass);
    CHECK(std::abs(f.slope - f.expected) <= f.tolerance);
  }
}

TEST_CASE("slopes are stable when the quadrature tolerance is tightened") {
  SweepConfig cfg;
  cfg.epsilons = {1e-4, 3e-4, 1e-3, 1e-2};
  cfg.masses = {0.25, 0.5, 1.0, 2.0};
  const SweepResult a = scaling_sweep(cfg);
  cfg.rel_tol = 0.5e-8;
  const SweepResult b = scaling_sweep(cfg);
  for (std::size_t k = 0; k < a.fits.size(); ++k)
    CHECK(std::abs(a.fits[k].slope - b.fits[k].slope) <= 0.1 * a.fits[k].tolerance);
}

TEST_CASE("sweep and parameter validation") {
  SweepConfig cfg;
  cfg.epsilons = {1e-3};
  cfg.masses = {0.5, 1.0, 2.0, 4.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  RegParams bad = params(-1.0, 1.0);
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_FALSE(params(0.1, 1.0).validate().empty());
  CHECK(params(1e-3, 1.0).validate().empty());
}

TEST_CASE("log-log fit recovers an exact power law") {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3 * std::pow(v, -2.5));
  const SlopeFit f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(-2.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1).epsilon(1e-12));
}

namespace {

Operator diag2(double a, double b) {
  CMat A = CMat::Zero(2, 2);
  A(0, 0) = a;
  A(1, 1) = b;
  return Operator::from_matrix(A, 1);
}

DiscreteMeasure two_point() {
  CMat S(2, 2);
  S << 0, 1, 1, 0;
  DiscreteMeasure r;
  r.points = {diag2(1, -1), Operator::from_matrix(S, 1)};
  r.weights = {1.0, 1.0};
  return r;
}

}  // namespace

TEST_CASE("rescaling covariance examples") {
  const DiscreteMeasure rho = two_point();
  const MultiplierSet mult{1.0, 0.5, 0.0};
  const RescalingDefects id = rescaling_covariance_check(rho, mult, 1.0, 1.0);
  CHECK(id.trace_defect == 0.0);
  CHECK(id.action_ratio_defect == 0.0);
  CHECK(id.ell_defect == 0.0);
  CHECK(id.el_residual_rescaled == id.el_residual_original);

  const RescalingDefects d = rescaling_covariance_check(rho, mult, 1.0, 2.0);
  CHECK(d.boundedness_ratio_defect <= 1e-14);  // boundedness × 16
  CHECK(d.trace_integral_ratio_defect <= 1e-14);  // trace integral × 2
  CHECK(d.s_new == doctest::Approx(16 * 0.5).epsilon(1e-15));
  CHECK(d.el_residual_rescaled <= d.el_residual_original * 16 + 1e-12);
  CHECK_THROWS_AS(rescaling_covariance_check(rho, mult, 0.0, 1.0), Error);
}

TEST_CASE("property: rescaling preserves the EL residual on random systems") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  for (int k = 0; k < 10; ++k) {
    DiscreteMeasure rho;
    rho.trace_c = 1.0;
    for (int i = 0; i < 4; ++i) {
      rho.points.push_back(random_operator(3, 1, 1.0, rng));
      rho.weights.push_back(U(rng));
    }
    const MultiplierSet mult{0.3, U(rng), 1.0};
    const double sigma = U(rng), lam = U(rng);
    const RescalingDefects d = rescaling_covariance_check(rho, mult, sigma, lam);
    CHECK(d.trace_defect <= 1e-12 * lam);
    CHECK(d.action_ratio_defect <= 1e-12);
    CHECK(d.ell_defect <= 1e-12);
    CHECK(d.el_residual_rescaled <= d.el_residual_original * std::pow(lam, 4) * sigma * (1 + 1e-12) + 1e-12);
  }
}

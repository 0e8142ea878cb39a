#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "cfs/jets.hpp"
#include "cfs/minimizer.hpp"
#include "doctest.h"

using namespace cfs;

namespace {

Operator diag2(double a, double b) {
  CMat A = CMat::Zero(2, 2);
  A(0, 0) = a;
  A(1, 1) = b;
  return Operator::from_matrix(A, 1);
}

double tr_sq(const Operator& x) { return (x.matrix() * x.matrix()).trace().real(); }

DiscreteMeasure random_system(int f, int N, double c, std::mt19937_64& rng) {
  DiscreteMeasure r;
  r.trace_c = c;
  for (int i = 0; i < N; ++i) {
    r.points.push_back(random_operator(f, 1, c, rng));
    r.weights.push_back(1.0 / N);
  }
  return r;
}

}  // namespace

TEST_CASE("directional derivative of tr(x^2) along diag(1,-1)") {
  auto x = diag2(1, -1);
  CMat u = x.matrix();
  CHECK(directional_derivative(tr_sq, x, u) == doctest::Approx(4).epsilon(1e-8));
  DiscreteMeasure one;
  one.points = {x};
  one.weights = {1.0};
  Jet j = Jet::zero(one);
  j.scalar[0] = 0.5;
  j.vector[0] = u;
  CHECK(nabla(j, tr_sq, one, 0) == doctest::Approx(0.5 * 2 + 4).epsilon(1e-8));
}

TEST_CASE("non-tangent directions are rejected") {
  DiscreteMeasure one;
  one.points = {diag2(1, -1)};
  one.weights = {1.0};
  Jet j = Jet::zero(one);
  j.vector[0] = CMat::Identity(2, 2);
  CHECK_THROWS_AS(nabla(j, tr_sq, one, 0), Error);
}

TEST_CASE("property: directional derivative is linear in the direction") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    auto x = random_operator(3, 1, 0.4, rng);
    CMat u = tangent_project(x, random_hermitian(3, 1.0, rng));
    CMat w = tangent_project(x, random_hermitian(3, 1.0, rng));
    double a = directional_derivative(tr_sq, x, u);
    double b = directional_derivative(tr_sq, x, w);
    double c = directional_derivative(tr_sq, x, u + 2.0 * w);
    CHECK(std::abs(c - (a + 2 * b)) <= 1e-9 * std::max(1.0, std::abs(c)));
  }
}

TEST_CASE("property: finite differences converge as the step shrinks") {
  std::mt19937_64 rng(6);
  auto sys = random_system(3, 4, 0.3, rng);
  MultiplierSet m{0.0, 0.0, 0.3};
  PointFunction ell = [&](const Operator& y) { return ell_kappa(y, sys, m); };
  const auto& x = sys.points[0];
  CMat u = tangent_project(x, random_hermitian(3, 1.0, rng));
  double ref = directional_derivative(ell, x, u, 1e-4);
  double e1 = std::abs(directional_derivative(ell, x, u, 4e-2) - ref);
  double e2 = std::abs(directional_derivative(ell, x, u, 2e-2) - ref);
  MESSAGE("error ratio under step halving: " << e1 / e2);
  CHECK(e1 / e2 >= 3.0);
}

TEST_CASE("unitary family gives the commutator jet") {
  std::mt19937_64 rng(2);
  auto sys = random_system(3, 3, 0.2, rng);
  CMat H = random_hermitian(3, 1.0, rng);
  JetFamily fam;
  fam.weight = [](std::size_t, double) { return 1.0; };
  fam.map = [&](std::size_t i, double tau) {
    CMat U = (cd(0, 1) * tau * H).exp();
    return CMat(U * sys.points[i].matrix() * U.adjoint());
  };
  Jet j = jet_from_family(fam, sys);
  Jet r = rotation_jet(sys, H);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    CHECK(std::abs(j.scalar[i]) < 1e-12);
    CHECK((j.vector[i] - r.vector[i]).norm() <= 1e-8 * r.vector[i].norm());
  }
}

TEST_CASE("kinked families are rejected") {
  DiscreteMeasure one;
  one.points = {diag2(1, -1)};
  one.weights = {1.0};
  JetFamily fam;
  fam.weight = [](std::size_t, double tau) { return 1.0 + std::abs(tau); };
  fam.map = [&](std::size_t, double) { return one.points[0].matrix(); };
  CHECK_THROWS_AS(jet_from_family(fam, one), Error);
  fam.weight = [](std::size_t, double tau) { return 1.0 + tau; };
  CMat k = CMat::Zero(2, 2);
  k(0, 1) = k(1, 0) = 1;
  fam.map = [&](std::size_t, double tau) { return CMat(one.points[0].matrix() + std::abs(tau) * k); };
  CHECK_THROWS_AS(jet_from_family(fam, one), Error);
}

TEST_CASE("weak EL test on a minimizer and under perturbation") {
  MinimizeConfig cfg;
  cfg.tol_grad = 1e-11;
  cfg.max_iters = 600;
  cfg.seed = 7;
  auto res = minimize_action(random_measure(2, 1, 4, cfg), cfg);
  std::mt19937_64 rng(3);
  std::vector<Jet> tests;
  for (int k = 0; k < 3; ++k) {
    Jet j = random_tangent_jet(res.measure, rng);
    for (auto& a : j.scalar) a = 0.0;
    tests.push_back(j);
  }
  double w = weak_el_test(res.measure, res.multipliers, tests);
  MESSAGE("weak EL residual: " << w);
  CHECK(w <= 1e-5);

  // Perturbing a support point moves the weak EL residual linearly.
  std::vector<double> r;
  for (double eps : {1e-4, 2e-4}) {
    DiscreteMeasure p = res.measure;
    std::mt19937_64 same(11);
    CMat k = two_sided_tangent(p.points[0], random_hermitian(2, 1.0, same));
    p.points[0] = displace(p.points[0], k, eps);
    r.push_back(weak_el_test(p, res.multipliers, tests));
  }
  MESSAGE("perturbed residuals: " << r[0] << " " << r[1]);
  CHECK(r[0] > 100 * w);
  CHECK(r[1] / r[0] == doctest::Approx(2.0).epsilon(0.05));

  CMat H = random_hermitian(2, 1.0, rng);
  Jet v = rotation_jet(res.measure, H);
  double lr = linearized_residual(v, res.measure, res.multipliers, tests);
  MESSAGE("linearized residual of the rotation jet: " << lr);
  CHECK(lr <= 1e-5);
}

TEST_CASE("delta pairing examples") {
  std::mt19937_64 rng(5);
  auto sys = random_system(3, 3, 0.2, rng);
  MultiplierSet m{0.1, 0.3, 0.2};
  Jet u = random_tangent_jet(sys, rng);
  Jet zero = Jet::zero(sys);
  for (std::size_t i = 0; i < sys.size(); ++i) CHECK(delta_pairing(u, zero, sys, m, i) == 0.0);

  DiscreteMeasure one;
  one.points = {diag2(1, -1)};
  one.weights = {1.0};
  Jet a = Jet::zero(one), b = Jet::zero(one);
  a.scalar[0] = 0.7;
  b.scalar[0] = -1.3;
  CHECK(delta_pairing(a, b, one, {0, 0, 0}, 0) == 0.0);
}

TEST_CASE("property: both nesting orders of the pairing agree") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 8; ++t) {
    auto sys = random_system(2 + t % 3, 3, 0.3, rng);
    MultiplierSet m{0.1 * (t % 2), 0.2, 0.3};
    Jet u = random_tangent_jet(sys, rng), v = random_tangent_jet(sys, rng);
    for (std::size_t i = 0; i < sys.size(); ++i) {
      double a = delta_pairing(u, v, sys, m, i, {}, NestingOrder::OuterFirst);
      double b = delta_pairing(u, v, sys, m, i, {}, NestingOrder::InnerFirst);
      CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)));
    }
    CHECK(linearized_residual(v, sys, m, {u}) > 0.0);
  }
}

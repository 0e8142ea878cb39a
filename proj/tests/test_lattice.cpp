#include <cmath>

#include "cfs/lattice.hpp"
#include "doctest.h"

using namespace cfs;

namespace {

LatticeChart make_chart(int e, ScalarFn h = [](const Vec4&) { return 1.0; }) {
  LatticeChart c;
  c.extent = {e, e, e, e};
  c.lo = {0, 0, 0, 0};
  c.hi = {1, 1, 1, 1};
  c.h = std::move(h);
  c.embed = commuting_embedding(1.0, 0.5, {0.1, 0.05, 0.0, 0.02});
  return c;
}

double bump1(double t, double c, double r) {
  double u = (t - c) / r;
  return std::abs(u) < 1 ? std::exp(-1 / (1 - u * u)) : 0.0;
}

double bump(const Vec4& x) {
  double p = 1;
  for (int j = 0; j < 4; ++j) p *= bump1(x[j], 0.5, 0.35);
  return p;
}

}  // namespace

TEST_CASE("divergence examples") {
  auto c = make_chart(6);
  auto v0 = GridVectorField::sample(c, [](const Vec4&) { return Vec4{0.3, -1, 2, 0.5}; });
  for (double d : divergence(v0, c)) CHECK(std::abs(d) < 1e-12);
  auto vx = GridVectorField::sample(c, [](const Vec4& x) { return x; });
  for (auto mode : {DivMode::Central2, DivMode::Central4, DivMode::Analytic})
    for (double d : divergence(vx, c, mode)) CHECK(d == doctest::Approx(4).epsilon(1e-10));

  auto ce = make_chart(11, [](const Vec4& x) { return std::exp(x[0]); });
  auto e0 = GridVectorField::sample(ce, [](const Vec4&) { return Vec4{1, 0, 0, 0}; });
  const double h = ce.spacing(0);
  for (double d : divergence(e0, ce)) CHECK(std::abs(d - 1) <= h * h);
  for (double d : divergence(e0, ce, DivMode::Analytic)) CHECK(std::abs(d - 1) <= 1e-10);
}

TEST_CASE("property: divergence is linear and obeys the product rule to second order") {
  VectorFn v = [](const Vec4& x) { return Vec4{std::sin(x[1]), x[0] * x[2], std::cos(x[3] + x[0]), x[1] * x[1]}; };
  VectorFn w = [](const Vec4& x) { return Vec4{x[3], std::exp(x[1]), 0.5, x[2] * x[0]}; };
  ScalarFn f = [](const Vec4& x) { return std::sin(x[0] + 2 * x[1]) + x[3]; };
  std::vector<double> err;
  for (int e : {9, 17}) {
    auto c = make_chart(e, [](const Vec4& x) { return 1 + 0.3 * x[2]; });
    auto gv = GridVectorField::sample(c, v), gw = GridVectorField::sample(c, w);
    auto sum = GridVectorField::sample(c, [&](const Vec4& x) {
      Vec4 a = v(x), b = w(x);
      return Vec4{a[0] + 2 * b[0], a[1] + 2 * b[1], a[2] + 2 * b[2], a[3] + 2 * b[3]};
    });
    auto dv = divergence(gv, c), dw = divergence(gw, c), ds = divergence(sum, c);
    for (std::size_t i = 0; i < dv.size(); ++i) CHECK(std::abs(ds[i] - dv[i] - 2 * dw[i]) < 1e-11);
    auto fv = GridVectorField::sample(c, [&](const Vec4& x) {
      Vec4 a = v(x);
      double s = f(x);
      return Vec4{s * a[0], s * a[1], s * a[2], s * a[3]};
    });
    auto dfv = divergence(fv, c);
    double worst = 0;
    for (std::size_t i = 0; i < dv.size(); ++i) {
      Index4 m = c.multi(i);
      bool interior = true;
      for (int j = 0; j < 4; ++j) interior &= m[j] > 0 && m[j] < e - 1;
      if (!interior) continue;
      Vec4 x = c.coords(i);
      double rhs = f(x) * dv[i] + coordinate_derivative(f, x, gv.values[i], 1e-3);
      worst = std::max(worst, std::abs(dfv[i] - rhs));
    }
    err.push_back(worst);
  }
  MESSAGE("product rule defects: " << err[0] << " " << err[1]);
  CHECK(err[0] / err[1] > 3.0);
}

TEST_CASE("boundary flux examples") {
  auto c = make_chart(9);
  auto box = box_region(c, {0.25, 0.25, 0.25, 0.25}, {0.75, 0.75, 0.75, 0.75});
  CHECK(box.count() == 5 * 5 * 5 * 5);
  auto e1 = GridVectorField::sample(c, [](const Vec4&) { return Vec4{0, 1, 0, 0}; });
  auto w = boundary_flux_measure(e1, box, c);
  double total = 0, top = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    total += w[k];
    if (box.facets[k].axis == 1 && box.facets[k].sign == 1) top += w[k];
  }
  const double h = c.spacing(0);
  CHECK(std::abs(total) < 1e-14);
  CHECK(top == doctest::Approx(std::pow(5 * h, 3)).epsilon(1e-12));

  const double a = 0.25 - h / 2, b = 0.75 + h / 2;
  auto tangent = GridVectorField::sample(c, [&](const Vec4& x) {
    Vec4 v;
    for (int j = 0; j < 4; ++j) v[j] = (x[j] - a) * (b - x[j]);
    return v;
  });
  for (double f : boundary_flux_measure(tangent, box, c)) CHECK(std::abs(f) < 1e-15);

  auto c2 = make_chart(9, [](const Vec4&) { return 2.0; });
  auto box2 = box_region(c2, {0.25, 0.25, 0.25, 0.25}, {0.75, 0.75, 0.75, 0.75});
  auto w2 = boundary_flux_measure(e1, box2, c2);
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(w2[k] == 2 * w[k]);
}

TEST_CASE("property: closed boundary flux of a divergence-free field vanishes") {
  auto c = make_chart(9);
  auto box = box_region(c, {0.25, 0.125, 0.25, 0.375}, {0.75, 0.75, 0.625, 0.875});
  auto v = GridVectorField::sample(c, [](const Vec4& x) {
    return Vec4{std::sin(x[1] + x[2]), x[0] * x[3], std::cos(x[0]), x[1] * x[2]};
  });
  double total = 0;
  for (double f : boundary_flux_measure(v, box, c)) total += f;
  CHECK(std::abs(total) < 1e-12);
}

TEST_CASE("inner solutions") {
  auto c = make_chart(4);
  auto rho = c.measure();
  auto zero = GridVectorField::sample(c, [](const Vec4&) { return Vec4{0, 0, 0, 0}; });
  Jet j0 = inner_solution(zero, c);
  for (std::size_t i = 0; i < j0.size(); ++i) {
    CHECK(j0.scalar[i] == 0.0);
    CHECK(j0.vector[i].norm() == 0.0);
  }
  auto vx = GridVectorField::sample(c, [](const Vec4& x) { return x; });
  Jet j = inner_solution(vx, c);
  for (std::size_t i = 0; i < j.size(); ++i) {
    CHECK(j.scalar[i] == doctest::Approx(4).epsilon(1e-12));
    Vec4 x = c.coords(i);
    double t = 0.1 * x[0] + 0.05 * x[1] + 0.02 * x[3];
    CMat expect = CMat::Zero(2, 2);
    expect(0, 0) = t;
    expect(1, 1) = -t;
    CHECK((j.vector[i] - expect).norm() <= 1e-10);
  }
  auto free = GridVectorField::sample(c, [](const Vec4& x) { return Vec4{0, 0, std::sin(x[1]), x[0] * x[1]}; });
  Jet jf = inner_solution(free, c);
  for (double s : jf.scalar) CHECK(s == 0.0);
}

TEST_CASE("gauss divergence check") {
  auto c = make_chart(7);
  auto v = GridVectorField::sample(c, [](const Vec4&) { return Vec4{1, 0.5, -0.2, 0.3}; });
  CHECK(gauss_divergence_check(v, [](const Vec4&) { return 0.0; }, c).defect == 0.0);
  auto z = GridVectorField::sample(c, [](const Vec4&) { return Vec4{0, 0, 0, 0}; });
  CHECK(gauss_divergence_check(z, bump, c).defect == 0.0);
  std::vector<double> d;
  for (int e : {9, 17}) {
    auto ce = make_chart(e);
    auto ve = GridVectorField::sample(ce, [](const Vec4&) { return Vec4{1, 0.5, -0.2, 0.3}; });
    auto g = gauss_divergence_check(ve, bump, ce);
    CHECK(g.compact);
    CHECK(g.defect <= 10 * std::pow(ce.spacing(0), 2));
    d.push_back(g.defect);
  }
  MESSAGE("gauss defects: " << d[0] << " " << d[1]);
  CHECK_FALSE(gauss_divergence_check(v, [](const Vec4& x) { return x[0]; }, c).compact);
}

TEST_CASE("flows of regions") {
  auto c = make_chart(9);
  auto box = box_region(c, {0.25, 0.25, 0.25, 0.25}, {0.75, 0.75, 0.75, 0.75});
  auto e1 = GridVectorField::sample(c, [](const Vec4&) { return Vec4{0, 1, 0, 0}; });
  auto same = flow_region(box, e1, 0.0, c);
  CHECK(same.chi == box.chi);
  auto moved = flow_region(box, e1, c.spacing(1), c);
  for (std::size_t i = 0; i < c.node_count(); ++i) {
    Index4 m = c.multi(i);
    m[1] -= 1;
    double expect = m[1] >= 0 ? box.chi[c.index(m)] : 0.0;
    CHECK(moved.chi[i] == expect);
  }
  CHECK_THROWS_AS(flow_region(box, e1, 3 * c.spacing(1), c), Error);

  VectorFn rot = [](const Vec4& x) { return Vec4{0.3 * (x[1] - 0.5), -0.3 * (x[0] - 0.5), 0.1 * x[2] * x[3], 0.2}; };
  for (std::size_t i = 0; i < c.node_count(); i += 37) {
    Vec4 x = c.coords(i);
    Vec4 y = flow_point(rot, flow_point(rot, x, 0.2, c), -0.2, c);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(y[j] - x[j]) <= 1e-10);
  }
}

#include <algorithm>
#include <cmath>
#include <random>

#include "cfs/surface_layer.hpp"
#include "doctest.h"

using namespace cfs;

namespace {

struct Background {
  DiscreteMeasure rho;
  MultiplierSet mult;
  std::vector<bool> omega;
};

Background random_background(std::mt19937_64& rng, int f, int n, int points) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Background b;
  b.rho.trace_c = 1.0;
  for (int i = 0; i < points; ++i) {
    b.rho.points.push_back(random_operator(f, n, 1.0, rng));
    b.rho.weights.push_back(0.5 + U(rng));
  }
  b.mult = {0.2 * U(rng), 2 * U(rng) - 1, 1.0};
  b.omega.assign(points, false);
  for (int i = 0; i < points; ++i) b.omega[i] = U(rng) < 0.5;
  b.omega[0] = true;
  b.omega[1] = false;
  return b;
}

double jet_scale(const Jet& v, const DiscreteMeasure& rho) {
  double s = 1.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    s = std::max({s, std::abs(v.scalar[i]), v.vector[i].norm() / rho.points[i].norm()});
  return s;
}

LatticeChart chart(int e, const std::string& family = "commuting") {
  LatticeChart c;
  c.extent = {e, e, e, e};
  c.embed = family == "commuting" ? commuting_embedding(1.0, 0.5, {0.1, 0.05, 0.0, 0.02})
                                  : unitary_orbit_embedding(3, 0.3);
  return c;
}

SurfaceConfig surface(const LatticeChart& c, double div_part) {
  Bump bump;
  bump.center = {0.5, 0.45, 0.5, 0.5};
  SurfaceConfig s;
  s.V = half_space(c, 1, 0.87, true);
  s.omega = half_space(c, 0, 0.5, true, 2.5 * c.spacing(0));
  s.v = GridVectorField::sample(c, stream_field(bump, c.h, 1.0, div_part));
  return s;
}

}  // namespace

TEST_CASE("antisymmetric surface integral examples") {
  std::mt19937_64 rng(3);
  Background b = random_background(rng, 3, 1, 5);
  const Jet v = random_tangent_jet(b.rho, rng);
  std::vector<bool> none(5, false), all(5, true);
  CHECK(osi_antisymmetric(v, none, b.rho, b.mult).value == 0.0);
  CHECK(osi_antisymmetric(v, all, b.rho, b.mult).value == 0.0);
  CHECK(osi_antisymmetric(Jet::zero(b.rho), b.omega, b.rho, b.mult).value == 0.0);
  const OsiResult r = osi_antisymmetric(v, b.omega, b.rho, b.mult);
  double sum = 0.0;
  for (const auto& [name, value] : r.decomposition) sum += value;
  CHECK(r.value == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("property: the integrand cancels over omega x omega") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 12; ++k) {
    Background b = random_background(rng, 2 + k % 3, 1, 6);
    const Jet v = random_tangent_jet(b.rho, rng);
    CHECK(std::abs(omega_omega_sum(v, b.omega, b.rho, b.mult)) <= 1e-12);
  }
}

TEST_CASE("conservation check with a zero jet") {
  std::mt19937_64 rng(5);
  Background b = random_background(rng, 2, 1, 4);
  const ConservationResult r = conservation_check(Jet::zero(b.rho), b.omega, b.rho, b.mult);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  CHECK(r.proof_identity_defect == 0.0);
}

TEST_CASE("property: the proof identity holds on arbitrary backgrounds") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 20; ++k) {
    const int f = 2 + k % 4;
    const int n = (f >= 4 && k % 2) ? 2 : 1;
    Background b = random_background(rng, f, n, 5);
    const Jet v = random_tangent_jet(b.rho, rng);
    const ConservationResult r = conservation_check(v, b.omega, b.rho, b.mult);
    const double scale =
        std::max({1.0, std::abs(r.lhs), causal_action(b.rho, {b.mult.kappa, 0.0}) * jet_scale(v, b.rho)});
    CAPTURE(k);
    CHECK(r.proof_identity_defect <= 1e-8 * scale);
  }
}

TEST_CASE("bilinear surface integral") {
  std::mt19937_64 rng(41);
  Background b = random_background(rng, 3, 1, 5);
  const Jet u = random_tangent_jet(b.rho, rng), v = random_tangent_jet(b.rho, rng);
  CHECK(osi_bilinear(Jet::zero(b.rho), v, b.omega, b.rho, b.mult).value == 0.0);
  CHECK(osi_bilinear(u, Jet::zero(b.rho), b.omega, b.rho, b.mult).value == 0.0);

  const OsiResult uv = osi_bilinear(u, v, b.omega, b.rho, b.mult);
  const OsiResult vu = osi_bilinear(v, u, b.omega, b.rho, b.mult);
  CHECK(uv.decomposition[0].second == vu.decomposition[0].second);
  CHECK(uv.decomposition[1].second == -vu.decomposition[1].second);

  const OsiResult inner = osi_bilinear(u, v, b.omega, b.rho, b.mult, {}, NestingOrder::InnerFirst);
  CHECK(std::abs(uv.value - inner.value) <= 1e-6 * std::max(1.0, std::abs(uv.value)));
}

TEST_CASE("area and area change vanish for a zero field") {
  const LatticeChart c = chart(6);
  SurfaceConfig s = surface(c, 0.0);
  s.omega = half_space(c, 0, 0.5, true);
  s.v = GridVectorField::sample(c, [](const Vec4&) { return Vec4{0, 0, 0, 0}; });
  s.u = s.v;
  LatticePairs eng(c, {}, DivMode::Analytic);
  eng.set_v(s.v);
  eng.set_u(s.u);
  const AreaResult a = area(eng, s);
  CHECK(a.boundary_form == 0.0);
  CHECK(a.bulk_form == 0.0);
  const AreaChange ac = area_change_analytic(eng, s);
  CHECK(ac.total == 0.0);
  CHECK(matter_flux(eng, s) == 0.0);
  const JacobsonResult j = jacobson_check(eng, s);
  CHECK(j.dA_dtau == 0.0);
  CHECK(j.defect == 0.0);
}

TEST_CASE("divergence-free fields have no dtA2 or dtA3 and satisfy the Jacobson relation") {
  for (const char* fam : {"commuting", "unitary"}) {
    CAPTURE(fam);
    const LatticeChart c = chart(7, fam);
    SurfaceConfig s = surface(c, 0.0);
    validate_surface_config(s, c);
    s.u = s.v;
    LatticePairs eng(c, {}, DivMode::Analytic);
    eng.set_v(s.v);
    eng.set_u(s.u);
    const AreaChange ac = area_change_analytic(eng, s);
    CHECK(ac.dtA2 == 0.0);
    CHECK(ac.dtA3 == 0.0);
    const JacobsonResult j = jacobson_check(eng, s);
    CHECK(j.div_free);
    CHECK(j.u_equals_v);
    CHECK(j.defect <= 1e-8 * std::max(std::abs(j.dA_dtau), 1.0));
  }
}

TEST_CASE("divergent fields bring back the dtA2 and dtA3 terms") {
  const LatticeChart c = chart(7);
  SurfaceConfig s = surface(c, 0.3);
  s.u = s.v;
  LatticePairs eng(c, {}, DivMode::Analytic);
  eng.set_v(s.v);
  eng.set_u(s.u);
  const AreaChange ac = area_change_analytic(eng, s);
  const JacobsonResult j = jacobson_check(eng, s);
  CHECK_FALSE(j.div_free);
  // Read with dtA1 as the full (∇1+∇2)(∇1−∇2) expression, the flux matches dtA1 alone and
  // dtA2 + dtA3 is the defect; with the split used here the flux equals the total.
  const double literal_defect = std::abs(ac.dtA2 + ac.dtA3);
  CHECK(literal_defect > 1e-8 * std::max(std::abs(j.dA_dtau), 1.0));
  CHECK(j.defect <= 1e-8 * std::max(std::abs(j.dA_dtau), 1.0));
}

TEST_CASE("surface configurations are validated") {
  const LatticeChart c = chart(6);
  SurfaceConfig s = surface(c, 0.0);
  s.v = GridVectorField::sample(c, [](const Vec4&) { return Vec4{0, 1, 0, 0}; });
  CHECK_THROWS_AS(validate_surface_config(s, c), Error);
  SurfaceConfig far = surface(c, 0.0);
  far.omega = half_space(c, 0, -1.0, true);
  CHECK_THROWS_AS(validate_surface_config(far, c), Error);
}

TEST_CASE("killing check examples") {
  const LatticeChart c = chart(5);
  {
    LatticePairs eng(c, {}, DivMode::Analytic);
    eng.set_v(GridVectorField::sample(c, [](const Vec4&) { return Vec4{0, 0, 0, 0}; }));
    const KillingResult k = killing_check(eng, 1e-12);
    CHECK(k.max_div == 0.0);
    CHECK(k.max_sym_defect == 0.0);
    CHECK(k.pass);
  }
  {
    // β·w = 0 for β = (0.1, 0.05, 0, 0.02): the embedding is constant along w.
    LatticePairs eng(c, {}, DivMode::Analytic);
    eng.set_v(GridVectorField::sample(c, [](const Vec4&) { return Vec4{0.05, -0.1, 0.3, 0}; }));
    const KillingResult k = killing_check(eng, 1e-10);
    CHECK(k.max_div == 0.0);
    CHECK(k.max_sym_defect <= 1e-10);
    CHECK(k.pass);
  }
  {
    LatticePairs eng(c, {}, DivMode::Analytic);
    eng.set_v(GridVectorField::sample(c, [](const Vec4& x) { return x; }));
    const KillingResult k = killing_check(eng, 1e10);
    CHECK(k.max_div == doctest::Approx(4).epsilon(1e-8));
    CHECK_FALSE(k.pass);
  }
}

TEST_CASE("boundary lemma converges under refinement") {
  double prev = INFINITY;
  for (int m : {4, 8}) {
    LatticeChart c;
    c.extent = {m, m, m, m};
    c.lo = {0.5 / m, 0.5 / m, 0.5 / m, 0.5 / m};
    c.hi = {1 - 0.5 / m, 1 - 0.5 / m, 1 - 0.5 / m, 1 - 0.5 / m};
    c.embed = commuting_embedding(1.0, 0.5, {0.1, 0.05, 0.0, 0.02});
    Bump bump;
    bump.radius = 0.49;
    bump.power = 4;
    const GridVectorField v = GridVectorField::sample(c, stream_field(bump, c.h, 1.0, 0.5));
    LatticePairs eng(c, {}, DivMode::Analytic);
    eng.set_v(v);
    const LemmaResult r = boundary_lemma(eng, box_region(c, {0.25, 0.25, 0.25, 0.25}, {0.5, 0.5, 0.5, 0.5}), v);
    CHECK(r.defect == doctest::Approx(std::abs(r.bulk - r.boundary)).epsilon(1e-12));
    CHECK(r.defect * 1.7 <= prev);
    prev = r.defect;
  }
}

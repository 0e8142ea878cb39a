#include <algorithm>
#include <cmath>
#include <random>

#include "cfs/operator_core.hpp"
#include "cfs/scaling_algebra.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cfs;
using cfs::oracle::killing_terms;
using cfs::oracle::matter_terms;
using cfs::oracle::numeric_dominant;

namespace {

Monomial M(Sym s, Expo k = 1) { return Monomial::of(s, k); }
Monomial eps_m(Expo p) { return (M(Sym::eps) * M(Sym::m)).pow(p); }
Monomial eps_delta(Expo k) { return (M(Sym::eps) / M(Sym::delta)).pow(k); }
Monomial sl4() { return M(Sym::sigma) * M(Sym::lambda, 4); }

}  // namespace

TEST_CASE("exponent and monomial arithmetic") {
  const Expo p = Expo::of(Param::p);
  CHECK((p + 3 - p).is_constant());
  CHECK((p * 2 - p) == p);
  CHECK(Expo(4).str() == "4");
  const Monomial a = M(Sym::eps, 2) * M(Sym::m, -1);
  CHECK(a / a == Monomial::one());
  CHECK(a.pow(3) == M(Sym::eps, 6) * M(Sym::m, -3));
  CHECK(eps_m(p).substitute(Param::p, 5) == eps_m(5));
  CHECK(M(Sym::T).replace(Sym::T, M(Sym::m, 4)) == M(Sym::m, 4));
  CHECK(same_terms({a, M(Sym::eps)}, {M(Sym::eps), a}));
  CHECK_FALSE(same_terms({a}, {a, a}));
}

TEST_CASE("dominant term examples") {
  Regime small_eps;
  small_eps.eps_absolute_small = true;
  auto d1 = dominant({M(Sym::eps, -8), M(Sym::eps, -2)}, small_eps);
  CHECK(same_terms(d1.kept, {M(Sym::eps, -8)}));

  const Expo p = Expo::of(Param::p), shat = Expo::of(Param::shat);
  const Posynomial lvac{eps_m(p) * M(Sym::eps, -8), eps_delta(Expo(8) - shat) * M(Sym::eps, -8)};
  auto d2 = dominant(lvac, {});
  CHECK(same_terms(d2.kept, lvac));
  CHECK(d2.incomparable.size() == 1);

  auto d3 = dominant({M(Sym::m, 6) * M(Sym::eps, -2), M(Sym::m, 5) * M(Sym::eps, -3)}, {});
  CHECK(same_terms(d3.kept, {M(Sym::m, 5) * M(Sym::eps, -3)}));
  CHECK(d3.transcript.find("dominant:") != std::string::npos);
}

TEST_CASE("regularization exponents") {
  CHECK(shat_of(0) == 2);
  for (int q = 1; q < 6; ++q) CHECK(shat_of(q) == 0);
  CHECK(s_of(0) == 4);
  CHECK(s_of(1) == 2);
  CHECK(s_of(2) == 0);
  CHECK(s_of(7) == 0);
  CHECK_THROWS_AS(shat_of(-1), Error);
  CHECK_THROWS_AS(s_of(-1), Error);
}

TEST_CASE("kappa bound") {
  CHECK(same_terms(kappa_bound(5, 1), {eps_m(5), eps_delta(8)}));
  CHECK(same_terms(kappa_bound(6, 0), {eps_m(6), eps_delta(6)}));
  for (const auto& t : kappa_bound(Expo::of(Param::p), Expo::of(Param::shat))) CHECK(t.length_dim().is_zero());
  CHECK_THROWS_AS(kappa_bound(4, 1), Error);
  // Large p: the regularization term dominates.
  const auto k = kappa_bound(40, 0);
  CHECK(compare(k[0], k[1], {}) == Order::Less);
}

TEST_CASE("s multiplier scaling") {
  CHECK(same_terms(s_multiplier_scaling(5, 0),
                   {sl4() * M(Sym::m, 5) * M(Sym::eps, -3), sl4() * M(Sym::delta, -6) * M(Sym::eps, -2)}));
  const Expo p = Expo::of(Param::p), shat = Expo::of(Param::shat);
  const Posynomial expect{sl4() * M(Sym::eps, -8) * eps_m(p), sl4() * M(Sym::eps, -8) * eps_delta(Expo(8) - shat)};
  CHECK(same_terms(s_multiplier_scaling(p, shat), expect));
}

TEST_CASE("matter contributions") {
  for (int q = 0; q < 4; ++q) {
    const Monomial expect = sl4() * M(Sym::eps, -4) * M(Sym::T) * eps_delta(4 - s_of(q));
    CHECK(matter_ell_scaling(q) == expect);
    for (int p = 5; p < 8; ++p)
      for (int qh = 0; qh < 3; ++qh) {
        CAPTURE(p);
        CAPTURE(q);
        CAPTURE(qh);
        CHECK(lmat2_scaling(p, q, qh).lmat2 == expect);
      }
  }
  // (εm)^p ≲ (ε/δ)^{4−s} for p ≥ 5, s ∈ {0, 2, 4}.
  for (int p = 5; p < 9; ++p)
    for (int s : {0, 2, 4}) {
      const Order o = compare(eps_m(p), eps_delta(4 - s), {});
      CHECK((o == Order::Less || o == Order::Equal));
    }
  const WeightCorrection w = weight_correction(5, 2, 0);
  CHECK(w.numerator == M(Sym::eps, 4) * eps_delta(2) * M(Sym::T));
  CHECK(same_terms(w.denominator, kappa_bound(Expo(5), Expo(0))));
}

TEST_CASE("matter suppression verdict") {
  for (auto [p, q, qh] : {std::array<int, 3>{5, 2, 1}, {6, 1, 0}, {7, 3, 2}, {5, 4, 3}}) {
    CAPTURE(p);
    CAPTURE(q);
    CAPTURE(qh);
    const MatterVerdict v = matter_vs_vacuum(p, q, qh);
    CHECK(v.suppressed_by_m_delta4);
    CHECK(v.matter_below_vacuum);
    CHECK(v.kappa_t_negligible);
  }
  // q = q̂ = 0: the ratio is (mδ)⁴(δ/ε)², which is not suppressed.
  const MatterVerdict v0 = matter_vs_vacuum(5, 0, 0);
  CHECK_FALSE(v0.suppressed_by_m_delta4);
  CHECK(v0.residual == eps_delta(-2));
}

TEST_CASE("Killing bound is universal") {
  const Monomial expect = M(Sym::m, 4) * M(Sym::eps, -4) * M(Sym::delta, -4);
  for (int p = 5; p < 9; ++p)
    for (int q = 0; q < 4; ++q)
      for (int qh = 0; qh < 4; ++qh) CHECK(killing_rhs_scaling(p, q, qh).rhs == expect);
}

TEST_CASE("unit audit") {
  CHECK(length_dimension(Sym::eps) == 1);
  CHECK(length_dimension(Sym::m) == -1);
  CHECK(length_dimension(Sym::T) == -4);
  const Expo p = Expo::of(Param::p), shat = Expo::of(Param::shat), s = Expo::of(Param::s);
  for (const auto& t : vacuum_ell_scaling(p, shat)) CHECK(t.length_dim() == Expo(-8));
  for (const auto& t : s_multiplier_scaling(p, shat)) CHECK(t.length_dim() == Expo(-8));
  CHECK(matter_ell_scaling(s).length_dim() == Expo(-8));
  for (const auto& t : kappa_t_matter(p, shat)) CHECK(t.length_dim() == Expo(-8));
  // Killing right side: Lagrangian dimension l⁻¹².
  CHECK(killing_rhs_scaling(5, 1, 1).rhs.length_dim() == Expo(-12));
}

TEST_CASE("property: numeric dominance oracle agrees with the symbolic comparison") {
  Regime small_eps;
  small_eps.eps_absolute_small = true;
  CHECK(same_terms(numeric_dominant({M(Sym::eps, -8), M(Sym::eps, -2)}, small_eps, 1), {M(Sym::eps, -8)}));
  CHECK(same_terms(numeric_dominant({M(Sym::m, 6) * M(Sym::eps, -2), M(Sym::m, 5) * M(Sym::eps, -3)}, {}, 2),
                   {M(Sym::m, 5) * M(Sym::eps, -3)}));
  std::uint64_t seed = 10;
  for (int p = 5; p < 9; ++p)
    for (int q = 0; q < 4; ++q)
      for (int qh = 0; qh < 4; ++qh) {
        CAPTURE(p);
        CAPTURE(q);
        CAPTURE(qh);
        const Posynomial mt = matter_terms(p, q, qh);
        CHECK(same_terms(numeric_dominant(mt, {}, ++seed), dominant(mt, {}).kept));
        CHECK(same_terms(numeric_dominant(mt, {}, seed), {lmat2_scaling(p, q, qh).lmat2}));
        const Posynomial kt = killing_terms(p, qh);
        const Posynomial kept = numeric_dominant(kt, {}, ++seed);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].replace(Sym::lambda, Monomial::one()).replace(Sym::T, M(Sym::m, 4)) ==
              killing_rhs_scaling(p, q, qh).rhs);
        const Posynomial vac = vacuum_ell_scaling(p, shat_of(qh));
        CHECK(same_terms(numeric_dominant(vac, {}, ++seed), dominant(vac, {}).kept));
      }
  // Random monomial sets with small integer exponents.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> E(-3, 3);
  for (int k = 0; k < 200; ++k) {
    Posynomial t;
    for (int n = 0; n < 3; ++n) {
      Monomial x = Monomial::one();
      for (Sym s : {Sym::eps, Sym::delta, Sym::m, Sym::lmacro}) x = x * M(s, E(rng));
      t.push_back(x);
    }
    for (bool small : {false, true}) {
      Regime r;
      r.eps_absolute_small = small;
      CAPTURE(to_string(t));
      CHECK(same_terms(numeric_dominant(t, r, 1000 + k), dominant(t, r).kept));
    }
  }
}

TEST_CASE("power counting report lists every derived result") {
  const PowerCountingReport rep = power_counting_report(5, 2, 1);
  std::vector<std::string> names;
  for (const auto& [k, v] : rep.results) names.push_back(k);
  for (const char* n : {"shatrange", "spardef", "kappaval", "nuval", "lmat2", "matter_suppression", "DvL"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  CHECK_FALSE(rep.transcript.empty());
}

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "cfs/scaling_algebra.hpp"

namespace cfs::oracle {

// Closed-form L = Σ|λ|² − (1/2n)(Σ|λ|)² from an independently computed spectrum.
inline double closed_form_L(const std::vector<std::complex<double>>& ev, int n) {
  double s2 = 0, s1 = 0;
  for (auto z : ev) {
    s1 += std::abs(z);
    s2 += std::norm(z);
  }
  return s2 - s1 * s1 / (2.0 * n);
}

inline Monomial sym_pow(Sym s, Expo k = 1) { return Monomial::of(s, k); }
inline Monomial eps_m_pow(Expo p) { return (sym_pow(Sym::eps) * sym_pow(Sym::m)).pow(p); }
inline Monomial eps_delta_pow(Expo k) { return (sym_pow(Sym::eps) / sym_pow(Sym::delta)).pow(k); }

// Matter contributions to ℓ_κ + 𝔰, listed term by term before any comparison.
inline Posynomial matter_terms(int p, int q, int qhat) {
  const Monomial sl4 = sym_pow(Sym::sigma) * sym_pow(Sym::lambda, 4);
  Posynomial t{sl4 * sym_pow(Sym::eps, -4) * sym_pow(Sym::T) * eps_delta_pow(4 - s_of(q))};
  for (const auto& k : Posynomial{eps_m_pow(p), eps_delta_pow(8 - shat_of(qhat))})
    t.push_back(k * sl4 * sym_pow(Sym::eps, -4) * sym_pow(Sym::T));
  return t;
}

// Pointwise matter contributions entering the Killing right side.
inline Posynomial killing_terms(int p, int qhat) {
  const Monomial base = sym_pow(Sym::lambda, 4) * sym_pow(Sym::T);
  Posynomial t{base * sym_pow(Sym::delta, -4) * sym_pow(Sym::eps, -4)};
  for (const auto& k : Posynomial{eps_m_pow(p), eps_delta_pow(8 - shat_of(qhat))})
    t.push_back(k * base * sym_pow(Sym::eps, -8));
  return t;
}

// Numeric dominance oracle: samples admissible points (ε/δ, mδ, 1/(m l) < 1 in log10; σ, λ, κ, T and,
// unless the regime says otherwise, ε free) and drops a term iff some other term is strictly larger at
// every sample. Exponents must be constant.
inline Posynomial numeric_dominant(const Posynomial& terms, const Regime& r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int samples = 400;
  std::vector<std::vector<double>> logv(terms.size(), std::vector<double>(samples));
  for (const auto& t : terms)
    for (const auto& e : t.e)
      if (!e.is_constant()) throw std::invalid_argument("oracle needs constant exponents");
  for (int k = 0; k < samples; ++k) {
    // Each small base is either barely below 1 or very small, so every corner of the regime is visited.
    auto small = [&] { return U(rng) < 0.5 ? -1e-3 * U(rng) : -50 * U(rng); };
    auto free = [&] { return (U(rng) < 0.5 ? 1e-3 : 2000.0) * (2 * U(rng) - 1); };
    const double eps = r.eps_absolute_small ? small() - 1e-3 : free();
    const double eps_over_delta = small() - 1e-6;
    const double m_delta = small();
    const double inv_ml = small();
    const double delta = eps - eps_over_delta;
    const double m = m_delta - delta;
    const double l = -inv_ml - m;
    std::array<double, kSymCount> x{};
    x[int(Sym::eps)] = eps;
    x[int(Sym::delta)] = delta;
    x[int(Sym::m)] = m;
    x[int(Sym::lmacro)] = l;
    for (Sym s : {Sym::lambda, Sym::sigma, Sym::kappa, Sym::T}) x[int(s)] = free();
    for (std::size_t i = 0; i < terms.size(); ++i) {
      double v = 0;
      for (int s = 0; s < kSymCount; ++s) v += terms[i].e[s].c0 * x[s];
      logv[i][k] = v;
    }
  }
  Posynomial kept;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < terms.size() && !dominated; ++j) {
      if (i == j) continue;
      bool all_larger = true;
      for (int k = 0; k < samples; ++k)
        if (!(logv[j][k] > logv[i][k] + 1e-9)) all_larger = false;
      dominated = all_larger;
    }
    if (!dominated) kept.push_back(terms[i]);
  }
  return kept;
}

}  // namespace cfs::oracle

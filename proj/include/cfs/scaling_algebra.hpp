#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace cfs {

// Unknown integer parameters that may appear in exponents.
enum class Param { p, q, qhat, s, shat };
constexpr int kParamCount = 5;

// Affine exponent c0 + Σ c_k·param_k with integer coefficients.
struct Expo {
  int c0 = 0;
  std::array<int, kParamCount> c{};

  Expo() = default;
  Expo(int v) : c0(v) {}  // NOLINT(implicit)
  static Expo of(Param k, int coef = 1);

  bool is_constant() const;
  bool is_zero() const { return is_constant() && c0 == 0; }
  Expo operator+(const Expo& o) const;
  Expo operator-(const Expo& o) const;
  Expo operator-() const;
  Expo operator*(int k) const;
  bool operator==(const Expo& o) const = default;
  std::string str() const;
};

enum class Sym { eps, delta, m, lambda, sigma, kappa, T, lmacro };
constexpr int kSymCount = 8;
const char* sym_name(Sym s);
// Length dimension: ε, δ, l_macro → +1, m → −1, T → −4, λ, σ, κ → 0.
int length_dimension(Sym s);

struct Monomial {
  std::array<Expo, kSymCount> e{};

  static Monomial one() { return {}; }
  static Monomial of(Sym s, Expo k = 1);
  Monomial operator*(const Monomial& o) const;
  Monomial operator/(const Monomial& o) const;
  Monomial pow(int k) const;
  Monomial pow(const Expo& k) const;  // only for monomials with constant exponents
  Monomial substitute(Param k, int value) const;
  // Replaces s by the given monomial (e.g. T → m⁴).
  Monomial replace(Sym s, const Monomial& by) const;
  Expo length_dim() const;
  bool operator==(const Monomial& o) const = default;
  std::string str() const;
};

using Posynomial = std::vector<Monomial>;
std::string to_string(const Posynomial& p);
Posynomial times(const Posynomial& p, const Monomial& m);
// Same multiset of monomials (order ignored).
bool same_terms(const Posynomial& a, const Posynomial& b);

// Declared regime: ε/δ ≪ 1, mδ ≲ 1, 1/(m·l_macro) ≲ 1 (so εm ≪ 1), optionally ε ≪ 1 in absolute
// units, and parameter ranges p ≥ p_min, q ≥ 0, q̂ ≥ 0, s ∈ [0,4], ŝ ∈ [0,2].
struct Regime {
  bool eps_absolute_small = false;
  int p_min = 5;
  std::array<std::pair<double, double>, kParamCount> ranges() const;
};

enum class Order { Less, Greater, Equal, Incomparable };
// Compares a against b: Less means a ≲ b with a ≠ b under the regime.
Order compare(const Monomial& a, const Monomial& b, const Regime& r);

struct DominantResult {
  Posynomial kept;
  std::vector<std::pair<std::size_t, std::size_t>> incomparable;  // index pairs into the input
  std::string transcript;
};
DominantResult dominant(const Posynomial& terms, const Regime& r);

int shat_of(int qhat);
int s_of(int q);

// κ ≲ (εm)^p + (ε/δ)^{8−ŝ}
Posynomial kappa_bound(const Expo& p, const Expo& shat);
Posynomial kappa_bound(int p, int qhat);
// 𝔰 ≃ (σλ⁴/ε⁸)((εm)^p + (ε/δ)^{8−ŝ})
Posynomial s_multiplier_scaling(const Expo& p, const Expo& shat);
Posynomial s_multiplier_scaling(int p, int qhat);
// ℓ ≃ σλ⁴ δ⁻⁴ T (δ/ε)^s
Monomial matter_ell_scaling(const Expo& s);
Monomial matter_ell_scaling(int q);
// κ𝔱 ≲ σλ⁴ ((εm)^p + (ε/δ)^{8−ŝ}) ε⁻⁴ T
Posynomial kappa_t_matter(const Expo& p, const Expo& shat);
// ℓ_κ + 𝔰 ≃ (σλ⁴/ε⁴) T (ε/δ)^{4−s}, obtained as the dominant term of the matter contributions.
struct MatterScaling {
  Monomial lmat2;
  DominantResult derivation;
};
MatterScaling lmat2_scaling(int p, int q, int qhat, const Regime& r = {});
// ℓ + 𝔰 ≃ σλ⁴((εm)^p ε⁻⁸ + δ⁻⁸ (δ/ε)^ŝ)
Posynomial vacuum_ell_scaling(const Expo& p, const Expo& shat);

struct MatterVerdict {
  Monomial ratio;        // lmat2 at T = m⁴ over the light-cone vacuum term
  Monomial residual;     // ratio / (mδ)⁴
  Order residual_order;  // residual compared with 1
  bool suppressed_by_m_delta4 = false;  // residual ≲ 1
  bool matter_below_vacuum = false;     // ratio ≲ 1
  bool kappa_t_negligible = false;      // κ𝔱 matter terms ≲ lmatter
  std::string transcript;
};
MatterVerdict matter_vs_vacuum(int p, int q, int qhat, const Regime& r = {});

// h(x) ≃ ε⁴ (ε/δ)^{4−s} T / ((εm)^p + (ε/δ)^{8−ŝ}) as numerator monomial and denominator terms.
struct WeightCorrection {
  Monomial numerator;
  Posynomial denominator;
};
WeightCorrection weight_correction(const Expo& p, const Expo& s, const Expo& shat);

struct KillingScaling {
  Monomial rhs;  // at σ = λ = 1, T = m⁴
  DominantResult derivation;
};
// Pointwise matter contributions to L and to κ·Σ|λ|² near the light cone at t ∼ ε, with κ from
// kappa_bound and T from Tscale; the dominant term at σ = λ = 1.
KillingScaling killing_rhs_scaling(int p, int q, int qhat, const Regime& r = {});

// Named derivation results for reporting: shatrange, spardef, kappaval, nuval, lmat2, suppression, DvL.
struct PowerCountingReport {
  std::vector<std::pair<std::string, std::string>> results;
  std::string transcript;
};
PowerCountingReport power_counting_report(int p, int q, int qhat);

}  // namespace cfs

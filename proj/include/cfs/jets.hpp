#pragma once

#include <functional>
#include <vector>

#include "cfs/discrete_system.hpp"
#include "cfs/fd.hpp"

namespace cfs {

// A jet 𝔲 = (a, u) on a discrete measure: one scalar and one Hermitian direction per support point.
struct Jet {
  std::vector<double> scalar;
  std::vector<CMat> vector;
  // Optional smooth extension of the vector component off the support; when empty the
  // direction at a displaced point is the one of the support point it came from.
  std::function<CMat(const Operator&)> extension;

  static Jet zero(const DiscreteMeasure& rho);
  std::size_t size() const { return scalar.size(); }
  Jet scaled(double s) const;
  Jet plus(const Jet& o) const;
};

// A one-parameter family (f_τ, F_τ) indexed by support point.
struct JetFamily {
  std::function<double(std::size_t, double)> weight;
  std::function<CMat(std::size_t, double)> map;
};

using PointFunction = std::function<double(const Operator&)>;

struct FdSteps {
  double first = 1e-5;   // relative to operator norm
  double nested = 1e-4;  // relative to operator norm
};

// Moves x along a direction inside 𝓕^reg, keeping the trace of x.
Operator displace(const Operator& x, const CMat& u, double s);
// Throws unless u is tangent at x (|u − T(u)| ≤ 1e-8·|u|).
void require_tangent(const Operator& x, const CMat& u);

// Tangent projection that also freezes eigenvalues sitting at the signature margin, so that
// both x + s·u and x − s·u stay regular for small s.
CMat two_sided_tangent(const Operator& x, const CMat& u);

// D_u g(x) by two-level Richardson on central differences along s ↦ displace(x, u, s).
double directional_derivative(const PointFunction& g, const Operator& x, const CMat& u, double rel_step = 1e-5);

// ∇_𝔲 g(x_i) = a(x_i) g(x_i) + D_u g(x_i).
double nabla(const Jet& jet, const PointFunction& g, const DiscreteMeasure& rho, std::size_t i,
             const FdSteps& steps = {});

// d/dτ (f_τ, F_τ) at τ = 0, tangent projected. Throws Numerical if the family has a kink at 0.
Jet jet_from_family(const JetFamily& fam, const DiscreteMeasure& rho, double rel_step = 1e-5);

// max over support points and jets of |∇_𝔲 ℓ_κ(x)|.
double weak_el_test(const DiscreteMeasure& rho, const MultiplierSet& mult, const std::vector<Jet>& test_jets,
                    const FdSteps& steps = {});

// ⟨𝔲, Δ𝔳⟩(x_i). Off the support 𝔳 uses its extension if present, else it is constant.
double delta_pairing(const Jet& u, const Jet& v, const DiscreteMeasure& rho, const MultiplierSet& mult, std::size_t i,
                     const FdSteps& steps = {}, NestingOrder order = NestingOrder::OuterFirst);

double linearized_residual(const Jet& v, const DiscreteMeasure& rho, const MultiplierSet& mult,
                           const std::vector<Jet>& test_jets, const FdSteps& steps = {});

// Random two-sided tangent jet with directions of norm |x| and scalars in [-1,1].
Jet random_tangent_jet(const DiscreteMeasure& rho, std::mt19937_64& rng);
// Jet (0, i[H, x]) of the global unitary flow generated by H, extended by the same formula.
Jet rotation_jet(const DiscreteMeasure& rho, const CMat& H);

}  // namespace cfs

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cfs/jets.hpp"
#include "cfs/pair_engine.hpp"

namespace cfs {

struct OsiResult {
  double value = 0.0;
  std::vector<std::pair<std::string, double>> decomposition;
  std::size_t pair_count = 0;
};

// ---- Discrete measures with jets -------------------------------------------------------

// (∇_{1,𝔳} − ∇_{2,𝔳}) L_κ(x_i, x_j).
double antisymmetric_integrand(const Jet& v, const DiscreteMeasure& rho, const MultiplierSet& mult, std::size_t i,
                               std::size_t j, const FdSteps& steps = {});

// Σ_{x∈Ω} Σ_{y∉Ω} ρ_x ρ_y (∇_{1,𝔳} − ∇_{2,𝔳}) L_κ(x,y)
OsiResult osi_antisymmetric(const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                            const MultiplierSet& mult, const FdSteps& steps = {});
// The same integrand summed over Ω×Ω, which cancels exactly.
double omega_omega_sum(const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                       const MultiplierSet& mult, const FdSteps& steps = {});

struct ConservationResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double proof_identity_defect = 0.0;
  double fd_error = 0.0;  // |lhs(first step) − lhs(doubled first step)|
};
ConservationResult conservation_check(const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                                      const MultiplierSet& mult, const FdSteps& steps = {});

// Σ_{x∈Ω} Σ_{y∉Ω} ρ_x ρ_y (∇_{1,𝔲} − ∇_{2,𝔲})(∇_{1,𝔳} + ∇_{2,𝔳}) L_κ(x,y). The decomposition
// lists the symmetric and antisymmetric parts in (𝔲,𝔳).
OsiResult osi_bilinear(const Jet& u, const Jet& v, const std::vector<bool>& omega, const DiscreteMeasure& rho,
                       const MultiplierSet& mult, const FdSteps& steps = {},
                       NestingOrder order = NestingOrder::OuterFirst);

// ---- Lattice backgrounds ---------------------------------------------------------------

struct SurfaceConfig {
  Region omega;
  Region V;
  GridVectorField v;
  GridVectorField u;
  double tol_tangent = 1e-10;
};

// Lemma on compact regions: bulk OSI of the inner solution of v against the facet sum
// Σ dμ(𝔳,ξ_f)·Σ_y ρ_y L_κ(X(ξ_f), y).
struct LemmaResult {
  double bulk = 0.0;
  double boundary = 0.0;
  double defect = 0.0;
};
LemmaResult boundary_lemma(const LatticePairs& eng, const Region& omega, const GridVectorField& v,
                           bool parallel = true);

struct AreaResult {
  double boundary_form = 0.0;
  double bulk_form = 0.0;
  double bulk_plus = 0.0;  // "+" variant of the bulk form
};
// Requires eng.set_v(cfg.v).
AreaResult area(const LatticePairs& eng, const SurfaceConfig& cfg, bool parallel = true);

struct AreaChange {
  double dtA1 = 0.0, dtA2 = 0.0, dtA3 = 0.0, total = 0.0;
};
AreaChange area_change_analytic(const LatticePairs& eng, const SurfaceConfig& cfg, bool parallel = true);

// A(τ) = Σ_x χ_{Ω_τ}(x) χ_V(x) ρ_x Σ_{y∉V} ρ_y (∇_{1,𝔳} − ∇_{2,𝔳}) L_κ(x,y), Ω_τ from flow_region.
struct AreaFd {
  double derivative = 0.0;   // Richardson-combined central difference in τ
  double central = 0.0;      // plain central difference at τ
  std::vector<double> samples;  // A(τ), A(−τ), A(2τ), A(−2τ)
};
AreaFd area_fd_derivative(const LatticePairs& eng, const SurfaceConfig& cfg, double tau, bool parallel = true);

// Requires eng.set_v(cfg.v) and eng.set_u(cfg.u).
double matter_flux(const LatticePairs& eng, const SurfaceConfig& cfg, bool parallel = true);

struct KillingResult {
  double max_div = 0.0;
  double max_sym_defect = 0.0;
  bool pass = false;
};
KillingResult killing_check(const LatticePairs& eng, double threshold, std::size_t sample_rows = 64,
                            double div_tol = 1e-10);

struct JacobsonResult {
  double dA_dtau = 0.0;
  double flux = 0.0;
  double defect = 0.0;
  bool div_free = false;
  bool u_equals_v = false;
};
// Requires eng.set_v(cfg.v) and eng.set_u(cfg.u).
JacobsonResult jacobson_check(const LatticePairs& eng, const SurfaceConfig& cfg, bool parallel = true);

// Throws Numerical if v is not tangential to ∂V within tol_tangent or S = ∂Ω ∩ ∂V is empty.
void validate_surface_config(const SurfaceConfig& cfg, const LatticeChart& chart);

}  // namespace cfs

#pragma once

#include <array>
#include <string>
#include <vector>

#include "cfs/discrete_system.hpp"
#include "cfs/operator_core.hpp"

namespace cfs {

struct RegParams {
  double epsilon = 1e-3;
  double m = 1.0;
  double lambda_scale = 1.0;
  double delta = 1.0;
  double rel_tol = 1e-8;  // quadrature relative tolerance
  // Throws Config on invalid values. Returns a warning string (empty if none) when εm ≥ 1e-2.
  std::string validate() const;
};

using SpinMatrix = Eigen::Matrix4cd;
using Vec4 = std::array<double, 4>;

// Dirac matrices with γ⁰ = diag(1,1,−1,−1) and γ^j = [[0,σ_j],[−σ_j,0]].
const SpinMatrix& gamma_matrix(int mu);
// Spin adjoint γ⁰ A† γ⁰.
SpinMatrix spin_adjoint(const SpinMatrix& A);

// Radial integrals of the regularized kernel at ξ = (t, ξ⃗), r = |ξ⃗|:
// P(ξ) = λ (m·scalar·𝟙 − energy·γ⁰ − radial·γ^r).
struct KernelIntegrals {
  cd scalar;
  cd energy;
  cd radial;
  double abs_error = 0.0;  // largest absolute quadrature error estimate
  double tail = 0.0;       // bound on the truncated tail beyond k_max
};
KernelIntegrals kernel_integrals(double t, double r, const RegParams& p);

SpinMatrix kernel_P(const Vec4& xi, const RegParams& p);
double local_trace(const RegParams& p);
SpinMatrix closed_chain(const Vec4& xi, const RegParams& p);
std::array<cd, 4> chain_eigenvalues(const Vec4& xi, const RegParams& p);
// Causal Lagrangian of the chain spectrum: (1/8) Σ_{i,j} (|λ_i| − |λ_j|)².
double chain_lagrangian(const Vec4& xi, const RegParams& p);

enum class Separation { Timelike, Spacelike, Boundary };
const char* separation_name(Separation s);
// Relative band used to decide equal moduli and real eigenvalues.
constexpr double kClassifyBand = 1e-12;
Separation chain_classify(const Vec4& xi, const RegParams& p);

// Timelike/spacelike transition radius at fixed t by bisection on chain_classify.
double cylinder_radius(const RegParams& p, double t = 0.0, double rel_tol = 1e-10);

struct SlopeFit {
  std::string observable;
  std::string variable;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};
// Least squares fit of log|y| against log x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepRow {
  std::string variable;  // "epsilon" or "m"
  double epsilon;
  double m;
  std::string observable;
  double value;
};
struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SlopeFit> fits;
};
struct SweepConfig {
  std::vector<double> epsilons;  // ε sweep at fixed m
  double m_fixed = 1.0;
  std::vector<double> masses;  // m sweep at fixed ε (cylinder radius)
  double epsilon_fixed = 1e-4;
  double lambda_scale = 1.0;
  double rel_tol = 1e-8;
  void validate() const;  // at least 4 points per sweep, εm ≤ 1e-2
};
// Fits local trace (−2), chain eigenvalue modulus (−6), L(x,x) (−10), cylinder radius in ε (+2)
// and in m (+1). Points are computed in parallel.
SweepResult scaling_sweep(const SweepConfig& cfg);

struct RescalingDefects {
  double trace_defect = 0.0;         // max |tr(λx) − λc|
  double action_ratio_defect = 0.0;  // |S̃/(σ²λ⁴S) − 1|
  double boundedness_ratio_defect = 0.0;
  double trace_integral_ratio_defect = 0.0;  // |∫tr d ρ̃ /(σλ ∫tr dρ) − 1|
  double ell_defect = 0.0;            // max |ℓ̃_κ(λx) − σλ⁴ℓ_κ(x)| / (σλ⁴·scale)
  double el_residual_original = 0.0;
  double el_residual_rescaled = 0.0;
  double trace_c_new = 0.0;
  double s_new = 0.0;
};
// ρ → σρ(·/λ) on a discrete measure with multipliers updated to c̃ = λc, 𝔰̃ = σλ⁴𝔰.
RescalingDefects rescaling_covariance_check(const DiscreteMeasure& rho, const MultiplierSet& mult, double sigma,
                                            double lam);

}  // namespace cfs

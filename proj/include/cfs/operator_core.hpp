#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfs {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

constexpr double kEtaSig = 1e-9;
constexpr double kHermTol = 1e-12;

enum class ErrorKind { Dimension, Eigensolver, Infeasible, Degenerate, Config, Numerical, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Non-owning view of a factored rank-2n operator U diag(lam) U^dagger.
// U is stored column-major, f rows, k = 2n columns.
struct FactorView {
  const cd* U;
  const double* lam;
  int f;
  int k;
};

// Space-time point: Hermitian f×f matrix together with its rank-2n factorization.
// The first n entries of lam are positive, the last n negative.
class Operator {
 public:
  Operator() = default;
  // Validates Hermiticity and signature; throws Error on failure.
  static Operator from_matrix(const CMat& A, int n);
  // Builds from an orthonormal f×2n basis and eigenvalues (no validation beyond shapes).
  static Operator from_factor(const CMat& U, const RVec& lam, int n);

  int dim() const { return static_cast<int>(A_.rows()); }
  int spin_dim() const { return n_; }
  const CMat& matrix() const { return A_; }
  const CMat& basis() const { return U_; }
  const RVec& eigenvalues() const { return lam_; }
  FactorView view() const { return {U_.data(), lam_.data(), dim(), 2 * n_}; }
  double trace() const { return lam_.sum(); }
  double norm() const;  // largest |eigenvalue|

 private:
  CMat A_;
  CMat U_;
  RVec lam_;
  int n_ = 0;
};

struct ProductSpectrum {
  std::vector<cd> eigenvalues;  // exactly 2n, zero padded, sorted
  int rank = 0;
};

struct KernelParams {
  double kappa = 0.0;
  double smoothing_eta = 0.0;
};

// |λ|_η = sqrt(|λ|²+η²) − η, exact modulus for η = 0
double smoothed_modulus(cd z, double eta);

// Nonzero eigenvalues of xy from the factored 2n×2n matrix; raw (unsorted, unpadded).
// Writes k values into out.
void factor_product_eigenvalues(const FactorView& x, const FactorView& y, cd* out);

// Lagrangian from factors. The pair is evaluated in canonical order so that
// pair_lagrangian(x,y) and pair_lagrangian(y,x) agree bitwise.
double pair_lagrangian(const FactorView& x, const FactorView& y, const KernelParams& p);
// Spectral weight from factors, also canonical order.
double pair_weight(const FactorView& x, const FactorView& y, double eta);

ProductSpectrum product_spectrum(const Operator& x, const Operator& y);
// Reference: full f×f non-Hermitian eigensolve of xy.
ProductSpectrum product_spectrum_reference(const Operator& x, const Operator& y);

double spectral_weight(const Operator& x, const Operator& y, double eta = 0.0);
double lagrangian(const Operator& x, const Operator& y, const KernelParams& p);
// L via the pairwise definition on the reference spectrum.
double lagrangian_reference(const Operator& x, const Operator& y, const KernelParams& p);

void sort_spectrum(std::vector<cd>& ev);

Operator project_to_freg(const CMat& A, int n, double c);

// Tangent projection at x: T(u) = u − P0 u P0 − tr(P_R u)/(2n)·P_R.
CMat tangent_project(const Operator& x, const CMat& u);

CMat hermitian_part(const CMat& A);

}  // namespace cfs

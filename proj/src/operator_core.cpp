#include "cfs/operator_core.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace cfs {

namespace {

// Lexicographic order on raw factor data; only used to pick a canonical argument order.
bool factor_less(const FactorView& a, const FactorView& b) {
  for (int i = 0; i < a.k; ++i) {
    if (a.lam[i] != b.lam[i]) return a.lam[i] < b.lam[i];
  }
  const int m = a.f * a.k;
  for (int i = 0; i < m; ++i) {
    if (a.U[i].real() != b.U[i].real()) return a.U[i].real() < b.U[i].real();
    if (a.U[i].imag() != b.U[i].imag()) return a.U[i].imag() < b.U[i].imag();
  }
  return false;
}

void check_pair(const FactorView& x, const FactorView& y) {
  if (x.f != y.f || x.k != y.k) throw Error(ErrorKind::Dimension, "operator dimension mismatch");
}

void roots2(cd tr, cd det, cd* out) {
  cd half = 0.5 * tr;
  cd s = std::sqrt(half * half - det);
  if ((std::conj(half) * s).real() < 0.0) s = -s;
  cd q = half + s;
  out[0] = q;
  out[1] = (q == cd(0.0)) ? cd(0.0) : det / q;
}

}  // namespace

double smoothed_modulus(cd z, double eta) {
  double a = std::abs(z);
  if (eta <= 0.0) return a;
  // sqrt(a²+η²) − η written without cancellation
  return a * a / (std::sqrt(a * a + eta * eta) + eta);
}

double Operator::norm() const {
  return lam_.size() ? lam_.cwiseAbs().maxCoeff() : 0.0;
}

CMat hermitian_part(const CMat& A) { return 0.5 * (A + A.adjoint()); }

Operator Operator::from_factor(const CMat& U, const RVec& lam, int n) {
  if (U.cols() != 2 * n || lam.size() != 2 * n)
    throw Error(ErrorKind::Dimension, "factor shape does not match spin dimension");
  Operator op;
  op.n_ = n;
  op.U_ = U;
  op.lam_ = lam;
  op.A_ = U * lam.asDiagonal() * U.adjoint();
  op.A_ = hermitian_part(op.A_);
  return op;
}

Operator Operator::from_matrix(const CMat& A, int n) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::Dimension, "operator must be square");
  const int f = static_cast<int>(A.rows());
  if (n <= 0 || 2 * n > f) throw Error(ErrorKind::Dimension, "spin dimension out of range");
  if ((A - A.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
    throw Error(ErrorKind::Degenerate, "operator is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> es(A);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "Hermitian eigensolver failed");
  const RVec& ev = es.eigenvalues();  // ascending
  int pos = 0, neg = 0;
  for (int i = 0; i < f; ++i) {
    if (ev(i) > 0.5 * kEtaSig) ++pos;
    else if (ev(i) < -0.5 * kEtaSig) ++neg;
  }
  if (pos != n || neg != n)
    throw Error(ErrorKind::Degenerate, "operator does not have signature (n,n)");
  CMat U(f, 2 * n);
  RVec lam(2 * n);
  for (int i = 0; i < n; ++i) {
    U.col(i) = es.eigenvectors().col(f - 1 - i);
    lam(i) = ev(f - 1 - i);
    U.col(n + i) = es.eigenvectors().col(i);
    lam(n + i) = ev(i);
  }
  Operator op;
  op.n_ = n;
  op.U_ = U;
  op.lam_ = lam;
  op.A_ = A;
  return op;
}

void factor_product_eigenvalues(const FactorView& x, const FactorView& y, cd* out) {
  const int f = x.f, k = x.k;
  if (k == 2) {
    cd C[4];
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) {
        cd s = 0.0;
        const cd* ua = x.U + a * f;
        const cd* ub = y.U + b * f;
        for (int i = 0; i < f; ++i) s += std::conj(ua[i]) * ub[i];
        C[a + 2 * b] = s;
      }
    // M = diag(lx) C diag(ly) C^dagger
    cd tr = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c) tr += x.lam[a] * y.lam[c] * std::norm(C[a + 2 * c]);
    cd detC = C[0] * C[3] - C[2] * C[1];
    cd det = x.lam[0] * x.lam[1] * y.lam[0] * y.lam[1] * std::norm(detC);
    roots2(tr, det, out);
    return;
  }
  Eigen::Map<const CMat> Ux(x.U, f, k), Uy(y.U, f, k);
  Eigen::Map<const RVec> lx(x.lam, k), ly(y.lam, k);
  CMat C = Ux.adjoint() * Uy;
  CMat M = lx.asDiagonal() * C * ly.asDiagonal() * C.adjoint();
  Eigen::ComplexEigenSolver<CMat> es(M, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "product eigensolver did not converge");
  for (int i = 0; i < k; ++i) out[i] = es.eigenvalues()(i);
}

namespace {

double lagrangian_from(const cd* ev, int k, double kappa, double eta) {
  double mod[16];
  std::vector<double> big;
  double* m = mod;
  if (k > 16) {
    big.resize(k);
    m = big.data();
  }
  double w = 0.0;
  for (int i = 0; i < k; ++i) {
    m[i] = smoothed_modulus(ev[i], eta);
    w += m[i];
  }
  double L = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      double d = m[i] - m[j];
      L += d * d;
    }
  // (1/4n) over ordered pairs equals Σ_{i<j} / (2n)
  L /= static_cast<double>(k);
  return L + kappa * w * w;
}

}  // namespace

double pair_lagrangian(const FactorView& x, const FactorView& y, const KernelParams& p) {
  check_pair(x, y);
  const bool swap = factor_less(y, x);
  const FactorView& a = swap ? y : x;
  const FactorView& b = swap ? x : y;
  cd ev[16];
  std::vector<cd> big;
  cd* e = ev;
  if (a.k > 16) {
    big.resize(a.k);
    e = big.data();
  }
  factor_product_eigenvalues(a, b, e);
  return lagrangian_from(e, a.k, p.kappa, p.smoothing_eta);
}

double pair_weight(const FactorView& x, const FactorView& y, double eta) {
  check_pair(x, y);
  const bool swap = factor_less(y, x);
  const FactorView& a = swap ? y : x;
  const FactorView& b = swap ? x : y;
  std::vector<cd> e(a.k);
  factor_product_eigenvalues(a, b, e.data());
  double w = 0.0;
  for (auto z : e) w += smoothed_modulus(z, eta);
  return w;
}

void sort_spectrum(std::vector<cd>& ev) {
  std::sort(ev.begin(), ev.end(), [](cd a, cd b) {
    double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

namespace {

ProductSpectrum finish_spectrum(std::vector<cd> ev, int k, double scale) {
  const double tol = 1e-13 * scale;
  int rank = 0;
  for (auto& z : ev) {
    if (std::abs(z) <= tol) z = 0.0;
    else ++rank;
  }
  // Snap conjugate-pair and real-axis round-off so the tie-break is stable.
  for (auto& z : ev) {
    if (std::abs(z.imag()) <= tol) z = cd(z.real(), 0.0);
    if (std::abs(z.real()) <= tol) z = cd(0.0, z.imag());
  }
  // Make near-conjugate pairs exact conjugates so modulus ties resolve by the imaginary part.
  std::vector<bool> paired(ev.size(), false);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (paired[i] || ev[i].imag() == 0.0) continue;
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      if (paired[j] || std::abs(ev[i] - std::conj(ev[j])) > 1e-10 * std::max(scale, 1e-300)) continue;
      cd z(0.5 * (ev[i].real() + ev[j].real()), 0.5 * (ev[i].imag() - ev[j].imag()));
      ev[i] = z;
      ev[j] = std::conj(z);
      paired[i] = paired[j] = true;
      break;
    }
  }
  ev.resize(k, cd(0.0));
  sort_spectrum(ev);
  return {ev, rank};
}

}  // namespace

ProductSpectrum product_spectrum(const Operator& x, const Operator& y) {
  FactorView a = x.view(), b = y.view();
  check_pair(a, b);
  std::vector<cd> ev(a.k);
  factor_product_eigenvalues(a, b, ev.data());
  return finish_spectrum(std::move(ev), a.k, x.norm() * y.norm());
}

ProductSpectrum product_spectrum_reference(const Operator& x, const Operator& y) {
  check_pair(x.view(), y.view());
  const int k = 2 * x.spin_dim();
  CMat P = x.matrix() * y.matrix();
  Eigen::ComplexEigenSolver<CMat> es(P, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "reference eigensolver did not converge");
  std::vector<cd> all(es.eigenvalues().data(), es.eigenvalues().data() + P.rows());
  std::sort(all.begin(), all.end(), [](cd a, cd b) { return std::abs(a) > std::abs(b); });
  all.resize(k);
  return finish_spectrum(std::move(all), k, x.norm() * y.norm());
}

double spectral_weight(const Operator& x, const Operator& y, double eta) {
  auto s = product_spectrum(x, y);
  double w = 0.0;
  for (auto z : s.eigenvalues) w += smoothed_modulus(z, eta);
  return w;
}

double lagrangian(const Operator& x, const Operator& y, const KernelParams& p) {
  return pair_lagrangian(x.view(), y.view(), p);
}

double lagrangian_reference(const Operator& x, const Operator& y, const KernelParams& p) {
  auto s = product_spectrum_reference(x, y);
  const int k = static_cast<int>(s.eigenvalues.size());
  const int n = k / 2;
  double L = 0.0, w = 0.0;
  for (int i = 0; i < k; ++i) {
    double mi = smoothed_modulus(s.eigenvalues[i], p.smoothing_eta);
    w += mi;
    for (int j = 0; j < k; ++j) {
      double d = mi - smoothed_modulus(s.eigenvalues[j], p.smoothing_eta);
      L += d * d;
    }
  }
  return L / (4.0 * n) + p.kappa * w * w;
}

Operator project_to_freg(const CMat& A, int n, double c) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::Dimension, "matrix must be square");
  const int f = static_cast<int>(A.rows());
  if (n <= 0 || 2 * n > f) throw Error(ErrorKind::Dimension, "spin dimension out of range");
  if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, A.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::Degenerate, "matrix is not Hermitian");
  if (A.cwiseAbs().maxCoeff() == 0.0) throw Error(ErrorKind::Degenerate, "zero matrix has no signature");
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(A));
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "Hermitian eigensolver failed");
  const RVec& ev = es.eigenvalues();
  CMat U(f, 2 * n);
  RVec lam(2 * n);
  for (int i = 0; i < n; ++i) {
    U.col(i) = es.eigenvectors().col(f - 1 - i);
    lam(i) = std::max(ev(f - 1 - i), kEtaSig);
    U.col(n + i) = es.eigenvectors().col(i);
    lam(n + i) = std::min(ev(i), -kEtaSig);
  }
  const double shift = (c - lam.sum()) / (2.0 * n);
  lam.array() += shift;
  // Margins that miss by rounding only are snapped back.
  const double slack = 1e-3 * kEtaSig;
  for (int i = 0; i < n; ++i) {
    if (lam(i) < kEtaSig - slack || lam(n + i) > -kEtaSig + slack)
      throw Error(ErrorKind::Infeasible, "trace target incompatible with signature margins");
    lam(i) = std::max(lam(i), kEtaSig);
    lam(n + i) = std::min(lam(n + i), -kEtaSig);
  }
  return Operator::from_factor(U, lam, n);
}

CMat tangent_project(const Operator& x, const CMat& u) {
  const CMat& U = x.basis();
  const int k = static_cast<int>(U.cols());
  CMat PR = U * U.adjoint();
  CMat P0 = CMat::Identity(x.dim(), x.dim()) - PR;
  CMat h = hermitian_part(u);
  CMat t = h - P0 * h * P0;
  cd trR = (PR * h).trace();
  t -= (trR.real() / k) * PR;
  return t;
}

}  // namespace cfs

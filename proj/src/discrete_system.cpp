#include "cfs/discrete_system.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace cfs {

void DiscreteMeasure::validate() const {
  if (points.size() != weights.size()) throw Error(ErrorKind::Dimension, "points and weights differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(weights[i] > 0.0)) throw Error(ErrorKind::Degenerate, "weights must be positive");
    if (points[i].dim() != dim() || points[i].spin_dim() != spin_dim())
      throw Error(ErrorKind::Dimension, "points differ in dimension or spin dimension");
  }
}

std::vector<double> pair_row_sums(const DiscreteMeasure& rho, const KernelParams& p) {
  const long N = static_cast<long>(rho.size());
  std::vector<double> r(N, 0.0);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < N; ++i) {
    double s = 0.0;
    const FactorView xi = rho.points[i].view();
    for (long j = 0; j < N; ++j) s += rho.weights[j] * pair_lagrangian(xi, rho.points[j].view(), p);
    r[i] = s;
  }
  return r;
}

std::vector<double> pair_row_sums_serial(const DiscreteMeasure& rho, const KernelParams& p) {
  const std::size_t N = rho.size();
  std::vector<double> r(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < N; ++j) s += rho.weights[j] * pair_lagrangian(rho.points[i].view(), rho.points[j].view(), p);
    r[i] = s;
  }
  return r;
}

double causal_action(const DiscreteMeasure& rho, const KernelParams& p) {
  rho.validate();
  auto r = pair_row_sums(rho, p);
  double S = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) S += rho.weights[i] * r[i];
  return S;
}

double causal_action_reference(const DiscreteMeasure& rho, const KernelParams& p) {
  rho.validate();
  double S = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j)
      s += rho.weights[j] * lagrangian_reference(rho.points[i], rho.points[j], p);
    S += rho.weights[i] * s;
  }
  return S;
}

ConstraintValues constraint_values(const DiscreteMeasure& rho) {
  rho.validate();
  ConstraintValues c;
  const std::size_t N = rho.size();
  for (std::size_t i = 0; i < N; ++i) {
    c.volume += rho.weights[i];
    c.trace_integral += rho.weights[i] * rho.points[i].trace();
  }
  for (std::size_t i = 0; i < N; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      double w = pair_weight(rho.points[i].view(), rho.points[j].view(), 0.0);
      s += rho.weights[j] * w * w;
    }
    c.boundedness += rho.weights[i] * s;
  }
  return c;
}

double ell_kappa(const Operator& x, const DiscreteMeasure& rho, const MultiplierSet& mult, double eta) {
  KernelParams p{mult.kappa, eta};
  double s = 0.0;
  const FactorView xv = x.view();
  for (std::size_t j = 0; j < rho.size(); ++j) s += rho.weights[j] * pair_lagrangian(xv, rho.points[j].view(), p);
  return s - mult.s_param;
}

CMat random_hermitian(int f, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat H(f, f);
  for (int i = 0; i < f; ++i)
    for (int j = 0; j < f; ++j) H(i, j) = cd(g(rng), g(rng));
  H = hermitian_part(H);
  double nrm = H.norm();
  return nrm > 0 ? CMat(H * (scale / nrm)) : H;
}

CMat random_unitary(int f, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat Z(f, f);
  for (int i = 0; i < f; ++i)
    for (int j = 0; j < f; ++j) Z(i, j) = cd(g(rng), g(rng));
  Eigen::HouseholderQR<CMat> qr(Z);
  CMat Q = qr.householderQ();
  CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < f; ++j) {
    cd d = R(j, j);
    if (std::abs(d) > 0) Q.col(j) *= d / std::abs(d);
  }
  return Q;
}

Operator random_operator(int f, int n, double c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  CMat Q = random_unitary(f, rng);
  RVec d = RVec::Zero(f);
  for (int i = 0; i < n; ++i) {
    d(i) = u(rng);
    d(n + i) = -u(rng);
  }
  CMat A = Q * d.cast<cd>().asDiagonal() * Q.adjoint();
  return project_to_freg(hermitian_part(A), n, c);
}

ElResidual el_residual(const DiscreteMeasure& rho, const MultiplierSet& mult, int probe_count,
                       double probe_radius, std::uint64_t seed) {
  rho.validate();
  ElResidual r;
  for (const auto& x : rho.points) r.support_residual = std::max(r.support_residual, std::abs(ell_kappa(x, rho, mult)));
  if (rho.size() == 0 || probe_count <= 0) return r;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rho.size() - 1);
  std::uniform_real_distribution<double> rad(0.0, 1.0);
  double min_ell = 0.0;
  int done = 0, attempts = 0;
  while (done < probe_count && attempts < 20 * probe_count) {
    ++attempts;
    const Operator& base = rho.points[pick(rng)];
    CMat H = random_hermitian(base.dim(), probe_radius * rad(rng) * base.norm(), rng);
    Operator y;
    try {
      y = project_to_freg(base.matrix() + H, base.spin_dim(), base.trace());
    } catch (const Error&) {
      continue;
    }
    min_ell = std::min(min_ell, ell_kappa(y, rho, mult));
    ++done;
  }
  r.exterior_violation = std::max(0.0, -min_ell);
  return r;
}

void write_measure(std::ostream& os, const DiscreteMeasure& rho) {
  const int f = rho.dim(), n = rho.spin_dim();
  os << std::setprecision(17);
  os << f << ' ' << n << ' ' << rho.size() << ' ' << rho.trace_c << '\n';
  for (std::size_t k = 0; k < rho.size(); ++k) {
    os << rho.weights[k] << '\n';
    const CMat& A = rho.points[k].matrix();
    for (int i = 0; i < f; ++i) {
      for (int j = 0; j < f; ++j) os << (j ? " " : "") << A(i, j).real() << ' ' << A(i, j).imag();
      os << '\n';
    }
  }
}

DiscreteMeasure read_measure(std::istream& is) {
  DiscreteMeasure rho;
  int f = 0, n = 0;
  std::size_t N = 0;
  if (!(is >> f >> n >> N >> rho.trace_c)) throw Error(ErrorKind::Io, "measure header must read: f n N c");
  if (f <= 0 || n <= 0 || 2 * n > f) throw Error(ErrorKind::Io, "measure header has invalid f or n");
  for (std::size_t k = 0; k < N; ++k) {
    double w;
    if (!(is >> w)) throw Error(ErrorKind::Io, "missing weight for point " + std::to_string(k));
    CMat A(f, f);
    for (int i = 0; i < f; ++i)
      for (int j = 0; j < f; ++j) {
        double re, im;
        if (!(is >> re >> im)) throw Error(ErrorKind::Io, "truncated matrix for point " + std::to_string(k));
        A(i, j) = cd(re, im);
      }
    A = hermitian_part(A);
    rho.points.push_back(Operator::from_matrix(A, n));
    rho.weights.push_back(w);
  }
  rho.validate();
  return rho;
}

}  // namespace cfs

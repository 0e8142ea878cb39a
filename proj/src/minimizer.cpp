#include "cfs/minimizer.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

namespace cfs {

void MinimizeConfig::validate() const {
  if (!(volume_target > 0)) throw Error(ErrorKind::Config, "volume_target must be positive");
  if (!(tol_grad > 0)) throw Error(ErrorKind::Config, "tol_grad must be positive");
  if (kappa < 0) throw Error(ErrorKind::Config, "kappa must be nonnegative");
  if (max_iters <= 0) throw Error(ErrorKind::Config, "max_iters must be positive");
  for (std::size_t i = 0; i < eta_schedule.size(); ++i) {
    if (eta_schedule[i] < 0) throw Error(ErrorKind::Config, "smoothing schedule entries must be nonnegative");
    if (i && eta_schedule[i] > eta_schedule[i - 1])
      throw Error(ErrorKind::Config, "smoothing schedule must be nonincreasing");
  }
}

namespace {

double raw_lagrangian(const CMat& X, const CMat& Y, int n, const KernelParams& p) {
  Eigen::ComplexEigenSolver<CMat> es(X * Y, false);
  std::vector<cd> ev(es.eigenvalues().data(), es.eigenvalues().data() + X.rows());
  std::sort(ev.begin(), ev.end(), [](cd a, cd b) { return std::abs(a) > std::abs(b); });
  const int k = 2 * n;
  double w = 0.0, s2 = 0.0;
  for (int i = 0; i < k; ++i) {
    double m = smoothed_modulus(ev[i], p.smoothing_eta);
    w += m;
    s2 += m * m;
  }
  return s2 - w * w / k + p.kappa * w * w;
}

std::vector<CMat> hermitian_basis(int f) {
  std::vector<CMat> B;
  for (int i = 0; i < f; ++i) {
    CMat E = CMat::Zero(f, f);
    E(i, i) = 1.0;
    B.push_back(E);
  }
  for (int i = 0; i < f; ++i)
    for (int j = i + 1; j < f; ++j) {
      CMat E = CMat::Zero(f, f);
      E(i, j) = E(j, i) = 1.0;
      B.push_back(E);
      CMat F = CMat::Zero(f, f);
      F(i, j) = cd(0, 1);
      F(j, i) = cd(0, -1);
      B.push_back(F);
    }
  return B;
}

}  // namespace

CMat lagrangian_gradient_fd(const Operator& x, const Operator& y, const KernelParams& p) {
  const int f = x.dim();
  const double h = 1e-6 * std::max(x.norm(), 1e-300);
  CMat G = CMat::Zero(f, f);
  for (const CMat& E : hermitian_basis(f)) {
    double d = (raw_lagrangian(x.matrix() + h * E, y.matrix(), x.spin_dim(), p) -
                raw_lagrangian(x.matrix() - h * E, y.matrix(), x.spin_dim(), p)) /
               (2 * h);
    G += d * E / E.squaredNorm();
  }
  return G;
}

CMat lagrangian_gradient(const Operator& x, const Operator& y, const KernelParams& p, bool* used_fd) {
  // Nonzero spectrum of xy from K = Λx Ux† y Ux. Right eigenvectors of xy are Ux w,
  // left eigenvectors are z† Λx Ux† y, with K w = λ w and z† K = λ z†.
  const int k = 2 * x.spin_dim();
  const CMat& Ux = x.basis();
  const CMat Y = y.matrix();
  CMat YU = Y * Ux;
  CMat K = x.eigenvalues().cast<cd>().asDiagonal() * (Ux.adjoint() * YU);
  Eigen::ComplexEigenSolver<CMat> es(K, true);
  const double scale = std::max(x.norm() * y.norm(), 1e-300);
  bool ok = es.info() == Eigen::Success;
  Eigen::PartialPivLU<CMat> lu;
  if (ok) {
    for (int a = 0; a < k && ok; ++a) {
      if (std::abs(es.eigenvalues()(a)) <= 1e-14 * scale) ok = false;
      for (int b = a + 1; b < k; ++b)
        if (std::abs(es.eigenvalues()(a) - es.eigenvalues()(b)) <= 1e-8 * scale) ok = false;
    }
  }
  if (ok) {
    lu.compute(es.eigenvectors());
    if (!std::isfinite(lu.rcond()) || lu.rcond() < 1e-10) ok = false;
  }
  if (!ok) {
    if (used_fd) *used_fd = true;
    return lagrangian_gradient_fd(x, y, p);
  }
  if (used_fd) *used_fd = false;
  const CMat& W = es.eigenvectors();
  CMat Winv = lu.inverse();  // rows are the left eigenvectors z†, normalized so z† w = 1
  std::vector<double> m(k);
  double Wsum = 0.0;
  for (int a = 0; a < k; ++a) {
    m[a] = smoothed_modulus(es.eigenvalues()(a), p.smoothing_eta);
    Wsum += m[a];
  }
  // dλ = l† dx y r / (l† r) with r = Ux w, l† = z† Λx Ux† y, l† r = λ z† w = λ.
  // d|λ|_η = Re(conj λ dλ)/sqrt(|λ|²+η²).
  CMat LU = Winv * x.eigenvalues().cast<cd>().asDiagonal() * YU.adjoint();  // rows l†
  CMat B = CMat::Zero(x.dim(), x.dim());
  for (int a = 0; a < k; ++a) {
    cd lam = es.eigenvalues()(a);
    double c = 2 * m[a] - 2 * Wsum / k + 2 * p.kappa * Wsum;
    double den = std::sqrt(std::norm(lam) + p.smoothing_eta * p.smoothing_eta);
    cd coef = c * std::conj(lam) / (den * lam);
    B += coef * (YU * W.col(a)) * LU.row(a);
  }
  return hermitian_part(B);
}

namespace {

CMat kkt_matrix(const Eigen::MatrixXd& Q, const std::vector<int>& S) {
  const int m = static_cast<int>(S.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) K(a, b) = 2 * Q(S[a], S[b]);
    K(a, m) = K(m, a) = 1.0;
  }
  return K.cast<cd>();
}

double quad(const Eigen::MatrixXd& Q, const Eigen::VectorXd& w) { return w.dot(Q * w); }

Eigen::VectorXd simplex_project(const Eigen::VectorXd& v, double V) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    double t = (cum - V) / static_cast<double>(i + 1);
    if (u[i] - t > 0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

Eigen::VectorXd solve_weights(const Eigen::MatrixXd& Q, double V, const Eigen::VectorXd& w0) {
  const int N = static_cast<int>(Q.rows());
  std::vector<int> S(N);
  std::iota(S.begin(), S.end(), 0);
  Eigen::VectorXd best = w0;
  double fbest = quad(Q, w0);
  for (int round = 0; round < 4 * N + 4; ++round) {
    if (S.empty()) break;
    Eigen::MatrixXd K = kkt_matrix(Q, S).real();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S.size() + 1);
    rhs(S.size()) = V;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < K.rows()) break;
    Eigen::VectorXd sol = lu.solve(rhs);
    int worst = -1;
    double wv = 0.0;
    for (std::size_t a = 0; a < S.size(); ++a)
      if (sol(a) < wv) {
        wv = sol(a);
        worst = static_cast<int>(a);
      }
    if (worst >= 0) {
      S.erase(S.begin() + worst);
      continue;
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(N);
    for (std::size_t a = 0; a < S.size(); ++a) w(S[a]) = sol(a);
    Eigen::VectorXd g = Q * w;
    double gs = g(S[0]);
    int add = -1;
    double viol = 0.0;
    for (int i = 0; i < N; ++i) {
      if (std::find(S.begin(), S.end(), i) != S.end()) continue;
      double d = gs - g(i);
      if (d > viol + 1e-14 * std::abs(gs)) {
        viol = d;
        add = i;
      }
    }
    double fw = quad(Q, w);
    if (add < 0) {
      if (fw <= fbest + 1e-15 * std::abs(fbest)) return w;
      break;
    }
    S.push_back(add);
    std::sort(S.begin(), S.end());
  }
  // Projected gradient on the scaled simplex.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  double Lc = 2 * std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd w = w0;
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd wn = simplex_project(w - (2.0 / Lc) * (Q * w), V);
    if ((wn - w).norm() <= 1e-15 * V) {
      w = wn;
      break;
    }
    w = wn;
  }
  return quad(Q, w) <= fbest ? w : best;
}

Eigen::MatrixXd pair_matrix(const DiscreteMeasure& rho, const KernelParams& p) {
  const long N = static_cast<long>(rho.size());
  Eigen::MatrixXd Q(N, N);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < N; ++i)
    for (long j = 0; j < N; ++j) Q(i, j) = pair_lagrangian(rho.points[i].view(), rho.points[j].view(), p);
  return Q;
}

// w_i = clamp(v_i + θ, lo_i, hi_i) with θ chosen so that Σ w_i = target (Euclidean projection
// onto a box intersected with a hyperplane).
std::vector<double> shift_clamp(const std::vector<double>& v, const std::vector<double>& lo,
                                const std::vector<double>& hi, double target) {
  const std::size_t m = v.size();
  auto eval = [&](double th) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += std::clamp(v[i] + th, lo[i], hi[i]);
    return s;
  };
  double span = std::abs(target);
  for (std::size_t i = 0; i < m; ++i) {
    span += std::abs(v[i]);
    if (std::isfinite(lo[i])) span += std::abs(lo[i]);
    if (std::isfinite(hi[i])) span += std::abs(hi[i]);
  }
  double a = -span - 1.0, b = span + 1.0;
  for (int it = 0; it < 200 && b - a > 0; ++it) {
    double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    (eval(mid) < target ? a : b) = mid;
  }
  const double th = 0.5 * (a + b);
  std::vector<double> w(m);
  std::vector<std::size_t> freev;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = std::clamp(v[i] + th, lo[i], hi[i]);
    if (w[i] > lo[i] && w[i] < hi[i]) freev.push_back(i);
    s += w[i];
  }
  // Remove the bisection residual on the free coordinates.
  if (!freev.empty()) {
    double r = (target - s) / static_cast<double>(freev.size());
    for (auto i : freev) w[i] += r;
  }
  return w;
}

// Retraction onto the closed set {signature margins, trace c}: eigenvalues are projected onto the
// feasible polytope instead of shifted uniformly, so it never fails for nonzero input.
constexpr double kMarginSnap = 1e-7;

Operator retract(const CMat& A, int n, double c) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(A));
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "Hermitian eigensolver failed");
  const int f = static_cast<int>(A.rows());
  const double inf = std::numeric_limits<double>::infinity();
  CMat U(f, 2 * n);
  std::vector<double> v(2 * n), lo(2 * n), hi(2 * n);
  for (int i = 0; i < n; ++i) {
    U.col(i) = es.eigenvectors().col(f - 1 - i);
    v[i] = es.eigenvalues()(f - 1 - i);
    lo[i] = kEtaSig;
    hi[i] = inf;
    U.col(n + i) = es.eigenvectors().col(i);
    v[n + i] = es.eigenvalues()(i);
    lo[n + i] = -inf;
    hi[n + i] = -kEtaSig;
  }
  // Eigenvalues that land just inside a margin are put on it, so the active set is stable
  // between iterations and the cone direction sees the constraint.
  double scale = std::abs(c);
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double band = kMarginSnap * scale;
  for (int i = 0; i < n; ++i) {
    if (v[i] > kEtaSig && v[i] < kEtaSig + band) v[i] = kEtaSig;
    if (v[n + i] < -kEtaSig && v[n + i] > -kEtaSig - band) v[n + i] = -kEtaSig;
  }
  auto w = shift_clamp(v, lo, hi, c);
  return Operator::from_factor(U, Eigen::Map<RVec>(w.data(), 2 * n), n);
}

// Step from x along d: the part of d that rotates eigenvectors (generated by [W, x]) is applied
// as an exact unitary conjugation, the remainder additively, followed by the projection above.
// A purely additive step would push margin eigenvalues off the margin at second order.
Operator retract_along(const Operator& x, const CMat& d, double t, double c) {
  const int f = x.dim(), k = static_cast<int>(x.basis().cols());
  CMat V(f, f);
  RVec mu = RVec::Zero(f);
  V.leftCols(k) = x.basis();
  mu.head(k) = x.eigenvalues();
  if (f > k) {
    Eigen::SelfAdjointEigenSolver<CMat> es(CMat::Identity(f, f) - x.basis() * x.basis().adjoint());
    V.rightCols(f - k) = es.eigenvectors().rightCols(f - k);
  }
  const CMat D = V.adjoint() * hermitian_part(d) * V;
  const double gap_tol = 1e-3 * std::max(x.norm(), 1e-300);
  CMat H = CMat::Zero(f, f);  // W = −iH
  CMat M = mu.cast<cd>().asDiagonal();
  for (int a = 0; a < f; ++a)
    for (int b = 0; b < f; ++b) {
      if (a != b && std::abs(mu(b) - mu(a)) > gap_tol)
        H(a, b) = cd(0, 1) * D(a, b) / (mu(b) - mu(a));
      else
        M(a, b) += t * D(a, b);
    }
  Eigen::SelfAdjointEigenSolver<CMat> eh(hermitian_part(H));
  if (eh.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "Hermitian eigensolver failed");
  RVec nu = eh.eigenvalues();
  Eigen::VectorXcd ph(f);
  for (int a = 0; a < f; ++a) ph(a) = std::exp(cd(0, -t * nu(a)));
  const CMat E = eh.eigenvectors() * ph.asDiagonal() * eh.eigenvectors().adjoint();
  const CMat Y = V * E * M * E.adjoint() * V.adjoint();
  return retract(hermitian_part(Y), x.spin_dim(), c);
}

// Descent direction at x restricted to the tangent cone of the feasible set: rotations are free,
// the eigenvalue part is projected onto the cone cut out by eigenvalues sitting at a margin.
CMat cone_direction(const Operator& x, const CMat& g) {
  CMat d = -tangent_project(x, g);
  const CMat& U = x.basis();
  const RVec& lam = x.eigenvalues();
  const int k = 2 * x.spin_dim(), n = x.spin_dim();
  const double inf = std::numeric_limits<double>::infinity();
  CMat DR = U.adjoint() * d * U;
  std::vector<double> v(k), lo(k, -inf), hi(k, inf);
  for (int a = 0; a < k; ++a) {
    v[a] = DR(a, a).real();
    if (a < n && lam(a) <= 2 * kEtaSig) lo[a] = 0.0;
    if (a >= n && lam(a) >= -2 * kEtaSig) hi[a] = 0.0;
  }
  auto w = shift_clamp(v, lo, hi, 0.0);
  for (int a = 0; a < k; ++a) d += (w[a] - v[a]) * U.col(a) * U.col(a).adjoint();
  // Mixing a margin eigenvector with the kernel moves x by at most O(η_sig), so those
  // directions carry no usable descent and are excluded from the cone.
  const int f = x.dim();
  if (f > k) {
    CMat P0 = CMat::Identity(f, f) - U * U.adjoint();
    for (int a = 0; a < k; ++a) {
      if (std::abs(lam(a)) > 2 * kEtaSig) continue;
      CMat Pa = U.col(a) * U.col(a).adjoint();
      d -= Pa * d * P0 + P0 * d * Pa;
    }
  }
  return hermitian_part(d);
}

double max_scale(const DiscreteMeasure& rho) {
  double s = 0.0;
  for (const auto& x : rho.points) s = std::max(s, x.norm());
  return s;
}

}  // namespace

DiscreteMeasure random_measure(int f, int n, int N, const MinimizeConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  DiscreteMeasure rho;
  rho.trace_c = cfg.trace_target / cfg.volume_target;
  for (int i = 0; i < N; ++i) {
    rho.points.push_back(random_operator(f, n, rho.trace_c, rng));
    rho.weights.push_back(cfg.volume_target / N);
  }
  return rho;
}

MinimizeResult minimize_action(const DiscreteMeasure& init, const MinimizeConfig& cfg) {
  cfg.validate();
  init.validate();
  if (init.size() == 0) throw Error(ErrorKind::Infeasible, "empty initial measure");
  const double c = cfg.trace_target / cfg.volume_target;
  DiscreteMeasure rho = init;
  rho.trace_c = c;
  for (auto& x : rho.points)
    if (std::abs(x.trace() - c) > 1e-12 * std::max(1.0, std::abs(c))) x = project_to_freg(x.matrix(), x.spin_dim(), c);
  {
    double tot = std::accumulate(rho.weights.begin(), rho.weights.end(), 0.0);
    for (auto& w : rho.weights) w *= cfg.volume_target / tot;
  }
  const int N = static_cast<int>(rho.size());
  MinimizeReport rep;
  std::vector<double> stages = cfg.eta_schedule;
  stages.push_back(0.0);
  const int per_stage = std::max(1, cfg.max_iters / static_cast<int>(stages.size()));

  auto action_of = [&](const DiscreteMeasure& m, const KernelParams& p) {
    Eigen::MatrixXd Q = pair_matrix(m, p);
    Eigen::Map<const Eigen::VectorXd> w(m.weights.data(), N);
    return quad(Q, w);
  };

  int iter = 0;
  double gnorm_rel = 0.0;
  for (double eta_rel : stages) {
    double alpha = 0.1;
    for (int it = 0; it < per_stage; ++it, ++iter) {
      const double scale = max_scale(rho);
      KernelParams p{cfg.kappa, eta_rel * scale * scale};
      Eigen::MatrixXd Q = pair_matrix(rho, p);
      Eigen::Map<Eigen::VectorXd> wmap(rho.weights.data(), N);
      Eigen::VectorXd w = solve_weights(Q, cfg.volume_target, wmap);
      wmap = w;
      const double S0 = quad(Q, w);

      std::vector<CMat> dirs(N);
      double gmax = 0.0, slope = 0.0;
      for (int i = 0; i < N; ++i) {
        CMat g = CMat::Zero(rho.dim(), rho.dim());
        if (w(i) > 0) {
          for (int j = 0; j < N; ++j) {
            if (w(j) == 0) continue;
            bool fd = false;
            g += w(j) * lagrangian_gradient(rho.points[i], rho.points[j], p, &fd);
            rep.fd_gradient_pairs += fd;
          }
        }
        dirs[i] = cone_direction(rho.points[i], g);
        gmax = std::max(gmax, dirs[i].norm());
        slope += 2 * w(i) * dirs[i].squaredNorm();
      }
      gnorm_rel = gmax / std::max(std::pow(scale, 3), 1e-300);

      double step_taken = 0.0;
      bool accepted = false;
      if (gnorm_rel > cfg.tol_grad) {
        while (alpha > 1e-14) {
          DiscreteMeasure trial = rho;
          bool feasible = true;
          const double t = alpha * scale / gmax;
          for (int i = 0; i < N && feasible; ++i) {
            if (w(i) == 0 || dirs[i].norm() == 0) continue;
            try {
              trial.points[i] = retract_along(rho.points[i], dirs[i], t, c);
            } catch (const Error&) {
              feasible = false;
            }
          }
          if (feasible) {
            double S1 = action_of(trial, p);
            if (S1 <= S0 - 1e-4 * t * slope) {
              rho = std::move(trial);
              step_taken = t;
              accepted = true;
              alpha = std::min(1.0, 2 * alpha);
              break;
            }
          }
          alpha *= 0.5;
        }
      }
      double vol = 0.0, tr = 0.0;
      for (int i = 0; i < N; ++i) {
        vol += rho.weights[i];
        tr += rho.weights[i] * rho.points[i].trace();
      }
      rep.history.push_back({iter, p.smoothing_eta, S0, std::abs(vol - cfg.volume_target) / cfg.volume_target,
                             std::abs(tr - cfg.trace_target) / std::max(1.0, std::abs(cfg.trace_target)), gnorm_rel,
                             step_taken});
      if (!accepted) break;
    }
  }

  // Final weight solve at η = 0 and support extraction.
  {
    KernelParams p{cfg.kappa, 0.0};
    Eigen::MatrixXd Q = pair_matrix(rho, p);
    Eigen::Map<Eigen::VectorXd> wmap(rho.weights.data(), N);
    Eigen::VectorXd w = solve_weights(Q, cfg.volume_target, wmap);
    wmap = w;
  }
  DiscreteMeasure out;
  out.trace_c = c;
  for (int i = 0; i < N; ++i)
    if (rho.weights[i] > 1e-14 * cfg.volume_target) {
      out.points.push_back(rho.points[i]);
      out.weights.push_back(rho.weights[i]);
    }
  {
    double tot = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
    for (auto& w : out.weights) w *= cfg.volume_target / tot;
  }
  KernelParams p0{cfg.kappa, 0.0};
  rep.action = causal_action(out, p0);
  rep.iterations = iter;
  rep.grad_norm = gnorm_rel;
  rep.converged = gnorm_rel <= cfg.tol_grad;
  auto cvals = constraint_values(out);
  rep.volume_violation = std::abs(cvals.volume - cfg.volume_target) / cfg.volume_target;
  rep.trace_violation = std::abs(cvals.trace_integral - cfg.trace_target) / std::max(1.0, std::abs(cfg.trace_target));
  auto se = estimate_s(out, cfg.kappa);
  MinimizeResult res{out, MultiplierSet{cfg.kappa, se.s_param, c}, rep};
  return res;
}

SEstimate estimate_s(const DiscreteMeasure& rho, double kappa) {
  if (rho.size() == 0) throw Error(ErrorKind::Degenerate, "empty support");
  auto r = pair_row_sums(rho, KernelParams{kappa, 0.0});
  double lo = r[0], hi = r[0], sum = 0.0;
  for (double v : r) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  return {sum / r.size(), hi - lo};
}

CriticalityReport criticality_report(const DiscreteMeasure& rho, const MultiplierSet& mult, const MinimizeConfig& cfg) {
  CriticalityReport r;
  auto el = el_residual(rho, mult, 64, 0.05, cfg.seed);
  r.support_residual = el.support_residual;
  r.exterior_violation = el.exterior_violation;
  r.spread = estimate_s(rho, mult.kappa).spread;
  auto cv = constraint_values(rho);
  r.volume_violation = std::abs(cv.volume - cfg.volume_target) / cfg.volume_target;
  r.trace_violation = std::abs(cv.trace_integral - cfg.trace_target) / std::max(1.0, std::abs(cfg.trace_target));
  return r;
}

void write_history_csv(const std::string& path, const MinimizeReport& rep) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path);
  os << "iter,eta,action,volume_violation,trace_violation,grad_norm,step\n" << std::setprecision(17);
  for (const auto& h : rep.history)
    os << h.iter << ',' << h.eta << ',' << h.action << ',' << h.volume_violation << ',' << h.trace_violation << ','
       << h.grad_norm << ',' << h.step << '\n';
}

}  // namespace cfs

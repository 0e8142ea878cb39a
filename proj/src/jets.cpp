#include "cfs/jets.hpp"

#include <algorithm>
#include <cmath>

namespace cfs {

Jet Jet::zero(const DiscreteMeasure& rho) {
  Jet j;
  j.scalar.assign(rho.size(), 0.0);
  for (const auto& x : rho.points) j.vector.push_back(CMat::Zero(x.dim(), x.dim()));
  return j;
}

Jet Jet::scaled(double s) const {
  Jet j = *this;
  for (auto& a : j.scalar) a *= s;
  for (auto& u : j.vector) u *= s;
  if (extension) j.extension = [e = extension, s](const Operator& x) { return CMat(s * e(x)); };
  return j;
}

Jet Jet::plus(const Jet& o) const {
  if (o.size() != size()) throw Error(ErrorKind::Dimension, "jets live on different supports");
  Jet j = *this;
  for (std::size_t i = 0; i < size(); ++i) {
    j.scalar[i] += o.scalar[i];
    j.vector[i] += o.vector[i];
  }
  if (extension && o.extension)
    j.extension = [a = extension, b = o.extension](const Operator& x) { return CMat(a(x) + b(x)); };
  else
    j.extension = nullptr;
  return j;
}

Operator displace(const Operator& x, const CMat& u, double s) {
  if (s == 0.0) return x;
  return project_to_freg(x.matrix() + s * u, x.spin_dim(), x.trace());
}

void require_tangent(const Operator& x, const CMat& u) {
  if ((u - tangent_project(x, u)).norm() > 1e-8 * std::max(u.norm(), 1e-300))
    throw Error(ErrorKind::Numerical, "jet direction is not tangent to the constraint set");
}

CMat two_sided_tangent(const Operator& x, const CMat& u) {
  CMat d = tangent_project(x, u);
  const CMat& U = x.basis();
  const RVec& lam = x.eigenvalues();
  const int k = 2 * x.spin_dim(), f = x.dim();
  std::vector<bool> margin(k);
  CMat DR = U.adjoint() * d * U;
  double removed = 0.0;
  int free_count = 0;
  for (int a = 0; a < k; ++a) {
    margin[a] = std::abs(lam(a)) <= 2 * kEtaSig;
    if (margin[a]) removed += DR(a, a).real();
    else ++free_count;
  }
  if (free_count == 0) return CMat::Zero(f, f);
  for (int a = 0; a < k; ++a) {
    double shift = margin[a] ? -DR(a, a).real() : removed / free_count;
    d += shift * U.col(a) * U.col(a).adjoint();
  }
  if (f > k) {
    CMat P0 = CMat::Identity(f, f) - U * U.adjoint();
    for (int a = 0; a < k; ++a) {
      if (!margin[a]) continue;
      CMat Pa = U.col(a) * U.col(a).adjoint();
      d -= Pa * d * P0 + P0 * d * Pa;
    }
  }
  return hermitian_part(d);
}

namespace {

double step_for(const Operator& x, const CMat& u, double rel) {
  const double un = u.norm();
  if (!(un > 0.0)) return 0.0;
  return rel * std::max(x.norm(), 1e-300) / un;
}

double central(const std::function<double(double)>& g, double h) {
  return richardson_first(g(h), g(-h), g(2 * h), g(-2 * h), h);
}

double mixed(const std::function<double(double, double)>& f, double hs, double ht, NestingOrder order) {
  double v[8];
  for (int k = 0; k < 8; ++k) v[k] = f(kMixedS[k] * hs, kMixedT[k] * ht);
  return mixed_from(v, hs, ht, order);
}

}  // namespace

double directional_derivative(const PointFunction& g, const Operator& x, const CMat& u, double rel_step) {
  const double h = step_for(x, u, rel_step);
  if (h == 0.0) return 0.0;
  return central([&](double s) { return g(displace(x, u, s)); }, h);
}

double nabla(const Jet& jet, const PointFunction& g, const DiscreteMeasure& rho, std::size_t i, const FdSteps& steps) {
  const Operator& x = rho.points[i];
  require_tangent(x, jet.vector[i]);
  double out = 0.0;
  if (jet.scalar[i] != 0.0) out += jet.scalar[i] * g(x);
  out += directional_derivative(g, x, jet.vector[i], steps.first);
  return out;
}

Jet jet_from_family(const JetFamily& fam, const DiscreteMeasure& rho, double rel_step) {
  Jet j = Jet::zero(rho);
  const double h = rel_step;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    auto f = [&](double t) { return fam.weight(i, t); };
    double f0 = f(0.0), fp = f(h), fm = f(-h), fp2 = f(2 * h), fm2 = f(-2 * h);
    double kink1 = (fp - f0) / h - (f0 - fm) / h;
    double kink2 = (fp2 - f0) / (2 * h) - (f0 - fm2) / (2 * h);
    if (std::abs(kink1) > 1e-6 * std::max(1.0, std::abs(f0)) && std::abs(kink1) > 0.75 * std::abs(kink2))
      throw Error(ErrorKind::Numerical, "weight family is not differentiable at tau = 0");
    j.scalar[i] = (4 * (fp - fm) / (2 * h) - (fp2 - fm2) / (4 * h)) / 3;

    CMat F0 = fam.map(i, 0.0), Fp = fam.map(i, h), Fm = fam.map(i, -h), Fp2 = fam.map(i, 2 * h), Fm2 = fam.map(i, -2 * h);
    double scale = std::max(1.0, F0.norm());
    double k1 = ((Fp - F0) - (F0 - Fm)).norm() / h;
    double k2 = ((Fp2 - F0) - (F0 - Fm2)).norm() / (2 * h);
    if (k1 > 1e-6 * scale && k1 > 0.75 * k2)
      throw Error(ErrorKind::Numerical, "map family is not differentiable at tau = 0");
    CMat d = (4.0 * (Fp - Fm) / (2 * h) - (Fp2 - Fm2) / (4 * h)) / 3.0;
    j.vector[i] = tangent_project(rho.points[i], d);
  }
  return j;
}

double weak_el_test(const DiscreteMeasure& rho, const MultiplierSet& mult, const std::vector<Jet>& test_jets,
                    const FdSteps& steps) {
  PointFunction ell = [&](const Operator& y) { return ell_kappa(y, rho, mult); };
  double worst = 0.0;
  for (const auto& jet : test_jets)
    for (std::size_t i = 0; i < rho.size(); ++i) worst = std::max(worst, std::abs(nabla(jet, ell, rho, i, steps)));
  return worst;
}

double delta_pairing(const Jet& u, const Jet& v, const DiscreteMeasure& rho, const MultiplierSet& mult, std::size_t i,
                     const FdSteps& steps, NestingOrder order) {
  const KernelParams p{mult.kappa, 0.0};
  const Operator& x = rho.points[i];
  const CMat& ui = u.vector[i];
  const CMat& vi = v.vector[i];
  const double bi = v.scalar[i];
  const int n = x.spin_dim();
  const double c = x.trace();
  auto L = [&](const Operator& a, const Operator& b) { return pair_lagrangian(a.view(), b.view(), p); };

  const double hu1 = step_for(x, ui, steps.first);
  const double hu2 = step_for(x, ui, steps.nested);
  const double hv2 = step_for(x, vi, steps.nested);

  // F(x_i) = Σ_j ρ_j (∇_{1,𝔳} + ∇_{2,𝔳}) L(x_i, x_j) − b_i 𝔰
  double F0 = -bi * mult.s_param;
  double dF = 0.0;
  for (std::size_t j = 0; j < rho.size(); ++j) {
    const Operator& y = rho.points[j];
    const CMat& vj = v.vector[j];
    const double bj = v.scalar[j];
    const double rj = rho.weights[j];
    const double hvy1 = step_for(y, vj, steps.first);
    const double hvy2 = step_for(y, vj, steps.nested);
    const double Lxy = L(x, y);

    double d1v = hv2 > 0 ? central([&](double t) { return L(displace(x, vi, t), y); }, step_for(x, vi, steps.first)) : 0.0;
    double d2v = hvy1 > 0 ? central([&](double t) { return L(x, displace(y, vj, t)); }, hvy1) : 0.0;
    F0 += rj * ((bi + bj) * Lxy + d1v + d2v);

    if (hu1 == 0.0) continue;
    double d1u = central([&](double s) { return L(displace(x, ui, s), y); }, hu1);
    double d11 = 0.0, d12 = 0.0;
    if (hv2 > 0) {
      if (v.extension)
        d11 = mixed(
            [&](double s, double t) {
              Operator xs = displace(x, ui, s);
              return L(project_to_freg(xs.matrix() + t * v.extension(xs), n, c), y);
            },
            hu2, hv2, order);
      else
        d11 = mixed([&](double s, double t) { return L(project_to_freg(x.matrix() + s * ui + t * vi, n, c), y); },
                    hu2, hv2, order);
    }
    if (hvy2 > 0)
      d12 = mixed([&](double s, double t) { return L(displace(x, ui, s), displace(y, vj, t)); }, hu2, hvy2, order);
    dF += rj * ((bi + bj) * d1u + d11 + d12);
  }
  return u.scalar[i] * F0 + dF;
}

double linearized_residual(const Jet& v, const DiscreteMeasure& rho, const MultiplierSet& mult,
                           const std::vector<Jet>& test_jets, const FdSteps& steps) {
  double worst = 0.0;
  for (const auto& u : test_jets)
    for (std::size_t i = 0; i < rho.size(); ++i)
      worst = std::max(worst, std::abs(delta_pairing(u, v, rho, mult, i, steps)));
  return worst;
}

Jet random_tangent_jet(const DiscreteMeasure& rho, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-1.0, 1.0);
  Jet j = Jet::zero(rho);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const Operator& x = rho.points[i];
    j.scalar[i] = a(rng);
    CMat t = two_sided_tangent(x, random_hermitian(x.dim(), 1.0, rng));
    double nt = t.norm();
    j.vector[i] = nt > 0 ? CMat(t * (x.norm() / nt)) : t;
  }
  return j;
}

Jet rotation_jet(const DiscreteMeasure& rho, const CMat& H) {
  Jet j = Jet::zero(rho);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const CMat& X = rho.points[i].matrix();
    j.vector[i] = hermitian_part(cd(0, 1) * (H * X - X * H));
  }
  j.extension = [H](const Operator& x) {
    const CMat& X = x.matrix();
    return hermitian_part(cd(0, 1) * (H * X - X * H));
  };
  return j;
}

}  // namespace cfs

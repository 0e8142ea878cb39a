#include "cfs/scaling_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cfs/operator_core.hpp"

namespace cfs {

namespace {

const char* kParamNames[kParamCount] = {"p", "q", "qhat", "s", "shat"};
const char* kSymNames[kSymCount] = {"eps", "delta", "m", "lambda", "sigma", "kappa", "T", "l_macro"};
constexpr int kLengthDim[kSymCount] = {1, 1, -1, 0, 0, 0, -4, 1};

int idx(Sym s) { return static_cast<int>(s); }

Monomial eps_m() { return Monomial::of(Sym::eps) * Monomial::of(Sym::m); }
Monomial eps_over_delta() { return Monomial::of(Sym::eps) / Monomial::of(Sym::delta); }
Monomial sigma_lambda4() { return Monomial::of(Sym::sigma) * Monomial::of(Sym::lambda, 4); }

// Range of an affine exponent over the regime's parameter box.
std::pair<double, double> range_of(const Expo& x, const Regime& r) {
  const auto box = r.ranges();
  double lo = x.c0, hi = x.c0;
  for (int k = 0; k < kParamCount; ++k) {
    const int c = x.c[k];
    if (c == 0) continue;
    const double a = c * box[k].first, b = c * box[k].second;
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

}  // namespace

Expo Expo::of(Param k, int coef) {
  Expo e;
  e.c[static_cast<int>(k)] = coef;
  return e;
}

bool Expo::is_constant() const {
  return std::all_of(c.begin(), c.end(), [](int v) { return v == 0; });
}

Expo Expo::operator+(const Expo& o) const {
  Expo r = *this;
  r.c0 += o.c0;
  for (int k = 0; k < kParamCount; ++k) r.c[k] += o.c[k];
  return r;
}

Expo Expo::operator-(const Expo& o) const { return *this + (-o); }

Expo Expo::operator-() const { return *this * -1; }

Expo Expo::operator*(int k) const {
  Expo r = *this;
  r.c0 *= k;
  for (int& v : r.c) v *= k;
  return r;
}

std::string Expo::str() const {
  std::ostringstream os;
  bool first = true;
  for (int k = 0; k < kParamCount; ++k) {
    const int v = c[k];
    if (v == 0) continue;
    if (!first) os << (v > 0 ? "+" : "-");
    else if (v < 0) os << "-";
    if (std::abs(v) != 1) os << std::abs(v) << "*";
    os << kParamNames[k];
    first = false;
  }
  if (first) {
    os << c0;
  } else if (c0 != 0) {
    os << (c0 > 0 ? "+" : "-") << std::abs(c0);
  }
  return os.str();
}

const char* sym_name(Sym s) { return kSymNames[idx(s)]; }
int length_dimension(Sym s) { return kLengthDim[idx(s)]; }

Monomial Monomial::of(Sym s, Expo k) {
  Monomial m;
  m.e[idx(s)] = k;
  return m;
}

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial r;
  for (int k = 0; k < kSymCount; ++k) r.e[k] = e[k] + o.e[k];
  return r;
}

Monomial Monomial::operator/(const Monomial& o) const { return *this * o.pow(-1); }

Monomial Monomial::pow(int k) const {
  Monomial r;
  for (int s = 0; s < kSymCount; ++s) r.e[s] = e[s] * k;
  return r;
}

Monomial Monomial::pow(const Expo& k) const {
  if (k.is_constant()) return pow(k.c0);
  Monomial r;
  for (int s = 0; s < kSymCount; ++s) {
    if (e[s].is_zero()) continue;
    if (!e[s].is_constant()) throw Error(ErrorKind::Config, "symbolic power of a symbolic exponent");
    r.e[s] = k * e[s].c0;
  }
  return r;
}

Monomial Monomial::substitute(Param k, int value) const {
  Monomial r = *this;
  for (auto& x : r.e) {
    x.c0 += x.c[static_cast<int>(k)] * value;
    x.c[static_cast<int>(k)] = 0;
  }
  return r;
}

Monomial Monomial::replace(Sym s, const Monomial& by) const {
  Monomial r = *this;
  const Expo k = r.e[idx(s)];
  r.e[idx(s)] = Expo();
  return r * by.pow(k);
}

Expo Monomial::length_dim() const {
  Expo d;
  for (int s = 0; s < kSymCount; ++s) d = d + e[s] * kLengthDim[s];
  return d;
}

std::string Monomial::str() const {
  std::ostringstream os;
  bool any = false;
  for (int s = 0; s < kSymCount; ++s) {
    if (e[s].is_zero()) continue;
    if (any) os << " ";
    os << kSymNames[s];
    if (!(e[s].is_constant() && e[s].c0 == 1)) {
      const std::string x = e[s].str();
      if (e[s].is_constant())
        os << "^" << x;
      else
        os << "^(" << x << ")";
    }
    any = true;
  }
  return any ? os.str() : "1";
}

std::string to_string(const Posynomial& p) {
  if (p.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? " + " : "") + p[i].str();
  return s;
}

Posynomial times(const Posynomial& p, const Monomial& m) {
  Posynomial r;
  for (const auto& t : p) r.push_back(t * m);
  return r;
}

bool same_terms(const Posynomial& a, const Posynomial& b) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& x : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size(); ++j)
      if (!used[j] && b[j] == x) {
        used[j] = found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

std::array<std::pair<double, double>, kParamCount> Regime::ranges() const {
  const double inf = std::numeric_limits<double>::infinity();
  return {{{double(p_min), inf}, {0.0, inf}, {0.0, inf}, {0.0, 4.0}, {0.0, 2.0}}};
}

Order compare(const Monomial& a, const Monomial& b, const Regime& r) {
  const Monomial q = a / b;
  for (Sym s : {Sym::lambda, Sym::sigma, Sym::kappa, Sym::T})
    if (!q.e[idx(s)].is_zero()) return Order::Incomparable;
  // q = ε^{x1} (ε/δ)^{x2} (mδ)^{x3} (1/(m l))^{x4}, each base small under the regime.
  const Expo ae = q.e[idx(Sym::eps)], ad = q.e[idx(Sym::delta)], am = q.e[idx(Sym::m)],
             al = q.e[idx(Sym::lmacro)];
  const Expo x4 = -al;
  const Expo x3 = am - al;
  const Expo x2 = x3 - ad;
  const Expo x1 = ae - x2;
  if (!r.eps_absolute_small && !x1.is_zero()) return Order::Incomparable;
  const Expo xs[4] = {x1, x2, x3, x4};
  bool all_zero = true, nonneg = true, nonpos = true;
  for (const Expo& x : xs) {
    if (x.is_zero()) continue;
    all_zero = false;
    auto [lo, hi] = range_of(x, r);
    if (lo < 0) nonneg = false;
    if (hi > 0) nonpos = false;
  }
  if (all_zero) return Order::Equal;
  if (nonneg) return Order::Less;
  if (nonpos) return Order::Greater;
  return Order::Incomparable;
}

DominantResult dominant(const Posynomial& terms, const Regime& r) {
  DominantResult out;
  std::ostringstream tr;
  tr << "terms: " << to_string(terms) << "\n";
  tr << "regime: eps/delta << 1, m*delta <~ 1, 1/(m*l_macro) <~ 1" << (r.eps_absolute_small ? ", eps << 1" : "")
     << ", p >= " << r.p_min << ", q >= 0, qhat >= 0\n";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      if (i == j) continue;
      const Order o = compare(terms[i], terms[j], r);
      if (o == Order::Less) {
        tr << "  " << terms[i].str() << " <~ " << terms[j].str() << "\n";
        dominated = true;
        break;
      }
      if (o == Order::Incomparable && i < j) {
        out.incomparable.emplace_back(i, j);
        tr << "  " << terms[i].str() << " and " << terms[j].str() << " incomparable, both kept\n";
      }
    }
    if (!dominated) out.kept.push_back(terms[i]);
  }
  tr << "dominant: " << to_string(out.kept) << "\n";
  out.transcript = tr.str();
  return out;
}

int shat_of(int qhat) {
  if (qhat < 0) throw Error(ErrorKind::Config, "qhat must be non-negative");
  return std::max(0, 2 - 2 * qhat);
}

int s_of(int q) {
  if (q < 0) throw Error(ErrorKind::Config, "q must be non-negative");
  return std::max(0, 4 - 2 * q);
}

namespace {
void check_p(const Expo& p) {
  if (p.is_constant() && p.c0 < 5) throw Error(ErrorKind::Config, "p must be at least 5");
}
}  // namespace

Posynomial kappa_bound(const Expo& p, const Expo& shat) {
  check_p(p);
  return {eps_m().pow(p), eps_over_delta().pow(Expo(8) - shat)};
}

Posynomial kappa_bound(int p, int qhat) { return kappa_bound(Expo(p), Expo(shat_of(qhat))); }

Posynomial s_multiplier_scaling(const Expo& p, const Expo& shat) {
  return times(kappa_bound(p, shat), sigma_lambda4() / Monomial::of(Sym::eps, 8));
}

Posynomial s_multiplier_scaling(int p, int qhat) { return s_multiplier_scaling(Expo(p), Expo(shat_of(qhat))); }

Monomial matter_ell_scaling(const Expo& s) {
  return sigma_lambda4() * Monomial::of(Sym::delta, -4) * Monomial::of(Sym::T) * eps_over_delta().pow(-s);
}

Monomial matter_ell_scaling(int q) { return matter_ell_scaling(Expo(s_of(q))); }

Posynomial kappa_t_matter(const Expo& p, const Expo& shat) {
  return times(kappa_bound(p, shat), sigma_lambda4() * Monomial::of(Sym::eps, -4) * Monomial::of(Sym::T));
}

MatterScaling lmat2_scaling(int p, int q, int qhat, const Regime& r) {
  Posynomial terms{matter_ell_scaling(q)};
  for (const auto& t : kappa_t_matter(Expo(p), Expo(shat_of(qhat)))) terms.push_back(t);
  MatterScaling out;
  out.derivation = dominant(terms, r);
  if (out.derivation.kept.size() != 1)
    throw Error(ErrorKind::Numerical, "matter contributions have no unique dominant term");
  out.lmat2 = out.derivation.kept[0];
  return out;
}

Posynomial vacuum_ell_scaling(const Expo& p, const Expo& shat) {
  return {sigma_lambda4() * eps_m().pow(p) * Monomial::of(Sym::eps, -8),
          sigma_lambda4() * Monomial::of(Sym::delta, -8) * eps_over_delta().pow(-shat)};
}

MatterVerdict matter_vs_vacuum(int p, int q, int qhat, const Regime& r) {
  MatterVerdict v;
  const MatterScaling ms = lmat2_scaling(p, q, qhat, r);
  const Monomial m4 = Monomial::of(Sym::m, 4);
  const Monomial lmat = ms.lmat2.replace(Sym::T, m4);
  const Posynomial vac = vacuum_ell_scaling(Expo(p), Expo(shat_of(qhat)));
  v.ratio = lmat / vac[1];
  v.residual = v.ratio / (Monomial::of(Sym::m) * Monomial::of(Sym::delta)).pow(4);
  v.residual_order = compare(v.residual, Monomial::one(), r);
  v.suppressed_by_m_delta4 = v.residual_order == Order::Less || v.residual_order == Order::Equal;
  const Order ro = compare(v.ratio, Monomial::one(), r);
  v.matter_below_vacuum = ro == Order::Less || ro == Order::Equal;
  v.kappa_t_negligible = true;
  for (const auto& t : kappa_t_matter(Expo(p), Expo(shat_of(qhat))))
    if (compare(t, matter_ell_scaling(q), r) != Order::Less) v.kappa_t_negligible = false;
  std::ostringstream tr;
  tr << ms.derivation.transcript;
  tr << "T <~ m^4: matter term " << lmat.str() << "\n";
  tr << "light-cone vacuum term " << vac[1].str() << "\n";
  tr << "ratio " << v.ratio.str() << " = (m delta)^4 * " << v.residual.str() << "\n";
  v.transcript = tr.str();
  return v;
}

WeightCorrection weight_correction(const Expo& p, const Expo& s, const Expo& shat) {
  WeightCorrection w;
  w.numerator = Monomial::of(Sym::eps, 4) * eps_over_delta().pow(Expo(4) - s) * Monomial::of(Sym::T);
  w.denominator = kappa_bound(p, shat);
  return w;
}

KillingScaling killing_rhs_scaling(int p, int q, int qhat, const Regime& r) {
  (void)s_of(q);
  // At t ∼ ε near the light cone: ξ^iξ^j ∼ ε², (deg = k) ∼ ε^{−2k}, (ε/t)^q ∼ 1.
  const Monomial lambda4 = Monomial::of(Sym::lambda, 4);
  const Monomial T = Monomial::of(Sym::T);
  Posynomial terms{lambda4 * Monomial::of(Sym::delta, -4) * T * Monomial::of(Sym::eps, 2 - 6)};
  for (const auto& k : kappa_bound(p, qhat)) terms.push_back(k * lambda4 * T * Monomial::of(Sym::eps, 2 - 10));
  KillingScaling out;
  out.derivation = dominant(terms, r);
  if (out.derivation.kept.size() != 1) throw Error(ErrorKind::Numerical, "Killing bound has no unique dominant term");
  out.rhs = out.derivation.kept[0]
                .replace(Sym::lambda, Monomial::one())
                .replace(Sym::sigma, Monomial::one())
                .replace(Sym::T, Monomial::of(Sym::m, 4));
  out.derivation.transcript += "sigma = lambda = 1, T <~ m^4: " + out.rhs.str() + "\n";
  return out;
}

PowerCountingReport power_counting_report(int p, int q, int qhat) {
  PowerCountingReport rep;
  std::ostringstream tr;
  const int sh = shat_of(qhat), s = s_of(q);
  rep.results.emplace_back("shatrange", std::to_string(sh));
  rep.results.emplace_back("spardef", std::to_string(s));
  rep.results.emplace_back("kappaval", to_string(kappa_bound(p, qhat)));
  rep.results.emplace_back("nuval", to_string(s_multiplier_scaling(p, qhat)));
  const MatterScaling ms = lmat2_scaling(p, q, qhat);
  rep.results.emplace_back("lmat2", ms.lmat2.str());
  const MatterVerdict v = matter_vs_vacuum(p, q, qhat);
  rep.results.emplace_back("matter_suppression", v.ratio.str());
  const KillingScaling k = killing_rhs_scaling(p, q, qhat);
  rep.results.emplace_back("DvL", k.rhs.str());
  tr << "p = " << p << ", q = " << q << ", qhat = " << qhat << "\n";
  tr << "[lmat2]\n" << ms.derivation.transcript << "[suppression]\n" << v.transcript << "[DvL]\n"
     << k.derivation.transcript;
  rep.transcript = tr.str();
  return rep;
}

}  // namespace cfs

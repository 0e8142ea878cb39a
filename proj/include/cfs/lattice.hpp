#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cfs/jets.hpp"

namespace cfs {

using Vec4 = std::array<double, 4>;
using Index4 = std::array<int, 4>;
using ScalarFn = std::function<double(const Vec4&)>;
using VectorFn = std::function<Vec4(const Vec4&)>;

// Smooth map from chart coordinates into the regular operators.
struct Embedding {
  std::string name;
  int f = 0;
  int n = 1;
  std::function<Operator(const Vec4&)> at;
};

// X(ξ) = diag(a + β·ξ, −b − β·ξ): all points commute, trace a − b.
Embedding commuting_embedding(double a, double b, const Vec4& beta);
// X(ξ) = U(ξ) D U(ξ)†, U(ξ) = exp(i Σ ξ^j H_j).
Embedding unitary_orbit_embedding(const RVec& D, int n, const std::array<CMat, 4>& H);
// D = diag(2, −1, 0) with seeded random generators of Frobenius norm amp.
Embedding unitary_orbit_embedding(std::uint64_t seed, double amp);

struct LatticeChart {
  Index4 extent{2, 2, 2, 2};
  Vec4 lo{0, 0, 0, 0};
  Vec4 hi{1, 1, 1, 1};
  ScalarFn h = [](const Vec4&) { return 1.0; };
  Embedding embed;

  void validate() const;
  double spacing(int j) const { return (hi[j] - lo[j]) / (extent[j] - 1); }
  double cell_volume() const;
  double box_scale() const;  // largest side length
  std::size_t node_count() const;
  Index4 multi(std::size_t idx) const;
  std::size_t index(const Index4& m) const;
  Vec4 coords(std::size_t idx) const;
  double weight(std::size_t idx) const { return h(coords(idx)) * cell_volume(); }
  bool inside(const Vec4& x, double slack = 0.0) const;
  // Embedded operators with weights ρ_i = h(ξ_i)·Π spacing.
  DiscreteMeasure measure() const;
};

struct GridVectorField {
  std::vector<Vec4> values;
  VectorFn fn;  // analytic form; may be empty for purely sampled fields

  static GridVectorField sample(const LatticeChart& chart, VectorFn fn);
  Vec4 at(const Vec4& x) const;
  bool has_function() const { return static_cast<bool>(fn); }
};

enum class DivMode { Central2, Central4, Analytic };

// (1/h) ∂_j (h v^j). Grid modes use one-sided stencils at chart faces; Analytic differentiates
// the field function with Richardson central differences at a small step.
std::vector<double> divergence(const GridVectorField& v, const LatticeChart& chart, DivMode mode = DivMode::Central2);
double analytic_divergence(const VectorFn& v, const ScalarFn& h, const Vec4& x, double step);
// D_w g(x) for a scalar function of the coordinates.
double coordinate_derivative(const ScalarFn& g, const Vec4& x, const Vec4& w, double step);

struct Facet {
  std::size_t node;
  int axis;
  int sign;  // outward normal is sign·e_axis
  double area;
  Vec4 center;
};

struct Region {
  std::vector<double> chi;  // node indicator, in [0,1]; smoothed regions take fractional values
  ScalarFn indicator;        // continuum indicator used for pull-backs under flows
  std::vector<Facet> facets;
  bool sharp = true;

  bool contains(std::size_t i) const { return chi[i] > 0.5; }
  std::size_t count() const;
};

Region region_from_indicator(const LatticeChart& chart, ScalarFn indicator, bool sharp);
// Closed coordinate box; node membership uses a tolerance of 1e-9 spacings.
Region box_region(const LatticeChart& chart, const Vec4& lo, const Vec4& hi);
// {ξ^axis < value} (or > value); width > 0 gives a tanh-smoothed indicator without facets.
Region half_space(const LatticeChart& chart, int axis, double value, bool below, double width = 0.0);

// h·(v·n)·area per facet, n outward; v is evaluated at facet centers.
std::vector<double> boundary_flux_measure(const GridVectorField& v, const Region& region, const LatticeChart& chart);

// Jet (div v, T(dX(v))) over chart.measure(); the pushforward is a Richardson difference of the embedding.
Jet inner_solution(const GridVectorField& v, const LatticeChart& chart, DivMode mode = DivMode::Central2);

struct GaussCheck {
  double defect = 0.0;
  bool compact = true;  // false if f is non-negligible on a chart face
};
// |Σ_i ρ_i (div v·f + D_v f)(ξ_i)|
GaussCheck gauss_divergence_check(const GridVectorField& v, const ScalarFn& f, const LatticeChart& chart,
                                  DivMode mode = DivMode::Central2);

// Φ_τ(x) by classical RK4 with a fixed number of substeps. Throws Numerical if the trajectory
// leaves the chart by more than one spacing.
Vec4 flow_point(const VectorFn& v, const Vec4& x, double tau, const LatticeChart& chart, int substeps = 16);
// Ω_τ: node ξ belongs to Ω_τ with indicator χ(Φ_{−τ}(ξ)).
Region flow_region(const Region& region, const GridVectorField& v, double tau, const LatticeChart& chart,
                   int substeps = 16);

// Compact bump Π_j cos^k(π(ξ^j − c^j)/(2R)) on the box |ξ^j − c^j| < R, of class C^{k−1}.
struct Bump {
  Vec4 center{0.5, 0.5, 0.5, 0.5};
  double radius = 0.35;
  int power = 8;
  double value(const Vec4& x) const;
  // ∂_j of the bump.
  double partial(const Vec4& x, int j) const;
};

// v = amp·(∂_1ψ/h, −∂_0ψ/h, 0, 0) + div_part·ψ·dir with ψ the bump. With div_part = 0 the
// field is divergence-free for the measure h d⁴ξ.
VectorFn stream_field(const Bump& bump, const ScalarFn& h, double amp, double div_part = 0.0,
                      const Vec4& dir = {0.5, 0.2, 0.3, -0.2});

void write_field_csv(std::ostream& os, const LatticeChart& chart, const std::vector<double>& values);

}  // namespace cfs

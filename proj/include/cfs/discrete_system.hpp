#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "cfs/operator_core.hpp"

namespace cfs {

struct DiscreteMeasure {
  std::vector<Operator> points;
  std::vector<double> weights;
  double trace_c = 0.0;  // header value of the serialization format

  std::size_t size() const { return points.size(); }
  int dim() const { return points.empty() ? 0 : points[0].dim(); }
  int spin_dim() const { return points.empty() ? 0 : points[0].spin_dim(); }
  void validate() const;
};

struct MultiplierSet {
  double kappa = 0.0;
  double s_param = 0.0;
  double trace_c = 0.0;
};

struct ConstraintValues {
  double volume = 0.0;
  double trace_integral = 0.0;
  double boundedness = 0.0;
};

struct ElResidual {
  double support_residual = 0.0;
  double exterior_violation = 0.0;
};

// Row sums r_i = Σ_j ρ_j L_κ(x_i, x_j), rows in parallel, each row summed in index order.
std::vector<double> pair_row_sums(const DiscreteMeasure& rho, const KernelParams& p);
std::vector<double> pair_row_sums_serial(const DiscreteMeasure& rho, const KernelParams& p);

double causal_action(const DiscreteMeasure& rho, const KernelParams& p);
// Serial reference using the full f×f eigensolve for every pair.
double causal_action_reference(const DiscreteMeasure& rho, const KernelParams& p);

ConstraintValues constraint_values(const DiscreteMeasure& rho);

double ell_kappa(const Operator& x, const DiscreteMeasure& rho, const MultiplierSet& mult, double eta = 0.0);

ElResidual el_residual(const DiscreteMeasure& rho, const MultiplierSet& mult, int probe_count,
                       double probe_radius, std::uint64_t seed);

void write_measure(std::ostream& os, const DiscreteMeasure& rho);
DiscreteMeasure read_measure(std::istream& is);

// Random valid operator of dimension f, spin n, trace c (for tests and initial data).
Operator random_operator(int f, int n, double c, std::mt19937_64& rng);
// Hermitian matrix with i.i.d. Gaussian entries, Frobenius norm equal to scale.
CMat random_hermitian(int f, double scale, std::mt19937_64& rng);
CMat random_unitary(int f, std::mt19937_64& rng);

}  // namespace cfs

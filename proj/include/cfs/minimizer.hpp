#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfs/discrete_system.hpp"

namespace cfs {

struct MinimizeConfig {
  double volume_target = 1.0;
  double trace_target = 1.0;
  double kappa = 0.0;
  int max_iters = 400;
  double tol_grad = 1e-8;
  std::vector<double> eta_schedule{1e-2, 1e-4, 1e-6};  // relative to operator scale, then a polish at 0
  double penalty_growth = 10.0;
  std::uint64_t seed = 1;
  void validate() const;
};

struct IterationRecord {
  int iter;
  double eta;
  double action;
  double volume_violation;
  double trace_violation;
  double grad_norm;
  double step;
};

struct MinimizeReport {
  int iterations = 0;
  bool converged = false;
  double action = 0.0;
  double grad_norm = 0.0;
  double volume_violation = 0.0;
  double trace_violation = 0.0;
  int fd_gradient_pairs = 0;
  std::vector<IterationRecord> history;
};

struct MinimizeResult {
  DiscreteMeasure measure;
  MultiplierSet multipliers;
  MinimizeReport report;
};

struct SEstimate {
  double s_param = 0.0;
  double spread = 0.0;
};

struct CriticalityReport {
  double support_residual = 0.0;
  double exterior_violation = 0.0;
  double spread = 0.0;
  double volume_violation = 0.0;
  double trace_violation = 0.0;
};

// Gradient of L_κ(x,y) with respect to x as a Hermitian matrix G with dL = tr(G dx).
// Analytic when the product spectrum is simple (gap > 1e-8·scale), central differences otherwise.
CMat lagrangian_gradient(const Operator& x, const Operator& y, const KernelParams& p, bool* used_fd = nullptr);
CMat lagrangian_gradient_fd(const Operator& x, const Operator& y, const KernelParams& p);

MinimizeResult minimize_action(const DiscreteMeasure& init, const MinimizeConfig& cfg);
SEstimate estimate_s(const DiscreteMeasure& rho, double kappa);
CriticalityReport criticality_report(const DiscreteMeasure& rho, const MultiplierSet& mult, const MinimizeConfig& cfg);

// Random initial measure with N points of trace c = trace_target/volume_target and equal weights.
DiscreteMeasure random_measure(int f, int n, int N, const MinimizeConfig& cfg);

void write_history_csv(const std::string& path, const MinimizeReport& rep);

}  // namespace cfs

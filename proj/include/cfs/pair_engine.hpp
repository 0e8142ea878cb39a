#pragma once

#include <array>
#include <vector>

#include "cfs/lattice.hpp"

namespace cfs {

// Operators displaced along a vector field at the nodes where the field is nonzero.
struct FieldPool {
  bool present = false;
  double s1 = 0.0;  // first-derivative step (flow time)
  double s2 = 0.0;  // step used inside mixed derivatives
  std::vector<int> slot;  // node -> pool slot or -1
  std::vector<std::size_t> nodes;
  std::vector<std::array<Operator, 4>> line1;  // ξ + k·s1·w(ξ), k in kLine
  std::vector<std::array<Operator, 4>> line2;  // ξ + k·s2·w(ξ)

  bool active(std::size_t i) const { return present && slot[i] >= 0; }
};

// X(ξ + s·w1(ξ) + t·w2(ξ + s·w1(ξ))) on the mixed stencil.
struct NestedPool {
  bool present = false;
  double a = 0.0, b = 0.0;
  std::vector<int> slot;
  std::vector<std::array<Operator, 8>> ops;

  bool active(std::size_t i) const { return present && slot[i] >= 0; }
};

// Pair kernel on a lattice background: base operators, weights, and the displaced pools
// needed for first and second derivatives along one or two vector fields.
class LatticePairs {
 public:
  // Relative level below which analytic divergences count as zero.
  static constexpr double kDivNoise = 1e-8;

  LatticePairs(const LatticeChart& chart, const KernelParams& p, DivMode mode);

  void set_v(const GridVectorField& v);
  // Requires set_v; also builds the (u then v) nested pool.
  void set_u(const GridVectorField& u);

  const LatticeChart& chart() const { return chart_; }
  const DiscreteMeasure& measure() const { return rho_; }
  const KernelParams& params() const { return p_; }
  std::size_t size() const { return rho_.size(); }
  double weight(std::size_t i) const { return rho_.weights[i]; }

  const FieldPool& v() const { return v_; }
  const FieldPool& u() const { return u_; }
  const NestedPool& vv() const { return vv_; }
  const NestedPool& uv() const { return uv_; }

  // Scalar jet components and their derivatives: bv = div v, dv_bv = D_v div v, au = div u,
  // du_bv = D_u div v.
  const std::vector<double>& bv() const { return bv_; }
  const std::vector<double>& dv_bv() const { return dv_bv_; }
  const std::vector<double>& au() const { return au_; }
  const std::vector<double>& du_bv() const { return du_bv_; }

  double L(std::size_t i, std::size_t j) const;
  double L_at(const Operator& x, std::size_t j) const;
  // Derivative of L along the pool field, acting on the first (side 0) or second (side 1) argument.
  double first(const FieldPool& f, std::size_t i, std::size_t j, int side) const;
  // ∂s∂t L(A_i(s), B_j(t)); OuterFirst takes the s difference outermost.
  double cross(const FieldPool& A, std::size_t i, const FieldPool& B, std::size_t j, NestingOrder order) const;
  // Nested second derivative at the first (side 0) or second (side 1) argument.
  double nested(const NestedPool& n, std::size_t i, std::size_t j, int side,
                NestingOrder order = NestingOrder::OuterFirst) const;

  const std::vector<std::size_t>& active_nodes() const { return active_; }
  // Nodes carrying a nonzero field, divergence or divergence derivative.
  bool is_active(std::size_t i) const { return active_flag_[i] != 0; }

  // For each row i in rows, accumulates f(i, j, acc) over columns j in index order; rows run in
  // parallel when enabled. With skip_inactive, rows whose node carries no field data only visit
  // the active columns.
  template <std::size_t K, class F>
  std::vector<std::array<double, K>> row_sums(const std::vector<std::size_t>& rows, F f, bool skip_inactive,
                                              bool parallel) const;

 private:
  FieldPool build_pool(const GridVectorField& w) const;
  NestedPool build_nested(const GridVectorField& w1, const GridVectorField& w2, double a, double b) const;
  std::vector<double> directional_of_div(const GridVectorField& along, const GridVectorField& of) const;
  void refresh_active();
  void snap_noise();

  LatticeChart chart_;
  KernelParams p_;
  DivMode mode_;
  DiscreteMeasure rho_;
  GridVectorField vf_, uf_;
  FieldPool v_, u_;
  NestedPool vv_, uv_;
  std::vector<double> bv_, dv_bv_, au_, du_bv_;
  std::vector<std::size_t> active_;
  std::vector<char> active_flag_;
};

template <std::size_t K, class F>
std::vector<std::array<double, K>> LatticePairs::row_sums(const std::vector<std::size_t>& rows, F f,
                                                          bool skip_inactive, bool parallel) const {
  std::vector<std::array<double, K>> out(rows.size());
  const std::size_t N = size();
  const long R = static_cast<long>(rows.size());
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
  for (long r = 0; r < R; ++r) {
    const std::size_t i = rows[r];
    std::array<double, K> acc{};
    if (!skip_inactive || is_active(i)) {
      for (std::size_t j = 0; j < N; ++j) f(i, j, acc);
    } else {
      for (std::size_t j : active_) f(i, j, acc);
    }
    out[r] = acc;
  }
  return out;
}

}  // namespace cfs

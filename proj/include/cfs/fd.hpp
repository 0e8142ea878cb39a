#pragma once

namespace cfs {

// Two-level Richardson on central differences: values at +h, −h, +2h, −2h.
inline double richardson_first(double fp, double fm, double fp2, double fm2, double h) {
  return (4 * ((fp - fm) / (2 * h)) - (fp2 - fm2) / (4 * h)) / 3;
}

enum class NestingOrder { OuterFirst, InnerFirst };

// ∂s∂t f at 0 from f(±a,±b) and f(±2a,±2b), Richardson combined. Values are ordered
// (+,+), (+,−), (−,+), (−,−), first at (a,b), then at (2a,2b). OuterFirst differences t inside
// and s outside; InnerFirst the other way round. Both use the same eight values.
inline double mixed_from(const double* v, double a, double b, NestingOrder order) {
  auto m = [&](const double* w, double sa, double sb) {
    if (order == NestingOrder::OuterFirst) {
      double gp = (w[0] - w[1]) / (2 * sb);
      double gm = (w[2] - w[3]) / (2 * sb);
      return (gp - gm) / (2 * sa);
    }
    double gp = (w[0] - w[2]) / (2 * sa);
    double gm = (w[1] - w[3]) / (2 * sa);
    return (gp - gm) / (2 * sb);
  };
  return (4 * m(v, a, b) - m(v + 4, 2 * a, 2 * b)) / 3;
}

// Stencil offsets matching mixed_from.
inline constexpr double kMixedS[8] = {1, 1, -1, -1, 2, 2, -2, -2};
inline constexpr double kMixedT[8] = {1, -1, 1, -1, 2, -2, 2, -2};
// Offsets matching richardson_first.
inline constexpr double kLine[4] = {1, -1, 2, -2};

}  // namespace cfs

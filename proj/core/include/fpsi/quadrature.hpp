#pragma once

#include <array>
#include <vector>

namespace fpsi {

// Quadrature point on the reference triangle, stored as barycentric
// coordinates (l0, l1, l2) with l0 + l1 + l2 = 1.
struct TrianglePoint {
  double l0, l1, l2;
};

struct TriangleRule {
  int order = 0;                      // exact for total degree <= order
  std::vector<TrianglePoint> points;
  std::vector<double> weights;        // sum to 1/2 (reference area)
};

struct EdgeRule {
  int order = 0;                      // exact for degree <= order
  std::vector<double> points;         // in [0, 1]
  std::vector<double> weights;        // sum to 1
};

// Fixed positive-weight Gauss rules; the returned rule may exceed the
// requested order. Throws Argument outside [1,6] / [1,8].
const TriangleRule& triangle_rule(int order);
const EdgeRule& edge_rule(int order);

// Default orders per form type: products of P2 basis functions with a
// P1-projected coefficient are degree <= 5, constant-coefficient forms
// degree <= 4, interface trace products degree <= 4.
constexpr int kVolumeOrderVariable = 6;
constexpr int kVolumeOrderConstant = 4;
constexpr int kEdgeOrderDefault = 5;

}  // namespace fpsi

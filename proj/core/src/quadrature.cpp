#include "fpsi/quadrature.hpp"

#include <cmath>

#include "fpsi/errors.hpp"

namespace fpsi {

namespace {

TriangleRule make_centroid() {
  TriangleRule r;
  r.order = 1;
  r.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
  r.weights = {0.5};
  return r;
}

TriangleRule make_deg2() {
  TriangleRule r;
  r.order = 2;
  const double a = 2.0 / 3.0, b = 1.0 / 6.0;
  r.points = {{a, b, b}, {b, a, b}, {b, b, a}};
  r.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
  return r;
}

void push_sym3(TriangleRule& r, double a, double b, double w) {
  // Orbit of (a, b, b); w given relative to unit total weight.
  r.points.push_back({a, b, b});
  r.points.push_back({b, a, b});
  r.points.push_back({b, b, a});
  for (int i = 0; i < 3; ++i) r.weights.push_back(0.5 * w);
}

void push_sym6(TriangleRule& r, double a, double b, double c, double w) {
  r.points.push_back({a, b, c});
  r.points.push_back({a, c, b});
  r.points.push_back({b, a, c});
  r.points.push_back({b, c, a});
  r.points.push_back({c, a, b});
  r.points.push_back({c, b, a});
  for (int i = 0; i < 6; ++i) r.weights.push_back(0.5 * w);
}

TriangleRule make_deg4() {
  // Six-point degree-4 rule (Cowper).
  TriangleRule r;
  r.order = 4;
  push_sym3(r, 0.108103018168070, 0.445948490915965, 0.223381589678011);
  push_sym3(r, 0.816847572980459, 0.091576213509771, 0.109951743655322);
  return r;
}

TriangleRule make_deg6() {
  // Twelve-point degree-6 rule (Cowper).
  TriangleRule r;
  r.order = 6;
  push_sym3(r, 0.873821971016996, 0.063089014491502, 0.050844906370207);
  push_sym3(r, 0.501426509658179, 0.249286745170910, 0.116786275726379);
  push_sym6(r, 0.636502499121399, 0.310352451033785, 0.053145049844816,
            0.082851075618374);
  return r;
}

EdgeRule make_gauss(int n) {
  // Gauss-Legendre nodes on [-1,1], mapped to [0,1]; exact to degree 2n-1.
  EdgeRule r;
  r.order = 2 * n - 1;
  std::vector<double> x, w;
  switch (n) {
    case 1:
      x = {0.0};
      w = {2.0};
      break;
    case 2: {
      const double p = 1.0 / std::sqrt(3.0);
      x = {-p, p};
      w = {1.0, 1.0};
      break;
    }
    case 3: {
      const double p = std::sqrt(3.0 / 5.0);
      x = {-p, 0.0, p};
      w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    case 4: {
      const double p1 = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double p2 = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double w1 = (18.0 + std::sqrt(30.0)) / 36.0;
      const double w2 = (18.0 - std::sqrt(30.0)) / 36.0;
      x = {-p2, -p1, p1, p2};
      w = {w2, w1, w1, w2};
      break;
    }
    case 5: {
      const double p1 = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double p2 = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double w1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double w2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      x = {-p2, -p1, 0.0, p1, p2};
      w = {w2, w1, 128.0 / 225.0, w1, w2};
      break;
    }
  }
  for (size_t i = 0; i < x.size(); ++i) {
    r.points.push_back(0.5 * (x[i] + 1.0));
    r.weights.push_back(0.5 * w[i]);
  }
  return r;
}

}  // namespace

const TriangleRule& triangle_rule(int order) {
  require(order >= 1 && order <= 6, ErrorCode::Argument,
          "triangle rule order must be in [1,6], got " + std::to_string(order));
  static const TriangleRule deg1 = make_centroid();
  static const TriangleRule deg2 = make_deg2();
  static const TriangleRule deg4 = make_deg4();
  static const TriangleRule deg6 = make_deg6();
  if (order <= 1) return deg1;
  if (order <= 2) return deg2;
  if (order <= 4) return deg4;
  return deg6;
}

const EdgeRule& edge_rule(int order) {
  require(order >= 1 && order <= 8, ErrorCode::Argument,
          "edge rule order must be in [1,8], got " + std::to_string(order));
  static const EdgeRule g1 = make_gauss(1);
  static const EdgeRule g2 = make_gauss(2);
  static const EdgeRule g3 = make_gauss(3);
  static const EdgeRule g4 = make_gauss(4);
  static const EdgeRule g5 = make_gauss(5);
  if (order <= 1) return g1;
  if (order <= 3) return g2;
  if (order <= 5) return g3;
  if (order <= 7) return g4;
  return g5;
}

}  // namespace fpsi

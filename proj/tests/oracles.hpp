#pragma once

// Test-only oracles, independent of the library's quadrature/assembly path:
// exact rational integration of bivariate polynomials over the reference
// triangle {x,y >= 0, x+y <= 1} via  int x^i y^j = i! j! / (i+j+2)!.

#include <array>
#include <cmath>
#include <map>
#include <random>

#include "fpsi/fespace.hpp"

namespace oracle {

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline double monomial_integral_ref_triangle(int i, int j) {
  return factorial(i) * factorial(j) / factorial(i + j + 2);
}

inline double monomial_integral_edge(int k) { return 1.0 / (k + 1); }

struct Poly2 {
  std::map<std::pair<int, int>, double> c;  // (i,j) -> coefficient of x^i y^j

  static Poly2 mono(int i, int j, double v) {
    Poly2 p;
    p.c[{i, j}] = v;
    return p;
  }
  static Poly2 constant(double v) { return mono(0, 0, v); }

  Poly2 operator+(const Poly2& o) const {
    Poly2 r = *this;
    for (const auto& [k, v] : o.c) r.c[k] += v;
    return r;
  }
  Poly2 operator-(const Poly2& o) const { return *this + o * -1.0; }
  Poly2 operator*(double s) const {
    Poly2 r = *this;
    for (auto& [k, v] : r.c) v *= s;
    return r;
  }
  Poly2 operator*(const Poly2& o) const {
    Poly2 r;
    for (const auto& [ka, va] : c)
      for (const auto& [kb, vb] : o.c)
        r.c[{ka.first + kb.first, ka.second + kb.second}] += va * vb;
    return r;
  }
  Poly2 dx() const {
    Poly2 r;
    for (const auto& [k, v] : c)
      if (k.first > 0) r.c[{k.first - 1, k.second}] += v * k.first;
    return r;
  }
  Poly2 dy() const {
    Poly2 r;
    for (const auto& [k, v] : c)
      if (k.second > 0) r.c[{k.first, k.second - 1}] += v * k.second;
    return r;
  }
  double integrate_ref_triangle() const {
    double s = 0.0;
    for (const auto& [k, v] : c) s += v * monomial_integral_ref_triangle(k.first, k.second);
    return s;
  }
  double eval(double x, double y) const {
    double s = 0.0;
    for (const auto& [k, v] : c) s += v * std::pow(x, k.first) * std::pow(y, k.second);
    return s;
  }
};

// Reference-triangle Lagrange bases as exact polynomials, in the library's
// local node order (vertices then midsides opposite each vertex).
inline std::array<Poly2, 3> p1_basis() {
  const Poly2 x = Poly2::mono(1, 0, 1.0), y = Poly2::mono(0, 1, 1.0);
  const Poly2 l0 = Poly2::constant(1.0) - x - y;
  return {l0, x, y};
}

inline std::array<Poly2, 6> p2_basis() {
  const Poly2 x = Poly2::mono(1, 0, 1.0), y = Poly2::mono(0, 1, 1.0);
  const Poly2 l0 = Poly2::constant(1.0) - x - y;
  const Poly2 l1 = x, l2 = y;
  auto vertex = [](const Poly2& l) { return l * (l * 2.0 - Poly2::constant(1.0)); };
  return {vertex(l0), vertex(l1),          vertex(l2),
          l1 * l2 * 4.0, l2 * l0 * 4.0, l0 * l1 * 4.0};
}

// Deterministic uniform sampler for property-style sweeps.
class Rng {
public:
  explicit Rng(unsigned seed) : gen_(seed) {}
  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(gen_);
  }

private:
  std::mt19937 gen_;
};

}  // namespace oracle

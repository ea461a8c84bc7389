#pragma once

#include <array>
#include <cmath>

namespace fpsi {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  double operator[](int i) const { return i == 0 ? x : y; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }
// 90-degree counter-clockwise rotation.
inline Vec2 rot90(Vec2 a) { return {-a.y, a.x}; }

// Row-major 2x2 matrix, used for field gradients and stresses.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  Mat2 operator+(const Mat2& o) const {
    return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
  }
  Mat2 operator-(const Mat2& o) const {
    return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
  }
  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
  Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
  double trace() const { return a11 + a22; }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }

// Symmetric gradient eps(u) = (grad u + grad u^T)/2 of a gradient matrix.
inline Mat2 sym(const Mat2& g) {
  const double off = 0.5 * (g.a12 + g.a21);
  return {g.a11, off, off, g.a22};
}

inline Mat2 identity2(double s = 1.0) { return {s, 0.0, 0.0, s}; }

}  // namespace fpsi

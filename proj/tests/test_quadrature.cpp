#include <cmath>

#include "doctest.h"
#include "fpsi/errors.hpp"
#include "fpsi/quadrature.hpp"
#include "oracles.hpp"

using namespace fpsi;

namespace {

double integrate_tri(const TriangleRule& rule, int i, int j) {
  double s = 0.0;
  for (size_t q = 0; q < rule.points.size(); ++q)
    s += rule.weights[q] * std::pow(rule.points[q].l1, i) * std::pow(rule.points[q].l2, j);
  return s;
}

double integrate_edge(const EdgeRule& rule, int k) {
  double s = 0.0;
  for (size_t q = 0; q < rule.points.size(); ++q)
    s += rule.weights[q] * std::pow(rule.points[q], k);
  return s;
}

}  // namespace

TEST_CASE("triangle rules: weights positive and summing to the reference area") {
  for (int order = 1; order <= 6; ++order) {
    const auto& rule = triangle_rule(order);
    double sum = 0.0;
    for (double w : rule.weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(0.5).epsilon(1e-14));
    for (const auto& p : rule.points) CHECK(p.l0 + p.l1 + p.l2 == doctest::Approx(1.0));
  }
}

TEST_CASE("triangle rules: exact for all monomials up to the declared order") {
  for (int order = 1; order <= 6; ++order) {
    const auto& rule = triangle_rule(order);
    for (int i = 0; i + 0 <= order; ++i) {
      for (int j = 0; i + j <= order; ++j) {
        const double exact = oracle::monomial_integral_ref_triangle(i, j);
        CHECK(integrate_tri(rule, i, j) == doctest::Approx(exact).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("triangle rule values from the symbolic oracle") {
  CHECK(integrate_tri(triangle_rule(1), 0, 0) == doctest::Approx(0.5));
  CHECK(integrate_tri(triangle_rule(2), 2, 0) == doctest::Approx(1.0 / 12.0));
  CHECK(integrate_tri(triangle_rule(4), 2, 2) == doctest::Approx(1.0 / 180.0));
}

TEST_CASE("edge rules: positivity, normalization, exactness") {
  for (int order = 1; order <= 8; ++order) {
    const auto& rule = edge_rule(order);
    double sum = 0.0;
    for (double w : rule.weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k <= order; ++k)
      CHECK(integrate_edge(rule, k) ==
            doctest::Approx(oracle::monomial_integral_edge(k)).epsilon(1e-13));
  }
  CHECK(integrate_edge(edge_rule(1), 0) == doctest::Approx(1.0));
  CHECK(integrate_edge(edge_rule(3), 3) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(integrate_edge(edge_rule(5), 5) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("out-of-range orders are rejected") {
  CHECK_THROWS_AS(triangle_rule(0), Error);
  CHECK_THROWS_AS(triangle_rule(7), Error);
  CHECK_THROWS_AS(edge_rule(0), Error);
  CHECK_THROWS_AS(edge_rule(9), Error);
}

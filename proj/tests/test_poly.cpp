#include <cmath>
#include <random>

#include "doctest.h"
#include "sparseinv/poly.hpp"

using namespace sparseinv;

namespace {

Polynomial rand_poly(std::mt19937_64& rng, int num_vars, int max_degree, int terms) {
  std::uniform_int_distribution<int> exp_dist(0, max_degree);
  std::uniform_real_distribution<double> coeff_dist(-2.0, 2.0);
  Polynomial p(num_vars);
  for (int t = 0; t < terms; ++t) {
    Exponents e(static_cast<std::size_t>(num_vars), 0);
    int budget = max_degree;
    for (int i = 0; i < num_vars; ++i) {
      const int d = std::min(budget, exp_dist(rng) % (max_degree + 1));
      e[static_cast<std::size_t>(i)] = d;
      budget -= d;
    }
    p += Polynomial::monomial(num_vars, e, coeff_dist(rng));
  }
  return p;
}

std::vector<double> rand_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = d(rng);
  return x;
}

const std::vector<std::string> kY = {"y1", "y2", "y3", "y4", "y5",
                                     "y6", "y7", "y8", "y9", "y10"};

}  // namespace

TEST_SUITE("poly") {

TEST_CASE("eval on fixed examples") {
  Polynomial zero(2);
  CHECK(zero.eval(std::vector<double>{3.7, -1.0}) == 0.0);

  Polynomial p = Polynomial::parse("y1^2*y2", kY);
  std::vector<double> x(10, 0.0);
  x[0] = 1.0;
  x[1] = 2.0;
  CHECK(p.eval(x) == doctest::Approx(2.0).epsilon(1e-14));

  // x1*x3*(1 - x3) at (1, 0, 0.5)
  Polynomial q = Polynomial::parse("x1*x3 - x1*x3^2", {"x1", "x2", "x3"});
  CHECK(q.eval(std::vector<double>{1.0, 0.0, 0.5}) == doctest::Approx(0.25).epsilon(1e-14));

  CHECK_THROWS_AS(p.eval(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("partial derivatives") {
  Polynomial x2 = Polynomial::parse("x1^2", {"x1"});
  CHECK(x2.partial(0) == Polynomial::parse("2*x1", {"x1"}));

  Polynomial p = Polynomial::parse("y1^2*y2", kY);
  CHECK(p.partial(1) == Polynomial::parse("y1^2", kY));

  Polynomial q = Polynomial::parse("y1*y2", kY);
  CHECK(q.partial(2).is_zero());
  CHECK(q.partial(2).degree() == 0);

  CHECK_THROWS_AS(q.partial(10), std::out_of_range);
}

TEST_CASE("lie derivative") {
  const std::vector<std::string> x1 = {"x1"};
  Polynomial v = Polynomial::parse("x1^2", x1);
  PolyVector f({Polynomial::parse("-x1", x1)});
  CHECK(lie_derivative(v, f) == Polynomial::parse("-2*x1^2", x1));

  CHECK(lie_derivative(Polynomial::constant(1, 5.0), f).is_zero());

  // leaf oscillator: grad(x1^2 + x2^2) . f contains -20 x1^2 x2^2
  const std::vector<std::string> x12 = {"x1", "x2"};
  PolyVector vdp({Polynomial::parse("2*x2", x12),
                  Polynomial::parse("-0.8*x1 - 10*x1^2*x2 + 2.1*x2", x12)});
  Polynomial lv = lie_derivative(Polynomial::parse("x1^2 + x2^2", x12), vdp);
  CHECK(lv.coeff({2, 2}) == doctest::Approx(-20.0));
  CHECK(lv == Polynomial::parse("2.4*x1*x2 - 20*x1^2*x2^2 + 4.2*x2^2", x12));
}

TEST_CASE("time-augmented lie derivative") {
  // v(t,x) = t*x over (t, x); f = (-x): Lv = x + t*(-x)
  Polynomial v = Polynomial::parse("t*x1", {"t", "x1"});
  PolyVector f({Polynomial::parse("-x1", {"x1"})});
  Polynomial lv = lie_derivative(v, f, true);
  CHECK(lv == Polynomial::parse("x1 - t*x1", {"t", "x1"}));
}

TEST_CASE("support") {
  CHECK(Polynomial::parse("y3*y2 + y3^2", kY).support() == std::set<int>{1, 2});
  CHECK(Polynomial::constant(4, 3.0).support().empty());
  CHECK(Polynomial::parse("y2^3*y6*y7", kY).support() == std::set<int>{1, 5, 6});
}

TEST_CASE("eval is a ring homomorphism on random inputs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    Polynomial p = rand_poly(rng, n, 3, 4);
    Polynomial q = rand_poly(rng, n, 3, 4);
    const auto x = rand_point(rng, n);
    const double scale = 1.0 + std::abs(p.eval(x)) + std::abs(q.eval(x));
    CHECK(std::abs((p + q).eval(x) - (p.eval(x) + q.eval(x))) <= 1e-12 * scale);
    CHECK(std::abs((p * q).eval(x) - p.eval(x) * q.eval(x)) <= 1e-12 * scale * scale);
  }
}

TEST_CASE("partials commute exactly") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    Polynomial p = rand_poly(rng, n, 4, 6);
    const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    CHECK(p.partial(i).partial(j) == p.partial(j).partial(i));
  }
}

TEST_CASE("lie derivative is linear in v") {
  // integer coefficients keep both evaluation orders exactly representable,
  // so the coefficient maps must agree bit for bit
  std::mt19937_64 rng(9);
  auto int_poly = [&](int n, int max_degree, int terms) {
    Polynomial p(n);
    for (int t = 0; t < terms; ++t) {
      Exponents e(static_cast<std::size_t>(n), 0);
      int budget = max_degree;
      for (int i = 0; i < n; ++i) {
        const int d = std::min<int>(budget, static_cast<int>(rng() % (max_degree + 1)));
        e[static_cast<std::size_t>(i)] = d;
        budget -= d;
      }
      p += Polynomial::monomial(n, e, static_cast<double>(1 + rng() % 7) * (rng() % 2 ? 1 : -1));
    }
    return p;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    std::vector<Polynomial> comps;
    for (int i = 0; i < n; ++i) comps.push_back(int_poly(n, 2, 3));
    PolyVector f(comps);
    Polynomial v = int_poly(n, 3, 4);
    Polynomial w = int_poly(n, 3, 4);
    const double a = 3.0, b = -2.0;
    CHECK(lie_derivative(a * v + b * w, f) ==
          a * lie_derivative(v, f) + b * lie_derivative(w, f));
  }
}

TEST_CASE("support of products") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    Polynomial p = rand_poly(rng, n, 2, 3);
    Polynomial q = rand_poly(rng, n, 2, 3);
    auto su = p.support();
    for (int v : q.support()) su.insert(v);
    for (int v : (p * q).support()) CHECK(su.count(v) == 1);
  }
}

TEST_CASE("pruning threshold keeps supports clean") {
  Polynomial a = Polynomial::parse("x1 + 1e-15*x2", {"x1", "x2"});
  CHECK(a.support() == std::set<int>{0});
  Polynomial b = Polynomial::parse("x1 + x2", {"x1", "x2"});
  Polynomial c = b - Polynomial::parse("x2", {"x1", "x2"});
  CHECK(c.support() == std::set<int>{0});
}

TEST_CASE("serialization round trip in graded-lex order") {
  const std::vector<std::string> names = {"x1", "x2", "x3"};
  Polynomial p = Polynomial::parse("2*x1^2*x2 - 0.8*x3", names);
  CHECK(p.to_string(names) == "2*x1^2*x2 - 0.8*x3");
  CHECK(Polynomial::parse(p.to_string(names), names) == p);

  Polynomial q = Polynomial::parse("x2^2 + x1*x2 + x1^2 - 1", names);
  CHECK(q.to_string(names) == "x1^2 + x1*x2 + x2^2 - 1");

  CHECK(Polynomial(3).to_string(names) == "0");

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    Polynomial r = rand_poly(rng, 3, 4, 5);
    CHECK(Polynomial::parse(r.to_string(names), names) == r);
  }
}

TEST_CASE("parse errors carry context") {
  CHECK_THROWS_AS(Polynomial::parse("x1 + zz", {"x1"}), std::invalid_argument);
  CHECK_THROWS_AS(Polynomial::parse("x1 ^ -2", {"x1"}), std::invalid_argument);
  CHECK_THROWS_AS(Polynomial::parse("", {"x1"}), std::invalid_argument);
  CHECK_THROWS_AS(Polynomial::parse("x1 +", {"x1"}), std::invalid_argument);
}

TEST_CASE("substitute and remap") {
  Polynomial p = Polynomial::parse("t^2*x1 + x1 + 3", {"t", "x1"});
  CHECK(p.substitute(0, 2.0) == Polynomial::parse("5*x1 + 3", {"t", "x1"}));

  Polynomial q = Polynomial::parse("x1*x3", {"x1", "x2", "x3"});
  CHECK(q.remap(2, {0, -1, 1}) == Polynomial::parse("a*b", {"a", "b"}));
  CHECK_THROWS_AS(q.remap(2, {0, 1, -1}), std::invalid_argument);
}

TEST_CASE("monomial basis enumeration") {
  auto b = monomial_basis(2, {0, 1}, 2);
  REQUIRE(b.size() == 6);  // 1, x2, x1, x2^2, x1 x2, x1^2
  CHECK(b[0] == Exponents{0, 0});
  CHECK(b[1] == Exponents{0, 1});
  CHECK(b[2] == Exponents{1, 0});
  CHECK(b[5] == Exponents{2, 0});

  auto s = monomial_basis(3, {1}, 3);
  CHECK(s.size() == 4);
  for (const auto& e : s) {
    CHECK(e[0] == 0);
    CHECK(e[2] == 0);
  }

  // binomial count C(n+d, d)
  CHECK(monomial_basis(5, {0, 1, 2, 3, 4}, 4).size() == 126);
}

}  // TEST_SUITE

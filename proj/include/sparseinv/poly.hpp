#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sparseinv {

// Exponent vector of a monomial; length always equals the ambient variable count.
using Exponents = std::vector<int>;

// Coefficients below this magnitude are dropped after arithmetic so that
// numerical noise cannot pollute variable supports (and hence the sparsity graph).
inline constexpr double kCoeffEpsilon = 1e-14;

int total_degree(const Exponents& e);

// Graded lexicographic order: total degree first, then plain lexicographic
// comparison of the exponent vector. This is the canonical term order used for
// serialization and monomial-basis enumeration.
bool grlex_less(const Exponents& a, const Exponents& b);

struct ExponentsHash {
  std::size_t operator()(const Exponents& e) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (int v : e) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

using TermMap = std::unordered_map<Exponents, double, ExponentsHash>;

/// Sparse multivariate polynomial with real coefficients, stored as a map from
/// exponent vectors to coefficients. Immutable by convention after construction;
/// all operations return new values.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int num_vars);

  static Polynomial constant(int num_vars, double value);
  static Polynomial variable(int num_vars, int index);
  static Polynomial monomial(int num_vars, Exponents exps, double coeff);

  int num_vars() const { return num_vars_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }
  int degree() const;  // 0 for the zero polynomial
  const TermMap& terms() const { return terms_; }

  // Terms in ascending graded-lex order; the deterministic view used by
  // printing, hashing into SDP rows, and anything order-sensitive.
  std::vector<std::pair<Exponents, double>> sorted_terms() const;

  double coeff(const Exponents& e) const;
  double max_abs_coeff() const;

  double eval(std::span<const double> x) const;
  Polynomial partial(int var) const;
  std::set<int> support() const;

  // Partial evaluation: substitute variable `var` by `value`. The result keeps
  // the same ambient dimension with exponent 0 on `var`.
  Polynomial substitute(int var, double value) const;

  // Re-index variables: var_map[old] = new index, or -1 if the variable must
  // not occur. Throws if a mapped-out variable appears in some term.
  Polynomial remap(int new_num_vars, const std::vector<int>& var_map) const;

  Polynomial& operator+=(const Polynomial& rhs);
  Polynomial& operator-=(const Polynomial& rhs);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend bool operator==(const Polynomial& a, const Polynomial& b);

  // Human-readable monomial sum, e.g. "2*x1^2*x2 - 0.8*x3", emitted in
  // descending graded-lex order. Default names are x1..xn.
  std::string to_string(const std::vector<std::string>& names = {}) const;

  // Parses the same format. Accepted grammar: signed terms joined by +/-,
  // each a '*'-product of numbers and `name[^exp]` factors.
  static Polynomial parse(const std::string& text, const std::vector<std::string>& var_names);

 private:
  void add_term(const Exponents& e, double c);

  int num_vars_ = 0;
  TermMap terms_;
};

/// Ordered list of polynomials sharing one ambient dimension (a vector field,
/// a gradient, ...).
class PolyVector {
 public:
  PolyVector() = default;
  explicit PolyVector(std::vector<Polynomial> comps);

  std::size_t size() const { return comps_.size(); }
  bool empty() const { return comps_.empty(); }
  int num_vars() const { return comps_.empty() ? 0 : comps_.front().num_vars(); }
  int degree() const;
  const Polynomial& operator[](std::size_t i) const { return comps_[i]; }
  void push_back(Polynomial p);
  auto begin() const { return comps_.begin(); }
  auto end() const { return comps_.end(); }

 private:
  std::vector<Polynomial> comps_;
};

// Computes the flow part of the Liouville derivative, grad(v) . f. In
// time-augmented mode v lives over (t, x) with t at index 0 and the result is
// dv/dt + grad_x(v) . f, with f's components over the x variables only.
Polynomial lie_derivative(const Polynomial& v, const PolyVector& f, bool time_augmented = false);

// All monomials of total degree <= max_degree whose support lies in `scope`
// (ambient indices), as ambient exponent vectors in ascending graded-lex order.
std::vector<Exponents> monomial_basis(int num_vars, const std::vector<int>& scope, int max_degree);

// Deterministic shortest round-trip formatting used across all text artifacts.
std::string format_double(double v);

}  // namespace sparseinv

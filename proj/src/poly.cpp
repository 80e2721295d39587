#include "sparseinv/poly.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sparseinv {

int total_degree(const Exponents& e) {
  int d = 0;
  for (int v : e) d += v;
  return d;
}

bool grlex_less(const Exponents& a, const Exponents& b) {
  const int da = total_degree(a), db = total_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

Polynomial::Polynomial(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 0) throw std::invalid_argument("Polynomial: negative variable count");
}

Polynomial Polynomial::constant(int num_vars, double value) {
  Polynomial p(num_vars);
  p.add_term(Exponents(static_cast<std::size_t>(num_vars), 0), value);
  return p;
}

Polynomial Polynomial::variable(int num_vars, int index) {
  if (index < 0 || index >= num_vars)
    throw std::out_of_range("Polynomial::variable: index " + std::to_string(index) +
                            " out of range for " + std::to_string(num_vars) + " variables");
  Exponents e(static_cast<std::size_t>(num_vars), 0);
  e[static_cast<std::size_t>(index)] = 1;
  Polynomial p(num_vars);
  p.add_term(e, 1.0);
  return p;
}

Polynomial Polynomial::monomial(int num_vars, Exponents exps, double coeff) {
  if (static_cast<int>(exps.size()) != num_vars)
    throw std::invalid_argument("Polynomial::monomial: exponent vector length mismatch");
  for (int v : exps)
    if (v < 0) throw std::invalid_argument("Polynomial::monomial: negative exponent");
  Polynomial p(num_vars);
  p.add_term(exps, coeff);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
  return d;
}

std::vector<std::pair<Exponents, double>> Polynomial::sorted_terms() const {
  std::vector<std::pair<Exponents, double>> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return grlex_less(a.first, b.first); });
  return out;
}

double Polynomial::coeff(const Exponents& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

double Polynomial::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != num_vars_)
    throw std::invalid_argument("Polynomial::eval: point has " + std::to_string(x.size()) +
                                " coordinates, polynomial has " + std::to_string(num_vars_) +
                                " variables");
  // Sorted iteration keeps evaluation bit-reproducible regardless of map state.
  double sum = 0.0;
  for (const auto& [e, c] : sorted_terms()) {
    double t = c;
    for (int i = 0; i < num_vars_; ++i) {
      const int k = e[static_cast<std::size_t>(i)];
      if (k == 0) continue;
      double base = x[static_cast<std::size_t>(i)], pw = 1.0;
      int n = k;
      while (n > 0) {  // exponentiation by squaring
        if (n & 1) pw *= base;
        base *= base;
        n >>= 1;
      }
      t *= pw;
    }
    sum += t;
  }
  return sum;
}

Polynomial Polynomial::partial(int var) const {
  if (var < 0 || var >= num_vars_)
    throw std::out_of_range("Polynomial::partial: variable index out of range");
  Polynomial out(num_vars_);
  for (const auto& [e, c] : terms_) {
    const int k = e[static_cast<std::size_t>(var)];
    if (k == 0) continue;
    Exponents d = e;
    d[static_cast<std::size_t>(var)] = k - 1;
    out.add_term(d, c * k);
  }
  return out;
}

std::set<int> Polynomial::support() const {
  std::set<int> s;
  for (const auto& [e, c] : terms_)
    for (int i = 0; i < num_vars_; ++i)
      if (e[static_cast<std::size_t>(i)] > 0) s.insert(i);
  return s;
}

Polynomial Polynomial::substitute(int var, double value) const {
  if (var < 0 || var >= num_vars_)
    throw std::out_of_range("Polynomial::substitute: variable index out of range");
  Polynomial out(num_vars_);
  for (const auto& [e, c] : terms_) {
    const int k = e[static_cast<std::size_t>(var)];
    double scale = 1.0;
    for (int i = 0; i < k; ++i) scale *= value;
    Exponents d = e;
    d[static_cast<std::size_t>(var)] = 0;
    out.add_term(d, c * scale);
  }
  return out;
}

Polynomial Polynomial::remap(int new_num_vars, const std::vector<int>& var_map) const {
  if (static_cast<int>(var_map.size()) != num_vars_)
    throw std::invalid_argument("Polynomial::remap: map length mismatch");
  Polynomial out(new_num_vars);
  for (const auto& [e, c] : terms_) {
    Exponents d(static_cast<std::size_t>(new_num_vars), 0);
    for (int i = 0; i < num_vars_; ++i) {
      const int k = e[static_cast<std::size_t>(i)];
      if (k == 0) continue;
      const int j = var_map[static_cast<std::size_t>(i)];
      if (j < 0)
        throw std::invalid_argument("Polynomial::remap: variable " + std::to_string(i) +
                                    " occurs but has no image");
      if (j >= new_num_vars) throw std::invalid_argument("Polynomial::remap: image out of range");
      d[static_cast<std::size_t>(j)] += k;
    }
    out.add_term(d, c);
  }
  return out;
}

void Polynomial::add_term(const Exponents& e, double c) {
  auto it = terms_.find(e);
  if (it == terms_.end()) {
    if (std::abs(c) >= kCoeffEpsilon) terms_.emplace(e, c);
    return;
  }
  it->second += c;
  if (std::abs(it->second) < kCoeffEpsilon) terms_.erase(it);
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
  if (num_vars_ != rhs.num_vars_)
    throw std::invalid_argument("Polynomial: dimension mismatch in addition");
  for (const auto& [e, c] : rhs.terms_) add_term(e, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) {
  if (num_vars_ != rhs.num_vars_)
    throw std::invalid_argument("Polynomial: dimension mismatch in subtraction");
  for (const auto& [e, c] : rhs.terms_) add_term(e, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  // rescaling can push coefficients below the pruning threshold
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) < kCoeffEpsilon)
      it = terms_.erase(it);
    else
      ++it;
  }
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.num_vars_ != b.num_vars_)
    throw std::invalid_argument("Polynomial: dimension mismatch in multiplication");
  Polynomial out(a.num_vars_);
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      Exponents e = ea;
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

bool operator==(const Polynomial& a, const Polynomial& b) {
  return a.num_vars_ == b.num_vars_ && a.terms_ == b.terms_;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string default_name(int i) { return "x" + std::to_string(i + 1); }

}  // namespace

std::string Polynomial::to_string(const std::vector<std::string>& names) const {
  if (!names.empty() && static_cast<int>(names.size()) != num_vars_)
    throw std::invalid_argument("Polynomial::to_string: name list length mismatch");
  if (terms_.empty()) return "0";
  auto sorted = sorted_terms();
  std::string out;
  // descending graded-lex: highest-degree terms first
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    const auto& [e, c] = *it;
    const bool first = out.empty();
    const double a = std::abs(c);
    if (first)
      out += (c < 0) ? "-" : "";
    else
      out += (c < 0) ? " - " : " + ";
    std::string mono;
    for (int i = 0; i < num_vars_; ++i) {
      const int k = e[static_cast<std::size_t>(i)];
      if (k == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += names.empty() ? default_name(i) : names[static_cast<std::size_t>(i)];
      if (k > 1) mono += "^" + std::to_string(k);
    }
    if (mono.empty()) {
      out += format_double(a);
    } else {
      if (a != 1.0) out += format_double(a) + "*";
      out += mono;
    }
  }
  return out;
}

namespace {

struct Parser {
  const std::string& s;
  std::size_t pos = 0;
  const std::vector<std::string>& names;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("polynomial parse error at position " + std::to_string(pos) +
                                " in \"" + s + "\": " + msg);
  }

  int var_index(const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    fail("unknown variable '" + name + "'");
  }

  double number() {
    skip_ws();
    const char* begin = s.data() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos += static_cast<std::size_t>(end - begin);
    return v;
  }

  // factor := number | name['^' int]
  void factor(double& coeff, Exponents& exps) {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of input");
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      coeff *= number();
      return;
    }
    if (!std::isalpha(static_cast<unsigned char>(c)) && c != '_') fail("expected number or variable");
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    const int idx = var_index(s.substr(start, pos - start));
    int exp = 1;
    skip_ws();
    if (pos < s.size() && s[pos] == '^') {
      ++pos;
      skip_ws();
      std::size_t estart = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos == estart) fail("expected a nonnegative integer exponent");
      exp = std::stoi(s.substr(estart, pos - estart));
    }
    exps[static_cast<std::size_t>(idx)] += exp;
  }

  // term := factor ('*' factor)*
  void term(Polynomial& acc) {
    double coeff = 1.0;
    Exponents exps(names.size(), 0);
    factor(coeff, exps);
    while (peek() == '*') {
      ++pos;
      factor(coeff, exps);
    }
    acc += Polynomial::monomial(static_cast<int>(names.size()), exps, coeff);
  }

  Polynomial run() {
    Polynomial acc(static_cast<int>(names.size()));
    bool negate = false;
    char c = peek();
    if (c == '+' || c == '-') {
      negate = (c == '-');
      ++pos;
    }
    while (true) {
      Polynomial t(static_cast<int>(names.size()));
      term(t);
      acc += negate ? -t : t;
      if (eof()) break;
      c = peek();
      if (c == '+')
        negate = false;
      else if (c == '-')
        negate = true;
      else
        fail("expected '+' or '-'");
      ++pos;
    }
    return acc;
  }
};

}  // namespace

Polynomial Polynomial::parse(const std::string& text, const std::vector<std::string>& var_names) {
  Parser p{text, 0, var_names};
  if (p.eof()) throw std::invalid_argument("polynomial parse error: empty input");
  return p.run();
}

PolyVector::PolyVector(std::vector<Polynomial> comps) : comps_(std::move(comps)) {
  for (const auto& p : comps_)
    if (p.num_vars() != num_vars())
      throw std::invalid_argument("PolyVector: components disagree on variable count");
}

void PolyVector::push_back(Polynomial p) {
  if (!comps_.empty() && p.num_vars() != num_vars())
    throw std::invalid_argument("PolyVector: component variable count mismatch");
  comps_.push_back(std::move(p));
}

int PolyVector::degree() const {
  int d = 0;
  for (const auto& p : comps_) d = std::max(d, p.degree());
  return d;
}

Polynomial lie_derivative(const Polynomial& v, const PolyVector& f, bool time_augmented) {
  const int n = static_cast<int>(f.size());
  if (!time_augmented) {
    if (v.num_vars() != n || (n > 0 && f.num_vars() != n))
      throw std::invalid_argument("lie_derivative: dimension mismatch");
    Polynomial out(n);
    for (int i = 0; i < n; ++i) out += v.partial(i) * f[static_cast<std::size_t>(i)];
    return out;
  }
  if (v.num_vars() != n + 1 || (n > 0 && f.num_vars() != n))
    throw std::invalid_argument("lie_derivative: dimension mismatch (time-augmented)");
  // t sits at index 0; embed f into (t, x) space shifted by one.
  std::vector<int> shift(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) shift[static_cast<std::size_t>(i)] = i + 1;
  Polynomial out = v.partial(0);
  for (int i = 0; i < n; ++i)
    out += v.partial(i + 1) * f[static_cast<std::size_t>(i)].remap(n + 1, shift);
  return out;
}

namespace {

void enumerate_scope(int num_vars, const std::vector<int>& scope, std::size_t k, int budget,
                     Exponents& cur, std::vector<Exponents>& out) {
  if (k == scope.size()) {
    out.push_back(cur);
    return;
  }
  const int var = scope[k];
  for (int d = 0; d <= budget; ++d) {
    cur[static_cast<std::size_t>(var)] = d;
    enumerate_scope(num_vars, scope, k + 1, budget - d, cur, out);
  }
  cur[static_cast<std::size_t>(var)] = 0;
}

}  // namespace

std::vector<Exponents> monomial_basis(int num_vars, const std::vector<int>& scope, int max_degree) {
  if (max_degree < 0) throw std::invalid_argument("monomial_basis: negative degree");
  for (int v : scope)
    if (v < 0 || v >= num_vars) throw std::out_of_range("monomial_basis: scope index out of range");
  std::vector<Exponents> out;
  Exponents cur(static_cast<std::size_t>(num_vars), 0);
  enumerate_scope(num_vars, scope, 0, max_degree, cur, out);
  std::sort(out.begin(), out.end(), grlex_less);
  return out;
}

}  // namespace sparseinv

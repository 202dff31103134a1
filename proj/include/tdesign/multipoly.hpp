#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tdesign {

using Exponent = std::vector<int>;

int total_degree(const Exponent& e);

// x^e, computed by repeated multiplication (no pow).
double monomial_value(const Exponent& e, const Eigen::Ref<const Eigen::VectorXd>& x);

// Sparse real multivariate polynomial in a fixed number of variables.
// Invariant: no stored coefficient is exactly zero and every exponent vector
// has length ambient_dim().
class MultiPoly {
 public:
  using TermMap = std::map<Exponent, double>;

  MultiPoly() = default;
  explicit MultiPoly(int ambient_dim) : n_(ambient_dim) {}

  static MultiPoly constant(int ambient_dim, double c);
  static MultiPoly variable(int ambient_dim, int index);
  static MultiPoly monomial(Exponent e, double c = 1.0);

  int ambient_dim() const { return n_; }
  // The empty polynomial has degree 0.
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const TermMap& terms() const { return terms_; }

  // Adds c x^e, merging with an existing term and dropping exact zeros.
  void add_term(const Exponent& e, double c);

  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  MultiPoly derivative(int index) const;

  MultiPoly& operator+=(const MultiPoly& other);
  MultiPoly& operator-=(const MultiPoly& other);
  MultiPoly& operator*=(double s);

  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(MultiPoly a, double s) { return a *= s; }
  friend MultiPoly operator*(double s, MultiPoly a) { return a *= s; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);

  bool operator==(const MultiPoly& other) const = default;

  std::string to_string() const;

 private:
  void check_exponent(const Exponent& e) const;

  int n_ = 0;
  TermMap terms_;
};

}  // namespace tdesign

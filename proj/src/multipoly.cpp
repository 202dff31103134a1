#include "tdesign/multipoly.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "tdesign/error.hpp"

namespace tdesign {

int total_degree(const Exponent& e) { return std::accumulate(e.begin(), e.end(), 0); }

double monomial_value(const Exponent& e, const Eigen::Ref<const Eigen::VectorXd>& x) {
  double v = 1.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double xk = x[static_cast<Eigen::Index>(k)];
    for (int p = 0; p < e[k]; ++p) v *= xk;
  }
  return v;
}

MultiPoly MultiPoly::constant(int ambient_dim, double c) {
  MultiPoly p(ambient_dim);
  p.add_term(Exponent(static_cast<std::size_t>(ambient_dim), 0), c);
  return p;
}

MultiPoly MultiPoly::variable(int ambient_dim, int index) {
  if (index < 0 || index >= ambient_dim) throw InputError("variable index out of range");
  Exponent e(static_cast<std::size_t>(ambient_dim), 0);
  e[static_cast<std::size_t>(index)] = 1;
  MultiPoly p(ambient_dim);
  p.add_term(e, 1.0);
  return p;
}

MultiPoly MultiPoly::monomial(Exponent e, double c) {
  MultiPoly p(static_cast<int>(e.size()));
  p.add_term(e, c);
  return p;
}

int MultiPoly::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
  return d;
}

void MultiPoly::check_exponent(const Exponent& e) const {
  if (static_cast<int>(e.size()) != n_) {
    throw InputError("exponent vector length " + std::to_string(e.size()) +
                     " does not match ambient dimension " + std::to_string(n_));
  }
  if (std::any_of(e.begin(), e.end(), [](int v) { return v < 0; })) {
    throw InputError("negative exponent");
  }
}

void MultiPoly::add_term(const Exponent& e, double c) {
  check_exponent(e);
  if (c == 0.0) return;
  auto [it, inserted] = terms_.emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double MultiPoly::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != n_) throw InputError("point dimension does not match polynomial");
  double s = 0.0;
  for (const auto& [e, c] : terms_) s += c * monomial_value(e, x);
  return s;
}

Eigen::VectorXd MultiPoly::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != n_) throw InputError("point dimension does not match polynomial");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
  for (const auto& [e, c] : terms_) {
    for (int k = 0; k < n_; ++k) {
      const int ek = e[static_cast<std::size_t>(k)];
      if (ek == 0) continue;
      double v = c * ek;
      for (int l = 0; l < n_; ++l) {
        const int p = (l == k) ? ek - 1 : e[static_cast<std::size_t>(l)];
        for (int q = 0; q < p; ++q) v *= x[l];
      }
      g[k] += v;
    }
  }
  return g;
}

MultiPoly MultiPoly::derivative(int index) const {
  if (index < 0 || index >= n_) throw InputError("variable index out of range");
  MultiPoly d(n_);
  for (const auto& [e, c] : terms_) {
    const int ek = e[static_cast<std::size_t>(index)];
    if (ek == 0) continue;
    Exponent f = e;
    f[static_cast<std::size_t>(index)] = ek - 1;
    d.add_term(f, c * ek);
  }
  return d;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& other) {
  if (other.n_ != n_) throw InputError("ambient dimension mismatch in polynomial sum");
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& other) {
  if (other.n_ != n_) throw InputError("ambient dimension mismatch in polynomial difference");
  for (const auto& [e, c] : other.terms_) add_term(e, -c);
  return *this;
}

MultiPoly& MultiPoly::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  if (a.n_ != b.n_) throw InputError("ambient dimension mismatch in polynomial product");
  MultiPoly r(a.n_);
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      Exponent e(ea.size());
      for (std::size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
      r.add_term(e, ca * cb);
    }
  }
  return r;
}

std::string MultiPoly::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (int k = 0; k < n_; ++k) {
      const int p = e[static_cast<std::size_t>(k)];
      if (p == 0) continue;
      os << "*x" << k + 1;
      if (p > 1) os << "^" << p;
    }
  }
  return os.str();
}

}  // namespace tdesign

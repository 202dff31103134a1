#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tdesign/multipoly.hpp"
#include "tdesign/numeric.hpp"
#include "tdesign/quadrature.hpp"
#include "tdesign/variety.hpp"

namespace tdesign {

// Graded order; within one degree, lexicographically descending.
std::vector<Exponent> monomials_up_to(int n, int t);

// Evaluates every monomial of degree <= t (and its Jacobian) by reusing the
// value of a parent monomial, one multiplication per entry.
class MonomialFrame {
 public:
  MonomialFrame() = default;
  MonomialFrame(int n, int t);

  int ambient_dim() const { return n_; }
  int degree() const { return t_; }
  int size() const { return static_cast<int>(exponents_.size()); }
  const std::vector<Exponent>& exponents() const { return exponents_; }

  void values(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd values(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // size() x n
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // size() x N
  Eigen::MatrixXd values(const PointConfig& points) const;

  int index_of(const Exponent& e) const;

 private:
  int n_ = 0;
  int t_ = 0;
  std::vector<Exponent> exponents_;
  std::vector<int> parent_;
  std::vector<int> parent_var_;
  // lower_[i * n + k] = index of e_i - unit_k, or -1
  std::vector<int> lower_;
};

struct BasisOptions {
  double rank_tol = 1e-8;
  int oversampling = 4;
};

// Orthonormal basis phi_0 = 1, phi_1, ..., phi_{m-1} of P_t(M) under a
// quadrature rule, stored as coefficients in the monomial frame.
class OrthoBasis {
 public:
  OrthoBasis(Variety variety, int t, Eigen::MatrixXd coeffs,
             std::shared_ptr<const QuadratureRule> rule, double rank_tol,
             std::vector<double> singular_values = {}, std::vector<std::string> warnings = {});

  const Variety& variety() const { return variety_; }
  int degree() const { return t_; }
  int dim() const { return static_cast<int>(coeffs_.rows()); }
  // dim() x frame().size(); row j holds phi_j.
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  const MonomialFrame& frame() const { return frame_; }
  const QuadratureRule& quadrature() const { return *rule_; }
  std::shared_ptr<const QuadratureRule> quadrature_ptr() const { return rule_; }
  double rank_tol() const { return rank_tol_; }
  const std::vector<double>& singular_values() const { return singular_values_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // dim() x N
  Eigen::MatrixXd evaluate(const PointConfig& points) const;
  // dim() x n ambient Jacobian of (phi_j)
  Eigen::MatrixXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  MultiPoly function(int j) const;
  // c_j = <f, phi_j> under the basis quadrature.
  Eigen::VectorXd coefficients_of(const MultiPoly& f) const;
  // Combination sum c_j phi_j as a polynomial in the monomial frame.
  MultiPoly combination(const Eigen::Ref<const Eigen::VectorXd>& c) const;

 private:
  Variety variety_;
  int t_;
  Eigen::MatrixXd coeffs_;
  std::shared_ptr<const QuadratureRule> rule_;
  double rank_tol_;
  std::vector<double> singular_values_;
  std::vector<std::string> warnings_;
  MonomialFrame frame_;
};

OrthoBasis build_ortho_basis(const Variety& variety, int t,
                             std::shared_ptr<const QuadratureRule> rule,
                             const BasisOptions& options = {});
// Builds with the default quadrature for the variety.
OrthoBasis build_default_basis(const Variety& variety, int t, std::uint64_t seed = 0,
                               const BasisOptions& options = {});

// phi_1..phi_{m-1}: the zero-mean part P_t^0.
class ZeroMeanBasis {
 public:
  explicit ZeroMeanBasis(std::shared_ptr<const OrthoBasis> parent);

  const OrthoBasis& parent() const { return *parent_; }
  std::shared_ptr<const OrthoBasis> parent_ptr() const { return parent_; }
  const Variety& variety() const { return parent_->variety(); }
  int degree() const { return parent_->degree(); }
  int dim() const { return parent_->dim() - 1; }

  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // dim() x N
  Eigen::MatrixXd evaluate(const PointConfig& points) const;
  // dim() x n
  Eigen::MatrixXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  MultiPoly function(int j) const { return parent_->function(j + 1); }
  MultiPoly combination(const Eigen::Ref<const Eigen::VectorXd>& c) const;

 private:
  std::shared_ptr<const OrthoBasis> parent_;
  Eigen::MatrixXd coeffs_;
};

ZeroMeanBasis zero_mean_subspace(std::shared_ptr<const OrthoBasis> basis);

double kernel_eval(const ZeroMeanBasis& zb, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);
// Full P_t kernel: 1 + zero-mean kernel.
double full_kernel_eval(const OrthoBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y);

struct DesignFunctional {
  Eigen::VectorXd moments;
  double potential = 0.0;
};

DesignFunctional design_functional(const ZeroMeanBasis& zb, const PointConfig& points);
// potential / dim P_t^0 (0 when P_t^0 is trivial).
double normalized_potential(const ZeroMeanBasis& zb, const PointConfig& points);
// (1/N^2) sum_{i,k} K(x_i, x_k), evaluated directly.
double double_kernel_sum(const ZeroMeanBasis& zb, const PointConfig& points);

// Dimension of P_t(S^d) from the closed form.
std::uint64_t sphere_space_dim(int d, int t);

}  // namespace tdesign

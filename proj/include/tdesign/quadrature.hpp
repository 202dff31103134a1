#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "tdesign/multipoly.hpp"
#include "tdesign/numeric.hpp"
#include "tdesign/variety.hpp"

namespace tdesign {

enum class QuadratureKind { monte_carlo, exact_moments, parametric };

std::string to_string(QuadratureKind kind);
QuadratureKind quadrature_kind_from_string(const std::string& s);

// Enough to rebuild a rule deterministically.
struct QuadratureDescriptor {
  QuadratureKind kind = QuadratureKind::monte_carlo;
  // Polynomial degree integrated exactly (exact_moments / parametric).
  int degree = 0;
  // Monte Carlo: number of base samples before symmetrization.
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool symmetrized = false;

  bool operator==(const QuadratureDescriptor&) const = default;
};

struct QuadratureRule {
  QuadratureDescriptor descriptor;
  PointConfig nodes;
  Eigen::VectorXd weights;
  // Monte Carlo nodes come in consecutive blocks of this size (one symmetry
  // orbit per block); block averages are i.i.d. for standard errors.
  std::size_t group_size = 1;

  QuadratureKind kind() const { return descriptor.kind; }
  std::size_t size() const { return static_cast<std::size_t>(nodes.size()); }
};

// Default rule for integrating products of degree-t polynomials: product
// Gauss rule on spheres, tensor trapezoid on tori, symmetrized Monte Carlo
// elsewhere. Node counts respect min_nodes.
QuadratureDescriptor default_quadrature(const Variety& variety, int t, std::uint64_t seed,
                                        std::size_t min_nodes = 0);

QuadratureRule make_quadrature(const Variety& variety, const QuadratureDescriptor& descriptor);

QuadratureDescriptor monte_carlo_descriptor(const Variety& variety, std::size_t total_nodes,
                                            std::uint64_t seed, bool symmetrize = true);

// Sum of weights_i * values_i in pairwise order.
double integrate(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& values);
// Monte Carlo standard error of integrate(); zero for deterministic rules.
double standard_error(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& values);

double integrate_monomial(const Variety& variety, const Exponent& alpha, const QuadratureRule& rule);

// Gauss rule for the weight (1 - z^2)^a on [-1, 1], weights normalized to 1.
void gauss_gegenbauer(int count, double a, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace tdesign

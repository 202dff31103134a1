#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tdesign/multipoly.hpp"
#include "tdesign/numeric.hpp"

namespace tdesign {

enum class VarietyKind { sphere, torus, grassmannian, custom };

std::string to_string(VarietyKind kind);

struct VarietyTolerances {
  // tau_M = residual * (1 + |x|^max_degree)
  double residual = 1e-12;
  // smallest admissible singular value of the selected gradient subset,
  // relative to max(1, largest singular value of the Jacobian)
  double rank = 1e-8;
  int max_iter = 50;
};

struct Point {
  Eigen::VectorXd coords;
  double residual = 0.0;
  // Gauss-Newton steps taken by the projection that produced this point.
  int steps = 0;
};

class Variety;

using MeasureSampler =
    std::function<PointConfig(const Variety& variety, std::size_t count, std::uint64_t seed)>;
using MomentFunction = std::function<double(const Exponent& alpha)>;
using FastProjection = std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd& x)>;
using GeodesicDistance = std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& y)>;

// A compact smooth algebraic manifold M = {p_1 = ... = p_r = 0} in R^n of
// intrinsic dimension d, together with its normalized Hausdorff measure.
// Immutable after construction.
class Variety {
 public:
  struct Definition {
    std::string name;
    int ambient_dim = 0;
    int intrinsic_dim = 0;
    std::vector<MultiPoly> defining;
    VarietyKind kind = VarietyKind::custom;
    std::vector<double> params;
    std::optional<int> degree_hint;
    MeasureSampler sampler;
    MomentFunction exact_moment;
    FastProjection fast_projection;
    GeodesicDistance geodesic;
    // Linear coordinate maps preserving both M and its measure.
    std::vector<Eigen::MatrixXd> symmetries;
    VarietyTolerances tolerances;
  };

  explicit Variety(Definition def);

  const std::string& name() const { return def_.name; }
  int ambient_dim() const { return def_.ambient_dim; }
  int intrinsic_dim() const { return def_.intrinsic_dim; }
  int codim() const { return def_.ambient_dim - def_.intrinsic_dim; }
  int equation_count() const { return static_cast<int>(def_.defining.size()); }
  VarietyKind kind() const { return def_.kind; }
  const std::vector<double>& params() const { return def_.params; }
  std::optional<int> degree_hint() const { return def_.degree_hint; }
  const std::vector<MultiPoly>& defining() const { return def_.defining; }
  int max_defining_degree() const { return max_degree_; }
  const VarietyTolerances& tolerances() const { return def_.tolerances; }
  const std::vector<Eigen::MatrixXd>& symmetries() const { return def_.symmetries; }

  bool has_exact_moments() const { return static_cast<bool>(def_.exact_moment); }
  double exact_moment(const Exponent& alpha) const;
  const MeasureSampler& sampler() const { return def_.sampler; }
  const FastProjection& fast_projection() const { return def_.fast_projection; }
  const GeodesicDistance& geodesic() const { return def_.geodesic; }

  Variety with_tolerances(const VarietyTolerances& tol) const;

  Eigen::VectorXd residuals(const Eigen::VectorXd& x) const;
  // Rows are the gradients of the defining polynomials.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  double residual_norm(const Eigen::VectorXd& x) const;
  double tolerance_at(const Eigen::VectorXd& x) const;

 private:
  Definition def_;
  int max_degree_ = 0;
  // gradient_[i][k] = d p_i / d x_k
  std::vector<std::vector<MultiPoly>> gradient_;
};

// --- built-in varieties -----------------------------------------------------

Variety make_sphere(int d);
Variety make_torus(double major_radius, double minor_radius);
// Symmetric n x n projection matrices of rank k, stored as n(n+1)/2 upper
// triangle coordinates with off-diagonal entries scaled by sqrt(2), so the
// coordinate metric is the Frobenius metric.
Variety make_grassmannian(int k, int n);

// Variety from defining polynomials alone; the measure is sampled by a
// constrained random-walk Metropolis chain on M.
Variety make_custom_variety(std::string name, int ambient_dim, int intrinsic_dim,
                            std::vector<MultiPoly> defining,
                            std::optional<int> degree_hint = std::nullopt);

// "sphere:d", "torus:R,r", "grassmann:k,n", or a path to a variety JSON file.
Variety resolve_variety(const std::string& spec);

// Grassmannian coordinate helpers.
int grassmann_coordinate(int i, int j, int n);
Eigen::MatrixXd grassmann_matrix(const Eigen::VectorXd& coords, int n);
Eigen::VectorXd grassmann_coords(const Eigen::MatrixXd& matrix);

// --- geometric operations ---------------------------------------------------

Eigen::VectorXd eval_defining(const Variety& variety, const Eigen::VectorXd& x);

struct NormalBasis {
  // Pairwise orthogonal (not normalized) vectors spanning the normal space.
  std::vector<Eigen::VectorXd> vectors;
  // Ascending indices of the defining polynomials whose gradients were used.
  std::vector<int> index_set;
  double min_singular_value = 0.0;
};

// Gram-Schmidt determinant construction on the gradient subset chosen by
// column-pivoted QR of the Jacobian.
NormalBasis normal_basis(const Variety& variety, const Eigen::VectorXd& x);

// Determinant-formula vectors u_1^I..u_k^I for an explicit index set (some may
// vanish when the subset is rank deficient).
std::vector<Eigen::VectorXd> determinant_normal_vectors(const Eigen::MatrixXd& jacobian,
                                                        const std::vector<int>& index_set);

// sup over index sets I, |I| = n - d, of prod_i |u_i^I(x)|^2.
double normal_volume_sup(const Variety& variety, const Eigen::VectorXd& x);

// v - sum <v,u_i> u_i / |u_i|^2
Eigen::VectorXd project_tangent(const NormalBasis& basis, const Eigen::VectorXd& v);
Eigen::MatrixXd tangent_projector(const Variety& variety, const Eigen::VectorXd& x);
// n x d matrix with orthonormal columns spanning the tangent space.
Eigen::MatrixXd tangent_basis(const Variety& variety, const Eigen::VectorXd& x);

Eigen::VectorXd tangential_gradient(const Variety& variety, const MultiPoly& f,
                                    const Eigen::VectorXd& x);

struct ProjectionOptions {
  bool use_fast_path = true;
  // Refine the Gauss-Newton foot point until x - y is normal at y.
  bool closest_point = true;
};

Point project_to_variety(const Variety& variety, const Eigen::VectorXd& x,
                         const ProjectionOptions& options = {});

// Geodesic distance on spheres and Grassmannians, chordal elsewhere.
double distance(const Variety& variety, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

PointConfig sample_measure(const Variety& variety, std::size_t count, std::uint64_t seed);

struct SmoothnessReport {
  bool smooth = true;
  int samples = 0;
  double min_normal_singular_value = 0.0;
  double max_excess_singular_value = 0.0;
  double min_normal_volume = 0.0;
  double max_normal_volume = 0.0;
};

SmoothnessReport check_smoothness(const Variety& variety, int samples, std::uint64_t seed);

}  // namespace tdesign

#include "tdesign/polyspace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tdesign/error.hpp"

namespace tdesign {

namespace {

void compositions(int n, int k, int pos, Exponent& cur, std::vector<Exponent>& out) {
  if (pos == n - 1) {
    cur[static_cast<std::size_t>(pos)] = k;
    out.push_back(cur);
    return;
  }
  for (int a = k; a >= 0; --a) {
    cur[static_cast<std::size_t>(pos)] = a;
    compositions(n, k - a, pos + 1, cur, out);
  }
}

constexpr Eigen::Index kTsqrBlock = 2048;

// Upper-triangular factor of [top; bottom] (rows may be fewer than columns).
Eigen::MatrixXd stacked_r(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd stacked(top.rows() + bottom.rows(), bottom.cols());
  stacked << top, bottom;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
  const Eigen::Index k = std::min(stacked.rows(), stacked.cols());
  return qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

}  // namespace

std::vector<Exponent> monomials_up_to(int n, int t) {
  if (n < 1 || t < 0) throw InputError("monomials_up_to needs n >= 1 and t >= 0");
  std::vector<Exponent> out;
  out.reserve(binomial(n + t, n));
  Exponent cur(static_cast<std::size_t>(n), 0);
  for (int k = 0; k <= t; ++k) compositions(n, k, 0, cur, out);
  return out;
}

// --- MonomialFrame ------------------------------------------------------------

MonomialFrame::MonomialFrame(int n, int t) : n_(n), t_(t), exponents_(monomials_up_to(n, t)) {
  std::map<Exponent, int> index;
  for (std::size_t i = 0; i < exponents_.size(); ++i) index[exponents_[i]] = static_cast<int>(i);
  const std::size_t m = exponents_.size();
  parent_.assign(m, -1);
  parent_var_.assign(m, -1);
  lower_.assign(m * static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < m; ++i) {
    Exponent e = exponents_[i];
    for (int k = 0; k < n; ++k) {
      if (e[static_cast<std::size_t>(k)] == 0) continue;
      --e[static_cast<std::size_t>(k)];
      const int j = index.at(e);
      lower_[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] = j;
      if (parent_[i] < 0) {
        parent_[i] = j;
        parent_var_[i] = k;
      }
      ++e[static_cast<std::size_t>(k)];
    }
  }
}

void MonomialFrame::values(const Eigen::Ref<const Eigen::VectorXd>& x,
                           Eigen::Ref<Eigen::VectorXd> out) const {
  out[0] = 1.0;
  for (std::size_t i = 1; i < exponents_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = out[parent_[i]] * x[parent_var_[i]];
  }
}

Eigen::VectorXd MonomialFrame::values(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != n_) throw InputError("point dimension does not match the monomial frame");
  Eigen::VectorXd v(size());
  values(x, v);
  return v;
}

Eigen::MatrixXd MonomialFrame::values(const PointConfig& points) const {
  if (points.ambient_dim() != n_) throw InputError("point dimension does not match the monomial frame");
  Eigen::MatrixXd out(size(), points.size());
  for (Eigen::Index i = 0; i < points.size(); ++i) values(points.coords.col(i), out.col(i));
  return out;
}

Eigen::MatrixXd MonomialFrame::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd v = values(x);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(size(), n_);
  for (std::size_t i = 1; i < exponents_.size(); ++i) {
    for (int k = 0; k < n_; ++k) {
      const int j = lower_[i * static_cast<std::size_t>(n_) + static_cast<std::size_t>(k)];
      if (j >= 0) J(static_cast<Eigen::Index>(i), k) = exponents_[i][static_cast<std::size_t>(k)] * v[j];
    }
  }
  return J;
}

int MonomialFrame::index_of(const Exponent& e) const {
  const auto it = std::find(exponents_.begin(), exponents_.end(), e);
  return it == exponents_.end() ? -1 : static_cast<int>(it - exponents_.begin());
}

// --- OrthoBasis ---------------------------------------------------------------

OrthoBasis::OrthoBasis(Variety variety, int t, Eigen::MatrixXd coeffs,
                       std::shared_ptr<const QuadratureRule> rule, double rank_tol,
                       std::vector<double> singular_values, std::vector<std::string> warnings)
    : variety_(std::move(variety)),
      t_(t),
      coeffs_(std::move(coeffs)),
      rule_(std::move(rule)),
      rank_tol_(rank_tol),
      singular_values_(std::move(singular_values)),
      warnings_(std::move(warnings)),
      frame_(variety_.ambient_dim(), t) {
  if (coeffs_.cols() != frame_.size() || coeffs_.rows() < 1) {
    throw InputError("basis coefficient matrix has the wrong shape");
  }
}

Eigen::VectorXd OrthoBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return coeffs_ * frame_.values(x);
}

Eigen::MatrixXd OrthoBasis::evaluate(const PointConfig& points) const {
  return coeffs_ * frame_.values(points);
}

Eigen::MatrixXd OrthoBasis::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return coeffs_ * frame_.jacobian(x);
}

MultiPoly OrthoBasis::function(int j) const {
  return combination(Eigen::VectorXd::Unit(dim(), j));
}

MultiPoly OrthoBasis::combination(const Eigen::Ref<const Eigen::VectorXd>& c) const {
  if (c.size() != dim()) throw InputError("coefficient vector has the wrong length");
  const Eigen::VectorXd mono = coeffs_.transpose() * c;
  MultiPoly p(variety_.ambient_dim());
  for (int k = 0; k < frame_.size(); ++k) p.add_term(frame_.exponents()[static_cast<std::size_t>(k)], mono[k]);
  return p;
}

Eigen::VectorXd OrthoBasis::coefficients_of(const MultiPoly& f) const {
  const QuadratureRule& q = *rule_;
  const Eigen::Index total = q.nodes.size();
  const std::size_t blocks = block_count(static_cast<std::size_t>(total), kTsqrBlock);
  std::vector<Eigen::VectorXd> partial(blocks, Eigen::VectorXd::Zero(dim()));
  parallel_for_blocks(static_cast<std::size_t>(total), kTsqrBlock,
                      [&](std::size_t b, std::size_t begin, std::size_t end) {
                        Eigen::VectorXd v(frame_.size());
                        for (std::size_t i = begin; i < end; ++i) {
                          const auto x = q.nodes.coords.col(static_cast<Eigen::Index>(i));
                          frame_.values(x, v);
                          partial[b] += (q.weights[static_cast<Eigen::Index>(i)] * f.evaluate(x)) * (coeffs_ * v);
                        }
                      });
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim());
  for (const auto& p : partial) c += p;
  return c;
}

OrthoBasis build_ortho_basis(const Variety& variety, int t, std::shared_ptr<const QuadratureRule> rule,
                             const BasisOptions& options) {
  if (t < 0) throw InputError("degree must be non-negative");
  if (!rule) throw InputError("basis construction needs a quadrature rule");
  const int n = variety.ambient_dim();
  const MonomialFrame frame(n, t);
  const int M = frame.size();
  const std::size_t required = static_cast<std::size_t>(options.oversampling) * static_cast<std::size_t>(M);
  if (rule->size() < required) {
    std::ostringstream msg;
    msg << "quadrature has " << rule->size() << " nodes; at least " << required
        << " are needed for degree " << t;
    throw InputError(msg.str());
  }
  const QuadratureRule& q = *rule;
  const Eigen::Index nodes = q.nodes.size();
  const int cols = M - 1;
  Eigen::MatrixXd coeffs;
  std::vector<double> sv;
  std::vector<std::string> warnings;
  if (cols == 0) {
    coeffs = Eigen::MatrixXd::Ones(1, 1);
    return OrthoBasis(variety, t, coeffs, rule, options.rank_tol);
  }

  // Weighted means of the non-constant monomials.
  const std::size_t blocks = block_count(static_cast<std::size_t>(nodes), kTsqrBlock);
  std::vector<Eigen::VectorXd> partial_mean(blocks, Eigen::VectorXd::Zero(cols));
  parallel_for_blocks(static_cast<std::size_t>(nodes), kTsqrBlock,
                      [&](std::size_t b, std::size_t begin, std::size_t end) {
                        Eigen::VectorXd v(M);
                        for (std::size_t i = begin; i < end; ++i) {
                          frame.values(q.nodes.coords.col(static_cast<Eigen::Index>(i)), v);
                          partial_mean[b] += q.weights[static_cast<Eigen::Index>(i)] * v.tail(cols);
                        }
                      });
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(cols);
  for (const auto& p : partial_mean) mean += p;

  // TSQR of the weighted, centered monomial matrix.
  std::vector<Eigen::MatrixXd> block_r(blocks);
  parallel_for_blocks(static_cast<std::size_t>(nodes), kTsqrBlock,
                      [&](std::size_t b, std::size_t begin, std::size_t end) {
                        Eigen::MatrixXd A(static_cast<Eigen::Index>(end - begin), cols);
                        Eigen::VectorXd v(M);
                        for (std::size_t i = begin; i < end; ++i) {
                          frame.values(q.nodes.coords.col(static_cast<Eigen::Index>(i)), v);
                          const double sw = std::sqrt(q.weights[static_cast<Eigen::Index>(i)]);
                          A.row(static_cast<Eigen::Index>(i - begin)) = (sw * (v.tail(cols) - mean)).transpose();
                        }
                        block_r[b] = stacked_r(Eigen::MatrixXd(0, cols), A);
                      });
  Eigen::MatrixXd R(0, cols);
  for (const auto& br : block_r) R = stacked_r(R, br);

  Eigen::VectorXd scale(cols);
  for (int k = 0; k < cols; ++k) scale[k] = R.col(k).norm();
  const double max_scale = scale.maxCoeff();
  Eigen::VectorXd inv_scale = Eigen::VectorXd::Zero(cols);
  for (int k = 0; k < cols; ++k) {
    if (scale[k] > 1e-14 * max_scale && scale[k] > 0.0) inv_scale[k] = 1.0 / scale[k];
  }
  const Eigen::MatrixXd Rs = R * inv_scale.asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Rs, Eigen::ComputeThinV);
  const Eigen::VectorXd sigma = svd.singularValues();
  const double threshold = options.rank_tol * (sigma.size() > 0 ? sigma[0] : 0.0);
  int rank = 0;
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    sv.push_back(sigma[j]);
    if (sigma[j] > threshold) ++rank;
    if (sigma[j] > threshold / 10.0 && sigma[j] < threshold * 10.0) {
      std::ostringstream msg;
      msg << "numerical rank ambiguous: singular value " << sigma[j] << " near threshold " << threshold;
      warnings.push_back(msg.str());
    }
  }
  coeffs = Eigen::MatrixXd::Zero(rank + 1, M);
  coeffs(0, 0) = 1.0;
  const Eigen::MatrixXd V = svd.matrixV();
  for (int j = 0; j < rank; ++j) {
    const Eigen::VectorXd c = inv_scale.cwiseProduct(V.col(j)) / sigma[j];
    coeffs.row(j + 1).tail(cols) = c.transpose();
    coeffs(j + 1, 0) = -c.dot(mean);
  }
  return OrthoBasis(variety, t, std::move(coeffs), std::move(rule), options.rank_tol, std::move(sv),
                    std::move(warnings));
}

OrthoBasis build_default_basis(const Variety& variety, int t, std::uint64_t seed, const BasisOptions& options) {
  const std::size_t min_nodes =
      static_cast<std::size_t>(options.oversampling) * binomial(variety.ambient_dim() + t, t);
  auto rule = std::make_shared<const QuadratureRule>(
      make_quadrature(variety, default_quadrature(variety, t, seed, min_nodes)));
  return build_ortho_basis(variety, t, std::move(rule), options);
}

// --- ZeroMeanBasis ------------------------------------------------------------

ZeroMeanBasis::ZeroMeanBasis(std::shared_ptr<const OrthoBasis> parent) : parent_(std::move(parent)) {
  if (!parent_) throw InputError("zero-mean basis needs a parent basis");
  coeffs_ = parent_->coeffs().bottomRows(parent_->dim() - 1);
}

Eigen::VectorXd ZeroMeanBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return coeffs_ * parent_->frame().values(x);
}

Eigen::MatrixXd ZeroMeanBasis::evaluate(const PointConfig& points) const {
  return coeffs_ * parent_->frame().values(points);
}

Eigen::MatrixXd ZeroMeanBasis::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return coeffs_ * parent_->frame().jacobian(x);
}

MultiPoly ZeroMeanBasis::combination(const Eigen::Ref<const Eigen::VectorXd>& c) const {
  if (c.size() != dim()) throw InputError("coefficient vector has the wrong length");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(parent_->dim());
  full.tail(dim()) = c;
  return parent_->combination(full);
}

ZeroMeanBasis zero_mean_subspace(std::shared_ptr<const OrthoBasis> basis) {
  return ZeroMeanBasis(std::move(basis));
}

double kernel_eval(const ZeroMeanBasis& zb, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (zb.dim() == 0) return 0.0;
  const Eigen::VectorXd prod = zb.evaluate(x).cwiseProduct(zb.evaluate(y));
  return pairwise_sum(prod);
}

double full_kernel_eval(const OrthoBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::VectorXd prod = basis.evaluate(x).cwiseProduct(basis.evaluate(y));
  return pairwise_sum(prod);
}

DesignFunctional design_functional(const ZeroMeanBasis& zb, const PointConfig& points) {
  if (points.size() < 1) throw InputError("design functional needs at least one point");
  DesignFunctional out;
  out.moments = Eigen::VectorXd::Zero(zb.dim());
  if (zb.dim() == 0) return out;
  const Eigen::MatrixXd phi = zb.evaluate(points);
  const double inv_n = 1.0 / static_cast<double>(points.size());
  for (int j = 0; j < zb.dim(); ++j) {
    const Eigen::VectorXd row = phi.row(j).transpose();
    out.moments[j] = pairwise_sum(row) * inv_n;
  }
  const Eigen::VectorXd sq = out.moments.cwiseAbs2();
  out.potential = pairwise_sum(sq);
  return out;
}

double normalized_potential(const ZeroMeanBasis& zb, const PointConfig& points) {
  if (zb.dim() == 0) return 0.0;
  return design_functional(zb, points).potential / zb.dim();
}

double double_kernel_sum(const ZeroMeanBasis& zb, const PointConfig& points) {
  const Eigen::Index N = points.size();
  Eigen::VectorXd all(N * N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index k = 0; k < N; ++k) all[i * N + k] = kernel_eval(zb, points.coords.col(i), points.coords.col(k));
  }
  return pairwise_sum(all) / static_cast<double>(N * N);
}

std::uint64_t sphere_space_dim(int d, int t) {
  if (t < 0) throw InputError("degree must be non-negative");
  if (t == 0) return 1;
  return binomial(d + t, d) + binomial(d + t - 1, d);
}

}  // namespace tdesign

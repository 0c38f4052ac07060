// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <functional>

namespace meshctrl {

/// Gauss-Hermite rule normalized against the standard normal density:
/// sum_l w_l f(x_l) ~ E[f(Z)], Z ~ N(0,1). Weights sum to one, nodes are
/// symmetric about zero.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;    ///< ascending
  Eigen::VectorXd weights;  ///< positive

  int order() const { return static_cast<int>(nodes.size()); }
};

/// Build the L-point rule (1 <= L <= 64) from the probabilists' Hermite
/// Jacobi matrix (zero diagonal, off-diagonals sqrt(k)); weights are the
/// squared first eigenvector components. Exact for polynomials of degree
/// <= 2L-1. Node symmetry is enforced by averaging +- pairs.
GaussHermiteRule gauss_hermite(int order);

/// Full tensor product of a 1-D rule over `dim` coordinates: node matrix is
/// L^dim x dim (lexicographic multi-index, last coordinate fastest) with the
/// matching product weights.
struct TensorRule {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
};
TensorRule tensor_product(const GaussHermiteRule& rule, int dim);

/// E[f(Z_1,...,Z_dim)] by the tensor rule; f maps R^dim -> R^out_dim.
/// Summation runs in lexicographic multi-index order. Guarded at
/// L^dim <= 10^7 nodes.
Eigen::VectorXd tensor_expectation(
    const GaussHermiteRule& rule, int dim,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& integrand, int out_dim);

/// Scalar convenience overload.
double tensor_expectation(const GaussHermiteRule& rule, int dim,
                          const std::function<double(const Eigen::VectorXd&)>& integrand);

}  // namespace meshctrl

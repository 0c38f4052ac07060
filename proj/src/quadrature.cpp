// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "meshctrl/errors.hpp"

namespace meshctrl {

GaussHermiteRule gauss_hermite(int order) {
  if (order < 1 || order > 64) {
    throw Error("gauss_hermite: order must be in [1, 64], got " + std::to_string(order));
  }
  GaussHermiteRule rule;
  if (order == 1) {
    rule.nodes = Eigen::VectorXd::Zero(1);
    rule.weights = Eigen::VectorXd::Ones(1);
    return rule;
  }

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(order - 1);
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error("gauss_hermite: eigen solve failed");

  rule.nodes = solver.eigenvalues();
  rule.weights = solver.eigenvectors().row(0).transpose().array().square();

  // The eigensolver leaves +-1e-15 asymmetry that breaks odd-moment
  // exactness; fold the rule onto its symmetric part.
  const int L = order;
  for (int i = 0; i < L / 2; ++i) {
    const int j = L - 1 - i;
    const double mag = 0.5 * (std::abs(rule.nodes[i]) + std::abs(rule.nodes[j]));
    rule.nodes[i] = -mag;
    rule.nodes[j] = mag;
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (L % 2 == 1) rule.nodes[L / 2] = 0.0;
  rule.weights /= rule.weights.sum();
  return rule;
}

TensorRule tensor_product(const GaussHermiteRule& rule, int dim) {
  if (dim < 1) throw DimensionError("tensor_product: dim must be >= 1");
  const int L = rule.order();
  double count = std::pow(static_cast<double>(L), dim);
  if (count > 1e7) throw TooManyNodesError("tensor_product: L^dim exceeds 10^7 nodes");
  const long total = static_cast<long>(std::llround(count));

  TensorRule tensor;
  tensor.nodes.resize(total, dim);
  tensor.weights.resize(total);
  std::vector<int> idx(dim, 0);
  for (long row = 0; row < total; ++row) {
    double w = 1.0;
    for (int j = 0; j < dim; ++j) {
      tensor.nodes(row, j) = rule.nodes[idx[j]];
      w *= rule.weights[idx[j]];
    }
    tensor.weights[row] = w;
    for (int j = dim - 1; j >= 0; --j) {
      if (++idx[j] < L) break;
      idx[j] = 0;
    }
  }
  return tensor;
}

Eigen::VectorXd tensor_expectation(
    const GaussHermiteRule& rule, int dim,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& integrand, int out_dim) {
  const TensorRule tensor = tensor_product(rule, dim);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(out_dim);
  Eigen::VectorXd xi(dim);
  for (long row = 0; row < tensor.nodes.rows(); ++row) {
    xi = tensor.nodes.row(row).transpose();
    acc.noalias() += tensor.weights[row] * integrand(xi);
  }
  return acc;
}

double tensor_expectation(const GaussHermiteRule& rule, int dim,
                          const std::function<double(const Eigen::VectorXd&)>& integrand) {
  const TensorRule tensor = tensor_product(rule, dim);
  double acc = 0.0;
  Eigen::VectorXd xi(dim);
  for (long row = 0; row < tensor.nodes.rows(); ++row) {
    xi = tensor.nodes.row(row).transpose();
    acc += tensor.weights[row] * integrand(xi);
  }
  return acc;
}

}  // namespace meshctrl

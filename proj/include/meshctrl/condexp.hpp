// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <functional>

#include "meshctrl/meshfree.hpp"
#include "meshctrl/quadrature.hpp"

namespace meshctrl {

/// One Euler-Maruyama step of dx = b dt + sigma dW under a frozen control.
struct OneStepModel {
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)> drift;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)> diffusion;
  double dt = 0.0;
  Eigen::VectorXd control;
  int noise_dim = 0;
};

/// x + b(x,u) dt + sigma(x,u) sqrt(dt) xi. Throws NumericOverflowError on a
/// non-finite proposal.
Eigen::VectorXd euler_step(const OneStepModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& xi);

struct CondExpStats {
  long out_of_domain = 0;  ///< proposals outside the cloud box
  long evaluations = 0;
};

/// E[ field(x + b dt + sigma sqrt(dt) Z) | x ] by tensor Gauss-Hermite
/// quadrature over the noise dimensions; componentwise over the field.
Eigen::VectorXd cond_exp(const Interpolant& field, const OneStepModel& model,
                         const Eigen::Ref<const Eigen::VectorXd>& x, const GaussHermiteRule& rule,
                         CondExpStats* stats = nullptr);

/// E[ field(proposal) dW^T | x ] / entries (i,k) = E[field_i * sqrt(dt) xi_k].
Eigen::MatrixXd cond_exp_dw(const Interpolant& field, const OneStepModel& model,
                            const Eigen::Ref<const Eigen::VectorXd>& x, const GaussHermiteRule& rule,
                            CondExpStats* stats = nullptr);

/// Both moments from a single pass over the shared proposal set.
void cond_exp_pair(const Interpolant& field, const OneStepModel& model,
                   const Eigen::Ref<const Eigen::VectorXd>& x, const GaussHermiteRule& rule,
                   Eigen::Ref<Eigen::VectorXd> e_out, Eigen::Ref<Eigen::MatrixXd> edw_out,
                   CondExpStats* stats = nullptr);

}  // namespace meshctrl

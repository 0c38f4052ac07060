// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/condexp.hpp"

#include <cmath>

#include "meshctrl/errors.hpp"
#include "meshctrl/util.hpp"

namespace meshctrl {

Eigen::VectorXd euler_step(const OneStepModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& xi) {
  const Eigen::VectorXd b = model.drift(x, model.control);
  const Eigen::MatrixXd sigma = model.diffusion(x, model.control);
  if (sigma.cols() != xi.size()) throw DimensionError("euler_step: noise dimension mismatch");
  Eigen::VectorXd out = x + model.dt * b + std::sqrt(model.dt) * (sigma * xi);
  if (!out.allFinite()) {
    throw NumericOverflowError("euler_step: non-finite proposal from x = [" +
                               format_g17(x[0]) + ", ...]");
  }
  return out;
}

namespace {

/// Shared implementation: proposals for every tensor node, one batched field
/// evaluation, then the two weighted reductions.
void accumulate(const Interpolant& field, const OneStepModel& model,
                const Eigen::Ref<const Eigen::VectorXd>& x, const GaussHermiteRule& rule,
                Eigen::VectorXd* e_out, Eigen::MatrixXd* edw_out, CondExpStats* stats) {
  const int m = model.noise_dim;
  const double sqrt_dt = std::sqrt(model.dt);
  const TensorRule tensor = tensor_product(rule, m);
  const long n_nodes = tensor.nodes.rows();

  const Eigen::VectorXd base = x + model.dt * model.drift(x, model.control);
  const Eigen::MatrixXd scaled_sigma = sqrt_dt * model.diffusion(x, model.control);
  if (scaled_sigma.cols() != m) throw DimensionError("cond_exp: diffusion has wrong noise dimension");

  Eigen::MatrixXd proposals(n_nodes, x.size());
  proposals = tensor.nodes * scaled_sigma.transpose();
  proposals.rowwise() += base.transpose();
  if (!proposals.allFinite()) {
    throw NumericOverflowError("cond_exp: non-finite proposal at x = [" + format_g17(x[0]) + ", ...]");
  }
  if (stats) {
    stats->evaluations += n_nodes;
    for (long r = 0; r < n_nodes; ++r) {
      if (!field.cloud().box.contains(proposals.row(r).transpose())) ++stats->out_of_domain;
    }
  }

  const Eigen::MatrixXd vals = field.eval_batch(proposals);  // n_nodes x K
  if (!vals.allFinite()) {
    throw NumericOverflowError("cond_exp: non-finite field value at x = [" + format_g17(x[0]) + ", ...]");
  }
  const int K = static_cast<int>(vals.cols());
  if (e_out) {
    e_out->setZero(K);
    for (long r = 0; r < n_nodes; ++r) e_out->noalias() += tensor.weights[r] * vals.row(r).transpose();
  }
  if (edw_out) {
    edw_out->setZero(K, m);
    for (long r = 0; r < n_nodes; ++r) {
      edw_out->noalias() +=
          (tensor.weights[r] * sqrt_dt) * (vals.row(r).transpose() * tensor.nodes.row(r));
    }
  }
}

}  // namespace

Eigen::VectorXd cond_exp(const Interpolant& field, const OneStepModel& model,
                         const Eigen::Ref<const Eigen::VectorXd>& x, const GaussHermiteRule& rule,
                         CondExpStats* stats) {
  Eigen::VectorXd e;
  accumulate(field, model, x, rule, &e, nullptr, stats);
  return e;
}

Eigen::MatrixXd cond_exp_dw(const Interpolant& field, const OneStepModel& model,
                            const Eigen::Ref<const Eigen::VectorXd>& x, const GaussHermiteRule& rule,
                            CondExpStats* stats) {
  Eigen::MatrixXd edw;
  accumulate(field, model, x, rule, nullptr, &edw, stats);
  return edw;
}

void cond_exp_pair(const Interpolant& field, const OneStepModel& model,
                   const Eigen::Ref<const Eigen::VectorXd>& x, const GaussHermiteRule& rule,
                   Eigen::Ref<Eigen::VectorXd> e_out, Eigen::Ref<Eigen::MatrixXd> edw_out,
                   CondExpStats* stats) {
  Eigen::VectorXd e;
  Eigen::MatrixXd edw;
  accumulate(field, model, x, rule, &e, &edw, stats);
  e_out = e;
  edw_out = edw;
}

}  // namespace meshctrl

// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/bsde.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "meshctrl/errors.hpp"
#include "meshctrl/util.hpp"

namespace meshctrl {

DriverSpec make_driver(const ProblemSpec& problem) {
  const int d = problem.state_dim;
  DriverSpec driver;
  driver.f = [&problem, d](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                           const Eigen::MatrixXd& q, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    Eigen::VectorXd out = problem.running_cost_dx ? problem.running_cost_dx(t, x, u)
                                                  : Eigen::VectorXd::Zero(d);
    if (problem.drift_dx) out.noalias() += problem.drift_dx(x, u).transpose() * p;
    if (problem.diffusion_dx) {
      const std::vector<Eigen::MatrixXd> dsig = problem.diffusion_dx(x, u);
      for (int i = 0; i < d; ++i) out[i] += q.cwiseProduct(dsig[static_cast<size_t>(i)]).sum();
    }
    return out;
  };

  // crude Lipschitz estimate in (p, q) at the initial state
  double bound = 0.0;
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(problem.control_dim);
  if (problem.drift_dx) bound += problem.drift_dx(problem.x0, u0).cwiseAbs().maxCoeff() * d;
  if (problem.diffusion_dx) {
    for (const auto& s : problem.diffusion_dx(problem.x0, u0)) bound += s.cwiseAbs().maxCoeff();
  }
  driver.lipschitz_bound = std::max(bound, 1e-12);
  return driver;
}

Eigen::MatrixXd terminal_condition(
    const PointCloud& cloud,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& terminal_gradient) {
  const int M = cloud.size();
  const int d = cloud.dim();
  Eigen::MatrixXd out(M, d);
  if (!terminal_gradient) {
    out.setZero();
    return out;
  }
  for (int k = 0; k < M; ++k) {
    out.row(k) = terminal_gradient(cloud.points.row(k).transpose()).transpose();
  }
  if (!out.allFinite()) throw NumericOverflowError("terminal_condition: non-finite values");
  return out;
}

BackwardStepResult backward_step(const Interpolant& p_next, const PointCloud& cloud,
                                 const DriverSpec& driver, const OneStepModel& model, double t_n,
                                 const GaussHermiteRule& rule, int level, BsdeStats* stats) {
  const int M = cloud.size();
  const int d = p_next.components();
  const int m = model.noise_dim;
  const double dt = model.dt;
  const double sqrt_dt = std::sqrt(dt);
  const TensorRule tensor = tensor_product(rule, m);
  const long Lq = tensor.nodes.rows();

  // All proposals for the level in one block so the field evaluation can
  // batch across nodes.
  Eigen::MatrixXd proposals(M * Lq, cloud.dim());
  for (int k = 0; k < M; ++k) {
    const Eigen::VectorXd x = cloud.points.row(k).transpose();
    const Eigen::VectorXd base = x + dt * model.drift(x, model.control);
    const Eigen::MatrixXd scaled_sigma = sqrt_dt * model.diffusion(x, model.control);
    auto block = proposals.middleRows(k * Lq, Lq);
    block.noalias() = tensor.nodes * scaled_sigma.transpose();
    block.rowwise() += base.transpose();
  }
  if (!proposals.allFinite()) {
    throw NumericOverflowError("backward_step: non-finite proposal at level " + std::to_string(level));
  }
  if (stats) {
    for (long r = 0; r < proposals.rows(); ++r) {
      if (!cloud.box.contains(proposals.row(r).transpose())) ++stats->out_of_domain_proposals;
    }
  }

  const Eigen::MatrixXd vals = p_next.eval_batch(proposals);  // (M*Lq) x d
  if (!vals.allFinite()) {
    throw NumericOverflowError("backward_step: non-finite field value at level " + std::to_string(level));
  }

  BackwardStepResult result;
  result.p.resize(M, d);
  result.q.resize(M, d * m);

  Eigen::VectorXd explicit_value(d);
  Eigen::MatrixXd q_node(d, m);
  for (int k = 0; k < M; ++k) {
    const auto vblock = vals.middleRows(k * Lq, Lq);
    explicit_value.noalias() = vblock.transpose() * tensor.weights;
    q_node.noalias() = vblock.transpose() *
                       (tensor.nodes.array().colwise() * tensor.weights.array()).matrix();
    q_node *= sqrt_dt / dt;
    for (int i = 0; i < d; ++i) {
      for (int c = 0; c < m; ++c) result.q(k, i * m + c) = q_node(i, c);
    }

    // implicit p-equation by Picard iteration from the explicit value
    const Eigen::VectorXd x = cloud.points.row(k).transpose();
    Eigen::VectorXd p = explicit_value;
    double prev_delta = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    int it = 0;
    for (; it < 50; ++it) {
      const Eigen::VectorXd next =
          explicit_value + dt * driver.f(t_n, x, p, q_node, model.control);
      const double delta = (next - p).cwiseAbs().maxCoeff();
      p = next;
      if (delta <= 1e-12) break;
      if (delta > prev_delta) {
        if (++growth_streak >= 5) {
          throw PicardDivergenceError("backward_step: Picard iteration diverges at node " +
                                          std::to_string(k) + ", level " + std::to_string(level),
                                      level, k);
        }
      } else {
        growth_streak = 0;
      }
      prev_delta = delta;
    }
    if (stats) stats->max_picard_iterations = std::max(stats->max_picard_iterations, it + 1);
    result.p.row(k) = p.transpose();
  }
  if (!result.p.allFinite()) {
    throw NumericOverflowError("backward_step: non-finite p at level " + std::to_string(level));
  }
  return result;
}

AdjointGrid solve_bsde(const ProblemSpec& problem, const ControlTrajectory& control,
                       const FieldFitter& fitter, const GaussHermiteRule& rule, BsdeStats* stats) {
  const int N = control.pieces();
  const int d = problem.state_dim;
  const int m = problem.noise_dim;
  const PointCloud& cloud = fitter.cloud();
  const DriverSpec driver = make_driver(problem);

  AdjointGrid grid;
  grid.levels = N;
  grid.dt = control.dt();
  grid.cloud = cloud;
  grid.p.resize(N + 1);
  grid.q.resize(N + 1);
  grid.p_field.resize(N + 1);
  grid.q_field.resize(N + 1);
  grid.pq_field.resize(N + 1);

  auto fit_level = [&](int n) {
    grid.p_field[n] = fitter.fit(grid.p[n]);
    grid.q_field[n] = fitter.fit(grid.q[n]);
    Eigen::MatrixXd joined(cloud.size(), d + d * m);
    joined.leftCols(d) = grid.p[n];
    joined.rightCols(d * m) = grid.q[n];
    grid.pq_field[n] = fitter.fit(joined);
  };

  grid.p[N] = terminal_condition(cloud, problem.terminal_cost_dx);
  grid.q[N] = Eigen::MatrixXd::Zero(cloud.size(), d * m);
  fit_level(N);

  OneStepModel model;
  model.drift = problem.drift;
  model.diffusion = problem.diffusion;
  model.dt = grid.dt;
  model.noise_dim = m;

  for (int n = N - 1; n >= 0; --n) {
    model.control = control.values.row(n).transpose();
    BackwardStepResult step =
        backward_step(grid.p_field[n + 1], cloud, driver, model, n * grid.dt, rule, n, stats);
    grid.p[n] = std::move(step.p);
    grid.q[n] = std::move(step.q);
    fit_level(n);
  }
  return grid;
}

AdjointGrid solve_bsde(const ProblemSpec& problem, const ControlTrajectory& control,
                       const PointCloud& cloud, const GaussHermiteRule& rule,
                       const InterpConfig& config, BsdeStats* stats) {
  return solve_bsde(problem, control, FieldFitter(cloud, config), rule, stats);
}

void dump_level_csv(const AdjointGrid& grid, int level, std::ostream& os) {
  const PointCloud& cloud = grid.cloud;
  const int d = static_cast<int>(grid.p[static_cast<size_t>(level)].cols());
  const int dm = static_cast<int>(grid.q[static_cast<size_t>(level)].cols());
  os << "n,k";
  for (int j = 0; j < cloud.dim(); ++j) os << ",x" << j + 1;
  for (int i = 0; i < d; ++i) os << ",p" << i + 1;
  for (int c = 0; c < dm; ++c) os << ",q" << c + 1;
  os << "\n";
  for (int k = 0; k < cloud.size(); ++k) {
    os << level << ',' << k;
    for (int j = 0; j < cloud.dim(); ++j) os << ',' << format_g17(cloud.points(k, j));
    for (int i = 0; i < d; ++i) os << ',' << format_g17(grid.p[static_cast<size_t>(level)](k, i));
    for (int c = 0; c < dm; ++c) os << ',' << format_g17(grid.q[static_cast<size_t>(level)](k, c));
    os << "\n";
  }
}

}  // namespace meshctrl

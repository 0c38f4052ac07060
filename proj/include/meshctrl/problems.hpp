// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

#include "meshctrl/control.hpp"

namespace meshctrl {

/// A finite-horizon control problem: dynamics callbacks, their partials and
/// the cost pair (j, k). Null derivative callbacks mean identically zero.
/// The running cost carries explicit time dependence.
struct ProblemSpec {
  int state_dim = 0;    ///< d
  int noise_dim = 0;    ///< m
  int control_dim = 0;  ///< d1
  double horizon = 0.0;
  Eigen::VectorXd x0;

  // dynamics
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)> drift;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)> diffusion;  // d x m

  // partials; drift_dx(i,j) = d b_i / d x_j, drift_du(i,a) = d b_i / d u_a,
  // diffusion_dx[i] = d sigma / d x_i (d x m), diffusion_du[a] = d sigma / d u_a
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> drift_dx;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&, const Eigen::VectorXd&)> diffusion_dx;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> drift_du;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&, const Eigen::VectorXd&)> diffusion_du;

  // costs
  std::function<double(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u)> running_cost;
  std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u)> running_cost_dx;
  std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u)> running_cost_du;
  std::function<double(const Eigen::VectorXd& x)> terminal_cost;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x)> terminal_cost_dx;
};

/// Tracking benchmark family: d y^i = u y^i dt + sigma_i y^i dW^i with the
/// quadratic tracking cost toward the case-specific target trajectory, and
/// closed-form optimal controls.
struct BenchmarkCase {
  int case_id = 1;  ///< 1 or 2
  int dim = 2;
  Eigen::VectorXd sigma;  ///< per-component volatilities
  double y0 = 0.5;
  double horizon = 1.0;

  static BenchmarkCase make(int case_id, int dim);  ///< paper volatilities 0.1, 0.15, 0.2, 0.25
};

/// Assemble the benchmark ProblemSpec. Validates that the case denominator
/// stays positive on [0, T]; throws InvalidCaseError otherwise.
ProblemSpec make_benchmark(const BenchmarkCase& bench);

/// Closed-form optimal control u*(t); requires 0 <= t <= T.
double exact_control(const BenchmarkCase& bench, double t);

/// Target trajectory y*(t) in the running cost.
double ystar(const BenchmarkCase& bench, double t);

/// sqrt(dt * sum_m (alpha_m - u*(t_{m-1}))^2): distance to the exact control
/// sampled at the left endpoint of each piece.
double l2_control_error(const ControlTrajectory& numeric, const BenchmarkCase& bench);

/// Max over pieces of |alpha_m - u*(t_{m-1})|.
double max_control_error(const ControlTrajectory& numeric, const BenchmarkCase& bench);

}  // namespace meshctrl

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

#include "meshctrl/condexp.hpp"
#include "meshctrl/control.hpp"
#include "meshctrl/meshfree.hpp"
#include "meshctrl/problems.hpp"
#include "meshctrl/quadrature.hpp"

namespace meshctrl {

/// Adjoint driver f(t, x, p, q, u) assembled from a problem's partials:
/// f = D_x j + (D_x b)^T p + tr(q^T d sigma / d x_i)_i.
struct DriverSpec {
  std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                                const Eigen::MatrixXd& q, const Eigen::VectorXd& u)>
      f;
  double lipschitz_bound = 1.0;  ///< in (p, q); Picard contracts for dt * bound < 1
};

DriverSpec make_driver(const ProblemSpec& problem);

/// Nodal adjoint values (p_n, q_n) for every time level plus the per-level
/// interpolated fields. q at the terminal level is identically zero.
struct AdjointGrid {
  int levels = 0;  ///< N
  double dt = 0.0;
  PointCloud cloud;
  std::vector<Eigen::MatrixXd> p;        ///< N+1 entries, M x d
  std::vector<Eigen::MatrixXd> q;        ///< N+1 entries, M x (d*m), column i*m+k
  std::vector<Interpolant> p_field;      ///< N+1
  std::vector<Interpolant> q_field;      ///< N+1
  std::vector<Interpolant> pq_field;     ///< N+1, p columns then q columns
};

struct BsdeStats {
  long out_of_domain_proposals = 0;
  int max_picard_iterations = 0;
};

/// p_N[k] = terminal_gradient(x_k), one row per node.
Eigen::MatrixXd terminal_condition(
    const PointCloud& cloud,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& terminal_gradient);

/// One backward level: q_n = cond_exp_dw / dt, then the implicit p-equation
/// p = E + dt f(t_n, x, p, q_n, u) resolved by Picard iteration from the
/// explicit value, tolerance 1e-12 / cap 50. Throws PicardDivergenceError
/// when the iterate error grows five times in a row.
struct BackwardStepResult {
  Eigen::MatrixXd p;  ///< M x d
  Eigen::MatrixXd q;  ///< M x (d*m)
};
BackwardStepResult backward_step(const Interpolant& p_next, const PointCloud& cloud,
                                 const DriverSpec& driver, const OneStepModel& model, double t_n,
                                 const GaussHermiteRule& rule, int level, BsdeStats* stats = nullptr);

/// Full backward sweep n = N-1 .. 0 under the given piecewise control.
AdjointGrid solve_bsde(const ProblemSpec& problem, const ControlTrajectory& control,
                       const FieldFitter& fitter, const GaussHermiteRule& rule,
                       BsdeStats* stats = nullptr);
AdjointGrid solve_bsde(const ProblemSpec& problem, const ControlTrajectory& control,
                       const PointCloud& cloud, const GaussHermiteRule& rule,
                       const InterpConfig& config, BsdeStats* stats = nullptr);

/// Optional per-level debugging dump: n,k,x...,p...,q... rows.
void dump_level_csv(const AdjointGrid& grid, int level, std::ostream& os);

}  // namespace meshctrl

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

#include "meshctrl/bsde.hpp"
#include "meshctrl/control.hpp"
#include "meshctrl/meshfree.hpp"
#include "meshctrl/problems.hpp"

namespace meshctrl {

/// Constraint set for the control: unconstrained, or a per-component box.
struct ProjectionSpec {
  std::optional<Eigen::VectorXd> lower;
  std::optional<Eigen::VectorXd> upper;

  static ProjectionSpec unconstrained() { return {}; }
  static ProjectionSpec box(Eigen::VectorXd lo, Eigen::VectorXd hi);
};

/// Componentwise clamp onto the constraint set; identity when unconstrained.
ControlTrajectory project(const ControlTrajectory& control, const ProjectionSpec& spec);

struct OptimizerConfig {
  double step_size = 0.5;
  double tolerance = 1e-3;        ///< on the discrete L^2[0,T] control change
  int max_iterations = 100;
  int sample_count = 50'000;      ///< Monte Carlo paths per gradient estimate
  std::uint64_t seed = 1;
  InterpConfig interp;
  int quadrature_order = 4;
  int cloud_size = 0;             ///< Halton nodes; 0 selects pieces^2
  int tensor_points_per_dim = 0;  ///< >0 replaces the Halton cloud with a tensor grid
  int pilot_paths = 2000;         ///< ensemble sizing the spatial box
  double box_expansion = 0.2;     ///< relative widening of the pilot range
  bool resample_each_iteration = true;  ///< fresh substream per iteration
  int max_step_halvings = 10;
};

/// Forward Euler-Maruyama ensemble, level-major storage. Deterministic for a
/// given seed: sample s draws from substream (seed, s) regardless of how the
/// work is chunked.
class PathEnsemble {
 public:
  PathEnsemble(int samples, int levels, int dim);

  int samples() const { return samples_; }
  int levels() const { return levels_; }  ///< N; states exist at 0..N
  int dim() const { return dim_; }

  double* state(int sample, int level) { return data_.data() + offset(sample, level); }
  const double* state(int sample, int level) const { return data_.data() + offset(sample, level); }

  /// samples x dim view of one time level.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> level(
      int n) const;

  bool operator==(const PathEnsemble& other) const = default;

 private:
  long offset(int sample, int level) const {
    return (static_cast<long>(level) * samples_ + sample) * dim_;
  }
  int samples_, levels_, dim_;
  std::vector<double> data_;
};

PathEnsemble simulate_paths(const ProblemSpec& problem, const ControlTrajectory& control,
                            int samples, std::uint64_t seed);

/// Piecewise gradient of the discrete cost: row n holds
/// mean_s[ (D_u b)^T p_n + tr(q_n^T D_u sigma) + D_u j ] at (t_n, X_n, u_n),
/// with p_n, q_n read through the level-n interpolants.
Eigen::MatrixXd gradient(const ProblemSpec& problem, const ControlTrajectory& control,
                         const AdjointGrid& grid, const PathEnsemble& paths);

/// Left-point time quadrature of the running cost averaged over paths plus
/// the mean terminal cost.
double cost_estimate(const ProblemSpec& problem, const ControlTrajectory& control,
                     const PathEnsemble& paths);

struct IterationDiagnostics {
  int iteration = 0;
  double cost = 0.0;
  double grad_norm = 0.0;       ///< discrete L^2[0,T]
  double control_change = 0.0;  ///< discrete L^2[0,T]
  double wall_ms = 0.0;
  int step_halvings = 0;
};

struct SolveResult {
  ControlTrajectory control;
  bool converged = false;
  int iterations = 0;
  std::vector<IterationDiagnostics> history;
  PointCloud cloud;       ///< the spatial discretization used
  double fill_distance = 0.0;
  BsdeStats bsde_stats;
};

/// Gradient projection loop u <- P(u - rho * J'_N(u)); stops when the control
/// change drops below config.tolerance or max_iterations is hit (flagged, not
/// fatal). The spatial box comes from a pilot ensemble under the initial
/// control and stays fixed across iterations.
SolveResult solve(const ProblemSpec& problem, const OptimizerConfig& config,
                  const ProjectionSpec& projection, const ControlTrajectory& initial);

/// The pilot-ensemble domain estimate used by solve().
DomainBox estimate_domain(const ProblemSpec& problem, const ControlTrajectory& control,
                          int pilot_paths, double expansion, std::uint64_t seed);

}  // namespace meshctrl

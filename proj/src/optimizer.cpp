// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "meshctrl/errors.hpp"
#include "meshctrl/parallel.hpp"
#include "meshctrl/util.hpp"

namespace meshctrl {

ProjectionSpec ProjectionSpec::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  if (lo.size() != hi.size()) throw DimensionError("ProjectionSpec: bound size mismatch");
  for (int i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i])) throw Error("ProjectionSpec: lower bound exceeds upper bound");
  }
  ProjectionSpec spec;
  spec.lower = std::move(lo);
  spec.upper = std::move(hi);
  return spec;
}

ControlTrajectory project(const ControlTrajectory& control, const ProjectionSpec& spec) {
  ControlTrajectory out = control;
  for (int a = 0; a < out.control_dim(); ++a) {
    if (spec.lower) out.values.col(a) = out.values.col(a).cwiseMax((*spec.lower)[a]);
    if (spec.upper) out.values.col(a) = out.values.col(a).cwiseMin((*spec.upper)[a]);
  }
  return out;
}

PathEnsemble::PathEnsemble(int samples, int levels, int dim)
    : samples_(samples), levels_(levels), dim_(dim) {
  data_.assign(static_cast<size_t>(samples) * (levels + 1) * dim, 0.0);
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
PathEnsemble::level(int n) const {
  return {state(0, n), samples_, dim_};
}

PathEnsemble simulate_paths(const ProblemSpec& problem, const ControlTrajectory& control,
                            int samples, std::uint64_t seed) {
  if (samples < 1) throw Error("simulate_paths: need at least one sample");
  const int N = control.pieces();
  const int d = problem.state_dim;
  const int m = problem.noise_dim;
  const double dt = control.dt();
  const double sqrt_dt = std::sqrt(dt);

  PathEnsemble paths(samples, N, d);
  // each sample draws from its own (seed, s) substream, so the result does
  // not depend on how the chunks are scheduled
  parallel_chunks(samples, 4096, [&](long begin, long end, long) {
    Eigen::VectorXd x(d), xi(m), u(problem.control_dim);
    for (long s = begin; s < end; ++s) {
      Rng rng(seed, static_cast<std::uint64_t>(s));
      x = problem.x0;
      std::copy_n(x.data(), d, paths.state(static_cast<int>(s), 0));
      for (int n = 0; n < N; ++n) {
        u = control.values.row(n).transpose();
        for (int j = 0; j < m; ++j) xi[j] = rng.next_normal();
        x += dt * problem.drift(x, u) + sqrt_dt * (problem.diffusion(x, u) * xi);
        if (!x.allFinite()) {
          throw NumericOverflowError("simulate_paths: non-finite state, sample " +
                                     std::to_string(s) + ", level " + std::to_string(n + 1));
        }
        std::copy_n(x.data(), d, paths.state(static_cast<int>(s), n + 1));
      }
    }
  });
  return paths;
}

Eigen::MatrixXd gradient(const ProblemSpec& problem, const ControlTrajectory& control,
                         const AdjointGrid& grid, const PathEnsemble& paths) {
  const int N = control.pieces();
  const int d = problem.state_dim;
  const int m = problem.noise_dim;
  const int d1 = problem.control_dim;
  const int S = paths.samples();
  const double dt = control.dt();
  if (grid.levels != N) throw DimensionError("gradient: grid and control level counts differ");
  if (paths.levels() != N) throw DimensionError("gradient: path and control level counts differ");

  // The drift term pairs D_u b(X_n) with the costate the discrete cost
  // actually differentiates to: E_{t_n}[p_{n+1}] = p_n - dt f(t_n, ., p_n,
  // q_n, u_n) by the backward scheme. Using p_n alone is off by dt * f,
  // which finite differences of the sampled cost resolve.
  const DriverSpec driver = make_driver(problem);

  Eigen::MatrixXd g(N, d1);

  // fixed-size chunks keep the reduction order independent of threading
  constexpr long kChunk = 4096;
  std::vector<Eigen::VectorXd> partials(static_cast<size_t>((S + kChunk - 1) / kChunk));

  for (int n = 0; n < N; ++n) {
    const Eigen::VectorXd u = control.values.row(n).transpose();
    const double t_n = n * dt;
    const auto states = paths.level(n);

    parallel_chunks(S, kChunk, [&](long begin, long end, long index) {
      const Eigen::MatrixXd pq_vals = grid.pq_field[n].eval_batch(states.middleRows(begin, end - begin));
      Eigen::VectorXd x(d), accum(d1), p_node(d), costate(d);
      Eigen::MatrixXd q_node(d, m);
      Eigen::VectorXd partial = Eigen::VectorXd::Zero(d1);
      for (long s = begin; s < end; ++s) {
        const long r = s - begin;
        x = states.row(s).transpose();
        p_node = pq_vals.row(r).head(d).transpose();
        for (int i = 0; i < d; ++i) {
          for (int c = 0; c < m; ++c) q_node(i, c) = pq_vals(r, d + i * m + c);
        }
        accum.setZero();
        if (problem.drift_du) {
          costate = p_node - dt * driver.f(t_n, x, p_node, q_node, u);
          accum.noalias() += problem.drift_du(x, u).transpose() * costate;
        }
        if (problem.diffusion_du) {
          const std::vector<Eigen::MatrixXd> dsig = problem.diffusion_du(x, u);
          for (int a = 0; a < d1; ++a) accum[a] += q_node.cwiseProduct(dsig[static_cast<size_t>(a)]).sum();
        }
        if (problem.running_cost_du) accum += problem.running_cost_du(t_n, x, u);
        partial += accum;
      }
      partials[static_cast<size_t>(index)] = std::move(partial);
    });

    Eigen::VectorXd term = Eigen::VectorXd::Zero(d1);
    for (const auto& part : partials) term += part;
    g.row(n) = (term / S).transpose();
  }
  if (!g.allFinite()) throw NumericOverflowError("gradient: non-finite entries");
  return g;
}

double cost_estimate(const ProblemSpec& problem, const ControlTrajectory& control,
                     const PathEnsemble& paths) {
  const int N = control.pieces();
  const int S = paths.samples();
  const double dt = control.dt();

  constexpr long kChunk = 4096;
  std::vector<double> partials(static_cast<size_t>((S + kChunk - 1) / kChunk), 0.0);
  parallel_chunks(S, kChunk, [&](long begin, long end, long index) {
    Eigen::VectorXd x(problem.state_dim), u(problem.control_dim);
    double partial = 0.0;
    for (long s = begin; s < end; ++s) {
      for (int n = 0; n < N; ++n) {
        x = Eigen::Map<const Eigen::VectorXd>(paths.state(static_cast<int>(s), n), problem.state_dim);
        u = control.values.row(n).transpose();
        partial += dt * problem.running_cost(n * dt, x, u);
      }
      if (problem.terminal_cost) {
        x = Eigen::Map<const Eigen::VectorXd>(paths.state(static_cast<int>(s), N), problem.state_dim);
        partial += problem.terminal_cost(x);
      }
    }
    partials[static_cast<size_t>(index)] = partial;
  });
  double total = 0.0;
  for (double part : partials) total += part;
  return total / S;
}

DomainBox estimate_domain(const ProblemSpec& problem, const ControlTrajectory& control,
                          int pilot_paths, double expansion, std::uint64_t seed) {
  const PathEnsemble pilot = simulate_paths(problem, control, pilot_paths, seed);
  const int d = problem.state_dim;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (int n = 0; n <= pilot.levels(); ++n) {
    const auto states = pilot.level(n);
    lo = lo.cwiseMin(states.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(states.colwise().maxCoeff().transpose());
  }
  for (int j = 0; j < d; ++j) {
    double range = hi[j] - lo[j];
    if (range <= 0.0) range = std::max(1e-8, 1e-8 * std::abs(lo[j]));
    const double pad = 0.5 * expansion * range;
    lo[j] -= pad;
    hi[j] += pad;
    if (!(lo[j] < hi[j])) {
      lo[j] -= 1e-8;
      hi[j] += 1e-8;
    }
  }
  return DomainBox(lo, hi);
}

SolveResult solve(const ProblemSpec& problem, const OptimizerConfig& config,
                  const ProjectionSpec& projection, const ControlTrajectory& initial) {
  using clock = std::chrono::steady_clock;
  const int N = initial.pieces();
  const GaussHermiteRule rule = gauss_hermite(config.quadrature_order);

  SolveResult result;
  result.control = project(initial, projection);

  // spatial discretization, fixed across gradient iterations
  const DomainBox box =
      estimate_domain(problem, result.control, config.pilot_paths, config.box_expansion,
                      config.seed ^ 0x9e3779b97f4a7c15ULL);
  const int M = config.cloud_size > 0 ? config.cloud_size : N * N;
  PointCloud cloud = config.tensor_points_per_dim > 0
                         ? tensor_grid(config.tensor_points_per_dim, box)
                         : scale_to_box(halton_sequence(M, problem.state_dim), box);
  result.fill_distance = ensure_fill_distance(cloud);
  const FieldFitter fitter(cloud, config.interp);
  result.cloud = fitter.cloud();

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const auto t0 = clock::now();
    IterationDiagnostics diag;
    diag.iteration = iter;

    const std::uint64_t stream = config.resample_each_iteration ? static_cast<std::uint64_t>(iter) : 0;
    const std::uint64_t iter_seed = config.seed + 0x51'7cc1b727220a95ULL * stream;

    const AdjointGrid grid = solve_bsde(problem, result.control, fitter, rule, &result.bsde_stats);
    const PathEnsemble paths = simulate_paths(problem, result.control, config.sample_count, iter_seed);
    const Eigen::MatrixXd g = gradient(problem, result.control, grid, paths);

    diag.cost = cost_estimate(problem, result.control, paths);
    diag.grad_norm = std::sqrt(result.control.dt() * g.squaredNorm());

    // Gradient step with halving on cost increase. When no halving level
    // decreases the sampled cost the differences are at Monte Carlo noise
    // level, so the plain fixed-point step is taken; rejecting it outright
    // stalls the iteration short of the fixed point.
    double rho = config.step_size;
    ControlTrajectory candidate = result.control;
    bool accepted = false;
    for (int halving = 0; halving <= config.max_step_halvings; ++halving) {
      candidate.values = result.control.values - rho * g;
      candidate = project(candidate, projection);
      const PathEnsemble cand_paths =
          simulate_paths(problem, candidate, config.sample_count, iter_seed);
      const double cand_cost = cost_estimate(problem, candidate, cand_paths);
      if (cand_cost <= diag.cost) {
        diag.step_halvings = halving;
        accepted = true;
        break;
      }
      rho *= 0.5;
    }
    if (!accepted) {
      diag.step_halvings = 0;
      candidate.values = result.control.values - config.step_size * g;
      candidate = project(candidate, projection);
    }

    diag.control_change =
        std::sqrt(result.control.dt() * (candidate.values - result.control.values).squaredNorm());
    result.control = candidate;
    result.iterations = iter + 1;
    diag.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    result.history.push_back(diag);

    // a halved step can shrink the control change below tolerance while the
    // iterate is still far from the fixed point; only full steps count
    if (diag.control_change <= config.tolerance && diag.step_halvings == 0) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace meshctrl

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "meshctrl/meshfree.hpp"
#include "meshctrl/optimizer.hpp"
#include "meshctrl/problems.hpp"

namespace meshctrl {

/// One side of a compare run.
struct MethodBlock {
  std::string name;  ///< label in compare.csv; defaults to the backend name
  InterpBackend backend = InterpBackend::Rbf;
  int points = 0;   ///< Halton node count
  int perdim = 0;   ///< tensor nodes per dimension (multilinear)
};

/// Flat key=value experiment description; `method.`-prefixed keys open and
/// extend compare blocks (each method.backend line starts a new block).
struct ExperimentConfig {
  // benchmark
  int case_id = 1;
  int dim = 2;
  std::vector<double> sigma;  ///< empty selects 0.1, 0.15, 0.2, ...
  double y0 = 0.5;
  double horizon = 1.0;

  // discretization
  int n_time = 21;
  std::vector<int> n_list;
  std::string points_rule = "N^2";  ///< "N^2" or an explicit node count
  InterpBackend backend = InterpBackend::Rbf;
  int quad_order = 4;

  // optimization
  int samples = 50'000;
  double tolerance = 1e-3;
  double step_size = 0.5;
  int max_iters = 100;
  std::uint64_t seed = 1;

  std::string out_dir = ".";

  std::vector<MethodBlock> methods;

  // interp-bench
  int bench_dim = 2;
  std::vector<int> bench_points = {64, 256, 1024};
  std::vector<InterpBackend> bench_backends = {InterpBackend::Mls, InterpBackend::Rbf};
  std::string test_function = "sincos";
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_file(const std::string& path);

BenchmarkCase benchmark_from_config(const ExperimentConfig& cfg);
OptimizerConfig optimizer_from_config(const ExperimentConfig& cfg, int n_time,
                                      InterpBackend backend, int points, int perdim);

/// One row of a converge study.
struct ConvergeRow {
  int n_time = 0;
  double dt = 0.0;
  double h = 0.0;
  double l2_error = 0.0;
  double rate = 0.0;   ///< vs the previous row; NaN on the first
  bool failed = false;
  std::string message;
};
struct ConvergeOutcome {
  std::vector<ConvergeRow> rows;
  double slope = 0.0;  ///< least-squares log(err) vs log(dt)
};
ConvergeOutcome run_converge(const ExperimentConfig& cfg);

/// One row of a compare study.
struct CompareRow {
  std::string name;
  int points = 0;
  double l2_error = 0.0;
  double max_error = 0.0;
  double wall_ms = 0.0;
};
std::vector<CompareRow> run_compare(const ExperimentConfig& cfg);

/// Full solve at cfg.n_time; writes control.csv (t,u_num,u_exact), iters.csv
/// and a gnuplot script.
int cmd_run(const ExperimentConfig& cfg);

/// Per-N solves over cfg.n_list; writes decay.csv with N,dt,h,l2_error,rate
/// rows and a trailing least-squares slope comment. Failed N values are
/// recorded as comments and skipped.
int cmd_converge(const ExperimentConfig& cfg);

/// Two method blocks on the same case/N/seed; writes compare.csv with
/// method,M,l2_error,max_error,wall_ms (wall time around the solve only).
int cmd_compare(const ExperimentConfig& cfg);

/// Interpolation accuracy study on [0,1]^bench_dim; writes interp.csv with
/// backend,h,max_err,rate.
int cmd_interp_bench(const ExperimentConfig& cfg);

/// Least-squares slope of log(err) against log(dt); used by cmd_converge.
double fit_loglog_slope(const std::vector<double>& dt, const std::vector<double>& err);

}  // namespace meshctrl

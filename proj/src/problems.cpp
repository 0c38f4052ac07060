// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/problems.hpp"

#include <cmath>

#include "meshctrl/errors.hpp"

namespace meshctrl {

namespace {

double case_denominator(const BenchmarkCase& b, double t) {
  if (b.case_id == 1) return 1.0 / b.y0 - b.horizon * t + 0.5 * t * t;
  return 1.0 / b.y0 + 1.0 - std::exp(-t) - std::exp(-b.horizon) * t;
}

void check_time(const BenchmarkCase& b, double t) {
  if (t < 0.0 || t > b.horizon) {
    throw Error("benchmark: t = " + std::to_string(t) + " outside [0, " + std::to_string(b.horizon) + "]");
  }
}

void validate(const BenchmarkCase& b) {
  if (b.case_id != 1 && b.case_id != 2) throw InvalidCaseError("benchmark: case must be 1 or 2");
  if (b.dim < 1) throw InvalidCaseError("benchmark: dim must be positive");
  if (b.sigma.size() != b.dim) throw InvalidCaseError("benchmark: need one sigma per dimension");
  if (!(b.y0 > 0.0)) throw InvalidCaseError("benchmark: y0 must be positive");
  for (int i = 0; i <= 1000; ++i) {
    const double t = b.horizon * i / 1000.0;
    if (!(case_denominator(b, t) > 0.0)) {
      throw InvalidCaseError("benchmark: denominator is nonpositive at t = " + std::to_string(t));
    }
  }
}

}  // namespace

BenchmarkCase BenchmarkCase::make(int case_id, int dim) {
  BenchmarkCase b;
  b.case_id = case_id;
  b.dim = dim;
  b.sigma.resize(dim);
  for (int i = 0; i < dim; ++i) b.sigma[i] = 0.1 + 0.05 * i;
  return b;
}

double exact_control(const BenchmarkCase& bench, double t) {
  check_time(bench, t);
  const double T = bench.horizon;
  if (bench.case_id == 1) return (T - t) / case_denominator(bench, t);
  return (std::exp(-T) - std::exp(-t)) / case_denominator(bench, t);
}

double ystar(const BenchmarkCase& bench, double t) {
  check_time(bench, t);
  const double T = bench.horizon;
  const double denom = case_denominator(bench, t);
  double esum = 0.0;
  for (int i = 0; i < bench.dim; ++i) esum += std::exp(bench.sigma[i] * bench.sigma[i] * t);
  if (bench.case_id == 1) {
    return (1.0 - (t - T) * (t - T) / denom + esum / denom) / bench.dim;
  }
  const double e_diff = std::exp(-T) - std::exp(-t);
  return ((esum - e_diff * e_diff) / denom - std::exp(-t)) / bench.dim;
}

ProblemSpec make_benchmark(const BenchmarkCase& bench) {
  validate(bench);
  const BenchmarkCase b = bench;
  const int d = b.dim;

  ProblemSpec p;
  p.state_dim = d;
  p.noise_dim = d;
  p.control_dim = 1;
  p.horizon = b.horizon;
  p.x0 = Eigen::VectorXd::Constant(d, b.y0);

  p.drift = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return u[0] * x;
  };
  p.diffusion = [b, d](const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::MatrixXd {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) s(i, i) = b.sigma[i] * x[i];
    return s;
  };
  p.drift_dx = [d](const Eigen::VectorXd&, const Eigen::VectorXd& u) -> Eigen::MatrixXd {
    return u[0] * Eigen::MatrixXd::Identity(d, d);
  };
  p.diffusion_dx = [b, d](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    std::vector<Eigen::MatrixXd> out(d, Eigen::MatrixXd::Zero(d, d));
    for (int i = 0; i < d; ++i) out[i](i, i) = b.sigma[i];
    return out;
  };
  p.drift_du = [](const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return x;  // d x 1
  };
  p.diffusion_du = nullptr;  // control-free diffusion

  p.running_cost = [b](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const double target = ystar(b, t);
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) acc += (x[i] - target) * (x[i] - target);
    return 0.5 * acc + 0.5 * u[0] * u[0];
  };
  p.running_cost_dx = [b](double t, const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::VectorXd {
    return x.array() - ystar(b, t);
  };
  p.running_cost_du = [](double, const Eigen::VectorXd&, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return u;
  };
  p.terminal_cost = [](const Eigen::VectorXd&) { return 0.0; };
  p.terminal_cost_dx = [d](const Eigen::VectorXd&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Zero(d);
  };
  return p;
}

double l2_control_error(const ControlTrajectory& numeric, const BenchmarkCase& bench) {
  const int N = numeric.pieces();
  const double dt = numeric.dt();
  double acc = 0.0;
  for (int m = 0; m < N; ++m) {
    const double diff = numeric.values(m, 0) - exact_control(bench, m * dt);
    acc += diff * diff;
  }
  return std::sqrt(dt * acc);
}

double max_control_error(const ControlTrajectory& numeric, const BenchmarkCase& bench) {
  const int N = numeric.pieces();
  const double dt = numeric.dt();
  double worst = 0.0;
  for (int m = 0; m < N; ++m) {
    worst = std::max(worst, std::abs(numeric.values(m, 0) - exact_control(bench, m * dt)));
  }
  return worst;
}

}  // namespace meshctrl

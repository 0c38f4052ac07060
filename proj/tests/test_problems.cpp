// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "meshctrl/errors.hpp"
#include "meshctrl/problems.hpp"
#include "meshctrl/util.hpp"

using namespace meshctrl;

TEST_CASE("case 1 exact control values") {
  const BenchmarkCase bench = BenchmarkCase::make(1, 2);
  // u*(0) = T / (1/y0) = 1/2
  CHECK(exact_control(bench, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(exact_control(bench, 1.0) == 0.0);
  CHECK_THROWS(exact_control(bench, -0.1));
  CHECK_THROWS(exact_control(bench, 1.1));
}

TEST_CASE("case 2 exact control vanishes at the horizon") {
  const BenchmarkCase bench = BenchmarkCase::make(2, 2);
  CHECK(exact_control(bench, 1.0) == 0.0);
  // hand arithmetic at t=0: (e^{-1} - 1) / (2 + 1 - 1 - 0)
  const double expected = (std::exp(-1.0) - 1.0) / 2.0;
  CHECK(exact_control(bench, 0.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("case 1 target trajectory hand value") {
  // d=2, sigma=(0.1,0.15), y0=0.5, T=1, t=0: D(0)=2, sum e^0 = 2
  // (1/2)(1 - 1/2 + 2/2) = 0.75
  const BenchmarkCase bench = BenchmarkCase::make(1, 2);
  CHECK(ystar(bench, 0.0) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("case 2 target trajectory hand value") {
  // t=0, d=2, y0=0.5, T=1: E(0) = 2, sum e^0 = 2, (e^{-1}-1)^2
  // (1/2)((2 - (e^{-1}-1)^2)/2 - 1)
  const BenchmarkCase bench = BenchmarkCase::make(2, 2);
  const double hand = 0.5 * ((2.0 - std::pow(std::exp(-1.0) - 1.0, 2)) / 2.0 - 1.0);
  CHECK(ystar(bench, 0.0) == doctest::Approx(hand).epsilon(1e-14));
  CHECK(hand == doctest::Approx(-0.09989).epsilon(1e-3));
}

TEST_CASE("sigma to zero limit of the exponential sum") {
  BenchmarkCase bench = BenchmarkCase::make(1, 3);
  bench.sigma.setZero();
  // with all sigmas zero, sum e^{sigma^2 t} = d for every t
  const double t = 0.6;
  const double denom = 1.0 / bench.y0 - t + t * t / 2.0;
  const double expected = (1.0 - (t - 1.0) * (t - 1.0) / denom + 3.0 / denom) / 3.0;
  CHECK(ystar(bench, t) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("case denominators stay positive over the horizon") {
  for (int case_id : {1, 2}) {
    const BenchmarkCase bench = BenchmarkCase::make(case_id, 2);
    for (int i = 0; i <= 1000; ++i) {
      const double t = i / 1000.0;
      CHECK(std::isfinite(exact_control(bench, t)));
    }
    CHECK(exact_control(bench, bench.horizon) == 0.0);
  }
}

TEST_CASE("invalid benchmark cases are rejected") {
  BenchmarkCase bad = BenchmarkCase::make(1, 2);
  bad.y0 = -0.5;
  CHECK_THROWS_AS(make_benchmark(bad), InvalidCaseError);

  BenchmarkCase huge = BenchmarkCase::make(1, 2);
  huge.y0 = 0.5;
  huge.horizon = 4.0;  // 1/y0 - T t + t^2/2 turns negative
  CHECK_THROWS_AS(make_benchmark(huge), InvalidCaseError);

  BenchmarkCase mismatched = BenchmarkCase::make(2, 3);
  mismatched.sigma.resize(2);
  CHECK_THROWS_AS(make_benchmark(mismatched), InvalidCaseError);
}

TEST_CASE("benchmark callbacks assemble the expected quantities") {
  const BenchmarkCase bench = BenchmarkCase::make(1, 2);
  const ProblemSpec p = make_benchmark(bench);
  CHECK(p.state_dim == 2);
  CHECK(p.noise_dim == 2);
  CHECK(p.control_dim == 1);
  CHECK(p.x0[0] == 0.5);

  Eigen::VectorXd y(2), u(1);
  y << 0.6, 0.8;
  u << 0.3;

  CHECK((p.drift(y, u) - 0.3 * y).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::MatrixXd sig = p.diffusion(y, u);
  CHECK(sig(0, 0) == doctest::Approx(0.1 * 0.6));
  CHECK(sig(1, 1) == doctest::Approx(0.15 * 0.8));
  CHECK(sig(0, 1) == 0.0);

  // D_u b = y, D_u j = u, terminal gradient = 0
  CHECK((p.drift_du(y, u) - y).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(p.running_cost_du(0.2, y, u)[0] == doctest::Approx(0.3));
  CHECK(p.terminal_cost_dx(y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(!p.diffusion_du);  // diffusion carries no control dependence

  // running cost at t: 0.5 sum (y_i - ystar)^2 + 0.5 u^2
  const double t = 0.4;
  const double target = ystar(bench, t);
  const double expected_cost = 0.5 * (std::pow(0.6 - target, 2) + std::pow(0.8 - target, 2)) +
                               0.5 * 0.09;
  CHECK(p.running_cost(t, y, u) == doctest::Approx(expected_cost).epsilon(1e-14));
  CHECK(p.running_cost_dx(t, y, u)[0] == doctest::Approx(0.6 - target).epsilon(1e-14));
}

TEST_CASE("benchmark callback shapes are consistent for d = 1..4") {
  Rng rng(3);
  for (int d = 1; d <= 4; ++d) {
    for (int case_id : {1, 2}) {
      const ProblemSpec p = make_benchmark(BenchmarkCase::make(case_id, d));
      Eigen::VectorXd y(d), u(1);
      for (int i = 0; i < d; ++i) y[i] = 0.3 + rng.next_double();
      u << rng.next_double() - 0.5;
      CHECK(p.drift(y, u).size() == d);
      CHECK(p.diffusion(y, u).rows() == d);
      CHECK(p.diffusion(y, u).cols() == d);
      CHECK(p.drift_dx(y, u).rows() == d);
      CHECK(p.drift_du(y, u).cols() == 1);
      CHECK(static_cast<int>(p.diffusion_dx(y, u).size()) == d);
      CHECK(p.running_cost_dx(0.5, y, u).size() == d);
      CHECK(std::isfinite(p.running_cost(0.5, y, u)));
    }
  }
}

TEST_CASE("l2 control error norm arithmetic") {
  const BenchmarkCase bench = BenchmarkCase::make(1, 2);
  const int N = 20;
  ControlTrajectory exact = ControlTrajectory::zeros(N, 1, 1.0);
  for (int m = 0; m < N; ++m) exact.values(m, 0) = exact_control(bench, m * exact.dt());
  CHECK(l2_control_error(exact, bench) == 0.0);

  // constant offset delta has norm delta * sqrt(T)
  ControlTrajectory offset = exact;
  offset.values.array() += 0.25;
  CHECK(l2_control_error(offset, bench) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(max_control_error(offset, bench) == doctest::Approx(0.25).epsilon(1e-12));

  // halving a pointwise error profile halves the norm
  ControlTrajectory half = exact;
  half.values = exact.values * 0.5 + offset.values * 0.5;
  CHECK(l2_control_error(half, bench) == doctest::Approx(0.125).epsilon(1e-12));
}

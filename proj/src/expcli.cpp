// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/expcli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "meshctrl/errors.hpp"
#include "meshctrl/util.hpp"

namespace meshctrl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

InterpBackend parse_backend(const std::string& name, int line) {
  if (name == "mls") return InterpBackend::Mls;
  if (name == "rbf") return InterpBackend::Rbf;
  if (name == "shepard") return InterpBackend::Shepard;
  if (name == "multilinear") return InterpBackend::MultilinearTensor;
  throw ConfigError("line " + std::to_string(line) + ": unknown backend '" + name + "'", line);
}

template <typename T>
T parse_number(const std::string& value, int line) {
  try {
    if constexpr (std::is_same_v<T, double>) return std::stod(value);
    if constexpr (std::is_same_v<T, int>) return std::stoi(value);
    if constexpr (std::is_same_v<T, std::uint64_t>) return std::stoull(value);
  } catch (const std::exception&) {
  }
  throw ConfigError("line " + std::to_string(line) + ": cannot parse number '" + value + "'", line);
}

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/" + name;
  std::ofstream os(path, std::ios::binary);  // LF line endings everywhere
  if (!os) throw Error("cannot open " + path);
  return os;
}

}  // namespace

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected key=value", line);
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));

    if (key.rfind("method.", 0) == 0) {
      const std::string field = key.substr(7);
      if (field == "backend") {
        MethodBlock block;
        block.backend = parse_backend(value, line);
        block.name = value;
        cfg.methods.push_back(block);
      } else if (cfg.methods.empty()) {
        throw ConfigError("line " + std::to_string(line) + ": method." + field +
                              " before any method.backend",
                          line);
      } else if (field == "points") {
        cfg.methods.back().points = parse_number<int>(value, line);
      } else if (field == "perdim") {
        cfg.methods.back().perdim = parse_number<int>(value, line);
      } else if (field == "name") {
        cfg.methods.back().name = value;
      } else {
        throw ConfigError("line " + std::to_string(line) + ": unknown field method." + field, line);
      }
      continue;
    }

    if (key == "case") cfg.case_id = parse_number<int>(value, line);
    else if (key == "dim") cfg.dim = parse_number<int>(value, line);
    else if (key == "sigma") {
      cfg.sigma.clear();
      for (const auto& tok : split(value, ',')) cfg.sigma.push_back(parse_number<double>(tok, line));
    } else if (key == "y0") cfg.y0 = parse_number<double>(value, line);
    else if (key == "horizon") cfg.horizon = parse_number<double>(value, line);
    else if (key == "N") cfg.n_time = parse_number<int>(value, line);
    else if (key == "N_list") {
      cfg.n_list.clear();
      for (const auto& tok : split(value, ',')) cfg.n_list.push_back(parse_number<int>(tok, line));
    } else if (key == "points") cfg.points_rule = value;
    else if (key == "backend") cfg.backend = parse_backend(value, line);
    else if (key == "quad_order") cfg.quad_order = parse_number<int>(value, line);
    else if (key == "samples") cfg.samples = parse_number<int>(value, line);
    else if (key == "tolerance") cfg.tolerance = parse_number<double>(value, line);
    else if (key == "step_size") cfg.step_size = parse_number<double>(value, line);
    else if (key == "max_iters") cfg.max_iters = parse_number<int>(value, line);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, line);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "bench_dim") cfg.bench_dim = parse_number<int>(value, line);
    else if (key == "bench_points") {
      cfg.bench_points.clear();
      for (const auto& tok : split(value, ',')) cfg.bench_points.push_back(parse_number<int>(tok, line));
    } else if (key == "bench_backends") {
      cfg.bench_backends.clear();
      for (const auto& tok : split(value, ',')) cfg.bench_backends.push_back(parse_backend(tok, line));
    } else if (key == "test_function") cfg.test_function = value;
    else {
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'", line);
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  return parse_config(is);
}

BenchmarkCase benchmark_from_config(const ExperimentConfig& cfg) {
  BenchmarkCase bench = BenchmarkCase::make(cfg.case_id, cfg.dim);
  bench.y0 = cfg.y0;
  bench.horizon = cfg.horizon;
  if (!cfg.sigma.empty()) {
    if (static_cast<int>(cfg.sigma.size()) != cfg.dim) {
      throw ConfigError("sigma list length does not match dim");
    }
    for (int i = 0; i < cfg.dim; ++i) bench.sigma[i] = cfg.sigma[static_cast<size_t>(i)];
  }
  return bench;
}

OptimizerConfig optimizer_from_config(const ExperimentConfig& cfg, int n_time,
                                      InterpBackend backend, int points, int perdim) {
  OptimizerConfig opt;
  opt.step_size = cfg.step_size;
  opt.tolerance = cfg.tolerance;
  opt.max_iterations = cfg.max_iters;
  opt.sample_count = cfg.samples;
  opt.seed = cfg.seed;
  opt.quadrature_order = cfg.quad_order;
  opt.interp = InterpConfig::make(backend);
  if (backend == InterpBackend::MultilinearTensor) {
    opt.tensor_points_per_dim = perdim > 0 ? perdim : 9;
  } else if (points > 0) {
    opt.cloud_size = points;
  } else if (cfg.points_rule == "N^2") {
    opt.cloud_size = n_time * n_time;
  } else {
    opt.cloud_size = parse_number<int>(cfg.points_rule, 0);
  }
  return opt;
}

namespace {

struct SolveArtifacts {
  SolveResult result;
  double wall_ms = 0.0;
};

SolveArtifacts run_solve(const ExperimentConfig& cfg, int n_time, InterpBackend backend, int points,
                         int perdim) {
  const BenchmarkCase bench = benchmark_from_config(cfg);
  const ProblemSpec problem = make_benchmark(bench);
  const OptimizerConfig opt = optimizer_from_config(cfg, n_time, backend, points, perdim);
  const ControlTrajectory initial = ControlTrajectory::zeros(n_time, 1, cfg.horizon);

  SolveArtifacts art;
  const auto t0 = std::chrono::steady_clock::now();
  art.result = solve(problem, opt, ProjectionSpec::unconstrained(), initial);
  art.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return art;
}

void write_iters_csv(const ExperimentConfig& cfg, const SolveResult& result) {
  auto os = open_out(cfg, "iters.csv");
  os << "iter,cost,grad_norm,control_change,wall_ms\n";
  for (const auto& it : result.history) {
    os << it.iteration << ',' << format_g17(it.cost) << ',' << format_g17(it.grad_norm) << ','
       << format_g17(it.control_change) << ',' << format_g17(it.wall_ms) << "\n";
  }
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg) {
  const BenchmarkCase bench = benchmark_from_config(cfg);
  const SolveArtifacts art = run_solve(cfg, cfg.n_time, cfg.backend, 0, 0);
  const ControlTrajectory& u = art.result.control;

  {
    auto os = open_out(cfg, "control.csv");
    os << "t,u_num,u_exact\n";
    for (int m = 0; m < u.pieces(); ++m) {
      const double t = m * u.dt();
      os << format_g17(t) << ',' << format_g17(u.values(m, 0)) << ','
         << format_g17(exact_control(bench, t)) << "\n";
    }
  }
  write_iters_csv(cfg, art.result);
  {
    auto os = open_out(cfg, "control.gp");
    os << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set xlabel 't'\n"
       << "set ylabel 'u'\n"
       << "plot 'control.csv' using 1:3 with lines lc rgb 'red' title 'exact', \\\n"
       << "     'control.csv' using 1:2 with points pt 7 lc rgb 'blue' title 'numeric'\n";
  }
  const double err = l2_control_error(u, bench);
  std::printf("run: case %d d=%d N=%d backend=%s M=%d iters=%d l2_error=%.6g converged=%d\n",
              cfg.case_id, cfg.dim, cfg.n_time, backend_name(cfg.backend), art.result.cloud.size(),
              art.result.iterations, err, art.result.converged ? 1 : 0);
  return 0;
}

double fit_loglog_slope(const std::vector<double>& dt, const std::vector<double>& err) {
  const size_t n = dt.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t used = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!(err[i] > 0.0)) continue;
    const double x = std::log(dt[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  if (used < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = used * sxx - sx * sx;
  return (used * sxy - sx * sy) / denom;
}

ConvergeOutcome run_converge(const ExperimentConfig& cfg) {
  if (cfg.n_list.size() < 3) throw ConfigError("converge: N_list needs at least 3 values");
  if (!std::is_sorted(cfg.n_list.begin(), cfg.n_list.end())) {
    throw ConfigError("converge: N_list must be increasing");
  }
  const BenchmarkCase bench = benchmark_from_config(cfg);

  ConvergeOutcome out;
  std::vector<double> dts, errs;
  double prev_dt = 0.0, prev_err = -1.0;
  for (int N : cfg.n_list) {
    ConvergeRow row;
    row.n_time = N;
    row.dt = cfg.horizon / N;
    row.rate = std::numeric_limits<double>::quiet_NaN();
    try {
      const SolveArtifacts art = run_solve(cfg, N, cfg.backend, 0, 0);
      row.h = art.result.fill_distance;
      row.l2_error = l2_control_error(art.result.control, bench);
      if (prev_err > 0.0 && row.l2_error > 0.0) {
        row.rate = std::log(prev_err / row.l2_error) / std::log(prev_dt / row.dt);
      }
      std::printf("converge: N=%2d backend=%s l2_error=%.6g iters=%d\n", N,
                  backend_name(cfg.backend), row.l2_error, art.result.iterations);
      dts.push_back(row.dt);
      errs.push_back(row.l2_error);
      prev_dt = row.dt;
      prev_err = row.l2_error;
    } catch (const Error& e) {
      row.failed = true;
      row.message = e.what();
      std::fprintf(stderr, "converge: N=%d failed: %s\n", N, e.what());
    }
    out.rows.push_back(std::move(row));
  }
  out.slope = fit_loglog_slope(dts, errs);
  std::printf("converge: backend=%s fitted slope %.4f\n", backend_name(cfg.backend), out.slope);
  return out;
}

int cmd_converge(const ExperimentConfig& cfg) {
  const ConvergeOutcome outcome = run_converge(cfg);

  auto os = open_out(cfg, "decay.csv");
  os << "N,dt,h,l2_error,rate\n";
  for (const ConvergeRow& row : outcome.rows) {
    if (row.failed) {
      os << "# N=" << row.n_time << " failed: " << row.message << "\n";
      continue;
    }
    os << row.n_time << ',' << format_g17(row.dt) << ',' << format_g17(row.h) << ','
       << format_g17(row.l2_error) << ',';
    if (std::isfinite(row.rate)) {
      os << format_g17(row.rate);
    } else if (row.l2_error == 0.0) {
      os << "\n# N=" << row.n_time << ": zero error; rate undefined";
    }
    os << "\n";
  }
  os << "# slope = " << format_g17(outcome.slope) << "\n";
  {
    auto gp = open_out(cfg, "decay.gp");
    gp << "set datafile separator ','\n"
       << "set logscale xy\n"
       << "set xlabel 'dt'\n"
       << "set ylabel 'L2 control error'\n"
       << "plot 'decay.csv' using 2:4 with points pt 7 lc rgb 'blue' title 'error', \\\n"
       << "     'decay.csv' using 2:($2) with lines lc rgb 'red' title 'slope 1'\n";
  }
  return 0;
}

std::vector<CompareRow> run_compare(const ExperimentConfig& cfg) {
  if (cfg.methods.size() != 2) throw ConfigError("compare: exactly two method blocks required");
  const BenchmarkCase bench = benchmark_from_config(cfg);

  std::vector<CompareRow> rows;
  for (const MethodBlock& method : cfg.methods) {
    const SolveArtifacts art = run_solve(cfg, cfg.n_time, method.backend, method.points, method.perdim);
    CompareRow row;
    row.name = method.name;
    row.points = art.result.cloud.size();
    row.l2_error = l2_control_error(art.result.control, bench);
    row.max_error = max_control_error(art.result.control, bench);
    row.wall_ms = art.wall_ms;
    std::printf("compare: %s M=%d l2_error=%.6g max_error=%.6g wall=%.0f ms\n", row.name.c_str(),
                row.points, row.l2_error, row.max_error, row.wall_ms);
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_compare(const ExperimentConfig& cfg) {
  const std::vector<CompareRow> rows = run_compare(cfg);
  auto os = open_out(cfg, "compare.csv");
  os << "method,M,l2_error,max_error,wall_ms\n";
  for (const CompareRow& row : rows) {
    os << row.name << ',' << row.points << ',' << format_g17(row.l2_error) << ','
       << format_g17(row.max_error) << ',' << format_g17(row.wall_ms) << "\n";
  }
  return 0;
}

namespace {

double test_function_value(const std::string& name, const Eigen::VectorXd& x) {
  if (name == "sincos") {
    if (x.size() == 1) return std::sin(x[0]);
    return std::sin(x[0]) * std::cos(x[1]);
  }
  if (name == "gauss") {
    return std::exp(-4.0 * (x.array() - 0.5).square().sum());
  }
  if (name == "const") return 3.5;
  throw ConfigError("interp-bench: unknown test_function '" + name + "'");
}

}  // namespace

int cmd_interp_bench(const ExperimentConfig& cfg) {
  if (cfg.bench_points.size() < 3) throw ConfigError("interp-bench: need at least 3 refinement levels");
  const int d = cfg.bench_dim;
  const DomainBox box = DomainBox::unit(d);

  const int probes_per_dim = std::max(10, static_cast<int>(std::floor(std::pow(3000.0, 1.0 / d))));
  const PointCloud probes = tensor_grid(d == 2 ? 50 : probes_per_dim, box);

  auto os = open_out(cfg, "interp.csv");
  os << "backend,h,max_err,rate\n";
  for (InterpBackend backend : cfg.bench_backends) {
    double prev_h = 0.0, prev_err = -1.0;
    for (int M : cfg.bench_points) {
      PointCloud cloud = scale_to_box(halton_sequence(M, d), box);
      const double h = ensure_fill_distance(cloud);
      Eigen::MatrixXd values(M, 1);
      for (int k = 0; k < M; ++k) {
        values(k, 0) = test_function_value(cfg.test_function, cloud.points.row(k).transpose());
      }
      const Interpolant field = interp_field(cloud, values, InterpConfig::make(backend));
      const Eigen::MatrixXd approx = field.eval_batch(probes.points);
      double max_err = 0.0;
      for (int i = 0; i < probes.size(); ++i) {
        const double exact = test_function_value(cfg.test_function, probes.points.row(i).transpose());
        max_err = std::max(max_err, std::abs(approx(i, 0) - exact));
      }
      os << backend_name(backend) << ',' << format_g17(h) << ',' << format_g17(max_err);
      if (prev_err > 0.0 && max_err > 0.0) {
        os << ',' << format_g17(std::log(prev_err / max_err) / std::log(prev_h / h));
      } else {
        os << ',';
      }
      os << "\n";
      std::printf("interp-bench: %s M=%d h=%.4g max_err=%.6g\n", backend_name(backend), M, h, max_err);
      prev_h = h;
      prev_err = max_err;
    }
  }
  return 0;
}

}  // namespace meshctrl

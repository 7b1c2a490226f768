// Command implementations behind the `duoscale` executable. Each command
// validates its configuration first and returns plot-ready CSV text.
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "duoscale/config.hpp"
#include "duoscale/errors.hpp"
#include "duoscale/integrate.hpp"
#include "duoscale/response.hpp"
#include "duoscale/spectral.hpp"

namespace duoscale {

enum class SeedBranch { lower, upper };

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

namespace csv {

/// 17 significant digits, '.' separator; round-trips every double.
inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string row(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  s += "\r\n";
  return s;
}

}  // namespace csv

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

inline TimeSeries run_simulation(const RunConfig& cfg, const PreparedRun& run) {
  const auto [u0, v0] = initial_state(cfg, run);
  const FullDynamics dyn(run.system, run.basis);
  return integrate(dyn, u0, v0, cfg.integrator);
}

inline void check_integrator(const RunConfig& cfg) {
  try {
    validate(cfg.integrator);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("integrator: ") + e.what());
  }
  require(cfg.stride >= 1, "integrator.stride must be >= 1");
}

inline void check_spectrum(const RunConfig& cfg) {
  require(cfg.lambda_min < cfg.lambda_max, "analysis.lambda_min must be < lambda_max");
  require(cfg.lambda_min >= 0.0, "analysis.lambda_min must be >= 0");
  require(cfg.n_grid >= 2, "analysis.n_grid must be >= 2");
  require(cfg.transient_fraction >= 0.0 && cfg.transient_fraction < 1.0, "analysis.transient_fraction must lie in [0, 1)");
  require(cfg.min_prominence > 0.0, "analysis.min_prominence must be positive");
}

/// Reads `t,u_1,...` CSV (header required); returns the chosen column.
inline std::vector<double> read_signal_csv(const std::string& path, int component, double& t0, double& dt) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open input " + path);
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("input " + path + " is empty");
  std::vector<double> t, x;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(IniDocument::parse_number(cell, "input line " + std::to_string(line_no)));
    if (static_cast<int>(cells.size()) <= component) throw ConfigError("input line " + std::to_string(line_no) + ": missing column");
    t.push_back(cells[0]);
    x.push_back(cells[static_cast<std::size_t>(component)]);
  }
  if (t.size() < 2) throw ConfigError("input needs at least two samples");
  t0 = t.front();
  dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  require(dt > 0.0, "input time column must increase");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6 * dt) throw ConfigError("input time grid is not uniform");
  return x;
}

}  // namespace detail

/// `k,omega,phi_1..phi_n,delta_p_phi`
inline std::string cmd_modes(const RunConfig& cfg) {
  const PreparedRun run = prepare_system(cfg);
  const int n = run.system.n();
  std::vector<std::string> head{"k", "omega"};
  for (int i = 1; i <= n; ++i) head.push_back("phi_" + std::to_string(i));
  head.push_back("delta_p_phi");
  std::string out = csv::row(head);
  for (int k = 0; k < n; ++k) {
    std::vector<std::string> r{std::to_string(k + 1), csv::num(run.basis.frequencies[k])};
    for (int i = 0; i < n; ++i) r.push_back(csv::num(run.basis.modes(i, k)));
    r.push_back(csv::num(run.basis.gaps[k]));
    out += csv::row(r);
  }
  return out;
}

/// `t,u_1..u_n,v_1..v_n` every `stride` samples.
inline std::string cmd_simulate(const RunConfig& cfg) {
  detail::check_integrator(cfg);
  const PreparedRun run = prepare_system(cfg);
  (void)initial_state(cfg, run);
  const TimeSeries ts = detail::run_simulation(cfg, run);
  const int n = run.system.n();
  std::vector<std::string> head{"t"};
  for (int i = 1; i <= n; ++i) head.push_back("u_" + std::to_string(i));
  for (int i = 1; i <= n; ++i) head.push_back("v_" + std::to_string(i));
  std::string out = csv::row(head);
  for (std::size_t k = 0; k < ts.size(); k += static_cast<std::size_t>(cfg.stride)) {
    std::vector<std::string> r{csv::num(ts.time(k))};
    for (int i = 0; i < n; ++i) r.push_back(csv::num(ts.u[k][i]));
    for (int i = 0; i < n; ++i) r.push_back(csv::num(ts.v[k][i]));
    out += csv::row(r);
  }
  return out;
}

/// `sigma,a,beta,det_J,stable,branch,sigma_backbone`; the closed-form peak is
/// appended with branch label `peak` when damping is positive.
inline std::string cmd_frf(const RunConfig& cfg, SeedBranch seed = SeedBranch::lower) {
  detail::require(cfg.sigma_min < cfg.sigma_max, "analysis.sigma_min must be < sigma_max");
  detail::require(cfg.n_sigma >= 2, "analysis.n_sigma must be >= 2");
  const PreparedRun run = prepare_system(cfg);
  const FirstOrderParams& p = run.params;
  detail::require(p.f != 0.0, "frf needs nonzero forcing (system.forcing or system.modal_forcing)");
  FrfOptions opt;
  if (seed == SeedBranch::upper && p.lambda > 0.0) opt.seed_amplitude = std::abs(p.f) / (p.lambda * p.omega);
  const FrfCurve curve = frf_trace(p, cfg.sigma_min, cfg.sigma_max, cfg.n_sigma, opt);
  std::string out = csv::row({"sigma", "a", "beta", "det_J", "stable", "branch", "sigma_backbone"});
  auto emit = [&](const StationaryPoint& s, const char* label) {
    out += csv::row({csv::num(s.sigma), csv::num(s.a), csv::num(s.beta), csv::num(s.det), s.stable ? "1" : "0", label,
                     csv::num(backbone_detuning(p, s.a))});
  };
  for (const auto& fp : curve.points) emit(fp.point, to_string(fp.branch));
  if (p.lambda > 0.0) emit(peak_point(p), "peak");
  return out;
}

/// `a,nu_epsilon` on a uniform amplitude grid.
inline std::string cmd_backbone(const RunConfig& cfg) {
  detail::require(cfg.a_min >= 0.0 && cfg.a_min <= cfg.a_max, "analysis.a_min must satisfy 0 <= a_min <= a_max");
  detail::require(cfg.n_a >= 1, "analysis.n_a must be >= 1");
  const PreparedRun run = prepare_system(cfg);
  std::string out = csv::row({"a", "nu_epsilon"});
  for (int i = 0; i < cfg.n_a; ++i) {
    const double a = cfg.n_a == 1 ? cfg.a_min : cfg.a_min + (cfg.a_max - cfg.a_min) * i / (cfg.n_a - 1);
    out += csv::row({csv::num(a), csv::num(backbone_frequency(run.params, a))});
  }
  return out;
}

/// `lambda,re_alpha,im_alpha,abs_alpha` of analysis.input (a simulate CSV) or
/// of a fresh simulation of the configured system, then a `# peaks:` line
/// listing detected peak frequencies by decreasing magnitude.
inline std::string cmd_spectrum(const RunConfig& cfg) {
  detail::check_spectrum(cfg);
  Spectrum spec;
  if (cfg.input) {
    detail::require(cfg.component >= 1, "analysis.component must be >= 1");
    double t0 = 0.0, dt = 0.0;
    const auto x = detail::read_signal_csv(*cfg.input, cfg.component, t0, dt);
    spec = spectrum_scan(x, t0, dt, cfg.lambda_min, cfg.lambda_max, cfg.n_grid, cfg.transient_fraction, 0);
  } else {
    detail::check_integrator(cfg);
    const PreparedRun run = prepare_system(cfg);
    detail::require(cfg.component >= 1 && cfg.component <= run.system.n(), "analysis.component out of range");
    (void)initial_state(cfg, run);
    const TimeSeries ts = detail::run_simulation(cfg, run);
    spec = spectrum_scan(ts, cfg.component - 1, cfg.lambda_min, cfg.lambda_max, cfg.n_grid, cfg.transient_fraction, 0);
  }
  std::string out = csv::row({"lambda", "re_alpha", "im_alpha", "abs_alpha"});
  for (std::size_t i = 0; i < spec.size(); ++i)
    out += csv::row({csv::num(spec.frequencies[i]), csv::num(spec.coefficients[i].real()),
                     csv::num(spec.coefficients[i].imag()), csv::num(std::abs(spec.coefficients[i]))});
  out += "# peaks:";
  for (const Peak& pk : peak_detect(spec, cfg.min_prominence)) out += ' ' + csv::num(pk.frequency);
  out += "\r\n";
  return out;
}

/// `epsilon,horizon,sup_remainder,ratio` followed by a `# verdict:` line.
inline std::string cmd_verify(const RunConfig& cfg, SeedBranch seed = SeedBranch::upper) {
  detail::check_integrator(cfg);
  detail::require(cfg.epsilons.size() >= 3, "analysis.epsilons needs at least 3 entries");
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    detail::require(cfg.epsilons[i] > 0.0, "analysis.epsilons entries must be positive");
    if (i > 0) detail::require(cfg.epsilons[i] < cfg.epsilons[i - 1], "analysis.epsilons must be strictly decreasing");
  }
  detail::require(cfg.gamma > 0.0, "analysis.gamma must be positive");
  const PreparedRun run = prepare_system(cfg);
  ExpansionOptions opt;
  opt.integrator = cfg.integrator;
  opt.zero_velocity = cfg.zero_velocity;
  if (cfg.a0) {
    opt.a0 = *cfg.a0;
    if (run.system.forced()) opt.beta0 = cfg.beta0;  // nullopt: nearest stationary phase
  } else if (run.system.forced() && run.params.lambda > 0.0) {
    opt.a0 = seed == SeedBranch::upper ? std::abs(run.params.f) / (run.params.lambda * run.params.omega) : 1e-3;
  }
  detail::require(opt.a0 > 0.0, "initial.a0 must be positive");
  const ExpansionReport rep = expansion_verify(run.system, cfg.epsilons, cfg.gamma, opt);
  std::string out = csv::row({"epsilon", "horizon", "sup_remainder", "ratio"});
  for (std::size_t i = 0; i < rep.epsilons.size(); ++i)
    out += csv::row({csv::num(rep.epsilons[i]), csv::num(rep.horizons[i]), csv::num(rep.sup_remainders[i]),
                     i == 0 ? "" : csv::num(rep.growth_ratios[i - 1])});
  out += std::string("# verdict: ") + to_string(rep.verdict) + "\r\n";
  return out;
}

}  // namespace duoscale

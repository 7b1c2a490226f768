// duoscale: modal, slow-flow, FRF, time-domain, spectral and remainder
// analyses of spring-mass chains with a local strong cubic spring.
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "duoscale/cli.hpp"

namespace {

const char* kConfigHelp = R"(Configuration file (key = value, '#' comments):

[system]
  n = 1                  number of masses
  mass = 1               uniform mass
  stiffness = 1          uniform linear spring stiffness (chain)
  omega                  n = 1 only: K = mass * omega^2
  c = 1, d = 1           quadratic / cubic coefficients of the local spring
  epsilon = 0.01         small parameter
  p = 1                  position of the nonlinear spring (1..n)
  lambda = 0             modal damping
  forcing                physical forcing amplitudes, n comma-separated values
  modal_forcing          scalar f, forcing = f M phi_j
  sigma | omega_tilde    detuning or forcing frequency (exactly one if forced)
  driven_mode = 1        j, the resonant mode
[integrator]
  method = theta         theta | rk4
  theta = 0.5, dt = 0.01, t_end = 1, t_start = 0
  newton_tol = 1e-12, newton_max_iter = 50, stride = 1
[initial]
  u0, v0                 n comma-separated values (default 0)
  a0, beta0              modal amplitude / phase instead of u0, v0
  zero_velocity = false  forced start with u'(0) = 0
[analysis]
  sigma_min = -1, sigma_max = 3, n_sigma = 401       frf
  a_min = 0, a_max = 3, n_a = 61                      backbone
  epsilons = 0.1,0.05,0.025, gamma = 1                verify
  lambda_min = 0, lambda_max = 3, n_grid = 3001       spectrum
  transient_fraction = 0.1, component = 1, input     spectrum
  min_prominence = 5                                 spectrum '# peaks:' threshold

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
DUOSCALE_THREADS caps the worker pool.)";

}  // namespace

int main(int argc, char** argv) {
  using namespace duoscale;
  CLI::App app{"Double-scale analysis of spring-mass chains with a local strong cubic nonlinearity"};
  app.footer(kConfigHelp);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_path;
  std::string seed_name;
  app.add_option("--config", config_path, "Run configuration file")->required();
  app.add_option("--out", out_path, "Output CSV file (default: stdout)");
  app.add_option("--seed-branch", seed_name, "FRF seed branch for frf and verify")
      ->check(CLI::IsMember({"upper", "lower"}));

  std::map<std::string, std::function<std::string(const RunConfig&)>> commands{
      {"modes", [](const RunConfig& c) { return cmd_modes(c); }},
      {"simulate", [](const RunConfig& c) { return cmd_simulate(c); }},
      {"frf", [&](const RunConfig& c) { return cmd_frf(c, seed_name == "upper" ? SeedBranch::upper : SeedBranch::lower); }},
      {"backbone", [](const RunConfig& c) { return cmd_backbone(c); }},
      {"spectrum", [](const RunConfig& c) { return cmd_spectrum(c); }},
      {"verify", [&](const RunConfig& c) { return cmd_verify(c, seed_name == "lower" ? SeedBranch::lower : SeedBranch::upper); }},
  };
  app.add_subcommand("modes", "Natural frequencies and mass-normalized modes");
  app.add_subcommand("simulate", "Time integration of the full equations");
  app.add_subcommand("frf", "Stationary amplitude-frequency response with stability");
  app.add_subcommand("backbone", "Free backbone nu_epsilon(a)");
  app.add_subcommand("spectrum", "Almost-periodic Fourier coefficients");
  app.add_subcommand("verify", "Remainder bounds over an epsilon ladder");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = parse_run_config(IniDocument::load(config_path));
    const std::string csv = commands.at(verb)(cfg);
    if (out_path.empty()) {
      std::cout << csv << std::flush;
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw ConfigError("cannot open output " + out_path);
      f << csv;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "duoscale " << verb << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "duoscale " << verb << ": numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "duoscale " << verb << ": numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

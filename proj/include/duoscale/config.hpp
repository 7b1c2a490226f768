// Sectioned key = value run configuration.
//
//   # comment
//   [system]
//   n = 1
//   omega = 1          # n = 1 only; otherwise mass / stiffness
//   ...
//
// Every key is validated; unknown keys and malformed numbers are errors.
#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "duoscale/asymptotics.hpp"
#include "duoscale/errors.hpp"
#include "duoscale/integrate.hpp"
#include "duoscale/model.hpp"

namespace duoscale {

/// Raw parsed text: section -> key -> value.
class IniDocument {
public:
  static IniDocument parse(std::string_view text) {
    IniDocument doc;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string s = trim(line);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
      if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside of a section");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      auto& sec = doc.values_[section];
      if (sec.count(key)) throw ConfigError("duplicate key " + section + "." + key);
      sec[key] = value;
    }
    return doc;
  }

  static IniDocument load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto it = values_.find(section);
    return it != values_.end() && it->second.count(key);
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    used_.insert(section + "." + key);
    const auto it = values_.find(section);
    if (it == values_.end()) return std::nullopt;
    const auto kt = it->second.find(key);
    if (kt == it->second.end()) return std::nullopt;
    return kt->second;
  }

  std::optional<double> number(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    return parse_number(*r, section + "." + key);
  }

  std::optional<int> integer(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    int v = 0;
    const auto* end = r->data() + r->size();
    const auto [ptr, ec] = std::from_chars(r->data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(section + "." + key + ": expected an integer, got '" + *r + "'");
    return v;
  }

  std::optional<std::vector<double>> list(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(*r);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item), section + "." + key));
    if (out.empty()) throw ConfigError(section + "." + key + ": empty list");
    return out;
  }

  std::optional<bool> boolean(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    if (*r == "true" || *r == "1" || *r == "yes") return true;
    if (*r == "false" || *r == "0" || *r == "no") return false;
    throw ConfigError(section + "." + key + ": expected true/false, got '" + *r + "'");
  }

  /// Throws on any key never queried.
  void reject_unknown() const {
    for (const auto& [sec, kv] : values_)
      for (const auto& [key, value] : kv)
        if (!used_.count(sec + "." + key)) throw ConfigError("unknown key " + sec + "." + key);
  }

  static double parse_number(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v, std::chars_format::general);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
      throw ConfigError(what + ": expected a finite decimal number, got '" + text + "'");
    return v;
  }

private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::set<std::string> used_;
};

/// Typed run configuration. Defaults reproduce the single-mass resonant setup
/// (omega = 1, c = d = 1, eps = 0.01, lambda = 0.5).
struct RunConfig {
  // [system]
  int n = 1;
  double mass = 1.0;
  std::optional<double> stiffness;
  std::optional<double> omega;  // n = 1 shortcut, K = mass omega^2
  double c = 1.0;
  double d = 1.0;
  double epsilon = 0.01;
  int p = 1;
  double lambda = 0.0;
  std::optional<std::vector<double>> forcing;
  std::optional<double> modal_forcing;
  std::optional<double> sigma;
  std::optional<double> omega_tilde;
  int driven_mode = 1;

  // [integrator]
  IntegratorConfig integrator{};
  int stride = 1;

  // [initial]
  std::optional<std::vector<double>> u0;
  std::optional<std::vector<double>> v0;
  std::optional<double> a0;
  std::optional<double> beta0;
  bool zero_velocity = false;

  // [analysis]
  double sigma_min = -1.0;
  double sigma_max = 3.0;
  int n_sigma = 401;
  double a_min = 0.0;
  double a_max = 3.0;
  int n_a = 61;
  std::vector<double> epsilons{0.1, 0.05, 0.025};
  double gamma = 1.0;
  double lambda_min = 0.0;
  double lambda_max = 3.0;
  int n_grid = 3001;
  double transient_fraction = 0.1;
  int component = 1;
  double min_prominence = 5.0;
  std::optional<std::string> input;
};

inline RunConfig parse_run_config(const IniDocument& doc) {
  RunConfig c;
  if (auto v = doc.integer("system", "n")) c.n = *v;
  if (auto v = doc.number("system", "mass")) c.mass = *v;
  c.stiffness = doc.number("system", "stiffness");
  c.omega = doc.number("system", "omega");
  if (auto v = doc.number("system", "c")) c.c = *v;
  if (auto v = doc.number("system", "d")) c.d = *v;
  if (auto v = doc.number("system", "epsilon")) c.epsilon = *v;
  if (auto v = doc.integer("system", "p")) c.p = *v;
  if (auto v = doc.number("system", "lambda")) c.lambda = *v;
  c.forcing = doc.list("system", "forcing");
  c.modal_forcing = doc.number("system", "modal_forcing");
  c.sigma = doc.number("system", "sigma");
  c.omega_tilde = doc.number("system", "omega_tilde");
  if (auto v = doc.integer("system", "driven_mode")) c.driven_mode = *v;

  if (auto m = doc.raw("integrator", "method")) {
    if (*m == "theta") c.integrator.method = Method::theta;
    else if (*m == "rk4") c.integrator.method = Method::rk4;
    else throw ConfigError("integrator.method must be theta or rk4, got '" + *m + "'");
  }
  if (auto v = doc.number("integrator", "theta")) c.integrator.theta = *v;
  if (auto v = doc.number("integrator", "dt")) c.integrator.dt = *v;
  if (auto v = doc.number("integrator", "t_end")) c.integrator.t_end = *v;
  if (auto v = doc.number("integrator", "t_start")) c.integrator.t_start = *v;
  if (auto v = doc.number("integrator", "newton_tol")) c.integrator.newton_tol = *v;
  if (auto v = doc.integer("integrator", "newton_max_iter")) c.integrator.newton_max_iter = *v;
  if (auto v = doc.integer("integrator", "stride")) c.stride = *v;

  c.u0 = doc.list("initial", "u0");
  c.v0 = doc.list("initial", "v0");
  c.a0 = doc.number("initial", "a0");
  c.beta0 = doc.number("initial", "beta0");
  if (auto v = doc.boolean("initial", "zero_velocity")) c.zero_velocity = *v;

  if (auto v = doc.number("analysis", "sigma_min")) c.sigma_min = *v;
  if (auto v = doc.number("analysis", "sigma_max")) c.sigma_max = *v;
  if (auto v = doc.integer("analysis", "n_sigma")) c.n_sigma = *v;
  if (auto v = doc.number("analysis", "a_min")) c.a_min = *v;
  if (auto v = doc.number("analysis", "a_max")) c.a_max = *v;
  if (auto v = doc.integer("analysis", "n_a")) c.n_a = *v;
  if (auto v = doc.list("analysis", "epsilons")) c.epsilons = *v;
  if (auto v = doc.number("analysis", "gamma")) c.gamma = *v;
  if (auto v = doc.number("analysis", "lambda_min")) c.lambda_min = *v;
  if (auto v = doc.number("analysis", "lambda_max")) c.lambda_max = *v;
  if (auto v = doc.integer("analysis", "n_grid")) c.n_grid = *v;
  if (auto v = doc.number("analysis", "transient_fraction")) c.transient_fraction = *v;
  if (auto v = doc.integer("analysis", "component")) c.component = *v;
  if (auto v = doc.number("analysis", "min_prominence")) c.min_prominence = *v;
  c.input = doc.raw("analysis", "input");

  doc.reject_unknown();
  return c;
}

inline RunConfig parse_run_config(std::string_view text) { return parse_run_config(IniDocument::parse(text)); }

/// System, its modal basis and the reduced parameters, built from a config.
struct PreparedRun {
  ChainSystem system;
  ModalBasis basis;
  FirstOrderParams params;
};

/// Builds and validates the mechanical model; every failure is a ConfigError.
inline PreparedRun prepare_system(const RunConfig& c) {
  try {
    if (c.n < 1) throw ConfigError("system.n must be >= 1");
    if (c.omega && c.stiffness) throw ConfigError("give either system.omega or system.stiffness, not both");
    if (c.omega && c.n != 1) throw ConfigError("system.omega is only valid for n = 1");
    if (c.sigma && c.omega_tilde) throw ConfigError("give exactly one of system.sigma and system.omega_tilde");
    if (c.forcing && c.modal_forcing) throw ConfigError("give either system.forcing or system.modal_forcing");
    if (c.forcing && static_cast<int>(c.forcing->size()) != c.n)
      throw ConfigError("system.forcing must have n entries");

    NonlinearSpring spring{c.c, c.d, c.epsilon, c.p};
    ChainSystem sys;
    if (c.omega) {
      if (!(*c.omega > 0.0)) throw ConfigError("system.omega must be positive");
      if (!(c.mass > 0.0)) throw ConfigError("system.mass must be positive");
      sys = make_system(Matrix::Constant(1, 1, c.mass), Matrix::Constant(1, 1, c.mass * *c.omega * *c.omega),
                        Vector::Constant(1, c.lambda), spring, Vector::Zero(1), 0.0, c.driven_mode);
    } else {
      sys = build_chain(c.n, c.mass, c.stiffness.value_or(1.0), spring, c.lambda);
      sys.driven_mode = c.driven_mode;
      validate(sys);
    }
    ModalBasis basis = modal_decompose(sys);
    const Vector mode = basis.modes.col(sys.driven_mode - 1);
    if (c.forcing) sys.forcing_amplitude = Eigen::Map<const Vector>(c.forcing->data(), c.n);
    if (c.modal_forcing) sys.forcing_amplitude = *c.modal_forcing * (sys.mass_matrix * mode);
    if (sys.forced()) {
      if (!c.sigma && !c.omega_tilde) throw ConfigError("forced system needs system.sigma or system.omega_tilde");
      sys.forcing_detuning = c.sigma ? *c.sigma : (*c.omega_tilde - basis.frequencies[sys.driven_mode - 1]) / c.epsilon;
    } else if (c.sigma) {
      sys.forcing_detuning = *c.sigma;
    } else if (c.omega_tilde) {
      sys.forcing_detuning = (*c.omega_tilde - basis.frequencies[sys.driven_mode - 1]) / c.epsilon;
    }
    validate(sys);
    FirstOrderParams params = first_order_params(sys, basis);
    return {std::move(sys), std::move(basis), params};
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const NumericalError& e) {
    throw ConfigError(std::string("invalid mechanical system: ") + e.what());
  }
}

/// Initial displacement and velocity from the [initial] section.
inline std::pair<Vector, Vector> initial_state(const RunConfig& c, const PreparedRun& run) {
  const int n = run.system.n();
  Vector u = Vector::Zero(n);
  Vector v = Vector::Zero(n);
  if (c.a0) {
    if (c.u0 || c.v0) throw ConfigError("give either initial.u0/v0 or initial.a0/beta0");
    const Vector mode = run.basis.modes.col(run.system.driven_mode - 1);
    if (run.system.forced()) {
      const auto [uu, vv] = forced_initial_data(run.params, {*c.a0, c.beta0.value_or(0.0)}, c.zero_velocity);
      return {uu * mode, vv * mode};
    }
    return {c.epsilon * *c.a0 * mode, v};
  }
  if (c.u0) {
    if (static_cast<int>(c.u0->size()) != n) throw ConfigError("initial.u0 must have n entries");
    u = Eigen::Map<const Vector>(c.u0->data(), n);
  }
  if (c.v0) {
    if (static_cast<int>(c.v0->size()) != n) throw ConfigError("initial.v0 must have n entries");
    v = Eigen::Map<const Vector>(c.v0->data(), n);
  }
  return {u, v};
}

}  // namespace duoscale

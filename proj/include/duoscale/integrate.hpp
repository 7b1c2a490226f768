// Time-domain integration of M u'' + eps C u' + K u + Phi(u, eps) = eps^2 F cos(omega_tilde t),
// remainder extraction against the first-order approximation, and the
// empirical check that the remainder stays bounded on [0, gamma / eps].
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "duoscale/asymptotics.hpp"
#include "duoscale/errors.hpp"
#include "duoscale/model.hpp"
#include "duoscale/parallel.hpp"
#include "duoscale/response.hpp"

namespace duoscale {

struct TimeSeries {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Vector> u;
  std::vector<Vector> v;

  std::size_t size() const { return u.size(); }
  int dimension() const { return u.empty() ? 0 : static_cast<int>(u.front().size()); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double duration() const { return size() < 2 ? 0.0 : static_cast<double>(size() - 1) * dt; }

  /// Scalar trace of one displacement component (0-based).
  std::vector<double> component(int k) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = u[i][k];
    return out;
  }
};

enum class Method { theta, rk4 };

struct IntegratorConfig {
  Method method = Method::theta;
  double theta = 0.5;
  double dt = 0.01;
  double t_end = 1.0;  // horizon measured from t_start
  double t_start = 0.0;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
};

inline void validate(const IntegratorConfig& cfg) {
  if (!(cfg.theta >= 0.0 && cfg.theta <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InvalidArgument("dt must be positive");
  if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end)) throw InvalidArgument("t_end must be positive");
  if (!std::isfinite(cfg.t_start)) throw InvalidArgument("t_start must be finite");
  if (!(cfg.newton_tol > 0.0)) throw InvalidArgument("newton_tol must be positive");
  if (cfg.newton_max_iter < 1) throw InvalidArgument("newton_max_iter must be >= 1");
}

/// Precomputed first-order form of a ChainSystem:
/// u' = v, v' = eps^2 M^-1 F cos(omega_tilde t) - M^-1 K u - eps Phi Lambda Phi^T M v - s(g) M^-1 b
/// where b is the spring incidence vector (e_p - e_{p-1}, or e_1 for p = 1).
class FullDynamics {
public:
  explicit FullDynamics(const ChainSystem& system) : FullDynamics(system, modal_decompose(system)) {}

  FullDynamics(const ChainSystem& system, const ModalBasis& basis) : spring_(system.spring), n_(system.n()) {
    validate(system);
    const Eigen::LLT<Matrix> llt(system.mass_matrix);
    stiffness_ = llt.solve(system.stiffness_matrix);
    const double eps = system.spring.epsilon;
    forcing_ = eps * eps * llt.solve(system.forcing_amplitude);
    damping_ = eps * basis.modes * system.modal_damping.asDiagonal() * basis.modes.transpose() * system.mass_matrix;
    incidence_ = Vector::Zero(n_);
    incidence_[spring_.p - 1] = 1.0;
    if (spring_.p >= 2) incidence_[spring_.p - 2] = -1.0;
    spring_dir_ = llt.solve(incidence_);
    omega_tilde_ = basis.frequencies[system.driven_mode - 1] + eps * system.forcing_detuning;
    forced_ = system.forced();
  }

  int n() const { return n_; }
  double forcing_frequency() const { return omega_tilde_; }

  Vector acceleration(double t, const Vector& u, const Vector& v) const {
    const double g = spring_elongation(spring_, u);
    Vector acc = -stiffness_ * u - damping_ * v - spring_law(spring_, g) * spring_dir_;
    if (forced_) acc += std::cos(omega_tilde_ * t) * forcing_;
    return acc;
  }

  /// d(acceleration)/du and d(acceleration)/dv.
  std::pair<Matrix, Matrix> acceleration_jacobian(const Vector& u) const {
    const double g = spring_elongation(spring_, u);
    Matrix du = -stiffness_ - spring_law_derivative(spring_, g) * spring_dir_ * incidence_.transpose();
    return {du, -damping_};
  }

private:
  NonlinearSpring spring_;
  int n_;
  Matrix stiffness_;
  Matrix damping_;
  Vector forcing_;
  Vector incidence_;
  Vector spring_dir_;
  double omega_tilde_ = 0.0;
  bool forced_ = false;
};

/// (u', v') of the full system at time t.
inline std::pair<Vector, Vector> rhs_full(const ChainSystem& system, double t, const Vector& u, const Vector& v) {
  if (u.size() != system.n() || v.size() != system.n()) throw InvalidArgument("rhs_full: dimension mismatch");
  const FullDynamics dyn(system);
  return {v, dyn.acceleration(t, u, v)};
}

namespace detail {

inline std::size_t step_count(const IntegratorConfig& cfg) {
  return static_cast<std::size_t>(std::floor(cfg.t_end / cfg.dt + 1e-9));
}

inline void check_initial(const FullDynamics& dyn, const Vector& u0, const Vector& v0) {
  if (u0.size() != dyn.n() || v0.size() != dyn.n()) throw InvalidArgument("initial state has wrong dimension");
  if (!u0.allFinite() || !v0.allFinite()) throw InvalidArgument("initial state must be finite");
}

}  // namespace detail

inline TimeSeries integrate_rk4(const FullDynamics& dyn, const Vector& u0, const Vector& v0,
                                const IntegratorConfig& cfg) {
  validate(cfg);
  detail::check_initial(dyn, u0, v0);
  const std::size_t steps = detail::step_count(cfg);
  TimeSeries ts{cfg.t_start, cfg.dt, {}, {}};
  ts.u.reserve(steps + 1);
  ts.v.reserve(steps + 1);
  ts.u.push_back(u0);
  ts.v.push_back(v0);
  Vector u = u0;
  Vector v = v0;
  const double h = cfg.dt;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = ts.time(k);
    const Vector k1u = v;
    const Vector k1v = dyn.acceleration(t, u, v);
    const Vector k2u = v + 0.5 * h * k1v;
    const Vector k2v = dyn.acceleration(t + 0.5 * h, u + 0.5 * h * k1u, k2u);
    const Vector k3u = v + 0.5 * h * k2v;
    const Vector k3v = dyn.acceleration(t + 0.5 * h, u + 0.5 * h * k2u, k3u);
    const Vector k4u = v + h * k3v;
    const Vector k4v = dyn.acceleration(t + h, u + h * k3u, k4u);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!u.allFinite() || !v.allFinite()) throw IntegrationFailure("rk4 produced a non-finite state", k + 1);
    ts.u.push_back(u);
    ts.v.push_back(v);
  }
  return ts;
}

/// One-leg theta scheme y_{k+1} = y_k + dt [(1 - theta) f(t_k, y_k) + theta f(t_{k+1}, y_{k+1})].
/// The implicit stage is solved by fixed-point iteration, falling back to Newton.
inline TimeSeries integrate_theta(const FullDynamics& dyn, const Vector& u0, const Vector& v0,
                                  const IntegratorConfig& cfg) {
  validate(cfg);
  detail::check_initial(dyn, u0, v0);
  const int n = dyn.n();
  const std::size_t steps = detail::step_count(cfg);
  const double h = cfg.dt;
  const double th = cfg.theta;
  TimeSeries ts{cfg.t_start, cfg.dt, {}, {}};
  ts.u.reserve(steps + 1);
  ts.v.reserve(steps + 1);
  ts.u.push_back(u0);
  ts.v.push_back(v0);
  Vector u = u0;
  Vector v = v0;

  auto converged = [&](const Vector& du, const Vector& dv, const Vector& un, const Vector& vn) {
    const double scale = 1.0 + std::max(un.cwiseAbs().maxCoeff(), vn.cwiseAbs().maxCoeff());
    return std::max(du.cwiseAbs().maxCoeff(), dv.cwiseAbs().maxCoeff()) <= cfg.newton_tol * scale;
  };

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = ts.time(k);
    const double t1 = ts.time(k + 1);
    const Vector a0 = dyn.acceleration(t, u, v);
    // Explicit part of the update.
    const Vector base_u = u + h * (1.0 - th) * v;
    const Vector base_v = v + h * (1.0 - th) * a0;

    Vector un = u + h * v;
    Vector vn = v + h * a0;
    bool ok = false;
    double last_change = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.newton_max_iter; ++it) {
      const Vector nu = base_u + h * th * vn;
      const Vector nv = base_v + h * th * dyn.acceleration(t1, un, vn);
      const Vector du = nu - un;
      const Vector dv = nv - vn;
      un = nu;
      vn = nv;
      if (!un.allFinite() || !vn.allFinite()) break;
      if (converged(du, dv, un, vn)) {
        ok = true;
        break;
      }
      const double change = std::max(du.cwiseAbs().maxCoeff(), dv.cwiseAbs().maxCoeff());
      if (change > last_change) break;  // diverging
      last_change = change;
    }

    if (!ok) {
      // Newton on G(y) = y - base - h theta f(t1, y).
      un = u + h * v;
      vn = v + h * a0;
      Matrix jac(2 * n, 2 * n);
      Vector res(2 * n);
      for (int it = 0; it < cfg.newton_max_iter; ++it) {
        const Vector acc = dyn.acceleration(t1, un, vn);
        res.head(n) = un - base_u - h * th * vn;
        res.tail(n) = vn - base_v - h * th * acc;
        const auto [ju, jv] = dyn.acceleration_jacobian(un);
        jac.setIdentity();
        jac.topRightCorner(n, n) -= h * th * Matrix::Identity(n, n);
        jac.bottomLeftCorner(n, n) = -h * th * ju;
        jac.bottomRightCorner(n, n) -= h * th * jv;
        const Vector delta = jac.partialPivLu().solve(-res);
        un += delta.head(n);
        vn += delta.tail(n);
        if (!un.allFinite() || !vn.allFinite()) break;
        if (converged(delta.head(n), delta.tail(n), un, vn)) {
          ok = true;
          break;
        }
      }
    }
    if (!ok) throw IntegrationFailure("theta-method implicit stage did not converge", k + 1);
    u = un;
    v = vn;
    ts.u.push_back(u);
    ts.v.push_back(v);
  }
  return ts;
}

inline TimeSeries integrate(const FullDynamics& dyn, const Vector& u0, const Vector& v0, const IntegratorConfig& cfg) {
  return cfg.method == Method::rk4 ? integrate_rk4(dyn, u0, v0, cfg) : integrate_theta(dyn, u0, v0, cfg);
}

inline TimeSeries integrate_theta(const ChainSystem& system, const Vector& u0, const Vector& v0,
                                  const IntegratorConfig& cfg) {
  return integrate_theta(FullDynamics(system), u0, v0, cfg);
}

inline TimeSeries integrate_rk4(const ChainSystem& system, const Vector& u0, const Vector& v0,
                                const IntegratorConfig& cfg) {
  return integrate_rk4(FullDynamics(system), u0, v0, cfg);
}

/// 1/2 v^T M v + 1/2 u^T K u + V_nl(g).
inline double total_energy(const ChainSystem& system, const Vector& u, const Vector& v) {
  return 0.5 * v.dot(system.mass_matrix * v) + 0.5 * u.dot(system.stiffness_matrix * u) +
         nonlinear_potential(system.spring, spring_elongation(system.spring, u));
}

/// Largest |x| over consecutive windows of `window` time units.
struct EnvelopeSample {
  double t_mid = 0.0;
  double peak = 0.0;
};

inline std::vector<EnvelopeSample> amplitude_envelope(const std::vector<double>& x, double t0, double dt,
                                                      double window) {
  if (!(window > 0.0) || !(dt > 0.0)) throw InvalidArgument("envelope window and dt must be positive");
  const auto per = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(window / dt)));
  std::vector<EnvelopeSample> out;
  for (std::size_t start = 0; start + per <= x.size(); start += per) {
    double peak = 0.0;
    for (std::size_t i = start; i < start + per; ++i) peak = std::max(peak, std::abs(x[i]));
    out.push_back({t0 + (static_cast<double>(start) + 0.5 * static_cast<double>(per)) * dt, peak});
  }
  return out;
}

/// Free approximation eps a0 cos(nu_eps t).
struct FreeApproximation {
  double a0 = 1.0;
};

/// Forced approximation eps a(eps t) cos(omega_tilde t + beta(eps t)) with the
/// slow state starting at `state0` at the first sample.
struct ForcedApproximation {
  AmplitudePhase state0;
};

using Approximation = std::variant<FreeApproximation, ForcedApproximation>;

/// r(t) = (w^T u(t) - eps u_1(t)) / eps^2 and likewise for the velocity, where
/// w is the observation vector (M phi_k for a modal coordinate, [1] for one mass).
inline TimeSeries remainder_series(const TimeSeries& series, const FirstOrderParams& params,
                                   const Approximation& approx, const Vector& observe) {
  validate(params);
  if (series.size() == 0) throw InvalidArgument("remainder of an empty series");
  if (observe.size() != series.dimension()) throw InvalidArgument("observation vector has wrong dimension");
  const double eps = params.epsilon;
  const double eps2 = eps * eps;
  TimeSeries r{series.t0, series.dt, {}, {}};
  r.u.reserve(series.size());
  r.v.reserve(series.size());
  if (const auto* fa = std::get_if<FreeApproximation>(&approx)) {
    const double nu = backbone_frequency(params, fa->a0);
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double t = series.time(i);
      const double u1 = fa->a0 * std::cos(nu * t);
      const double v1 = -fa->a0 * nu * std::sin(nu * t);
      r.u.push_back(Vector::Constant(1, (observe.dot(series.u[i]) - eps * u1) / eps2));
      r.v.push_back(Vector::Constant(1, (observe.dot(series.v[i]) - eps * v1) / eps2));
    }
    return r;
  }
  const auto& fa = std::get<ForcedApproximation>(approx);
  const double slow_end = eps * series.duration();
  const double slow_dt = series.size() > 1 ? eps * series.dt : 1.0;
  const SlowFlowTrajectory flow = slow_flow_integrate(params, fa.state0, slow_end, slow_dt);
  if (flow.collapsed || flow.states.size() != series.size())
    throw DomainError("slow flow amplitude collapsed; polar representation is singular");
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series.time(i);
    const AmplitudePhase s = flow.states[i];
    const double u1 = forced_first_order(params, s, t);
    const double v1 = forced_first_order_rate(params, s, t);
    r.u.push_back(Vector::Constant(1, (observe.dot(series.u[i]) - u1) / eps2));
    r.v.push_back(Vector::Constant(1, (observe.dot(series.v[i]) - v1) / eps2));
  }
  return r;
}

enum class Verdict { bounded, growing };

inline const char* to_string(Verdict v) { return v == Verdict::bounded ? "bounded" : "growing"; }

struct ExpansionReport {
  std::vector<double> epsilons;
  double gamma = 1.0;
  std::vector<double> horizons;
  std::vector<double> sup_remainders;
  std::vector<double> growth_ratios;  // size epsilons.size() - 1
  Verdict verdict = Verdict::bounded;
};

struct ExpansionOptions {
  double a0 = 1.0;
  /// Forced runs: initial phase; nullopt starts at the stationary point nearest a0.
  std::optional<double> beta0;
  /// Forced runs: u'(0) = 0 and u(0) = eps a0 instead of the consistent data.
  bool zero_velocity = false;
  IntegratorConfig integrator{Method::rk4, 0.5, 0.005, 1.0, 0.0, 1e-12, 50};
  /// Remainders below this floor are treated as equal when forming ratios.
  double ratio_floor = 1e-6;
  double max_growth = 2.0;
  unsigned threads = 0;  // 0: DUOSCALE_THREADS or hardware default
};

/// Integrates the full system along the eps ladder with initial data on the
/// driven mode and reports sup |r| over [0, gamma / eps].
inline ExpansionReport expansion_verify(const ChainSystem& system, const std::vector<double>& epsilons, double gamma,
                                        const ExpansionOptions& opt = {}) {
  validate(system);
  if (epsilons.size() < 3) throw InvalidArgument("epsilon ladder needs at least 3 entries");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw InvalidArgument("epsilon ladder entries must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw InvalidArgument("epsilon ladder must be strictly decreasing");
  }
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!(opt.a0 > 0.0)) throw InvalidArgument("a0 must be positive");

  ExpansionReport rep;
  rep.epsilons = epsilons;
  rep.gamma = gamma;
  rep.horizons.resize(epsilons.size());
  rep.sup_remainders.resize(epsilons.size());

  parallel_for(epsilons.size(), opt.threads, [&](std::size_t i) {
    const double eps = epsilons[i];
    ChainSystem sys = system;
    sys.spring.epsilon = eps;
    const ModalBasis basis = modal_decompose(sys);
    const FirstOrderParams params = first_order_params(sys, basis);
    const Vector mode = basis.modes.col(sys.driven_mode - 1);
    const Vector observe = sys.mass_matrix * mode;
    const FullDynamics dyn(sys, basis);

    IntegratorConfig cfg = opt.integrator;
    cfg.t_start = 0.0;
    cfg.t_end = gamma / eps;
    rep.horizons[i] = static_cast<double>(detail::step_count(cfg)) * cfg.dt;

    Approximation approx = FreeApproximation{opt.a0};
    Vector u0 = eps * opt.a0 * mode;
    Vector v0 = Vector::Zero(sys.n());
    if (sys.forced()) {
      AmplitudePhase s0{opt.a0, 0.0};
      if (opt.beta0) {
        s0.beta = *opt.beta0;
      } else {
        const StationaryPoint sp = stationary_solve(params, params.sigma, opt.a0);
        s0 = {sp.a, sp.beta};
      }
      const auto [uu, vv] = forced_initial_data(params, s0, opt.zero_velocity);
      u0 = uu * mode;
      v0 = vv * mode;
      if (opt.zero_velocity) s0.beta = 0.0;
      approx = ForcedApproximation{s0};
    }
    const TimeSeries ts = integrate(dyn, u0, v0, cfg);
    const TimeSeries r = remainder_series(ts, params, approx, observe);
    double sup = 0.0;
    for (const auto& x : r.u) sup = std::max(sup, std::abs(x[0]));
    rep.sup_remainders[i] = sup;
  });

  double worst = 0.0;
  for (std::size_t i = 1; i < epsilons.size(); ++i) {
    const double ratio = std::max(rep.sup_remainders[i], opt.ratio_floor) / std::max(rep.sup_remainders[i - 1], opt.ratio_floor);
    rep.growth_ratios.push_back(ratio);
    worst = std::max(worst, ratio);
  }
  rep.verdict = worst <= opt.max_growth ? Verdict::bounded : Verdict::growing;
  return rep;
}

/// (delta2 / delta1)(exp(delta1 t) - 1)
inline double gronwall_bound(double delta1, double delta2, double t) {
  if (!(delta1 > 0.0)) throw InvalidArgument("delta1 must be positive");
  if (!(delta2 >= 0.0)) throw InvalidArgument("delta2 must be non-negative");
  if (!(t >= 0.0)) throw InvalidArgument("t must be non-negative");
  return delta2 / delta1 * std::expm1(delta1 * t);
}

}  // namespace duoscale

// First-order double-scale approximation: backbone frequency of the free
// nonlinear mode and the amplitude/phase slow flow of the forced response.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "duoscale/errors.hpp"
#include "duoscale/model.hpp"

namespace duoscale {

/// Reduced single-mode parameter set.
struct FirstOrderParams {
  double omega = 1.0;    // linear modal frequency
  double c_eff = 0.0;    // quadratic coefficient, absent from first-order formulas
  double d_eff = 0.0;    // effective cubic coefficient d~
  double lambda = 0.0;   // modal damping
  double f = 0.0;        // modal forcing amplitude phi^T F
  double sigma = 0.0;    // detuning
  double epsilon = 1.0;

  /// omega_tilde = omega + epsilon sigma
  double forcing_frequency() const { return omega + epsilon * sigma; }
};

inline void validate(const FirstOrderParams& p) {
  if (!(p.omega > 0.0)) throw InvalidArgument("omega must be positive");
  if (!(p.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(p.lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (!std::isfinite(p.c_eff) || !std::isfinite(p.d_eff) || !std::isfinite(p.f) || !std::isfinite(p.sigma))
    throw InvalidArgument("first-order parameters must be finite");
}

/// Slow amplitude and phase; u_1 = a cos(T0 + beta).
struct AmplitudePhase {
  double a = 0.0;
  double beta = 0.0;
};

struct SlowFlowRate {
  double da = 0.0;
  double dbeta = 0.0;
};

/// d~ = d (delta_p phi_k)^4 for the driven mode k (1-based).
inline double effective_cubic(const ModalBasis& basis, double d, int mode = 1) {
  if (mode < 1 || mode > basis.n()) throw InvalidArgument("mode index out of range");
  const double g = basis.gaps[mode - 1];
  return d * g * g * g * g;
}

/// Reduces a chain onto its driven mode.
inline FirstOrderParams first_order_params(const ChainSystem& system, const ModalBasis& basis) {
  const int k = system.driven_mode;
  const double gap = basis.gaps[k - 1];
  FirstOrderParams p;
  p.omega = basis.frequencies[k - 1];
  p.c_eff = system.spring.c * gap * gap * gap;
  p.d_eff = effective_cubic(basis, system.spring.d, k);
  p.lambda = system.modal_damping[k - 1];
  p.f = basis.modes.col(k - 1).dot(system.forcing_amplitude);
  p.sigma = system.forcing_detuning;
  p.epsilon = system.spring.epsilon;
  return p;
}

inline FirstOrderParams first_order_params(const ChainSystem& system) {
  return first_order_params(system, modal_decompose(system));
}

/// nu_eps = omega + 3 eps d~ a0^2 / (8 omega)
inline double backbone_frequency(const FirstOrderParams& p, double a0) {
  return p.omega + 3.0 * p.epsilon * p.d_eff * a0 * a0 / (8.0 * p.omega);
}

/// Detuning at which the free backbone passes through amplitude a.
inline double backbone_detuning(const FirstOrderParams& p, double a) {
  return 3.0 * p.d_eff * a * a / (8.0 * p.omega);
}

/// eps a0 cos(nu_eps t)
inline double free_first_order(const FirstOrderParams& p, double a0, double t) {
  return p.epsilon * a0 * std::cos(backbone_frequency(p, a0) * t);
}

/// Slow flow solved for the derivatives:
///   D1 a    = -lambda a / 2 - f sin(beta) / (2 omega)
///   D1 beta = -sigma + 3 d~ a^2 / (8 omega) - f cos(beta) / (2 a omega)
inline SlowFlowRate amplitude_phase_rhs(const FirstOrderParams& p, AmplitudePhase s) {
  if (!(s.a > 0.0)) throw DomainError("slow flow is singular at a <= 0");
  return {-0.5 * p.lambda * s.a - p.f * std::sin(s.beta) / (2.0 * p.omega),
          -p.sigma + 3.0 * p.d_eff * s.a * s.a / (8.0 * p.omega) - p.f * std::cos(s.beta) / (2.0 * s.a * p.omega)};
}

struct SlowFlowTrajectory {
  double dt1 = 0.0;
  std::vector<AmplitudePhase> states;  // states[i] at T1 = i dt1
  bool collapsed = false;              // a fell below the amplitude floor
};

/// 0.01 * (2 / lambda) when damped, else 0.01.
inline double default_slow_step(const FirstOrderParams& p) {
  return p.lambda > 0.0 ? 0.01 * (2.0 / p.lambda) : 0.01;
}

/// Classical RK4 on the slow flow over [0, t1_end]. The step is shrunk so
/// that an integer number of steps lands on t1_end.
inline SlowFlowTrajectory slow_flow_integrate(const FirstOrderParams& p, AmplitudePhase state0, double t1_end,
                                              double dt1) {
  constexpr double kAmplitudeFloor = 1e-9;
  if (!(state0.a > 0.0)) throw DomainError("initial amplitude must be positive");
  if (!(dt1 > 0.0)) throw InvalidArgument("slow step must be positive");
  if (!(t1_end >= 0.0)) throw InvalidArgument("slow horizon must be non-negative");
  const auto steps = static_cast<std::size_t>(std::ceil(t1_end / dt1 - 1e-9));
  SlowFlowTrajectory out;
  out.dt1 = steps > 0 ? t1_end / static_cast<double>(steps) : dt1;
  out.states.reserve(steps + 1);
  out.states.push_back(state0);
  const double h = out.dt1;
  AmplitudePhase s = state0;
  auto shift = [](AmplitudePhase x, SlowFlowRate r, double w) { return AmplitudePhase{x.a + w * r.da, x.beta + w * r.dbeta}; };
  for (std::size_t i = 0; i < steps; ++i) {
    try {
      const SlowFlowRate k1 = amplitude_phase_rhs(p, s);
      const SlowFlowRate k2 = amplitude_phase_rhs(p, shift(s, k1, 0.5 * h));
      const SlowFlowRate k3 = amplitude_phase_rhs(p, shift(s, k2, 0.5 * h));
      const SlowFlowRate k4 = amplitude_phase_rhs(p, shift(s, k3, h));
      s.a += h / 6.0 * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
      s.beta += h / 6.0 * (k1.dbeta + 2.0 * k2.dbeta + 2.0 * k3.dbeta + k4.dbeta);
    } catch (const DomainError&) {
      out.collapsed = true;
      return out;
    }
    if (!std::isfinite(s.a) || !std::isfinite(s.beta)) throw IntegrationFailure("slow flow produced non-finite state", i + 1);
    if (s.a < kAmplitudeFloor) {
      out.collapsed = true;
      return out;
    }
    out.states.push_back(s);
  }
  return out;
}

/// eps a cos(omega_tilde t + beta)
inline double forced_first_order(const FirstOrderParams& p, AmplitudePhase s, double t) {
  return p.epsilon * s.a * std::cos(p.forcing_frequency() * t + s.beta);
}

/// Time derivative of eps a(eps t) cos(omega_tilde t + beta(eps t)).
inline double forced_first_order_rate(const FirstOrderParams& p, AmplitudePhase s, double t) {
  const double theta = p.forcing_frequency() * t + s.beta;
  if (s.a <= 0.0) return 0.0;
  const SlowFlowRate r = amplitude_phase_rhs(p, s);
  return p.epsilon * (p.epsilon * r.da * std::cos(theta) - s.a * (p.forcing_frequency() + p.epsilon * r.dbeta) * std::sin(theta));
}

/// Initial data consistent with the forced expansion at t = 0:
/// u(0) = eps a0 cos(beta0), u'(0) = -eps omega_tilde a0 sin(beta0).
/// With `zero_velocity` the velocity is set to 0 and u(0) = eps a0.
inline std::pair<double, double> forced_initial_data(const FirstOrderParams& p, AmplitudePhase s,
                                                     bool zero_velocity = false) {
  if (zero_velocity) return {p.epsilon * s.a, 0.0};
  return {p.epsilon * s.a * std::cos(s.beta), -p.epsilon * p.forcing_frequency() * s.a * std::sin(s.beta)};
}

}  // namespace duoscale

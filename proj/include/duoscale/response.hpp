// Stationary slow-flow solutions, their stability, and frequency-response
// continuation through the fold.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "duoscale/asymptotics.hpp"
#include "duoscale/errors.hpp"

namespace duoscale {

using Matrix2 = Eigen::Matrix2d;

struct StationaryPoint {
  double sigma = 0.0;
  double a = 0.0;
  double beta = 0.0;
  Matrix2 jacobian = Matrix2::Zero();
  double trace = 0.0;
  double det = 0.0;
  bool stable = false;
  double residual = 0.0;
};

enum class Branch { main, fold_back };

inline const char* to_string(Branch b) { return b == Branch::main ? "main" : "fold_back"; }

struct FrfPoint {
  StationaryPoint point;
  Branch branch = Branch::main;
};

struct FrfCurve {
  std::vector<FrfPoint> points;
  StationaryPoint peak;
};

/// f(a, sigma) = lambda^2 a^2 omega^2 + a^2 (2 omega sigma - 3 d~ a^2 / 4)^2 - f^2
inline double stationary_residual(const FirstOrderParams& p, double a, double sigma) {
  const double g = 2.0 * p.omega * sigma - 0.75 * p.d_eff * a * a;
  return p.lambda * p.lambda * a * a * p.omega * p.omega + a * a * g * g - p.f * p.f;
}

/// df/da
inline double stationary_residual_da(const FirstOrderParams& p, double a, double sigma) {
  const double g = 2.0 * p.omega * sigma - 0.75 * p.d_eff * a * a;
  return 2.0 * a * p.lambda * p.lambda * p.omega * p.omega + 2.0 * a * g * g - 3.0 * p.d_eff * a * a * a * g;
}

/// df/dsigma
inline double stationary_residual_dsigma(const FirstOrderParams& p, double a, double sigma) {
  const double g = 2.0 * p.omega * sigma - 0.75 * p.d_eff * a * a;
  return 4.0 * a * a * p.omega * g;
}

/// Jacobian of the slow flow in the stationary form
///   [ -lambda/2                  -f cos(beta) / (2 omega)   ]
///   [ 9 d~ a/(8 omega) - sigma/a  f sin(beta) / (2 omega a) ]
/// Exact only at stationary points.
inline Matrix2 stationary_jacobian(const FirstOrderParams& p, double a, double beta) {
  if (!(a > 0.0)) throw DomainError("Jacobian requires a > 0");
  Matrix2 j;
  j(0, 0) = -0.5 * p.lambda;
  j(0, 1) = -p.f * std::cos(beta) / (2.0 * p.omega);
  j(1, 0) = 9.0 * p.d_eff * a / (8.0 * p.omega) - p.sigma / a;
  j(1, 1) = p.f * std::sin(beta) / (2.0 * p.omega * a);
  return j;
}

/// Closed-form det J at a stationary point:
/// lambda^2/4 - (9 d~ a^2/(8 omega) - sigma)(sigma - 3 d~ a^2/(8 omega)).
inline double stationary_determinant(const FirstOrderParams& p, double a) {
  const double x = p.d_eff * a * a / (8.0 * p.omega);
  return 0.25 * p.lambda * p.lambda - (9.0 * x - p.sigma) * (p.sigma - 3.0 * x);
}

/// Stable iff tr J < 0 and det J > 0.
inline bool classify_stability(const Matrix2& j) { return j.trace() < 0.0 && j.determinant() > 0.0; }

struct StabilityThreshold {
  double sigma = 0.0;
  bool discriminant_negative = false;  // det J > 0 for every sigma <= sigma
};

/// sigma* = 3 d~ a^2 / (4 omega) - sqrt(9 d~^2 a^4 / (16 omega^2) - lambda^2) / 2.
/// For a negative discriminant the vertex 3 d~ a^2 / (4 omega) is returned and flagged.
inline StabilityThreshold sigma_star(const FirstOrderParams& p, double a) {
  const double vertex = 3.0 * p.d_eff * a * a / (4.0 * p.omega);
  const double disc = 9.0 * p.d_eff * p.d_eff * a * a * a * a / (16.0 * p.omega * p.omega) - p.lambda * p.lambda;
  if (disc < 0.0) return {vertex, true};
  return {vertex - 0.5 * std::sqrt(disc), false};
}

namespace detail {

inline double normalize_angle(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  x = std::remainder(x, two_pi);
  if (x <= -std::numbers::pi) x += two_pi;
  return x;
}

/// Fills beta, Jacobian and stability for a root (a, sigma) of the residual.
inline StationaryPoint complete_point(FirstOrderParams p, double a, double sigma) {
  p.sigma = sigma;
  StationaryPoint s;
  s.sigma = sigma;
  s.a = a;
  const double g = 2.0 * p.omega * sigma - 0.75 * p.d_eff * a * a;
  s.beta = normalize_angle(std::atan2(-p.lambda * a * p.omega / p.f, -a * g / p.f));
  s.jacobian = stationary_jacobian(p, a, s.beta);
  s.trace = s.jacobian.trace();
  s.det = s.jacobian.determinant();
  s.stable = classify_stability(s.jacobian);
  s.residual = std::abs(stationary_residual(p, a, sigma));
  return s;
}

struct NewtonSettings {
  int max_iter = 100;
  int max_halvings = 20;
  double residual_tol = 1e-10;
  double step_rel_tol = 1e-12;
};

/// Damped Newton on a scalar function; `positive` keeps iterates > 0.
template <typename F, typename DF>
std::optional<double> damped_newton(F&& fn, DF&& dfn, double x, bool positive, const NewtonSettings& cfg = {}) {
  double fx = fn(x);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double dfx = dfn(x);
    if (dfx == 0.0 || !std::isfinite(dfx)) return std::nullopt;
    double step = -fx / dfx;
    double xn = x + step;
    double fn_new = 0.0;
    int h = 0;
    for (; h <= cfg.max_halvings; ++h) {
      xn = x + step;
      if (!positive || xn > 0.0) {
        fn_new = fn(xn);
        if (std::isfinite(fn_new) && std::abs(fn_new) < std::abs(fx)) break;
      }
      step *= 0.5;
    }
    if (h > cfg.max_halvings) {
      // No decrease found; accept only if already converged.
      if (std::abs(fx) <= cfg.residual_tol) return x;
      return std::nullopt;
    }
    const double dx = xn - x;
    x = xn;
    fx = fn_new;
    if (std::abs(fx) <= cfg.residual_tol && std::abs(dx) <= cfg.step_rel_tol * std::max(1.0, std::abs(x))) return x;
  }
  if (std::abs(fx) <= cfg.residual_tol) return x;
  return std::nullopt;
}

}  // namespace detail

/// Solves f(a, sigma) = 0 for a by damped Newton from a_guess, then recovers
/// beta from the two stationary relations.
inline StationaryPoint stationary_solve(const FirstOrderParams& params, double sigma, double a_guess) {
  validate(params);
  if (params.f == 0.0) throw InvalidArgument("stationary solve needs nonzero forcing; use the backbone for free vibration");
  if (!(a_guess > 0.0)) throw InvalidArgument("amplitude guess must be positive");
  auto fn = [&](double a) { return stationary_residual(params, a, sigma); };
  auto dfn = [&](double a) { return stationary_residual_da(params, a, sigma); };
  const auto root = detail::damped_newton(fn, dfn, a_guess, true);
  if (!root || !(*root > 0.0))
    throw NoConvergence("stationary Newton solve did not converge at sigma = " + std::to_string(sigma));
  return detail::complete_point(params, *root, sigma);
}

/// Solves f(a, sigma) = 0 for sigma at fixed a, from sigma_guess.
inline std::optional<StationaryPoint> stationary_solve_sigma(const FirstOrderParams& params, double a,
                                                             double sigma_guess) {
  auto fn = [&](double s) { return stationary_residual(params, a, s); };
  auto dfn = [&](double s) { return stationary_residual_dsigma(params, a, s); };
  const auto root = detail::damped_newton(fn, dfn, sigma_guess, false);
  if (!root) return std::nullopt;
  return detail::complete_point(params, a, *root);
}

/// Peak of the response: a = |f| / (lambda omega), sigma = 3 d~ a^2 / (8 omega),
/// sin(beta) = -sign(f). The backbone crosses the curve here.
inline StationaryPoint peak_point(const FirstOrderParams& params) {
  validate(params);
  if (!(params.lambda > 0.0)) throw InvalidArgument("peak requires lambda > 0");
  if (params.f == 0.0) throw InvalidArgument("peak requires nonzero forcing");
  const double a = std::abs(params.f) / (params.lambda * params.omega);
  const double sigma = backbone_detuning(params, a);
  FirstOrderParams p = params;
  p.sigma = sigma;
  StationaryPoint s;
  s.sigma = sigma;
  s.a = a;
  s.beta = params.f > 0.0 ? -std::numbers::pi / 2.0 : std::numbers::pi / 2.0;
  s.jacobian = stationary_jacobian(p, a, s.beta);
  s.trace = s.jacobian.trace();
  s.det = s.jacobian.determinant();
  s.stable = classify_stability(s.jacobian);
  s.residual = std::abs(stationary_residual(p, a, sigma));
  const double nu = backbone_frequency(p, a);
  if (std::abs(nu - p.forcing_frequency()) > 1e-12 * std::max(1.0, nu))
    throw std::logic_error("backbone does not cross the response peak");
  return s;
}

struct FrfOptions {
  /// Initial amplitude guess at sigma_min; nullopt uses the linear response f / (omega sqrt(lambda^2 + 4 sigma^2)).
  std::optional<double> seed_amplitude;
  /// Phase-1 jump detector: a solve is rejected when it lands farther than
  /// jump_rel * a_prev + jump_slope * |a_prev - a_prevprev| from the secant predictor.
  double jump_rel = 0.15;
  double jump_slope = 4.0;
};

/// Two-phase continuation: warm-started Newton in sigma along a uniform grid
/// until the solve fails or jumps branch at a fold; then continuation in a
/// from the last amplitude, solving for sigma, until sigma leaves the window.
inline FrfCurve frf_trace(const FirstOrderParams& params, double sigma_min, double sigma_max, int n_sigma,
                          const FrfOptions& opt = {}) {
  validate(params);
  if (!(sigma_min < sigma_max)) throw InvalidArgument("sigma_min must be < sigma_max");
  if (n_sigma < 2) throw InvalidArgument("n_sigma must be >= 2");
  if (params.f == 0.0) throw InvalidArgument("frequency response needs nonzero forcing");

  FrfCurve curve;
  const double dsigma = (sigma_max - sigma_min) / (n_sigma - 1);
  const double a_cap = params.lambda > 0.0 ? std::abs(params.f) / (params.lambda * params.omega)
                                           : std::numeric_limits<double>::infinity();
  double guess = opt.seed_amplitude.value_or(
      std::abs(params.f) / (params.omega * std::sqrt(params.lambda * params.lambda + 4.0 * sigma_min * sigma_min)));
  guess = std::min(guess, a_cap);

  std::vector<StationaryPoint> main;
  for (int i = 0; i < n_sigma; ++i) {
    const double sigma = sigma_min + i * dsigma;
    double predictor = guess;
    if (main.size() >= 2) predictor = 2.0 * main.back().a - main[main.size() - 2].a;
    if (!(predictor > 0.0)) predictor = guess;
    StationaryPoint s;
    try {
      s = stationary_solve(params, sigma, predictor);
    } catch (const NoConvergence&) {
      if (main.empty()) continue;
      break;
    }
    if (main.size() >= 2) {
      const double slope = std::abs(main.back().a - main[main.size() - 2].a);
      if (std::abs(s.a - predictor) > opt.jump_rel * main.back().a + opt.jump_slope * slope) break;
    }
    main.push_back(s);
    guess = s.a;
  }
  if (main.empty()) throw EmptyCurve("no stationary point converged in the sigma window");
  for (const auto& s : main) curve.points.push_back({s, Branch::main});

  const bool reached_end = std::abs(main.back().sigma - sigma_max) <= 1e-12 * std::max(1.0, std::abs(sigma_max));
  if (!reached_end && main.size() >= 2) {
    const double last_a = main.back().a;
    const double dir = main.back().a < main[main.size() - 2].a ? -1.0 : 1.0;
    const double da = std::max(std::abs(main.back().a - main[main.size() - 2].a),
                               (std::isfinite(a_cap) ? a_cap : last_a) / (n_sigma - 1));
    double sigma_prev = main.back().sigma;
    double sigma_prev2 = main[main.size() - 2].sigma;
    for (int k = 1; k <= 8 * n_sigma; ++k) {
      const double a = last_a + dir * k * da;
      if (!(a > 0.0) || a > a_cap) break;
      const double predictor = 2.0 * sigma_prev - sigma_prev2;
      const auto s = stationary_solve_sigma(params, a, predictor);
      if (!s || s->sigma < sigma_min || s->sigma > sigma_max) break;
      curve.points.push_back({*s, Branch::fold_back});
      sigma_prev2 = sigma_prev;
      sigma_prev = s->sigma;
    }
  }

  curve.peak = curve.points.front().point;
  for (const auto& fp : curve.points)
    if (fp.point.a > curve.peak.a) curve.peak = fp.point;
  return curve;
}

}  // namespace duoscale

// Spring-mass chain with one local strong cubic spring, and its generalized
// modal decomposition K phi = omega^2 M phi.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "duoscale/errors.hpp"

namespace duoscale {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Local nonlinear spring between nodes p-1 and p (node 0 is the wall when p = 1).
/// Restoring force c g^2 + (d / epsilon) g^3 with g = u_p - u_{p-1}.
struct NonlinearSpring {
  double c = 0.0;
  double d = 0.0;
  double epsilon = 1.0;
  int p = 1;  // 1-based attachment index
};

struct ChainSystem {
  Matrix mass_matrix;
  Matrix stiffness_matrix;
  Vector modal_damping;  // lambda_k, diagonal in the eigenbasis
  NonlinearSpring spring;
  Vector forcing_amplitude;  // F, zero for free vibration
  double forcing_detuning = 0.0;  // sigma, with omega_tilde = omega_driven + epsilon sigma
  int driven_mode = 1;  // 1-based

  int n() const { return static_cast<int>(mass_matrix.rows()); }
  bool forced() const { return forcing_amplitude.size() > 0 && forcing_amplitude.cwiseAbs().maxCoeff() > 0.0; }
};

struct ModalBasis {
  Vector frequencies;  // ascending omega_k
  Matrix modes;        // columns phi_k, M-orthonormal
  Vector gaps;         // delta_p phi_k
  int p = 1;

  int n() const { return static_cast<int>(frequencies.size()); }
};

namespace detail {

/// Lower Cholesky factor; throws DecompositionFailure on a non-positive pivot.
inline Matrix cholesky_lower(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw DecompositionFailure("matrix is not positive definite (pivot " + std::to_string(j + 1) +
                                 " = " + std::to_string(pivot) + ")");
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

inline bool is_symmetric(const Matrix& a, double rel_tol) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

/// Cyclic Jacobi sweeps on a symmetric matrix. On return `a` is (numerically)
/// diagonal and `v` holds the rotations, so input = v * diag(a) * v^T.
inline void jacobi_eigen(Matrix& a, Matrix& v) {
  const Eigen::Index n = a.rows();
  v = Matrix::Identity(n, n);
  const double scale = a.norm();
  if (scale == 0.0) return;
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= 1e-15 * scale) return;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  throw DecompositionFailure("Jacobi iteration did not converge");
}

}  // namespace detail

/// Checks the ChainSystem invariants; throws InvalidArgument or DecompositionFailure.
inline void validate(const ChainSystem& s) {
  const Eigen::Index n = s.mass_matrix.rows();
  if (n < 1) throw InvalidArgument("system dimension must be positive");
  if (s.mass_matrix.cols() != n || s.stiffness_matrix.rows() != n || s.stiffness_matrix.cols() != n)
    throw InvalidArgument("mass and stiffness matrices must be n x n");
  if (s.modal_damping.size() != n) throw InvalidArgument("modal damping must have n entries");
  if (s.forcing_amplitude.size() != n) throw InvalidArgument("forcing amplitude must have n entries");
  if (!s.mass_matrix.allFinite() || !s.stiffness_matrix.allFinite() || !s.modal_damping.allFinite() ||
      !s.forcing_amplitude.allFinite() || !std::isfinite(s.forcing_detuning))
    throw InvalidArgument("system contains non-finite values");
  if (!detail::is_symmetric(s.mass_matrix, 1e-12)) throw InvalidArgument("mass matrix is not symmetric");
  if (!detail::is_symmetric(s.stiffness_matrix, 1e-12)) throw InvalidArgument("stiffness matrix is not symmetric");
  (void)detail::cholesky_lower(s.mass_matrix);
  (void)detail::cholesky_lower(s.stiffness_matrix);
  if ((s.modal_damping.array() < 0.0).any()) throw InvalidArgument("modal damping must be non-negative");
  if (!(s.spring.epsilon > 0.0) || !std::isfinite(s.spring.epsilon)) throw InvalidArgument("epsilon must be > 0");
  if (!std::isfinite(s.spring.c) || !std::isfinite(s.spring.d)) throw InvalidArgument("spring coefficients must be finite");
  if (s.spring.p < 1 || s.spring.p > n) throw InvalidArgument("spring index p must satisfy 1 <= p <= n");
  if (s.driven_mode < 1 || s.driven_mode > n) throw InvalidArgument("driven mode must satisfy 1 <= k <= n");
}

inline ChainSystem make_system(Matrix mass, Matrix stiffness, Vector modal_damping, NonlinearSpring spring,
                               Vector forcing, double sigma = 0.0, int driven_mode = 1) {
  ChainSystem s{std::move(mass), std::move(stiffness), std::move(modal_damping), spring,
                std::move(forcing), sigma, driven_mode};
  validate(s);
  return s;
}

/// Uniform fixed-fixed chain: M = mass I, K = stiffness tridiag(-1, 2, -1).
inline ChainSystem build_chain(int n, double mass, double stiffness, NonlinearSpring spring, double damping,
                               std::optional<Vector> forcing = std::nullopt, double sigma = 0.0) {
  if (n < 1) throw InvalidArgument("chain length must be positive");
  if (!(mass > 0.0)) throw InvalidArgument("mass must be positive");
  if (!(stiffness > 0.0)) throw InvalidArgument("stiffness must be positive");
  Matrix m = mass * Matrix::Identity(n, n);
  Matrix k = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = 2.0 * stiffness;
    if (i + 1 < n) {
      k(i, i + 1) = -stiffness;
      k(i + 1, i) = -stiffness;
    }
  }
  return make_system(std::move(m), std::move(k), Vector::Constant(n, damping), spring,
                     forcing ? *forcing : Vector::Zero(n), sigma);
}

/// Single mass, u'' + omega^2 u + eps lambda u' + c u^2 + d u^3 / eps = eps^2 f cos(omega_tilde t).
inline ChainSystem single_dof(double omega, NonlinearSpring spring, double lambda = 0.0, double f = 0.0,
                              double sigma = 0.0) {
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  spring.p = 1;
  return make_system(Matrix::Identity(1, 1), Matrix::Constant(1, 1, omega * omega), Vector::Constant(1, lambda),
                     spring, Vector::Constant(1, f), sigma);
}

/// Scalar spring law s(g) = c g^2 + (d / eps) g^3.
inline double spring_law(const NonlinearSpring& sp, double g) {
  return sp.c * g * g + (sp.d / sp.epsilon) * g * g * g;
}

inline double spring_law_derivative(const NonlinearSpring& sp, double g) {
  return 2.0 * sp.c * g + 3.0 * (sp.d / sp.epsilon) * g * g;
}

/// Elongation g = u_p - u_{p-1} (u_0 = 0 at the wall).
inline double spring_elongation(const NonlinearSpring& sp, const Vector& u) {
  const int i = sp.p - 1;
  return sp.p == 1 ? u[0] : u[i] - u[i - 1];
}

/// Nonlinear internal force Phi(u, eps). Entry p carries s(g), entry p-1
/// carries -s(g); for p = 1 only entry 1 is nonzero.
inline Vector nonlinear_force(const ChainSystem& system, const Vector& u) {
  if (u.size() != system.n()) throw InvalidArgument("displacement has wrong dimension");
  Vector phi = Vector::Zero(system.n());
  const auto& sp = system.spring;
  const double s = spring_law(sp, spring_elongation(sp, u));
  phi[sp.p - 1] = s;
  if (sp.p >= 2) phi[sp.p - 2] = -s;
  return phi;
}

/// Potential of Phi: c g^3 / 3 + d g^4 / (4 eps).
inline double nonlinear_potential(const NonlinearSpring& sp, double g) {
  return sp.c * g * g * g / 3.0 + sp.d * g * g * g * g / (4.0 * sp.epsilon);
}

/// Generalized symmetric eigenproblem via M = L L^T and Jacobi on L^-1 K L^-T.
/// Frequencies ascending; each mode's largest-magnitude entry is positive.
inline ModalBasis modal_decompose(const ChainSystem& system) {
  const Matrix& m = system.mass_matrix;
  const Matrix& k = system.stiffness_matrix;
  const Eigen::Index n = m.rows();
  const Matrix l = detail::cholesky_lower(m);
  const auto lower = l.triangularView<Eigen::Lower>();
  // A = L^-1 K L^-T
  Matrix tmp = lower.solve(k);
  Matrix a = lower.solve(tmp.transpose());
  a = 0.5 * (a + a.transpose()).eval();

  Matrix z;
  detail::jacobi_eigen(a, z);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

  ModalBasis basis;
  basis.p = system.spring.p;
  basis.frequencies.resize(n);
  basis.modes.resize(n, n);
  const Matrix phi_all = l.transpose().triangularView<Eigen::Upper>().solve(z);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    const double eig = a(src, src);
    if (!(eig > 0.0)) throw DecompositionFailure("stiffness matrix has a non-positive generalized eigenvalue");
    basis.frequencies[j] = std::sqrt(eig);
    Vector col = phi_all.col(src);
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col[i]) > best * (1.0 + 1e-12)) {
        best = std::abs(col[i]);
        imax = i;
      }
    }
    if (col[imax] < 0.0) col = -col;
    basis.modes.col(j) = col;
  }
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const double lo = basis.frequencies[j] * basis.frequencies[j];
    const double hi = basis.frequencies[j + 1] * basis.frequencies[j + 1];
    if (hi - lo <= 1e-9 * hi)
      throw DegenerateSpectrum("eigenvalues " + std::to_string(j + 1) + " and " + std::to_string(j + 2) +
                               " coincide");
  }
  basis.gaps.resize(n);
  const int p = system.spring.p;
  for (Eigen::Index j = 0; j < n; ++j)
    basis.gaps[j] = p == 1 ? basis.modes(0, j) : basis.modes(p - 1, j) - basis.modes(p - 2, j);
  return basis;
}

/// y_k = phi_k^T M u
inline Vector modal_project(const ModalBasis& basis, const Matrix& mass, const Vector& u) {
  if (mass.rows() != basis.n() || mass.cols() != basis.n() || u.size() != basis.n())
    throw InvalidArgument("modal_project: dimension mismatch");
  return basis.modes.transpose() * (mass * u);
}

inline Vector modal_reconstruct(const ModalBasis& basis, const Vector& y) {
  if (y.size() != basis.n()) throw InvalidArgument("modal_reconstruct: dimension mismatch");
  return basis.modes * y;
}

struct ResonanceViolation {
  int mode = 0;      // k >= 2
  int multiple = 0;  // q in {1, 2, 3}
  double ratio = 0.0;
};

/// Flags omega_k / omega_1 within `tolerance` of 1, 2 or 3 (k >= 2).
inline std::vector<ResonanceViolation> nonresonance_report(const ModalBasis& basis, double tolerance) {
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  std::vector<ResonanceViolation> out;
  for (int k = 2; k <= basis.n(); ++k) {
    const double ratio = basis.frequencies[k - 1] / basis.frequencies[0];
    for (int q = 1; q <= 3; ++q)
      if (std::abs(ratio - q) < tolerance) out.push_back({k, q, ratio});
  }
  return out;
}

}  // namespace duoscale

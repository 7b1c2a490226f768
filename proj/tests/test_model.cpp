#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "duoscale/model.hpp"

using namespace duoscale;

namespace {

constexpr double kPi = std::numbers::pi;

ChainSystem chain(int n, double mass = 1.0, double stiffness = 1.0, int p = 1) {
  return build_chain(n, mass, stiffness, NonlinearSpring{1.0, 1.0, 0.1, p}, 0.0);
}

double analytic_chain_frequency(int n, double mass, double stiffness, int k) {
  return 2.0 * std::sqrt(stiffness / mass) * std::sin(k * kPi / (2.0 * (n + 1)));
}

}  // namespace

TEST(BuildChain, SingleMassHalfStiffnessGivesUnitK) {
  const ChainSystem s = build_chain(1, 1.0, 0.5, {}, 0.0);
  EXPECT_DOUBLE_EQ(s.mass_matrix(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.stiffness_matrix(0, 0), 1.0);
}

TEST(BuildChain, NineMassTridiagonalPattern) {
  const ChainSystem s = chain(9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      const double expect = i == j ? 2.0 : (std::abs(i - j) == 1 ? -1.0 : 0.0);
      EXPECT_EQ(s.stiffness_matrix(i, j), expect);
    }
  EXPECT_TRUE(s.mass_matrix.isIdentity());
}

TEST(BuildChain, HeavyMassesMatchAnalyticSpectrum) {
  const ChainSystem s = chain(3, 2.0, 1.0);
  EXPECT_TRUE(s.mass_matrix.isApprox(2.0 * Matrix::Identity(3, 3)));
  const ModalBasis b = modal_decompose(s);
  for (int k = 1; k <= 3; ++k) {
    const double expect = std::sqrt(2.0 * (1.0 - std::cos(k * kPi / 4.0)) / 2.0);
    EXPECT_NEAR(b.frequencies[k - 1], expect, 1e-12);
  }
}

TEST(BuildChain, RejectsBadArguments) {
  EXPECT_THROW(build_chain(0, 1.0, 1.0, {}, 0.0), InvalidArgument);
  EXPECT_THROW(build_chain(3, 0.0, 1.0, {}, 0.0), InvalidArgument);
  EXPECT_THROW(build_chain(3, 1.0, -1.0, {}, 0.0), InvalidArgument);
  EXPECT_THROW(build_chain(3, 1.0, 1.0, NonlinearSpring{1, 1, 0.1, 4}, 0.0), InvalidArgument);
  EXPECT_THROW(build_chain(3, 1.0, 1.0, NonlinearSpring{1, 1, 0.0, 1}, 0.0), InvalidArgument);
  EXPECT_THROW(build_chain(3, 1.0, 1.0, {}, -0.1), InvalidArgument);
}

TEST(Validate, RejectsAsymmetricAndIndefinite) {
  Matrix k = Matrix::Identity(2, 2);
  k(0, 1) = 0.5;
  EXPECT_THROW(make_system(Matrix::Identity(2, 2), k, Vector::Zero(2), {}, Vector::Zero(2)), InvalidArgument);
  Matrix m = Matrix::Identity(2, 2);
  m(1, 1) = -1.0;
  EXPECT_THROW(make_system(m, Matrix::Identity(2, 2), Vector::Zero(2), {}, Vector::Zero(2)), NumericalError);
}

TEST(NonlinearForce, ZeroDisplacement) {
  const ChainSystem s = chain(4, 1.0, 1.0, 3);
  EXPECT_EQ(nonlinear_force(s, Vector::Zero(4)).norm(), 0.0);
}

TEST(NonlinearForce, WallSpringSingleEntry) {
  const ChainSystem s = single_dof(1.0, NonlinearSpring{1.0, 1.0, 0.01, 1});
  const Vector phi = nonlinear_force(s, Vector::Constant(1, 0.1));
  EXPECT_NEAR(phi[0], 0.01 + 100.0 * 0.001, 1e-15);
}

TEST(NonlinearForce, InternalSpringActsOnBothNeighbours) {
  const ChainSystem s = build_chain(2, 1.0, 1.0, NonlinearSpring{1.0, 1.0, 1.0, 2}, 0.0);
  Vector u(2);
  u << 0.0, 1.0;
  const Vector phi = nonlinear_force(s, u);
  EXPECT_DOUBLE_EQ(phi[0], -2.0);
  EXPECT_DOUBLE_EQ(phi[1], 2.0);
}

TEST(NonlinearForce, InternalForcesCancel) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int p = 2; p <= 6; ++p) {
    const ChainSystem s = chain(6, 1.0, 1.0, p);
    for (int trial = 0; trial < 20; ++trial) {
      Vector u(6);
      for (int i = 0; i < 6; ++i) u[i] = dist(rng);
      EXPECT_NEAR(nonlinear_force(s, u).sum(), 0.0, 1e-12);
    }
  }
}

TEST(NonlinearForce, IsGradientOfPotential) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-0.3, 0.3);
  for (int p = 1; p <= 5; ++p) {
    const ChainSystem s = chain(5, 1.0, 1.0, p);
    Vector u(5);
    for (int i = 0; i < 5; ++i) u[i] = dist(rng);
    const Vector phi = nonlinear_force(s, u);
    const double h = 1e-6;
    for (int i = 0; i < 5; ++i) {
      Vector up = u, um = u;
      up[i] += h;
      um[i] -= h;
      const double fd = (nonlinear_potential(s.spring, spring_elongation(s.spring, up)) -
                         nonlinear_potential(s.spring, spring_elongation(s.spring, um))) /
                        (2.0 * h);
      EXPECT_NEAR(phi[i], fd, 1e-7);
    }
  }
}

TEST(ModalDecompose, ScalarCase) {
  const ModalBasis b = modal_decompose(make_system(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Vector::Zero(1), {},
                                                   Vector::Zero(1)));
  EXPECT_DOUBLE_EQ(b.frequencies[0], 1.0);
  EXPECT_DOUBLE_EQ(b.modes(0, 0), 1.0);
}

TEST(ModalDecompose, NineMassFundamental) {
  const ModalBasis b = modal_decompose(chain(9));
  EXPECT_NEAR(b.frequencies[0], 2.0 * std::sin(kPi / 20.0), 1e-10);
  EXPECT_NEAR(b.frequencies[0], 0.3128689, 1e-7);
  for (int j = 1; j <= 9; ++j) EXPECT_NEAR(b.modes(j - 1, 0), std::sqrt(0.2) * std::sin(j * kPi / 10.0), 1e-10);
}

TEST(ModalDecompose, UniformChainsMatchClosedForm) {
  for (int n = 1; n <= 12; ++n) {
    for (double mass : {1.0, 0.7}) {
      const ModalBasis b = modal_decompose(chain(n, mass, 1.3));
      for (int k = 1; k <= n; ++k) {
        const double expect = analytic_chain_frequency(n, mass, 1.3, k);
        EXPECT_NEAR(b.frequencies[k - 1], expect, 1e-10 * expect) << "n=" << n << " k=" << k;
      }
    }
  }
}

TEST(ModalDecompose, OrthonormalityAndResidualOnRandomSpdPairs) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 7;
    Matrix a(n, n), c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        a(i, j) = dist(rng);
        c(i, j) = dist(rng);
      }
    Matrix m = a * a.transpose() + n * Matrix::Identity(n, n);
    Matrix k = c * c.transpose() + 0.5 * Matrix::Identity(n, n);
    m = 0.5 * (m + m.transpose()).eval();
    k = 0.5 * (k + k.transpose()).eval();
    const ChainSystem s = make_system(m, k, Vector::Zero(n), NonlinearSpring{0, 0, 1, 1}, Vector::Zero(n));
    const ModalBasis b = modal_decompose(s);

    const Matrix gram = b.modes.transpose() * m * b.modes;
    EXPECT_LE((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    const Matrix kk = b.modes.transpose() * k * b.modes;
    for (int i = 0; i < n; ++i) {
      const double w2 = b.frequencies[i] * b.frequencies[i];
      EXPECT_NEAR(kk(i, i), w2, 1e-10 * w2);
      if (i > 0) {
        EXPECT_LT(b.frequencies[i - 1], b.frequencies[i]);
      }
    }
    const Matrix res = k * b.modes - m * b.modes * b.frequencies.cwiseAbs2().asDiagonal();
    const double knorm = k.cwiseAbs().rowwise().sum().maxCoeff();
    EXPECT_LE(res.cwiseAbs().rowwise().sum().maxCoeff(), 1e-9 * knorm);

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ref(k, m);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(b.frequencies[i], std::sqrt(ref.eigenvalues()[i]), 1e-10);
  }
}

TEST(ModalDecompose, SignConventionLargestEntryPositive) {
  const ModalBasis b = modal_decompose(chain(7));
  for (int k = 0; k < 7; ++k) {
    // Ties within rounding go to the first index.
    const double top = b.modes.col(k).cwiseAbs().maxCoeff();
    Eigen::Index idx = 0;
    while (std::abs(b.modes(idx, k)) < top * (1.0 - 1e-12)) ++idx;
    EXPECT_GT(b.modes(idx, k), 0.0);
  }
}

TEST(ModalDecompose, GapsFollowSpringPosition) {
  const ModalBasis b1 = modal_decompose(chain(5, 1.0, 1.0, 1));
  const ModalBasis b3 = modal_decompose(chain(5, 1.0, 1.0, 3));
  for (int k = 0; k < 5; ++k) {
    EXPECT_DOUBLE_EQ(b1.gaps[k], b1.modes(0, k));
    EXPECT_DOUBLE_EQ(b3.gaps[k], b3.modes(2, k) - b3.modes(1, k));
  }
}

TEST(ModalDecompose, RejectsDegenerateSpectrum) {
  const ChainSystem s = make_system(Matrix::Identity(2, 2), Matrix::Identity(2, 2), Vector::Zero(2), {}, Vector::Zero(2));
  EXPECT_THROW(modal_decompose(s), DegenerateSpectrum);
}

TEST(ModalProjection, RoundTrip) {
  const ChainSystem s = build_chain(9, 1.7, 0.8, {}, 0.0);
  const ModalBasis b = modal_decompose(s);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vector y(9);
    for (int i = 0; i < 9; ++i) y[i] = dist(rng);
    EXPECT_LE((modal_project(b, s.mass_matrix, modal_reconstruct(b, y)) - y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ModalProjection, BasisVectorsAndCombinations) {
  const ChainSystem s = chain(9);
  const ModalBasis b = modal_decompose(s);
  const Vector e1 = modal_project(b, s.mass_matrix, b.modes.col(0));
  EXPECT_NEAR(e1[0], 1.0, 1e-12);
  EXPECT_NEAR(e1.tail(8).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  const Vector y = modal_project(b, s.mass_matrix, 0.1 * b.modes.col(0) + 0.2 * b.modes.col(2));
  Vector expect = Vector::Zero(9);
  expect[0] = 0.1;
  expect[2] = 0.2;
  EXPECT_LE((y - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(modal_project(b, s.mass_matrix, Vector::Zero(3)), InvalidArgument);
}

TEST(Nonresonance, NineMassSecondModeNearDouble) {
  const ModalBasis b = modal_decompose(chain(9));
  const auto report = nonresonance_report(b, 0.05);
  ASSERT_FALSE(report.empty());
  EXPECT_EQ(report.front().mode, 2);
  EXPECT_EQ(report.front().multiple, 2);
  EXPECT_NEAR(report.front().ratio, std::sin(kPi / 10.0) / std::sin(kPi / 20.0), 1e-10);
}

TEST(Nonresonance, TrivialAndClearCases) {
  EXPECT_TRUE(nonresonance_report(modal_decompose(single_dof(1.0, {})), 0.1).empty());
  Matrix k = Matrix::Zero(2, 2);
  k(0, 0) = 1.0;
  k(1, 1) = 6.25;
  const ModalBasis b = modal_decompose(make_system(Matrix::Identity(2, 2), k, Vector::Zero(2), {}, Vector::Zero(2)));
  EXPECT_DOUBLE_EQ(b.frequencies[1], 2.5);
  EXPECT_TRUE(nonresonance_report(b, 0.1).empty());
  EXPECT_THROW(nonresonance_report(b, 0.0), InvalidArgument);
}

#pragma once

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "remqst/quantum.hpp"
#include "remqst/tolerances.hpp"

namespace remqst::test {

inline ::testing::AssertionResult valid_state(const DensityMatrix& rho) {
  const Matrix& m = rho.matrix();
  if (max_abs(m - m.adjoint()) > tol::kHermitian) return ::testing::AssertionFailure() << "not Hermitian";
  if (std::abs(m.trace().real() - 1.0) > tol::kTrace) return ::testing::AssertionFailure() << "trace " << m.trace();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.eigenvalues().minCoeff() < -tol::kEigenvalue) {
    return ::testing::AssertionFailure() << "eigenvalue " << es.eigenvalues().minCoeff();
  }
  return ::testing::AssertionSuccess();
}

inline ::testing::AssertionResult valid_povm(const Povm& povm) {
  Matrix sum = Matrix::Zero(povm.dim(), povm.dim());
  for (const auto& e : povm.effects()) {
    const Matrix& m = e.matrix();
    if (max_abs(m - m.adjoint()) > tol::kHermitian) return ::testing::AssertionFailure() << "effect not Hermitian";
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.eigenvalues().minCoeff() < -tol::kEigenvalue || es.eigenvalues().maxCoeff() > 1 + tol::kEigenvalue) {
      return ::testing::AssertionFailure() << "effect eigenvalues " << es.eigenvalues().transpose();
    }
    sum += m;
  }
  const double dev = max_abs(sum - Matrix::Identity(povm.dim(), povm.dim()));
  if (dev > tol::kCompleteness) return ::testing::AssertionFailure() << "completeness deviation " << dev;
  return ::testing::AssertionSuccess();
}

inline Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

inline DensityMatrix ket0() { return pauli_state(PauliBasis::z, 0); }
inline DensityMatrix ket1() { return pauli_state(PauliBasis::z, 1); }

}  // namespace remqst::test

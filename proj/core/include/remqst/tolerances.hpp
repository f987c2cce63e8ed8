#pragma once

// Numerical tolerances shared by the library and its tests.

namespace remqst::tol {

inline constexpr double kHermitian = 1e-12;
inline constexpr double kTrace = 1e-10;
inline constexpr double kEigenvalue = 1e-10;
inline constexpr double kCompleteness = 1e-9;
inline constexpr double kProbabilitySum = 1e-9;
inline constexpr double kUnitary = 1e-10;

// Eigenvalues in [-kSqrtClamp, 0) are clamped to zero before a matrix square
// root; anything more negative is rejected.
inline constexpr double kSqrtClamp = 1e-8;

inline constexpr double kPurity = 1e-8;

// Probability floors used inside logarithms and likelihood ratios.
inline constexpr double kLogFloor = 1e-300;
inline constexpr double kRatioFloor = 1e-12;

inline constexpr int kMaxDim = 64;

}  // namespace remqst::tol

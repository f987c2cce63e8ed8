#pragma once

// Finite-dimensional quantum objects: states, POVM effects, Kraus channels,
// and the handful of operations the tomography code needs on them.
//
// All types validate their physical invariants on construction and are
// immutable afterwards. Matrices are stored dense.

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace remqst {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class PauliBasis { x, y, z };
enum class Axis { x, y, z };

inline constexpr PauliBasis kPauliBases[] = {PauliBasis::x, PauliBasis::y, PauliBasis::z};

std::string_view to_string(PauliBasis basis);
/// Accepts "x", "y", "z" (case-insensitive).
PauliBasis parse_basis(std::string_view label);

class DensityMatrix {
 public:
  /// Throws InvalidArgument unless `entries` is Hermitian, unit trace and PSD.
  explicit DensityMatrix(Matrix entries);

  static DensityMatrix from_ket(const Vector& ket);
  static DensityMatrix maximally_mixed(int dim);
  /// Symmetrizes, renormalizes the trace and clamps tiny negative eigenvalues
  /// before validating. Used for the output of iterative estimators.
  static DensityMatrix from_estimate(const Matrix& entries);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double purity() const;

 private:
  Matrix m_;
};

class Effect {
 public:
  /// Throws InvalidArgument unless Hermitian with spectrum in [0, 1].
  explicit Effect(Matrix entries);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

class Povm {
 public:
  /// Throws InvalidArgument if dims disagree, labels mismatch the effect
  /// count, or the effects do not sum to the identity.
  Povm(std::vector<Effect> effects, std::vector<std::string> labels);

  std::size_t size() const { return effects_.size(); }
  int dim() const { return effects_.front().dim(); }
  const Effect& effect(std::size_t i) const { return effects_[i]; }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const std::vector<Effect>& effects() const { return effects_; }
  const std::vector<std::string>& labels() const { return labels_; }
  /// Index of `label`, throws InvalidArgument if absent.
  std::size_t index_of(std::string_view label) const;

 private:
  std::vector<Effect> effects_;
  std::vector<std::string> labels_;
};

class KrausChannel {
 public:
  /// Throws InvalidArgument unless sum_i K_i^dag K_i = 1.
  explicit KrausChannel(std::vector<Matrix> kraus_ops);

  static KrausChannel identity(int dim);
  static KrausChannel unitary(const Matrix& u);

  int dim() const { return static_cast<int>(ops_.front().rows()); }
  const std::vector<Matrix>& operators() const { return ops_; }

 private:
  std::vector<Matrix> ops_;
};

// Operations --------------------------------------------------------------

/// p_i = Tr(rho M_i), clamped to [0, 1].
std::vector<double> born_probabilities(const DensityMatrix& state, const Povm& povm);

/// Uhlmann fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// 1 - Tr(rho sigma) for a pure `pure_target`.
double infidelity_pure(const DensityMatrix& pure_target, const DensityMatrix& estimate);

DensityMatrix apply_channel(const KrausChannel& channel, const DensityMatrix& state);

/// Heisenberg-picture image sum_i K_i^dag M K_i, so that
/// Tr(E(rho) M) == Tr(rho E^dag(M)).
Effect pull_back_effect(const KrausChannel& channel, const Effect& effect);
Povm pull_back(const KrausChannel& channel, const Povm& povm);

/// Sequential composition: `first` is applied, then `second`.
KrausChannel compose_channels(const KrausChannel& first, const KrausChannel& second);

/// Six effects {1/3 |0_b><0_b|, 1/3 |1_b><1_b|} ordered x0, x1, y0, y1, z0, z1.
Povm pauli6_povm();

/// Two-outcome projective measurement in `basis`.
Povm projective_povm(PauliBasis basis);

/// Eigenstate of sigma_basis; outcome 0 is the +1 eigenvector.
Vector pauli_ket(PauliBasis basis, int outcome);
DensityMatrix pauli_state(PauliBasis basis, int outcome);

/// "x0".."z1" -> eigenstate.
DensityMatrix pauli_state(std::string_view label);

Matrix pauli_matrix(Axis axis);
/// exp(-i theta sigma_axis / 2).
Matrix rotation(Axis axis, double theta);

/// Unitary taking |0_basis> to |0_z> (identity for z).
Matrix pauli_basis_rotation(PauliBasis basis);

/// Completes `ket` to a unitary whose first column is `ket`.
Matrix preparation_unitary(const Vector& ket);

// Linear-algebra helpers ---------------------------------------------------

Matrix hermitian_part(const Matrix& m);
/// PSD square root via eigendecomposition. Eigenvalues in [-1e-8, 0) are
/// clamped to zero; lower ones raise InvalidArgument.
Matrix psd_sqrt(const Matrix& m);
/// Inverse square root of a positive-definite Hermitian matrix.
Matrix inverse_sqrt(const Matrix& m);
double trace_distance(const Matrix& a, const Matrix& b);
bool is_unitary(const Matrix& u, double tolerance);
double max_abs(const Matrix& m);

}  // namespace remqst

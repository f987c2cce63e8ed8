#include "remqst/quantum.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "remqst/errors.hpp"
#include "remqst/tolerances.hpp"

namespace remqst {
namespace {

using Eigen::SelfAdjointEigenSolver;

constexpr Complex kI{0.0, 1.0};

void require_square(const Matrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw InvalidArgument(std::string(what) + ": matrix must be square and non-empty");
  }
  if (m.rows() > tol::kMaxDim) {
    throw InvalidArgument(std::string(what) + ": dimension exceeds supported maximum");
  }
}

double hermiticity_defect(const Matrix& m) { return max_abs(m - m.adjoint()); }

Eigen::VectorXd eigenvalues(const Matrix& m) {
  SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

std::string_view to_string(PauliBasis basis) {
  switch (basis) {
    case PauliBasis::x: return "x";
    case PauliBasis::y: return "y";
    case PauliBasis::z: return "z";
  }
  return "?";
}

PauliBasis parse_basis(std::string_view label) {
  if (label.size() == 1) {
    switch (std::tolower(static_cast<unsigned char>(label[0]))) {
      case 'x': return PauliBasis::x;
      case 'y': return PauliBasis::y;
      case 'z': return PauliBasis::z;
      default: break;
    }
  }
  throw InvalidArgument("unknown Pauli basis label '" + std::string(label) + "'");
}

// DensityMatrix -------------------------------------------------------------

DensityMatrix::DensityMatrix(Matrix entries) : m_(std::move(entries)) {
  require_square(m_, "DensityMatrix");
  if (hermiticity_defect(m_) > tol::kHermitian) {
    throw InvalidArgument("DensityMatrix: not Hermitian");
  }
  if (std::abs(m_.trace() - Complex{1.0, 0.0}) > tol::kTrace) {
    throw InvalidArgument("DensityMatrix: trace differs from 1");
  }
  if (eigenvalues(m_).minCoeff() < -tol::kEigenvalue) {
    throw InvalidArgument("DensityMatrix: not positive semidefinite");
  }
}

DensityMatrix DensityMatrix::from_ket(const Vector& ket) {
  const double norm = ket.norm();
  if (norm == 0.0) throw InvalidArgument("DensityMatrix::from_ket: zero vector");
  const Vector v = ket / norm;
  return DensityMatrix(hermitian_part(v * v.adjoint()));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 1) throw InvalidArgument("DensityMatrix::maximally_mixed: dim must be positive");
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::from_estimate(const Matrix& entries) {
  require_square(entries, "DensityMatrix::from_estimate");
  SelfAdjointEigenSolver<Matrix> es(hermitian_part(entries));
  Eigen::VectorXd lambda = es.eigenvalues();
  if (lambda.minCoeff() < -tol::kSqrtClamp) {
    throw InvalidArgument("DensityMatrix::from_estimate: significantly negative eigenvalue");
  }
  lambda = lambda.cwiseMax(0.0);
  const double total = lambda.sum();
  if (!(total > 0.0)) throw InvalidArgument("DensityMatrix::from_estimate: zero trace");
  lambda /= total;
  const Matrix& v = es.eigenvectors();
  return DensityMatrix(hermitian_part(v * lambda.cast<Complex>().asDiagonal() * v.adjoint()));
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

// Effect --------------------------------------------------------------------

Effect::Effect(Matrix entries) : m_(std::move(entries)) {
  require_square(m_, "Effect");
  if (hermiticity_defect(m_) > tol::kHermitian) throw InvalidArgument("Effect: not Hermitian");
  const Eigen::VectorXd lambda = eigenvalues(m_);
  if (lambda.minCoeff() < -tol::kEigenvalue || lambda.maxCoeff() > 1.0 + tol::kEigenvalue) {
    throw InvalidArgument("Effect: spectrum outside [0, 1]");
  }
}

// Povm ----------------------------------------------------------------------

Povm::Povm(std::vector<Effect> effects, std::vector<std::string> labels)
    : effects_(std::move(effects)), labels_(std::move(labels)) {
  if (effects_.empty()) throw InvalidArgument("Povm: no effects");
  if (labels_.size() != effects_.size()) throw InvalidArgument("Povm: one label per effect");
  const int d = effects_.front().dim();
  Matrix total = Matrix::Zero(d, d);
  for (const auto& e : effects_) {
    require_same_dim(d, e.dim(), "Povm");
    total += e.matrix();
  }
  if (max_abs(total - Matrix::Identity(d, d)) > tol::kCompleteness) {
    throw InvalidArgument("Povm: effects do not sum to identity");
  }
}

std::size_t Povm::index_of(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw InvalidArgument("Povm: no effect labeled '" + std::string(label) + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

// KrausChannel ---------------------------------------------------------------

KrausChannel::KrausChannel(std::vector<Matrix> kraus_ops) : ops_(std::move(kraus_ops)) {
  if (ops_.empty()) throw InvalidArgument("KrausChannel: no Kraus operators");
  const auto d = ops_.front().rows();
  Matrix total = Matrix::Zero(d, d);
  for (const auto& k : ops_) {
    require_square(k, "KrausChannel");
    require_same_dim(static_cast<int>(d), static_cast<int>(k.rows()), "KrausChannel");
    total += k.adjoint() * k;
  }
  if (max_abs(total - Matrix::Identity(d, d)) > tol::kCompleteness) {
    throw InvalidArgument("KrausChannel: not trace preserving");
  }
}

KrausChannel KrausChannel::identity(int dim) {
  return KrausChannel({Matrix::Identity(dim, dim)});
}

KrausChannel KrausChannel::unitary(const Matrix& u) {
  if (!is_unitary(u, tol::kUnitary)) throw InvalidArgument("KrausChannel::unitary: not unitary");
  return KrausChannel({u});
}

// Operations -----------------------------------------------------------------

std::vector<double> born_probabilities(const DensityMatrix& state, const Povm& povm) {
  require_same_dim(state.dim(), povm.dim(), "born_probabilities");
  std::vector<double> p;
  p.reserve(povm.size());
  for (const auto& e : povm.effects()) {
    const double v = (state.matrix() * e.matrix()).trace().real();
    p.push_back(std::clamp(v, 0.0, 1.0));
  }
  return p;
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require_same_dim(rho.dim(), sigma.dim(), "fidelity");
  // Work in the support of rho so that pure states do not pick up
  // sqrt(rounding noise) from their null space.
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
  const Eigen::VectorXd& d = es.eigenvalues();
  const double cutoff = 1e-13 * std::max(d.maxCoeff(), 1.0);
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) > cutoff) support.push_back(i);
  }
  Matrix basis(rho.dim(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    basis.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(support[k]) * std::sqrt(d(support[k]));
  }
  const Matrix inner = hermitian_part(basis.adjoint() * sigma.matrix() * basis);
  const Eigen::VectorXd lambda = eigenvalues(inner);
  const double floor = 1e-13 * std::max(lambda.maxCoeff(), 1e-300);
  double root_sum = 0.0;
  for (double l : lambda) {
    if (l > floor) root_sum += std::sqrt(l);
  }
  return std::min(root_sum * root_sum, 1.0 + tol::kCompleteness);
}

double infidelity_pure(const DensityMatrix& pure_target, const DensityMatrix& estimate) {
  require_same_dim(pure_target.dim(), estimate.dim(), "infidelity_pure");
  if (pure_target.purity() < 1.0 - tol::kPurity) {
    throw InvalidArgument("infidelity_pure: target state is not pure");
  }
  const double overlap = (pure_target.matrix() * estimate.matrix()).trace().real();
  return std::clamp(1.0 - overlap, 0.0, 1.0);
}

DensityMatrix apply_channel(const KrausChannel& channel, const DensityMatrix& state) {
  require_same_dim(channel.dim(), state.dim(), "apply_channel");
  Matrix out = Matrix::Zero(state.dim(), state.dim());
  for (const auto& k : channel.operators()) out += k * state.matrix() * k.adjoint();
  return DensityMatrix::from_estimate(out);
}

Effect pull_back_effect(const KrausChannel& channel, const Effect& effect) {
  require_same_dim(channel.dim(), effect.dim(), "pull_back_effect");
  Matrix out = Matrix::Zero(effect.dim(), effect.dim());
  for (const auto& k : channel.operators()) out += k.adjoint() * effect.matrix() * k;
  return Effect(hermitian_part(out));
}

Povm pull_back(const KrausChannel& channel, const Povm& povm) {
  std::vector<Effect> effects;
  effects.reserve(povm.size());
  for (const auto& e : povm.effects()) effects.push_back(pull_back_effect(channel, e));
  return Povm(std::move(effects), povm.labels());
}

KrausChannel compose_channels(const KrausChannel& first, const KrausChannel& second) {
  require_same_dim(first.dim(), second.dim(), "compose_channels");
  std::vector<Matrix> ops;
  ops.reserve(first.operators().size() * second.operators().size());
  for (const auto& k2 : second.operators()) {
    for (const auto& k1 : first.operators()) ops.push_back(k2 * k1);
  }
  return KrausChannel(std::move(ops));
}

Vector pauli_ket(PauliBasis basis, int outcome) {
  if (outcome != 0 && outcome != 1) throw InvalidArgument("pauli_ket: outcome must be 0 or 1");
  const double s = std::numbers::sqrt2 / 2.0;
  const double sign = outcome == 0 ? 1.0 : -1.0;
  Vector v(2);
  switch (basis) {
    case PauliBasis::x: v << s, sign * s; break;
    case PauliBasis::y: v << s, sign * s * kI; break;
    case PauliBasis::z:
      if (outcome == 0) v << 1.0, 0.0;
      else v << 0.0, 1.0;
      break;
  }
  return v;
}

DensityMatrix pauli_state(PauliBasis basis, int outcome) {
  return DensityMatrix::from_ket(pauli_ket(basis, outcome));
}

DensityMatrix pauli_state(std::string_view label) {
  if (label.size() != 2 || (label[1] != '0' && label[1] != '1')) {
    throw InvalidArgument("pauli_state: expected a label like 'x0', got '" + std::string(label) + "'");
  }
  return pauli_state(parse_basis(label.substr(0, 1)), label[1] - '0');
}

Povm pauli6_povm() {
  std::vector<Effect> effects;
  std::vector<std::string> labels;
  for (PauliBasis b : kPauliBases) {
    for (int outcome : {0, 1}) {
      const Vector v = pauli_ket(b, outcome);
      effects.emplace_back(hermitian_part(v * v.adjoint() / 3.0));
      labels.push_back(std::string(to_string(b)) + std::to_string(outcome));
    }
  }
  return Povm(std::move(effects), std::move(labels));
}

Povm projective_povm(PauliBasis basis) {
  std::vector<Effect> effects;
  std::vector<std::string> labels;
  for (int outcome : {0, 1}) {
    const Vector v = pauli_ket(basis, outcome);
    effects.emplace_back(hermitian_part(v * v.adjoint()));
    labels.push_back(std::string(to_string(basis)) + std::to_string(outcome));
  }
  return Povm(std::move(effects), std::move(labels));
}

Matrix pauli_matrix(Axis axis) {
  Matrix m(2, 2);
  switch (axis) {
    case Axis::x: m << 0.0, 1.0, 1.0, 0.0; break;
    case Axis::y: m << 0.0, -kI, kI, 0.0; break;
    case Axis::z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return m;
}

Matrix rotation(Axis axis, double theta) {
  return std::cos(theta / 2.0) * Matrix::Identity(2, 2) -
         kI * std::sin(theta / 2.0) * pauli_matrix(axis);
}

Matrix pauli_basis_rotation(PauliBasis basis) {
  switch (basis) {
    case PauliBasis::x: return rotation(Axis::y, -std::numbers::pi / 2.0);
    case PauliBasis::y: return rotation(Axis::x, std::numbers::pi / 2.0);
    case PauliBasis::z: break;
  }
  return Matrix::Identity(2, 2);
}

Matrix preparation_unitary(const Vector& ket) {
  const auto d = ket.size();
  if (d == 0 || ket.norm() == 0.0) throw InvalidArgument("preparation_unitary: zero vector");
  // Gram-Schmidt starting from ket, then the computational basis.
  Matrix u = Matrix::Zero(d, d);
  u.col(0) = ket / ket.norm();
  Eigen::Index filled = 1;
  for (Eigen::Index k = 0; k < d && filled < d; ++k) {
    Vector v = Vector::Unit(d, k);
    for (Eigen::Index j = 0; j < filled; ++j) v -= u.col(j).dot(v) * u.col(j);
    const double n = v.norm();
    if (n > 1e-8) u.col(filled++) = v / n;
  }
  return u;
}

// Helpers --------------------------------------------------------------------

Matrix hermitian_part(const Matrix& m) { return (m + m.adjoint()) / 2.0; }

Matrix psd_sqrt(const Matrix& m) {
  SelfAdjointEigenSolver<Matrix> es(hermitian_part(m));
  Eigen::VectorXd lambda = es.eigenvalues();
  if (lambda.minCoeff() < -tol::kSqrtClamp) {
    throw InvalidArgument("psd_sqrt: matrix is not positive semidefinite");
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  const Matrix& v = es.eigenvectors();
  return v * lambda.cast<Complex>().asDiagonal() * v.adjoint();
}

Matrix inverse_sqrt(const Matrix& m) {
  SelfAdjointEigenSolver<Matrix> es(hermitian_part(m));
  const Eigen::VectorXd lambda = es.eigenvalues();
  if (!(lambda.minCoeff() > 0.0)) throw NumericalError("inverse_sqrt: matrix is singular");
  const Eigen::VectorXd inv = lambda.cwiseSqrt().cwiseInverse();
  const Matrix& v = es.eigenvectors();
  return v * inv.cast<Complex>().asDiagonal() * v.adjoint();
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("trace_distance: dimension mismatch");
  }
  SelfAdjointEigenSolver<Matrix> es(hermitian_part(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

bool is_unitary(const Matrix& u, double tolerance) {
  if (u.rows() == 0 || u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())) <= tolerance;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace remqst

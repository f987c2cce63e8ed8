#pragma once

// Noise mechanisms for a single qubit: Kraus channels for depolarizing,
// relaxation, detuning and thermal excitation; the IQ-plane readout model;
// and the unitary preparation-error decomposition.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "remqst/quantum.hpp"
#include "remqst/sampler.hpp"
#include "remqst/serialization.hpp"

namespace remqst {

// Physical constants ---------------------------------------------------------

/// h / k_B in K s. With the qubit frequency f = omega01 / 2pi in Hz,
/// hbar omega01 / (k_B T) = kPlanckOverBoltzmann * f / T.
inline constexpr double kPlanckOverBoltzmann = 4.7992e-11;

// Channels -------------------------------------------------------------------

/// E(rho) = (p/2) 1 + (1 - p) rho.
KrausChannel depolarizing_channel(double p);

/// Amplitude damping with gamma = 1 - exp(-t/T1) followed by pure dephasing
/// chosen so that coherences decay as exp(-t/T2). Requires T2 <= 2 T1.
KrausChannel relaxation_channel(double pulse_duration, double t1, double t2);

/// Pure dephasing: coherences scale by `factor` in [0, 1].
KrausChannel dephasing_channel(double factor);

/// Phase accumulated by a drive detuned by `detuning_hz` over `duration_s`,
/// in cycles.
double detuning_phase_cycles(double detuning_hz, double duration_s);

/// R_Z(2 pi detuning duration).
Matrix detuning_error(double detuning_hz, double duration_s);

/// Excited-state population exp(-x) / (1 + exp(-x)), x = h f / (k_B T).
double thermal_population(double temperature_k, double qubit_freq_hz);

/// Full-thermalization generalized amplitude damping: every input is mapped
/// to diag(1 - p_e, p_e).
KrausChannel thermal_channel(double temperature_k, double qubit_freq_hz);

// Preparation errors -------------------------------------------------------

/// U_error = U_noisy U_ideal^dag, so that U_noisy = U_error U_ideal.
Matrix split_preparation_error(const Matrix& u_noisy, const Matrix& u_ideal);

struct ErrorBranch {
  double probability;
  Matrix error_unitary;
};

/// Kraus operators sqrt(p_i) U_error,i U_ideal.
KrausChannel preparation_channel(const Matrix& ideal_unitary,
                                 const std::vector<ErrorBranch>& error_ensemble);

// IQ readout -----------------------------------------------------------------

struct IqModel {
  Eigen::Vector2d centroid_0;
  Eigen::Vector2d centroid_1;
  double sigma = 1.0;

  /// Centroids at (-s/2, 0) and (+s/2, 0) in units of sigma.
  static IqModel from_separation(double separation_sigma, double sigma = 1.0);
  double separation_sigma() const { return (centroid_1 - centroid_0).norm() / sigma; }
};

/// Nearest-centroid rule; ties report 0.
class NearestCentroidClassifier {
 public:
  NearestCentroidClassifier(Eigen::Vector2d centroid_0, Eigen::Vector2d centroid_1);

  int classify(const Eigen::Vector2d& point) const;
  const Eigen::Vector2d& centroid(int bit) const { return bit == 0 ? c0_ : c1_; }

 private:
  Eigen::Vector2d c0_;
  Eigen::Vector2d c1_;
};

Eigen::Vector2d iq_generate(int state_bit, const IqModel& model, SeededRng& rng);

struct IqCalibration {
  NearestCentroidClassifier classifier;
  /// assignment(j, b) = probability of reporting j given true bit b.
  Eigen::Matrix2d assignment;
  /// Diagonal effects M_j = sum_b A(j|b) |b><b|.
  Povm povm;
};

/// Trains a nearest-centroid classifier on `n_calibration_shots` labeled shots
/// per bit and estimates the assignment matrix on as many fresh shots.
IqCalibration iq_effective_povm(const IqModel& model, std::uint64_t n_calibration_shots,
                                SeededRng& rng);

/// Assignment matrix of `classifier` under `model`'s Gaussian blobs,
/// evaluated in closed form.
Eigen::Matrix2d exact_assignment(const NearestCentroidClassifier& classifier, const IqModel& model);

/// Mixes each consecutive pair of effects (one measured basis) by the
/// classical assignment matrix: M'_j = sum_k A(j|k) M_k.
Povm apply_assignment(const Povm& paired_povm, const Eigen::Matrix2d& assignment);

// Noise specifications --------------------------------------------------------

enum class NoiseKind { depolarizing, amplitude_damping, dephasing, detuning, thermal, iq_readout, composite };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

/// Declarative description of a noise source, as stored in config files:
///   {"kind": "depolarizing", "params": {"p": 0.3}}
///   {"kind": "composite", "components": [ ... ]}
///
/// Parameters per kind (SI units):
///   depolarizing      p
///   amplitude_damping pulse_duration, T1 [, T2 (default 2 T1)]
///   dephasing         pulse_duration, T2
///   detuning          detuning_hz, duration
///   thermal           temperature_k, qubit_freq_hz
///   iq_readout        separation_sigma (may be "inf") [, calibration_shots]
struct NoiseSpec {
  NoiseKind kind = NoiseKind::composite;
  std::map<std::string, double> params;
  std::vector<NoiseSpec> components;

  /// Identity noise (empty composite).
  static NoiseSpec none() { return {}; }
  static NoiseSpec depolarizing(double p);
  static NoiseSpec iq_readout(double separation_sigma);

  /// Throws InvalidArgument on missing or unphysical parameters.
  void validate() const;
  double param(const std::string& name) const;
  double param_or(const std::string& name, double fallback) const;
  /// True for kinds that act on state preparation rather than readout.
  bool is_preparation() const;
  /// Copy with the kind's sweep parameter set to `value`.
  NoiseSpec with_strength(double value) const;
};

Json to_json(const NoiseSpec& spec);
NoiseSpec noise_spec_from_json(const Json& j);

/// Resolved noise acting on one qubit, split by where it acts.
struct NoiseModel {
  struct PreparationStep {
    KrausChannel channel;
    /// Acts on |0> before the ideal preparation unitary (thermal excitation)
    /// instead of on the prepared state.
    bool on_ground_state = false;
  };

  std::vector<PreparationStep> preparation;
  /// Quantum readout channels in the order the state traverses them.
  std::vector<KrausChannel> readout;
  Eigen::Matrix2d assignment = Eigen::Matrix2d::Identity();

  /// Noisy preparation of a nominally pure state.
  DensityMatrix prepare(const DensityMatrix& ideal_pure) const;
  /// Device POVM obtained by pulling `ideal` back through the readout
  /// channels and then applying the classical assignment per basis pair.
  Povm noisy_povm(const Povm& ideal) const;
  bool has_preparation_noise() const { return !preparation.empty(); }
};

/// Builds the model for `spec`. Preparation kinds act on prepared states
/// unless `readout_only`, in which case their channel is pulled back into the
/// readout instead. IQ readout trains its classifier with `rng`.
NoiseModel build_noise_model(const NoiseSpec& spec, bool readout_only, SeededRng& rng);

}  // namespace remqst

#pragma once

// Detector tomography: reconstruct a device POVM from counts recorded on
// known calibration states, and inspect the result for coherent errors.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "remqst/quantum.hpp"
#include "remqst/sampler.hpp"
#include "remqst/serialization.hpp"
#include "remqst/state_tomography.hpp"

namespace remqst {

struct CalibrationSet {
  std::vector<DensityMatrix> states;
  std::vector<std::string> labels;

  /// The six Pauli eigenstates x0, x1, y0, y1, z0, z1.
  static CalibrationSet pauli();
  /// Pauli eigenstates named by label ("x0", "z1", ...).
  static CalibrationSet from_labels(const std::vector<std::string>& labels);

  int dim() const { return states.front().dim(); }
  /// Rank of the Hilbert-Schmidt Gram matrix of the states.
  int gram_rank() const;
  bool is_informationally_complete() const { return gram_rank() == dim() * dim(); }
};

/// counts(i, s): shots on calibration state s that reported outcome i.
struct QdtData {
  Eigen::MatrixXd counts;
  std::vector<std::string> outcome_labels;

  Eigen::VectorXd totals() const { return counts.colwise().sum().transpose(); }
  void validate() const;
};

struct QdtOptions {
  int max_iter = 10000;
  /// Stop when no effect entry changes by more than this.
  double tol = 1e-9;
  /// Step size in (0, 1]; 1 is the full update.
  double dilution = 1.0;
  bool record_trace = false;
};

struct QdtResult {
  Povm povm;
  int iterations = 0;
  bool converged = false;
  double final_change = 0.0;
  std::vector<double> log_likelihood_trace;
  /// Human-readable reason when !converged.
  std::string diagnostic;
};

/// sum_{i,s} n_is ln Tr(rho_s M_i), 0 ln 0 = 0, probabilities floored at 1e-300.
double qdt_log_likelihood(const Povm& povm, const QdtData& data, const CalibrationSet& calibration);

/// Maximum-likelihood POVM via the iteration
///   R_i = sum_s (n_is / p_is) rho_s,  L = (sum_i R_i M_i R_i)^(1/2),
///   M_i <- L^-1 R_i M_i R_i L^-1,
/// started from M_i = 1 / n_outcomes. Positivity and completeness hold at
/// every step; steps that would lower the likelihood are diluted.
QdtResult qdt_mle(const QdtData& data, const CalibrationSet& calibration, const QdtOptions& options = {});

// Pauli-6 calibration layout ------------------------------------------------------

/// Counts per (calibration state, measured basis), stored as
///   {"states": [...], "bases": [...],
///    "counts": {state -> {basis -> [n_outcome0, n_outcome1]}}}
struct PauliQdtRecord {
  std::vector<std::string> states;
  std::vector<PauliBasis> bases;
  /// counts[s][b] for states[s] measured in bases[b].
  std::vector<std::vector<std::array<std::uint64_t, 2>>> counts;

  /// 2 x S data for one measured basis.
  QdtData basis_data(PauliBasis basis) const;
  /// 2B x S data with outcomes x0 x1 y0 y1 ... (one column per state).
  QdtData joint_data() const;
  void validate() const;
};

Json to_json(const PauliQdtRecord& record);
PauliQdtRecord pauli_qdt_record_from_json(const Json& j);

/// Simulates `shots` per (state, basis) on the paired device POVM.
/// `prepared[s]` is the (possibly noisy) state actually prepared for label s.
PauliQdtRecord simulate_pauli_qdt(const std::vector<std::string>& state_labels,
                                  const std::vector<DensityMatrix>& prepared, const Povm& device,
                                  std::uint64_t shots, SeededRng& rng);

enum class QdtLayout {
  /// One 2-outcome reconstruction per basis, assembled with 1/3 weights.
  per_basis,
  /// A single 6-outcome reconstruction over all bases.
  joint,
};

struct PauliQdtResult {
  Povm povm;
  std::vector<QdtResult> reconstructions;
  bool converged() const;
};

/// Reconstructs the Pauli-6 detector. Requires x, y and z bases and an
/// informationally complete set of calibration states.
PauliQdtResult reconstruct_pauli_detector(const PauliQdtRecord& record, const QdtOptions& options = {},
                                          QdtLayout layout = QdtLayout::per_basis);

/// Same reconstruction fed with the exact outcome probabilities of `device`
/// on `prepared[s]` in place of counts (the infinite-budget limit).
PauliQdtResult reconstruct_pauli_detector_exact(const std::vector<std::string>& state_labels,
                                                const std::vector<DensityMatrix>& prepared, const Povm& device,
                                                const QdtOptions& options = {},
                                                QdtLayout layout = QdtLayout::per_basis);

// Coherent-error analysis ----------------------------------------------------------

struct EffectCoherence {
  std::string label;
  Matrix rotated;
  double max_off_diagonal = 0.0;
  bool classical = true;
};

struct CoherenceReport {
  double threshold = 0.0;
  std::vector<EffectCoherence> effects;
  bool all_classical() const;
};

/// Rotation taking each basis to z: x -> R_{X->Z}, y -> R_{Y->Z}, z -> 1.
std::map<std::string, Matrix> pauli_basis_rotations();

/// k / sqrt(shots).
double shot_noise_threshold(std::uint64_t shots, double k = 3.0);

/// Rotates each effect into its ideal eigenbasis (basis = label minus its
/// trailing outcome digit) and flags off-diagonals above `threshold`.
CoherenceReport coherent_error_report(const Povm& povm, const std::map<std::string, Matrix>& basis_rotations,
                                      double threshold);

Json to_json(const CoherenceReport& report);

// Drift ------------------------------------------------------------------------------

struct DriftReport {
  bool pass = true;
  std::vector<double> infidelities;
};

/// Reconstructs every (pure) probe state from `fresh_counts` with `povm` and
/// fails if any infidelity reaches `epsilon`.
DriftReport drift_check(const Povm& povm, const CalibrationSet& probe_states, const QdtData& fresh_counts,
                        double epsilon);

}  // namespace remqst

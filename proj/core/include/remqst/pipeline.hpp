#pragma once

// End-to-end readout error mitigation: inject noise, calibrate the detector,
// then reconstruct Haar-random targets with and without the calibration.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "remqst/detector_tomography.hpp"
#include "remqst/noise.hpp"
#include "remqst/state_tomography.hpp"

namespace remqst {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int n_targets = 25;
  std::uint64_t qdt_shots_per_state_per_basis = 80000;
  std::uint64_t qst_shots_per_basis = 80000;
  NoiseSpec noise;
  /// Confine preparation-type noise to the readout.
  bool readout_only = false;
  Estimator estimator = Estimator::mle;
  /// Total-shot checkpoints; empty means 30 log-spaced points from 10 shots.
  std::vector<std::uint64_t> checkpoints;
  QdtLayout qdt_layout = QdtLayout::per_basis;
  /// Calibrate from exact probabilities instead of sampled counts.
  bool exact_calibration = false;
  /// Coherence threshold is k / sqrt(qdt shots).
  double coherence_k = 3.0;
  std::filesystem::path output_dir = "remqst_out";

  /// 10 targets, 10^4 shots per basis for both tomographies.
  static ExperimentConfig desk();
  /// 25 targets, 80000 shots per state and basis.
  static ExperimentConfig paper();

  /// QDT budget equal to half the shots of one QST run, spread over the
  /// 6 x 3 calibration settings.
  ExperimentConfig with_half_qst_calibration() const;

  void validate() const;
  std::vector<std::uint64_t> resolved_checkpoints() const;
  EstimatorOptions estimator_options() const;
};

Json to_json(const ExperimentConfig& config);
/// Fields absent from `j` keep their value in `base`. Unknown or mistyped
/// fields raise SchemaError.
ExperimentConfig experiment_config_from_json(const Json& j, const ExperimentConfig& base = {});

/// FNV-1a over the canonical JSON form (output_dir excluded).
std::uint64_t config_hash(const ExperimentConfig& config);

struct TargetResult {
  std::string label;
  std::optional<DensityMatrix> target;
  QstData data;
  CurveRun mitigated;
  CurveRun unmitigated;

  double saturation_mitigated() const { return mitigated.infidelities.back(); }
  double saturation_unmitigated() const { return unmitigated.infidelities.back(); }
};

struct ProtocolResult {
  ExperimentConfig config;
  /// Simulated runs only.
  std::optional<Povm> true_povm;
  /// Empty for exact calibration.
  std::optional<PauliQdtRecord> qdt_record;
  PauliQdtResult qdt;
  CoherenceReport coherence;
  std::vector<std::uint64_t> checkpoints;
  std::vector<TargetResult> targets;
  /// Aggregates over targets with a known state.
  std::optional<InfidelityCurve> mitigated_curve;
  std::optional<InfidelityCurve> unmitigated_curve;

  double mean_saturation_mitigated() const { return mitigated_curve->saturation; }
  double mean_saturation_unmitigated() const { return unmitigated_curve->saturation; }
  /// Checkpoint reconstructions that hit the MLE iteration cap.
  int unconverged_reconstructions() const;
  /// QDT non-convergence or stalled state reconstructions.
  bool numerical_failure() const;
  /// Empty when every estimator converged; otherwise a readable summary.
  std::string convergence_diagnostic() const;
};

/// Haar targets of a run; they depend only on the seed.
std::vector<DensityMatrix> experiment_targets(std::uint64_t seed, int n_targets);

/// Failures are rethrown with the stage name ("noise", "qdt", "qst", ...)
/// prefixed to the message, keeping the exception type.
ProtocolResult run_protocol(const ExperimentConfig& config);

/// Shots per (calibration state, basis) for a total QDT budget.
std::uint64_t shots_per_setting(std::uint64_t total_budget);

/// Template spec of `kind` with typical fixed parameters, used when the
/// config's noise is of another kind.
NoiseSpec default_noise_spec(NoiseKind kind);
/// The swept parameter of a single-kind spec (NaN for composites).
double noise_strength(const NoiseSpec& spec);

struct SweepEntry {
  double strength = 0.0;
  ProtocolResult run;
};

struct SweepResult {
  NoiseKind kind = NoiseKind::depolarizing;
  std::vector<SweepEntry> entries;
};

/// run_protocol per strength with a shared target set.
SweepResult noise_sweep(NoiseKind kind, const std::vector<double>& strengths, const ExperimentConfig& config);

struct CalibrationPoint {
  /// Total QDT shots; nullopt for exact calibration.
  std::optional<std::uint64_t> budget;
  std::uint64_t shots_per_setting = 0;
  std::vector<double> mitigated;
  double mean_mitigated = 0.0;
};

struct CalibrationSweepResult {
  std::vector<double> unmitigated;
  double mean_unmitigated = 0.0;
  std::vector<CalibrationPoint> points;
};

/// Fixed noise and QST data; only the QDT budget varies. Budgets count all
/// calibration shots and are spread evenly over the 6 x 3 settings; nullopt
/// calibrates from exact probabilities.
CalibrationSweepResult calibration_sweep(const std::vector<std::optional<std::uint64_t>>& budgets,
                                         const ExperimentConfig& config);

/// QDT and dual QST on recorded counts. Curves are produced for data sets
/// carrying a target_state.
ProtocolResult ingest_experiment(const PauliQdtRecord& qdt, const std::vector<QstData>& qst,
                                 const ExperimentConfig& config);

// Files ---------------------------------------------------------------------------

/// Parses a JSON file; syntax errors become SchemaError with line and column.
Json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Curves as "strength,series,target,shots,infidelity" rows.
std::string curves_csv(const std::vector<SweepEntry>& entries);
/// Means as "strength,series,shots,mean_infidelity,std_infidelity" rows.
std::string mean_curves_csv(const std::vector<SweepEntry>& entries);
/// "strength,target,mitigated,unmitigated" rows.
std::string saturations_csv(const std::vector<SweepEntry>& entries);
std::string calibration_csv(const CalibrationSweepResult& result);

Json run_manifest(const std::string& command, const ExperimentConfig& config,
                  const std::vector<std::string>& outputs);

/// Writes curves.csv, mean_curves.csv, saturations.csv, povm_estm.json,
/// coherence_report.json, qdt_counts.json, qst_counts.json and
/// manifest.json into config.output_dir. Returns the written file names.
std::vector<std::string> write_protocol_outputs(const ProtocolResult& result, const std::string& command);
std::vector<std::string> write_sweep_outputs(const SweepResult& result, const ExperimentConfig& config,
                                             const std::string& command);
std::vector<std::string> write_calibration_outputs(const CalibrationSweepResult& result,
                                                   const ExperimentConfig& config, const std::string& command);

}  // namespace remqst

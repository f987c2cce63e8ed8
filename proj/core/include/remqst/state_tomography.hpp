#pragma once

// Likelihood-based state estimation from (possibly noisy) POVM counts.
//
// The same estimators serve mitigated and unmitigated reconstruction: only the
// POVM passed in differs (the ideal one, or the one reconstructed by detector
// tomography).

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "remqst/quantum.hpp"
#include "remqst/sampler.hpp"
#include "remqst/serialization.hpp"

namespace remqst {

// Data -------------------------------------------------------------------------

/// Outcome counts of a tomography run, stored cumulatively at increasing
/// checkpoints (total shots over all outcomes). Outcomes come in consecutive
/// pairs, one pair per measured basis, e.g. x0 x1 y0 y1 z0 z1.
struct QstData {
  std::string target_label;
  std::optional<DensityMatrix> target_state;
  std::vector<std::string> outcome_labels;
  std::vector<std::uint64_t> checkpoints;
  /// cumulative[k][i]: count of outcome i after checkpoints[k] shots.
  std::vector<std::vector<std::uint64_t>> cumulative;

  /// Throws InvalidArgument if prefixes are inconsistent.
  void validate() const;
  std::size_t num_checkpoints() const { return checkpoints.size(); }
  std::vector<double> counts_at(std::size_t k) const;
  std::vector<double> final_counts() const { return counts_at(checkpoints.size() - 1); }
  /// Data truncated after checkpoint `k`.
  QstData prefix(std::size_t k) const;
  std::vector<std::string> bases() const;
};

/// `count` log-spaced shot numbers from `first` to `last`, rounded and
/// deduplicated; always ends at `last`.
std::vector<std::uint64_t> log_spaced_checkpoints(std::uint64_t first, std::uint64_t last,
                                                  std::size_t count = 30);

/// Simulates a run measuring each basis pair of `device` round-robin,
/// `shots_per_basis` times each. Checkpoints are total shot numbers.
QstData simulate_qst_data(const DensityMatrix& prepared, const Povm& device,
                          std::uint64_t shots_per_basis, const std::vector<std::uint64_t>& checkpoints,
                          SeededRng& rng);

/// {"target_label", "bases", "counts": {basis -> [[n0, n1] per checkpoint]}}
/// plus "target_state" when known.
Json to_json(const QstData& data);
QstData qst_data_from_json(const Json& j);

// Likelihood -----------------------------------------------------------------

/// sum_i n_i ln Tr(rho M_i) with probabilities floored at 1e-300 and
/// 0 ln 0 = 0.
double log_likelihood(const DensityMatrix& state, const Povm& povm, std::span<const double> counts);

// Maximum likelihood ---------------------------------------------------------

struct MleOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  /// Step size in (0, 1]; 1 is the undiluted R rho R update.
  double dilution = 1.0;
  /// Keep the per-iteration log-likelihood in MleResult::log_likelihood_trace.
  bool record_trace = false;
};

struct MleResult {
  DensityMatrix state;
  int iterations = 0;
  bool converged = false;
  /// Frobenius norm of R rho - rho at the final iterate (zero at a stationary point).
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;
  double final_dilution = 1.0;
  bool informationally_complete = true;
  std::vector<double> log_likelihood_trace;
};

/// Iterates rho <- N[R rho R], R = sum_i (f_i / Tr(rho M_i)) M_i, from the
/// maximally mixed state. The step is diluted whenever it would lower the
/// likelihood, so the likelihood never decreases.
MleResult qst_mle(const Povm& povm, std::span<const double> counts, const MleOptions& options = {});

// Bayesian mean ------------------------------------------------------------------

struct BmeOptions {
  int n_particles = 1000;
  double ess_threshold = 0.5;
  /// Largest number of shots absorbed per weight update.
  double batch_shots = 100.0;
  int rejuvenation_steps = 10;
  /// Probability that an MH move is a fresh Hilbert-Schmidt draw.
  double fresh_draw_probability = 0.02;
};

/// Weighted sample of the posterior. Each particle stores its Ginibre factor
/// A (rho = A A^dag / Tr) and the log-probabilities of each outcome.
class ParticleBank {
 public:
  std::size_t size() const { return factors_.size(); }
  const std::vector<Matrix>& factors() const { return factors_; }
  const std::vector<Matrix>& states() const { return states_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  std::vector<double> normalized_weights() const;
  double effective_sample_size() const;
  DensityMatrix mean() const;

 private:
  friend class SmcEstimator;
  std::vector<Matrix> factors_;
  std::vector<Matrix> states_;
  std::vector<std::vector<double>> log_probs_;
  std::vector<double> log_weights_;
};

struct BmeResult {
  DensityMatrix state;
  ParticleBank bank;
  int resample_count = 0;
  /// Updates after which the ESS had dropped below 2 before resampling.
  int degenerate_updates = 0;
};

/// Posterior mean under the Hilbert-Schmidt prior via sequential Monte Carlo.
BmeResult qst_bme(const Povm& povm, std::span<const double> counts, const BmeOptions& options,
                  SeededRng& rng);

/// Runs one SMC pass over `data` and returns the posterior mean after each
/// checkpoint. The estimate at checkpoint k depends only on data.prefix(k)
/// and the rng state, so rerunning on a prefix reproduces it exactly.
std::vector<DensityMatrix> qst_bme_checkpoints(const Povm& povm, const QstData& data,
                                               const BmeOptions& options, SeededRng& rng);

// Infidelity curves --------------------------------------------------------------

enum class Estimator { mle, bme };
std::string to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

struct EstimatorOptions {
  Estimator kind = Estimator::mle;
  MleOptions mle;
  BmeOptions bme;
};

struct CurvePoint {
  std::uint64_t shots = 0;
  double mean_infidelity = 0.0;
  double std_infidelity = 0.0;
};

struct PowerLawFit {
  double alpha = 0.0;
  double amplitude = 0.0;
  /// Root-mean-square residual of the log-log fit.
  double residual = 0.0;
};

struct InfidelityCurve {
  std::vector<CurvePoint> points;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double amplitude = std::numeric_limits<double>::quiet_NaN();
  double saturation = std::numeric_limits<double>::quiet_NaN();

  /// Mean and population standard deviation over targets, per checkpoint.
  /// `per_target[t][k]` is target t's infidelity at `shots[k]`.
  static InfidelityCurve aggregate(const std::vector<std::uint64_t>& shots,
                                   const std::vector<std::vector<double>>& per_target);
};

/// Least-squares line through (ln N, ln I) for points with
/// min_shots <= N <= max_shots; alpha is the negated slope.
PowerLawFit fit_power_law(const InfidelityCurve& curve, std::uint64_t min_shots, std::uint64_t max_shots);

struct CurveRun {
  std::vector<DensityMatrix> estimates;
  std::vector<double> infidelities;
  /// Checkpoints where the MLE hit its iteration cap.
  int unconverged = 0;
  /// Of those, the ones still far from a stationary point
  /// (||R rho - rho|| > kStationaryGradient).
  int stalled = 0;
};

/// Gradient norm below which an MLE that ran out of iterations is still
/// treated as having reached the optimum; boundary optima converge slowly.
inline constexpr double kStationaryGradient = 1e-6;

/// Reconstructs from every checkpoint prefix of `data`; infidelities stay empty.
CurveRun estimate_checkpoints(const Povm& povm, const QstData& data, const EstimatorOptions& options,
                              SeededRng& rng);

/// estimate_checkpoints plus infidelity_pure(target, estimate) per checkpoint.
CurveRun reconstruct_checkpoints(const DensityMatrix& target, const Povm& povm, const QstData& data,
                                 const EstimatorOptions& options, SeededRng& rng);

/// Single-target curve; std is zero. Fits the power law over the full range
/// when at least three points are positive.
InfidelityCurve infidelity_curve(const DensityMatrix& target, const Povm& povm, const QstData& data,
                                 const EstimatorOptions& options, SeededRng& rng);

/// "shots,mean_infidelity,std_infidelity" with an LF-terminated header.
void write_curve_csv(std::ostream& out, const InfidelityCurve& curve);

/// Shortest round-trip decimal representation, '.' separator.
std::string format_number(double value);

}  // namespace remqst

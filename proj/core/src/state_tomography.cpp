#include "remqst/state_tomography.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "remqst/errors.hpp"
#include "remqst/tolerances.hpp"

namespace remqst {
namespace {

double trace_product(const Matrix& a, const Matrix& b) {
  // Re Tr(a b) for Hermitian a, b without forming the product.
  return (a.transpose().cwiseProduct(b)).sum().real();
}

std::vector<Matrix> effect_matrices(const Povm& povm) {
  std::vector<Matrix> out;
  out.reserve(povm.size());
  for (const auto& e : povm.effects()) out.push_back(e.matrix());
  return out;
}

bool spans_operator_space(const std::vector<Matrix>& ops, int dim) {
  Eigen::MatrixXcd vecs(dim * dim, static_cast<Eigen::Index>(ops.size()));
  for (std::size_t i = 0; i < ops.size(); ++i) {
    vecs.col(static_cast<Eigen::Index>(i)) = ops[i].reshaped();
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(vecs);
  lu.setThreshold(1e-10);
  return lu.rank() == dim * dim;
}

void require_counts(const Povm& povm, std::span<const double> counts, const char* what) {
  if (counts.size() != povm.size()) {
    throw InvalidArgument(std::string(what) + ": one count per POVM outcome required");
  }
  for (double n : counts) {
    if (!(n >= 0.0) || !std::isfinite(n)) throw InvalidArgument(std::string(what) + ": counts must be non-negative");
  }
}

// Mean log-likelihood per shot, sum_i f_i ln p_i.
double mean_log_likelihood(const Matrix& rho, const std::vector<Matrix>& effects, const std::vector<double>& f) {
  double ll = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    if (f[i] == 0.0) continue;
    ll += f[i] * std::log(std::max(trace_product(rho, effects[i]), tol::kLogFloor));
  }
  return ll;
}

}  // namespace

// QstData ----------------------------------------------------------------------

void QstData::validate() const {
  if (outcome_labels.empty() || outcome_labels.size() % 2 != 0) {
    throw InvalidArgument("QstData: outcomes must come in basis pairs");
  }
  if (checkpoints.empty()) throw InvalidArgument("QstData: no checkpoints");
  if (cumulative.size() != checkpoints.size()) throw InvalidArgument("QstData: one count row per checkpoint");
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const auto& row = cumulative[k];
    if (row.size() != outcome_labels.size()) throw InvalidArgument("QstData: row size mismatch");
    const std::uint64_t total = std::accumulate(row.begin(), row.end(), std::uint64_t{0});
    if (total != checkpoints[k]) throw InvalidArgument("QstData: checkpoint total disagrees with counts");
    if (k > 0) {
      if (checkpoints[k] <= checkpoints[k - 1]) throw InvalidArgument("QstData: checkpoints must increase");
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] < cumulative[k - 1][i]) throw InvalidArgument("QstData: cumulative counts decrease");
      }
    }
  }
  if (target_state && target_state->dim() != 2) {
    // Outcome pairs are per-basis qubit measurements.
    throw InvalidArgument("QstData: target state must be a qubit");
  }
}

std::vector<double> QstData::counts_at(std::size_t k) const {
  if (k >= cumulative.size()) throw InvalidArgument("QstData: checkpoint index out of range");
  return {cumulative[k].begin(), cumulative[k].end()};
}

QstData QstData::prefix(std::size_t k) const {
  if (k >= checkpoints.size()) throw InvalidArgument("QstData: checkpoint index out of range");
  QstData out = *this;
  out.checkpoints.resize(k + 1);
  out.cumulative.resize(k + 1);
  return out;
}

std::vector<std::string> QstData::bases() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < outcome_labels.size(); i += 2) {
    const std::string& l = outcome_labels[i];
    out.push_back(l.size() > 1 ? l.substr(0, l.size() - 1) : l);
  }
  return out;
}

std::vector<std::uint64_t> log_spaced_checkpoints(std::uint64_t first, std::uint64_t last, std::size_t count) {
  if (first == 0 || last < first) throw InvalidArgument("log_spaced_checkpoints: need 0 < first <= last");
  std::vector<std::uint64_t> out;
  if (count < 2 || first == last) return {last};
  const double lo = std::log(static_cast<double>(first));
  const double hi = std::log(static_cast<double>(last));
  for (std::size_t k = 0; k < count; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    auto n = static_cast<std::uint64_t>(std::llround(std::exp(x)));
    n = std::clamp(n, first, last);
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  if (out.back() != last) out.push_back(last);
  return out;
}

QstData simulate_qst_data(const DensityMatrix& prepared, const Povm& device, std::uint64_t shots_per_basis,
                          const std::vector<std::uint64_t>& checkpoints, SeededRng& rng) {
  if (device.size() % 2 != 0) throw InvalidArgument("simulate_qst_data: device outcomes must come in pairs");
  const std::size_t n_bases = device.size() / 2;
  const std::uint64_t total = shots_per_basis * n_bases;
  if (checkpoints.empty()) throw InvalidArgument("simulate_qst_data: no checkpoints");
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] == 0 || checkpoints[k] > total || (k > 0 && checkpoints[k] <= checkpoints[k - 1])) {
      throw InvalidArgument("simulate_qst_data: checkpoints must increase within (0, total shots]");
    }
  }

  const std::vector<double> p = born_probabilities(prepared, device);
  std::vector<std::array<double, 2>> pair_probs(n_bases);
  for (std::size_t b = 0; b < n_bases; ++b) {
    const double mass = p[2 * b] + p[2 * b + 1];
    if (!(mass > 0.0)) throw InvalidArgument("simulate_qst_data: basis pair with zero probability");
    pair_probs[b] = {p[2 * b] / mass, p[2 * b + 1] / mass};
  }

  QstData data;
  data.outcome_labels = device.labels();
  data.checkpoints = checkpoints;
  std::vector<std::uint64_t> running(device.size(), 0);
  std::vector<std::uint64_t> basis_shots(n_bases, 0);
  for (std::uint64_t n_total : checkpoints) {
    for (std::size_t b = 0; b < n_bases; ++b) {
      // Round-robin: shot k goes to basis k mod n_bases.
      const std::uint64_t target = (n_total + n_bases - 1 - b) / n_bases;
      const std::uint64_t increment = target - basis_shots[b];
      if (increment > 0) {
        const CountRecord rec = sample_counts(pair_probs[b], increment, rng);
        running[2 * b] += rec.counts[0];
        running[2 * b + 1] += rec.counts[1];
        basis_shots[b] = target;
      }
    }
    data.cumulative.push_back(running);
  }
  return data;
}

Json to_json(const QstData& data) {
  Json j;
  j["target_label"] = data.target_label;
  const auto bases = data.bases();
  j["bases"] = bases;
  Json counts = Json::object();
  for (std::size_t b = 0; b < bases.size(); ++b) {
    Json rows = Json::array();
    for (const auto& row : data.cumulative) rows.push_back({row[2 * b], row[2 * b + 1]});
    counts[bases[b]] = std::move(rows);
  }
  j["counts"] = std::move(counts);
  if (data.target_state) j["target_state"] = to_json(*data.target_state);
  return j;
}

QstData qst_data_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("QST data: expected a JSON object");
  if (!j.contains("bases") || !j["bases"].is_array() || j["bases"].empty()) {
    throw SchemaError("QST data: missing non-empty array 'bases'");
  }
  if (!j.contains("counts") || !j["counts"].is_object()) throw SchemaError("QST data: missing object 'counts'");
  QstData data;
  if (j.contains("target_label")) {
    if (!j["target_label"].is_string()) throw SchemaError("QST data: 'target_label' must be a string");
    data.target_label = j["target_label"].get<std::string>();
  }
  std::size_t n_checkpoints = 0;
  std::vector<std::vector<std::array<std::uint64_t, 2>>> per_basis;
  for (const auto& b : j["bases"]) {
    if (!b.is_string()) throw SchemaError("QST data: basis labels must be strings");
    const auto basis = b.get<std::string>();
    if (!j["counts"].contains(basis)) throw SchemaError("QST data: missing counts for basis '" + basis + "'");
    const Json& rows = j["counts"][basis];
    if (!rows.is_array() || rows.empty()) {
      throw SchemaError("QST data: counts for basis '" + basis + "' must be a non-empty array");
    }
    if (per_basis.empty()) n_checkpoints = rows.size();
    if (rows.size() != n_checkpoints) {
      throw SchemaError("QST data: basis '" + basis + "' has a different number of checkpoints");
    }
    std::vector<std::array<std::uint64_t, 2>> parsed;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Json& r = rows[k];
      if (!r.is_array() || r.size() != 2 || !r[0].is_number_unsigned() || !r[1].is_number_unsigned()) {
        throw SchemaError("QST data: basis '" + basis + "' checkpoint " + std::to_string(k) +
                          " must be a pair of non-negative integers");
      }
      parsed.push_back({r[0].get<std::uint64_t>(), r[1].get<std::uint64_t>()});
    }
    per_basis.push_back(std::move(parsed));
    data.outcome_labels.push_back(basis + "0");
    data.outcome_labels.push_back(basis + "1");
  }
  for (std::size_t k = 0; k < n_checkpoints; ++k) {
    std::vector<std::uint64_t> row;
    std::uint64_t total = 0;
    for (const auto& pb : per_basis) {
      row.push_back(pb[k][0]);
      row.push_back(pb[k][1]);
      total += pb[k][0] + pb[k][1];
    }
    data.checkpoints.push_back(total);
    data.cumulative.push_back(std::move(row));
  }
  if (j.contains("target_state")) data.target_state = density_matrix_from_json(j["target_state"]);
  try {
    data.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("QST data: ") + e.what());
  }
  return data;
}

// Likelihood -------------------------------------------------------------------

double log_likelihood(const DensityMatrix& state, const Povm& povm, std::span<const double> counts) {
  require_counts(povm, counts, "log_likelihood");
  if (state.dim() != povm.dim()) throw InvalidArgument("log_likelihood: dimension mismatch");
  double ll = 0.0;
  for (std::size_t i = 0; i < povm.size(); ++i) {
    if (counts[i] == 0.0) continue;
    const double p = trace_product(state.matrix(), povm.effect(i).matrix());
    ll += counts[i] * std::log(std::max(p, tol::kLogFloor));
  }
  return ll;
}

// MLE ----------------------------------------------------------------------------

MleResult qst_mle(const Povm& povm, std::span<const double> counts, const MleOptions& options) {
  require_counts(povm, counts, "qst_mle");
  if (!(options.dilution > 0.0 && options.dilution <= 1.0)) throw InvalidArgument("qst_mle: dilution must be in (0, 1]");
  const double n_total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(n_total > 0.0)) throw InvalidArgument("qst_mle: no data");

  const int d = povm.dim();
  const std::vector<Matrix> effects = effect_matrices(povm);
  std::vector<double> f(counts.begin(), counts.end());
  for (double& v : f) v /= n_total;

  const Matrix identity = Matrix::Identity(d, d);
  Matrix rho = identity / static_cast<double>(d);
  Matrix r(d, d), step(d, d), tmp(d, d), next(d, d);
  double ll = mean_log_likelihood(rho, effects, f);
  double dilution = options.dilution;

  MleResult result{DensityMatrix::maximally_mixed(d)};
  result.informationally_complete = spans_operator_space(effects, d);
  if (options.record_trace) result.log_likelihood_trace.push_back(ll * n_total);

  auto build_r = [&](const Matrix& state) {
    r.setZero();
    for (std::size_t i = 0; i < effects.size(); ++i) {
      if (f[i] == 0.0) continue;
      const double p = std::max(trace_product(state, effects[i]), tol::kRatioFloor);
      r.noalias() += (f[i] / p) * effects[i];
    }
  };

  int it = 0;
  for (; it < options.max_iter; ++it) {
    build_r(rho);
    bool accepted = false;
    double ll_next = ll;
    for (int attempt = 0; attempt < 60; ++attempt) {
      step = (1.0 - dilution) * identity + dilution * r;
      tmp.noalias() = step * rho;
      next.noalias() = tmp * step.adjoint();
      next = hermitian_part(next);
      next /= next.trace().real();
      ll_next = mean_log_likelihood(next, effects, f);
      if (ll_next >= ll - 1e-15 * std::max(1.0, std::abs(ll))) {
        accepted = true;
        break;
      }
      dilution = std::min(dilution, 0.5) * (attempt == 0 ? 1.0 : 0.5);
    }
    if (!accepted) {
      // No ascent direction left at machine precision: stationary point.
      result.converged = true;
      break;
    }
    const double change = max_abs(next - rho);
    rho.swap(next);
    ll = std::max(ll, ll_next);
    if (options.record_trace) result.log_likelihood_trace.push_back(ll_next * n_total);
    if (change < options.tol) {
      result.converged = true;
      ++it;
      break;
    }
  }

  build_r(rho);
  result.iterations = it;
  result.gradient_norm = (r * rho - rho).norm();
  result.state = DensityMatrix::from_estimate(rho);
  result.log_likelihood = log_likelihood(result.state, povm, counts);
  result.final_dilution = dilution;
  return result;
}

// BME ----------------------------------------------------------------------------

std::vector<double> ParticleBank::normalized_weights() const {
  std::vector<double> w(log_weights_.size(), 0.0);
  if (w.empty()) return w;
  const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
  if (!std::isfinite(top)) throw NumericalError("ParticleBank: all particle weights vanished");
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::exp(log_weights_[k] - top);
    total += w[k];
  }
  for (double& v : w) v /= total;
  return w;
}

double ParticleBank::effective_sample_size() const {
  const auto w = normalized_weights();
  double sq = 0.0;
  for (double v : w) sq += v * v;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

DensityMatrix ParticleBank::mean() const {
  if (states_.empty()) throw NumericalError("ParticleBank: empty bank");
  const auto w = normalized_weights();
  Matrix m = Matrix::Zero(states_.front().rows(), states_.front().cols());
  for (std::size_t k = 0; k < states_.size(); ++k) m.noalias() += w[k] * states_[k];
  return DensityMatrix::from_estimate(m);
}

class SmcEstimator {
 public:
  SmcEstimator(const Povm& povm, const BmeOptions& options, SeededRng& rng)
      : effects_(effect_matrices(povm)), options_(options), rng_(rng), dim_(povm.dim()),
        processed_(povm.size(), 0.0) {
    if (options.n_particles < 100) throw InvalidArgument("qst_bme: need at least 100 particles");
    if (!(options.ess_threshold > 0.0 && options.ess_threshold <= 1.0)) {
      throw InvalidArgument("qst_bme: ess_threshold must be in (0, 1]");
    }
    if (!(options.batch_shots > 0.0)) throw InvalidArgument("qst_bme: batch_shots must be positive");
    const auto n = static_cast<std::size_t>(options.n_particles);
    bank_.factors_.reserve(n);
    bank_.states_.reserve(n);
    bank_.log_probs_.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      Matrix a = ginibre_matrix(dim_, rng_);
      Matrix rho = factor_to_state(a);
      bank_.log_probs_.push_back(log_probs(rho));
      bank_.factors_.push_back(std::move(a));
      bank_.states_.push_back(std::move(rho));
    }
    bank_.log_weights_.assign(n, 0.0);
  }

  /// Absorbs `increment` counts, split into batches of at most batch_shots.
  void absorb(std::span<const double> increment) {
    const double shots = std::accumulate(increment.begin(), increment.end(), 0.0);
    if (shots <= 0.0) return;
    const auto n_batches = static_cast<std::size_t>(std::ceil(shots / options_.batch_shots));
    std::vector<double> batch(increment.begin(), increment.end());
    for (double& v : batch) v /= static_cast<double>(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) update(batch);
  }

  ParticleBank& bank() { return bank_; }
  int resample_count() const { return resamples_; }
  int degenerate_updates() const { return degenerate_; }

 private:
  static Matrix factor_to_state(const Matrix& a) {
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return hermitian_part(rho);
  }

  std::vector<double> log_probs(const Matrix& rho) const {
    std::vector<double> out(effects_.size());
    for (std::size_t i = 0; i < effects_.size(); ++i) {
      out[i] = std::log(std::max(trace_product(rho, effects_[i]), tol::kLogFloor));
    }
    return out;
  }

  double data_log_likelihood(const std::vector<double>& lp) const {
    double ll = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      if (processed_[i] > 0.0) ll += processed_[i] * lp[i];
    }
    return ll;
  }

  void update(const std::vector<double>& batch) {
    for (std::size_t i = 0; i < batch.size(); ++i) processed_[i] += batch[i];
    for (std::size_t k = 0; k < bank_.size(); ++k) {
      double dl = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i] > 0.0) dl += batch[i] * bank_.log_probs_[k][i];
      }
      bank_.log_weights_[k] += dl;
    }
    const double ess = bank_.effective_sample_size();
    if (ess < options_.ess_threshold * static_cast<double>(bank_.size())) {
      if (ess < 2.0) ++degenerate_;
      resample();
      rejuvenate();
    }
  }

  void resample() {
    const auto w = bank_.normalized_weights();
    const std::size_t n = w.size();
    const double u0 = rng_.uniform() / static_cast<double>(n);
    ParticleBank next;
    next.factors_.reserve(n);
    next.states_.reserve(n);
    next.log_probs_.reserve(n);
    double cumulative = w[0];
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double u = u0 + static_cast<double>(k) / static_cast<double>(n);
      while (u > cumulative && j + 1 < n) cumulative += w[++j];
      next.factors_.push_back(bank_.factors_[j]);
      next.states_.push_back(bank_.states_[j]);
      next.log_probs_.push_back(bank_.log_probs_[j]);
    }
    next.log_weights_.assign(n, 0.0);
    bank_ = std::move(next);
    ++resamples_;
  }

  void rejuvenate() {
    std::size_t proposed = 0;
    std::size_t accepted = 0;
    for (std::size_t k = 0; k < bank_.size(); ++k) {
      Matrix& a = bank_.factors_[k];
      double ll = data_log_likelihood(bank_.log_probs_[k]);
      for (int s = 0; s < options_.rejuvenation_steps; ++s) {
        const bool fresh = rng_.uniform() < options_.fresh_draw_probability;
        Matrix candidate;
        double log_ratio = 0.0;
        if (fresh) {
          // Independence proposal from the prior: the prior density cancels.
          candidate = ginibre_matrix(dim_, rng_);
        } else {
          const double scale = step_ * a.norm() / std::sqrt(2.0 * dim_ * dim_);
          candidate = a + scale * ginibre_matrix(dim_, rng_);
          log_ratio -= 0.5 * (candidate.squaredNorm() - a.squaredNorm());
          ++proposed;
        }
        Matrix rho = factor_to_state(candidate);
        std::vector<double> lp = log_probs(rho);
        const double ll_candidate = data_log_likelihood(lp);
        log_ratio += ll_candidate - ll;
        if (std::log(rng_.uniform()) < log_ratio) {
          a = std::move(candidate);
          bank_.states_[k] = std::move(rho);
          bank_.log_probs_[k] = std::move(lp);
          ll = ll_candidate;
          if (!fresh) ++accepted;
        }
      }
    }
    if (proposed > 0) {
      const double rate = static_cast<double>(accepted) / static_cast<double>(proposed);
      if (rate < 0.15) step_ *= 0.5;
      else if (rate < 0.25) step_ *= 0.8;
      else if (rate > 0.6) step_ *= 1.6;
      else if (rate > 0.4) step_ *= 1.2;
      step_ = std::clamp(step_, 1e-6, 2.0);
    }
  }

  std::vector<Matrix> effects_;
  BmeOptions options_;
  SeededRng& rng_;
  int dim_;
  std::vector<double> processed_;
  ParticleBank bank_;
  double step_ = 0.5;
  int resamples_ = 0;
  int degenerate_ = 0;
};

BmeResult qst_bme(const Povm& povm, std::span<const double> counts, const BmeOptions& options, SeededRng& rng) {
  require_counts(povm, counts, "qst_bme");
  SmcEstimator smc(povm, options, rng);
  smc.absorb(counts);
  DensityMatrix mean = smc.bank().mean();
  return BmeResult{std::move(mean), std::move(smc.bank()), smc.resample_count(), smc.degenerate_updates()};
}

std::vector<DensityMatrix> qst_bme_checkpoints(const Povm& povm, const QstData& data, const BmeOptions& options,
                                               SeededRng& rng) {
  data.validate();
  if (data.outcome_labels.size() != povm.size()) throw InvalidArgument("qst_bme: data and POVM outcome counts differ");
  SmcEstimator smc(povm, options, rng);
  std::vector<double> previous(povm.size(), 0.0);
  std::vector<DensityMatrix> means;
  for (std::size_t k = 0; k < data.num_checkpoints(); ++k) {
    const auto now = data.counts_at(k);
    std::vector<double> inc(now.size());
    for (std::size_t i = 0; i < now.size(); ++i) inc[i] = now[i] - previous[i];
    smc.absorb(inc);
    means.push_back(smc.bank().mean());
    previous = now;
  }
  return means;
}

// Curves -------------------------------------------------------------------------

std::string to_string(Estimator e) { return e == Estimator::mle ? "mle" : "bme"; }

Estimator parse_estimator(std::string_view name) {
  if (name == "mle") return Estimator::mle;
  if (name == "bme") return Estimator::bme;
  throw InvalidArgument("unknown estimator '" + std::string(name) + "' (expected mle or bme)");
}

InfidelityCurve InfidelityCurve::aggregate(const std::vector<std::uint64_t>& shots,
                                           const std::vector<std::vector<double>>& per_target) {
  if (per_target.empty()) throw InvalidArgument("InfidelityCurve: no targets");
  InfidelityCurve curve;
  for (std::size_t k = 0; k < shots.size(); ++k) {
    if (k > 0 && shots[k] <= shots[k - 1]) throw InvalidArgument("InfidelityCurve: shots must increase");
    double sum = 0.0;
    for (const auto& t : per_target) {
      if (t.size() != shots.size()) throw InvalidArgument("InfidelityCurve: ragged input");
      sum += t[k];
    }
    const double mean = sum / static_cast<double>(per_target.size());
    double var = 0.0;
    for (const auto& t : per_target) var += (t[k] - mean) * (t[k] - mean);
    var /= static_cast<double>(per_target.size());
    curve.points.push_back({shots[k], std::clamp(mean, 0.0, 1.0), std::sqrt(var)});
  }
  curve.saturation = curve.points.back().mean_infidelity;
  std::size_t positive = 0;
  for (const auto& p : curve.points) positive += p.mean_infidelity > 0.0 ? 1 : 0;
  if (positive == curve.points.size() && positive >= 3) {
    const PowerLawFit fit = fit_power_law(curve, shots.front(), shots.back());
    curve.alpha = fit.alpha;
    curve.amplitude = fit.amplitude;
  }
  return curve;
}

PowerLawFit fit_power_law(const InfidelityCurve& curve, std::uint64_t min_shots, std::uint64_t max_shots) {
  std::vector<double> xs, ys;
  for (const auto& p : curve.points) {
    if (p.shots < min_shots || p.shots > max_shots) continue;
    if (!(p.mean_infidelity > 0.0)) throw InvalidArgument("fit_power_law: zero infidelity in fit window");
    xs.push_back(std::log(static_cast<double>(p.shots)));
    ys.push_back(std::log(p.mean_infidelity));
  }
  if (xs.size() < 3) throw InvalidArgument("fit_power_law: need at least 3 checkpoints in window");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (intercept + slope * xs[k]);
    ss += r * r;
  }
  return {-slope, std::exp(intercept), std::sqrt(ss / n)};
}

CurveRun estimate_checkpoints(const Povm& povm, const QstData& data, const EstimatorOptions& options,
                              SeededRng& rng) {
  data.validate();
  if (data.outcome_labels.size() != povm.size()) {
    throw InvalidArgument("estimate_checkpoints: data and POVM outcome counts differ");
  }
  CurveRun run;
  if (options.kind == Estimator::bme) {
    run.estimates = qst_bme_checkpoints(povm, data, options.bme, rng);
  } else {
    for (std::size_t k = 0; k < data.num_checkpoints(); ++k) {
      const auto counts = data.counts_at(k);
      MleResult r = qst_mle(povm, counts, options.mle);
      if (!r.converged) {
        ++run.unconverged;
        if (!(r.gradient_norm <= kStationaryGradient)) ++run.stalled;
      }
      run.estimates.push_back(std::move(r.state));
    }
  }
  return run;
}

CurveRun reconstruct_checkpoints(const DensityMatrix& target, const Povm& povm, const QstData& data,
                                 const EstimatorOptions& options, SeededRng& rng) {
  CurveRun run = estimate_checkpoints(povm, data, options, rng);
  for (const auto& e : run.estimates) run.infidelities.push_back(infidelity_pure(target, e));
  return run;
}

InfidelityCurve infidelity_curve(const DensityMatrix& target, const Povm& povm, const QstData& data,
                                 const EstimatorOptions& options, SeededRng& rng) {
  const CurveRun run = reconstruct_checkpoints(target, povm, data, options, rng);
  return InfidelityCurve::aggregate(data.checkpoints, {run.infidelities});
}

std::string format_number(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw NumericalError("format_number: conversion failed");
  return std::string(buf, end);
}

void write_curve_csv(std::ostream& out, const InfidelityCurve& curve) {
  out << "shots,mean_infidelity,std_infidelity\n";
  for (const auto& p : curve.points) {
    out << p.shots << ',' << format_number(p.mean_infidelity) << ',' << format_number(p.std_infidelity) << '\n';
  }
}

}  // namespace remqst

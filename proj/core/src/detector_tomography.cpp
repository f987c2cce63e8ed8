#include "remqst/detector_tomography.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>

#include "remqst/errors.hpp"
#include "remqst/parallel.hpp"
#include "remqst/tolerances.hpp"

namespace remqst {
namespace {

double trace_product(const Matrix& a, const Matrix& b) { return (a.transpose().cwiseProduct(b)).sum().real(); }

std::string basis_of(const std::string& effect_label) {
  std::size_t end = effect_label.size();
  while (end > 0 && std::isdigit(static_cast<unsigned char>(effect_label[end - 1]))) --end;
  return effect_label.substr(0, end);
}

double weighted_log_likelihood(const std::vector<Matrix>& effects, const std::vector<Matrix>& states,
                               const Eigen::MatrixXd& weights) {
  double ll = 0.0;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    for (std::size_t s = 0; s < states.size(); ++s) {
      const double w = weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
      if (w == 0.0) continue;
      ll += w * std::log(std::max(trace_product(states[s], effects[i]), tol::kLogFloor));
    }
  }
  return ll;
}

}  // namespace

// CalibrationSet -----------------------------------------------------------------

CalibrationSet CalibrationSet::pauli() { return from_labels({"x0", "x1", "y0", "y1", "z0", "z1"}); }

CalibrationSet CalibrationSet::from_labels(const std::vector<std::string>& labels) {
  if (labels.empty()) throw InvalidArgument("CalibrationSet: no states");
  CalibrationSet set;
  for (const auto& l : labels) {
    set.states.push_back(pauli_state(l));
    set.labels.push_back(l);
  }
  return set;
}

int CalibrationSet::gram_rank() const {
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index t = 0; t < n; ++t) {
      gram(s, t) = trace_product(states[static_cast<std::size_t>(s)].matrix(),
                                 states[static_cast<std::size_t>(t)].matrix());
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  int rank = 0;
  for (double l : es.eigenvalues()) rank += l > 1e-10 * std::max(top, 1.0) ? 1 : 0;
  return rank;
}

// QdtData --------------------------------------------------------------------------

void QdtData::validate() const {
  if (counts.rows() < 1 || counts.cols() < 1) throw InvalidArgument("QdtData: empty count matrix");
  if (static_cast<Eigen::Index>(outcome_labels.size()) != counts.rows()) {
    throw InvalidArgument("QdtData: one label per outcome row required");
  }
  if ((counts.array() < 0.0).any() || !counts.allFinite()) throw InvalidArgument("QdtData: negative counts");
}

double qdt_log_likelihood(const Povm& povm, const QdtData& data, const CalibrationSet& calibration) {
  data.validate();
  if (static_cast<Eigen::Index>(povm.size()) != data.counts.rows() ||
      static_cast<Eigen::Index>(calibration.states.size()) != data.counts.cols()) {
    throw InvalidArgument("qdt_log_likelihood: data shape disagrees with POVM or calibration set");
  }
  std::vector<Matrix> effects, states;
  for (const auto& e : povm.effects()) effects.push_back(e.matrix());
  for (const auto& s : calibration.states) states.push_back(s.matrix());
  return weighted_log_likelihood(effects, states, data.counts);
}

QdtResult qdt_mle(const QdtData& data, const CalibrationSet& calibration, const QdtOptions& options) {
  data.validate();
  if (calibration.states.empty()) throw InvalidArgument("qdt_mle: empty calibration set");
  if (static_cast<Eigen::Index>(calibration.states.size()) != data.counts.cols()) {
    throw InvalidArgument("qdt_mle: one count column per calibration state required");
  }
  if (!calibration.is_informationally_complete()) {
    throw InvalidArgument("qdt_mle: calibration states are not informationally complete (Gram rank " +
                          std::to_string(calibration.gram_rank()) + ")");
  }
  if (!(options.dilution > 0.0 && options.dilution <= 1.0)) throw InvalidArgument("qdt_mle: dilution must be in (0, 1]");
  const Eigen::VectorXd totals = data.totals();
  if ((totals.array() <= 0.0).any()) throw InvalidArgument("qdt_mle: every calibration state needs at least one shot");

  const int d = calibration.dim();
  const auto n_out = static_cast<std::size_t>(data.counts.rows());
  const auto n_states = calibration.states.size();
  // Per-shot weights; with equal totals these are the per-state frequencies.
  const Eigen::MatrixXd weights = data.counts / totals.mean();
  const double scale = totals.mean();

  std::vector<Matrix> states;
  for (const auto& s : calibration.states) states.push_back(s.matrix());

  const Matrix identity = Matrix::Identity(d, d);
  std::vector<Matrix> m(n_out, identity / static_cast<double>(n_out));
  std::vector<Matrix> r(n_out, Matrix::Zero(d, d));
  std::vector<Matrix> next(n_out, Matrix::Zero(d, d));
  double ll = weighted_log_likelihood(m, states, weights);
  double dilution = options.dilution;

  QdtResult result{Povm({Effect(identity)}, {"1"})};
  if (options.record_trace) result.log_likelihood_trace.push_back(ll * scale);

  int it = 0;
  double change = 0.0;
  bool converged = false;
  for (; it < options.max_iter; ++it) {
    for (std::size_t i = 0; i < n_out; ++i) {
      r[i].setZero();
      for (std::size_t s = 0; s < n_states; ++s) {
        const double w = weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
        if (w == 0.0) continue;
        const double p = std::max(trace_product(states[s], m[i]), tol::kRatioFloor);
        r[i].noalias() += (w / p) * states[s];
      }
    }
    double lambda_scale = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) lambda_scale += trace_product(r[i], m[i]);
    lambda_scale /= static_cast<double>(d);

    bool accepted = false;
    double ll_next = ll;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Matrix g = Matrix::Zero(d, d);
      std::vector<Matrix> step(n_out);
      for (std::size_t i = 0; i < n_out; ++i) {
        step[i] = (1.0 - dilution) * lambda_scale * identity + dilution * r[i];
        next[i] = step[i] * m[i] * step[i];
        g += next[i];
      }
      const Matrix l_inv = inverse_sqrt(g);
      for (std::size_t i = 0; i < n_out; ++i) next[i] = hermitian_part(l_inv * next[i] * l_inv);
      ll_next = weighted_log_likelihood(next, states, weights);
      if (ll_next >= ll - 1e-15 * std::max(1.0, std::abs(ll))) {
        accepted = true;
        break;
      }
      dilution = std::min(dilution, 0.5) * (attempt == 0 ? 1.0 : 0.5);
    }
    if (!accepted) {
      converged = true;
      break;
    }
    change = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) change = std::max(change, max_abs(next[i] - m[i]));
    m.swap(next);
    ll = std::max(ll, ll_next);
    if (options.record_trace) result.log_likelihood_trace.push_back(ll_next * scale);
    if (change < options.tol) {
      converged = true;
      ++it;
      break;
    }
  }

  // Remove the rounding drift from completeness before validation.
  Matrix total = Matrix::Zero(d, d);
  for (const auto& e : m) total += e;
  const Matrix fix = inverse_sqrt(total);
  std::vector<Effect> effects;
  for (const auto& e : m) effects.emplace_back(hermitian_part(fix * e * fix));

  result.povm = Povm(std::move(effects), data.outcome_labels);
  result.iterations = it;
  result.converged = converged;
  result.final_change = change;
  if (!converged) {
    result.diagnostic = "qdt_mle: no convergence after " + std::to_string(it) +
                        " iterations (last max effect change " + format_number(change) + ")";
    for (std::size_t i = 0; i < n_out; ++i) {
      if (data.counts.row(static_cast<Eigen::Index>(i)).sum() == 0.0) {
        result.diagnostic += "; outcome '" + data.outcome_labels[i] + "' was never observed";
      }
    }
  }
  return result;
}

// Pauli layout -----------------------------------------------------------------------

void PauliQdtRecord::validate() const {
  if (states.empty()) throw InvalidArgument("QDT record: no calibration states");
  if (bases.empty()) throw InvalidArgument("QDT record: no measurement bases");
  std::set<PauliBasis> unique(bases.begin(), bases.end());
  if (unique.size() != bases.size()) throw InvalidArgument("QDT record: duplicate basis");
  if (counts.size() != states.size()) throw InvalidArgument("QDT record: one count row per state required");
  for (const auto& row : counts) {
    if (row.size() != bases.size()) throw InvalidArgument("QDT record: one count pair per basis required");
  }
}

QdtData PauliQdtRecord::basis_data(PauliBasis basis) const {
  validate();
  const auto it = std::find(bases.begin(), bases.end(), basis);
  if (it == bases.end()) {
    throw InvalidArgument("QDT record: no data for basis '" + std::string(to_string(basis)) + "'");
  }
  const auto b = static_cast<std::size_t>(it - bases.begin());
  QdtData data;
  data.counts.resize(2, static_cast<Eigen::Index>(states.size()));
  for (std::size_t s = 0; s < states.size(); ++s) {
    data.counts(0, static_cast<Eigen::Index>(s)) = static_cast<double>(counts[s][b][0]);
    data.counts(1, static_cast<Eigen::Index>(s)) = static_cast<double>(counts[s][b][1]);
  }
  const std::string name(to_string(basis));
  data.outcome_labels = {name + "0", name + "1"};
  return data;
}

QdtData PauliQdtRecord::joint_data() const {
  validate();
  QdtData data;
  data.counts.resize(static_cast<Eigen::Index>(2 * bases.size()), static_cast<Eigen::Index>(states.size()));
  Eigen::Index row = 0;
  for (PauliBasis basis : kPauliBases) {
    if (std::find(bases.begin(), bases.end(), basis) == bases.end()) continue;
    const QdtData one = basis_data(basis);
    data.counts.middleRows(row, 2) = one.counts;
    data.outcome_labels.insert(data.outcome_labels.end(), one.outcome_labels.begin(), one.outcome_labels.end());
    row += 2;
  }
  return data;
}

Json to_json(const PauliQdtRecord& record) {
  record.validate();
  Json bases = Json::array();
  for (PauliBasis b : record.bases) bases.push_back(std::string(to_string(b)));
  Json counts = Json::object();
  for (std::size_t s = 0; s < record.states.size(); ++s) {
    Json per_basis = Json::object();
    for (std::size_t b = 0; b < record.bases.size(); ++b) {
      per_basis[std::string(to_string(record.bases[b]))] = {record.counts[s][b][0], record.counts[s][b][1]};
    }
    counts[record.states[s]] = std::move(per_basis);
  }
  return {{"states", record.states}, {"bases", std::move(bases)}, {"counts", std::move(counts)}};
}

PauliQdtRecord pauli_qdt_record_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("QDT data: expected a JSON object");
  for (const char* field : {"states", "bases"}) {
    if (!j.contains(field) || !j[field].is_array() || j[field].empty()) {
      throw SchemaError(std::string("QDT data: missing non-empty array '") + field + "'");
    }
  }
  if (!j.contains("counts") || !j["counts"].is_object()) throw SchemaError("QDT data: missing object 'counts'");
  PauliQdtRecord record;
  for (const auto& b : j["bases"]) {
    if (!b.is_string()) throw SchemaError("QDT data: basis labels must be strings");
    try {
      record.bases.push_back(parse_basis(b.get<std::string>()));
    } catch (const InvalidArgument& e) {
      throw SchemaError(std::string("QDT data: ") + e.what());
    }
  }
  for (const auto& s : j["states"]) {
    if (!s.is_string()) throw SchemaError("QDT data: state labels must be strings");
    const auto state = s.get<std::string>();
    try {
      pauli_state(state);
    } catch (const InvalidArgument& e) {
      throw SchemaError(std::string("QDT data: ") + e.what());
    }
    if (!j["counts"].contains(state)) throw SchemaError("QDT data: missing counts for state '" + state + "'");
    const Json& per_basis = j["counts"][state];
    std::vector<std::array<std::uint64_t, 2>> row;
    for (PauliBasis basis : record.bases) {
      const std::string name(to_string(basis));
      if (!per_basis.is_object() || !per_basis.contains(name)) {
        throw SchemaError("QDT data: state '" + state + "' has no counts for basis '" + name + "'");
      }
      const Json& pair = per_basis[name];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned()) {
        throw SchemaError("QDT data: counts for state '" + state + "', basis '" + name +
                          "' must be a pair of non-negative integers");
      }
      row.push_back({pair[0].get<std::uint64_t>(), pair[1].get<std::uint64_t>()});
    }
    record.states.push_back(state);
    record.counts.push_back(std::move(row));
  }
  try {
    record.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("QDT data: ") + e.what());
  }
  return record;
}

PauliQdtRecord simulate_pauli_qdt(const std::vector<std::string>& state_labels,
                                  const std::vector<DensityMatrix>& prepared, const Povm& device,
                                  std::uint64_t shots, SeededRng& rng) {
  if (state_labels.size() != prepared.size()) throw InvalidArgument("simulate_pauli_qdt: one state per label");
  if (device.size() % 2 != 0) throw InvalidArgument("simulate_pauli_qdt: device outcomes must come in pairs");
  PauliQdtRecord record;
  record.states = state_labels;
  for (std::size_t k = 0; k < device.size(); k += 2) record.bases.push_back(parse_basis(basis_of(device.label(k))));
  for (const auto& state : prepared) {
    const auto p = born_probabilities(state, device);
    std::vector<std::array<std::uint64_t, 2>> row;
    for (std::size_t b = 0; b < record.bases.size(); ++b) {
      const double mass = p[2 * b] + p[2 * b + 1];
      const double pair[2] = {p[2 * b] / mass, p[2 * b + 1] / mass};
      const CountRecord rec = sample_counts(pair, shots, rng);
      row.push_back({rec.counts[0], rec.counts[1]});
    }
    record.counts.push_back(std::move(row));
  }
  return record;
}

bool PauliQdtResult::converged() const {
  return std::all_of(reconstructions.begin(), reconstructions.end(), [](const QdtResult& r) { return r.converged; });
}

namespace {

QdtData stack_rows(const std::array<QdtData, 3>& per_basis) {
  QdtData joint;
  joint.counts.resize(6, per_basis[0].counts.cols());
  for (std::size_t b = 0; b < 3; ++b) {
    joint.counts.middleRows(static_cast<Eigen::Index>(2 * b), 2) = per_basis[b].counts;
    joint.outcome_labels.insert(joint.outcome_labels.end(), per_basis[b].outcome_labels.begin(),
                                per_basis[b].outcome_labels.end());
  }
  return joint;
}

PauliQdtResult reconstruct_from_basis_data(const std::array<QdtData, 3>& per_basis,
                                           const CalibrationSet& calibration, const QdtOptions& options,
                                           QdtLayout layout) {
  if (!calibration.is_informationally_complete()) {
    throw InvalidArgument("calibration states are not informationally complete (Gram rank " +
                          std::to_string(calibration.gram_rank()) + " < 4)");
  }
  if (layout == QdtLayout::joint) {
    QdtResult r = qdt_mle(stack_rows(per_basis), calibration, options);
    Povm povm = r.povm;
    return PauliQdtResult{std::move(povm), {std::move(r)}};
  }

  std::vector<std::optional<QdtResult>> parts(3);
  parallel_for(3, [&](std::size_t b) { parts[b] = qdt_mle(per_basis[b], calibration, options); });

  std::vector<Effect> effects;
  std::vector<std::string> labels;
  std::vector<QdtResult> reconstructions;
  for (auto& part : parts) {
    for (std::size_t i = 0; i < part->povm.size(); ++i) {
      effects.emplace_back(part->povm.effect(i).matrix() / 3.0);
      labels.push_back(part->povm.label(i));
    }
    reconstructions.push_back(std::move(*part));
  }
  return PauliQdtResult{Povm(std::move(effects), std::move(labels)), std::move(reconstructions)};
}

}  // namespace

PauliQdtResult reconstruct_pauli_detector(const PauliQdtRecord& record, const QdtOptions& options, QdtLayout layout) {
  record.validate();
  std::array<QdtData, 3> per_basis;
  for (std::size_t b = 0; b < 3; ++b) {
    const PauliBasis basis = kPauliBases[b];
    if (std::find(record.bases.begin(), record.bases.end(), basis) == record.bases.end()) {
      throw InvalidArgument("reconstruct_pauli_detector: missing basis '" + std::string(to_string(basis)) + "'");
    }
    per_basis[b] = record.basis_data(basis);
  }
  return reconstruct_from_basis_data(per_basis, CalibrationSet::from_labels(record.states), options, layout);
}

PauliQdtResult reconstruct_pauli_detector_exact(const std::vector<std::string>& state_labels,
                                                const std::vector<DensityMatrix>& prepared, const Povm& device,
                                                const QdtOptions& options, QdtLayout layout) {
  if (state_labels.size() != prepared.size()) throw InvalidArgument("reconstruct_pauli_detector_exact: one state per label");
  if (device.size() != 6) throw InvalidArgument("reconstruct_pauli_detector_exact: expected a six-outcome device");
  std::array<QdtData, 3> per_basis;
  for (std::size_t b = 0; b < 3; ++b) {
    per_basis[b].counts.resize(2, static_cast<Eigen::Index>(prepared.size()));
    per_basis[b].outcome_labels = {device.label(2 * b), device.label(2 * b + 1)};
  }
  for (std::size_t s = 0; s < prepared.size(); ++s) {
    const auto p = born_probabilities(prepared[s], device);
    for (std::size_t b = 0; b < 3; ++b) {
      const double mass = p[2 * b] + p[2 * b + 1];
      per_basis[b].counts(0, static_cast<Eigen::Index>(s)) = p[2 * b] / mass;
      per_basis[b].counts(1, static_cast<Eigen::Index>(s)) = p[2 * b + 1] / mass;
    }
  }
  return reconstruct_from_basis_data(per_basis, CalibrationSet::from_labels(state_labels), options, layout);
}

// Coherence ------------------------------------------------------------------------------

std::map<std::string, Matrix> pauli_basis_rotations() {
  std::map<std::string, Matrix> out;
  for (PauliBasis b : kPauliBases) out.emplace(std::string(to_string(b)), pauli_basis_rotation(b));
  return out;
}

double shot_noise_threshold(std::uint64_t shots, double k) {
  if (shots == 0) throw InvalidArgument("shot_noise_threshold: shots must be positive");
  return k / std::sqrt(static_cast<double>(shots));
}

bool CoherenceReport::all_classical() const {
  return std::all_of(effects.begin(), effects.end(), [](const EffectCoherence& e) { return e.classical; });
}

CoherenceReport coherent_error_report(const Povm& povm, const std::map<std::string, Matrix>& basis_rotations,
                                      double threshold) {
  CoherenceReport report;
  report.threshold = threshold;
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const std::string basis = basis_of(povm.label(i));
    const auto it = basis_rotations.find(basis);
    if (it == basis_rotations.end()) {
      throw InvalidArgument("coherent_error_report: no rotation for basis '" + basis + "' (effect '" +
                            povm.label(i) + "')");
    }
    const Matrix& r = it->second;
    if (r.rows() != povm.dim()) throw InvalidArgument("coherent_error_report: rotation dimension mismatch");
    EffectCoherence e;
    e.label = povm.label(i);
    e.rotated = r * povm.effect(i).matrix() * r.adjoint();
    for (Eigen::Index a = 0; a < e.rotated.rows(); ++a) {
      for (Eigen::Index b = 0; b < e.rotated.cols(); ++b) {
        if (a != b) e.max_off_diagonal = std::max(e.max_off_diagonal, std::abs(e.rotated(a, b)));
      }
    }
    e.classical = e.max_off_diagonal <= threshold;
    report.effects.push_back(std::move(e));
  }
  return report;
}

Json to_json(const CoherenceReport& report) {
  Json effects = Json::array();
  for (const auto& e : report.effects) {
    effects.push_back({{"label", e.label},
                       {"max_off_diagonal", e.max_off_diagonal},
                       {"classical", e.classical},
                       {"rotated", matrix_to_json(e.rotated)}});
  }
  return {{"threshold", report.threshold}, {"all_classical", report.all_classical()}, {"effects", std::move(effects)}};
}

// Drift --------------------------------------------------------------------------------

DriftReport drift_check(const Povm& povm, const CalibrationSet& probe_states, const QdtData& fresh_counts,
                        double epsilon) {
  fresh_counts.validate();
  if (fresh_counts.counts.rows() != static_cast<Eigen::Index>(povm.size()) ||
      fresh_counts.counts.cols() != static_cast<Eigen::Index>(probe_states.states.size())) {
    throw InvalidArgument("drift_check: counts must be (POVM outcomes) x (probe states)");
  }
  DriftReport report;
  for (std::size_t s = 0; s < probe_states.states.size(); ++s) {
    const Eigen::VectorXd column = fresh_counts.counts.col(static_cast<Eigen::Index>(s));
    const std::vector<double> counts(column.data(), column.data() + column.size());
    const MleResult est = qst_mle(povm, counts);
    const double infidelity = infidelity_pure(probe_states.states[s], est.state);
    report.infidelities.push_back(infidelity);
    if (infidelity >= epsilon) report.pass = false;
  }
  return report;
}

}  // namespace remqst

#include "remqst/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "remqst/errors.hpp"
#include "remqst/parallel.hpp"

namespace remqst {
namespace {

// Stream indices below the run seed.
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kQdtStream = 2;
constexpr std::uint64_t kQstStream = 3;
constexpr std::uint64_t kEstimatorStream = 4;
constexpr std::uint64_t kTargetStream = 5;

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError& e) {
    throw SchemaError(name + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  }
}

std::string to_string(QdtLayout layout) { return layout == QdtLayout::joint ? "joint" : "per_basis"; }

QdtLayout parse_layout(const std::string& name) {
  if (name == "per_basis") return QdtLayout::per_basis;
  if (name == "joint") return QdtLayout::joint;
  throw SchemaError("config: unknown qdt_layout '" + name + "' (expected per_basis or joint)");
}

std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_number(v); }

// Noise model and simulated preparations shared by every stage of a run.
struct Simulation {
  NoiseModel model;
  Povm device;
  std::vector<std::string> calibration_labels;
  std::vector<DensityMatrix> calibration_prepared;
};

Simulation simulate_device(const ExperimentConfig& config) {
  return stage("noise", [&] {
    SeededRng rng = SeededRng(config.seed).split(kNoiseStream);
    NoiseModel model = build_noise_model(config.noise, config.readout_only, rng);
    Povm device = model.noisy_povm(pauli6_povm());
    const CalibrationSet ideal = CalibrationSet::pauli();
    std::vector<DensityMatrix> prepared;
    for (const auto& s : ideal.states) prepared.push_back(model.prepare(s));
    return Simulation{std::move(model), std::move(device), ideal.labels, std::move(prepared)};
  });
}

PauliQdtResult calibrate(const ExperimentConfig& config, const Simulation& sim,
                         std::optional<PauliQdtRecord>& record) {
  return stage("qdt", [&] {
    if (config.exact_calibration) {
      record.reset();
      return reconstruct_pauli_detector_exact(sim.calibration_labels, sim.calibration_prepared, sim.device, {},
                                              config.qdt_layout);
    }
    SeededRng rng = SeededRng(config.seed).split(kQdtStream);
    record = simulate_pauli_qdt(sim.calibration_labels, sim.calibration_prepared, sim.device,
                                config.qdt_shots_per_state_per_basis, rng);
    return reconstruct_pauli_detector(*record, {}, config.qdt_layout);
  });
}

double coherence_threshold(const ExperimentConfig& config) {
  if (config.exact_calibration) return 1e-6;
  return shot_noise_threshold(config.qdt_shots_per_state_per_basis, config.coherence_k);
}

std::vector<TargetResult> simulate_targets(const ExperimentConfig& config, const Simulation& sim,
                                           const std::vector<std::uint64_t>& checkpoints) {
  return stage("qst simulation", [&] {
    const auto states = experiment_targets(config.seed, config.n_targets);
    std::vector<TargetResult> out(states.size());
    const SeededRng base = SeededRng(config.seed).split(kQstStream);
    parallel_for(states.size(), [&](std::size_t t) {
      SeededRng rng = base.split(t);
      TargetResult& r = out[t];
      r.label = "haar_" + std::to_string(t);
      r.target = states[t];
      r.data = simulate_qst_data(sim.model.prepare(states[t]), sim.device, config.qst_shots_per_basis, checkpoints,
                                 rng);
      r.data.target_label = r.label;
      r.data.target_state = states[t];
    });
    return out;
  });
}

CurveRun reconstruct_one(const ExperimentConfig& config, const Povm& povm, const TargetResult& t, std::size_t index,
                         std::uint64_t series) {
  SeededRng rng = SeededRng(config.seed).split(kEstimatorStream).split(index).split(series);
  const EstimatorOptions options = config.estimator_options();
  if (t.target) return reconstruct_checkpoints(*t.target, povm, t.data, options, rng);
  return estimate_checkpoints(povm, t.data, options, rng);
}

void reconstruct_targets(const ExperimentConfig& config, const Povm& estimated, std::vector<TargetResult>& targets,
                         bool mitigated, bool unmitigated) {
  stage("qst", [&] {
    const Povm ideal = pauli6_povm();
    parallel_for(targets.size(), [&](std::size_t t) {
      if (mitigated) targets[t].mitigated = reconstruct_one(config, estimated, targets[t], t, 0);
      if (unmitigated) targets[t].unmitigated = reconstruct_one(config, ideal, targets[t], t, 1);
    });
  });
}

void aggregate_curves(ProtocolResult& result) {
  std::vector<std::vector<double>> mitigated, unmitigated;
  for (const auto& t : result.targets) {
    if (!t.target) continue;
    mitigated.push_back(t.mitigated.infidelities);
    unmitigated.push_back(t.unmitigated.infidelities);
  }
  if (mitigated.empty()) return;
  result.mitigated_curve = InfidelityCurve::aggregate(result.checkpoints, mitigated);
  result.unmitigated_curve = InfidelityCurve::aggregate(result.checkpoints, unmitigated);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_unsigned(const Json& j, const char* key) {
  if (!j[key].is_number_unsigned()) throw SchemaError(std::string("config: '") + key + "' must be a non-negative integer");
}

}  // namespace

// Configuration -------------------------------------------------------------------

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.n_targets = 10;
  c.qdt_shots_per_state_per_basis = 10000;
  c.qst_shots_per_basis = 10000;
  return c;
}

ExperimentConfig ExperimentConfig::paper() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::with_half_qst_calibration() const {
  ExperimentConfig c = *this;
  c.qdt_shots_per_state_per_basis = std::max<std::uint64_t>(1, (3 * qst_shots_per_basis / 2) / 18);
  return c;
}

void ExperimentConfig::validate() const {
  if (n_targets < 1) throw InvalidArgument("config: n_targets must be at least 1");
  if (qdt_shots_per_state_per_basis == 0) throw InvalidArgument("config: QDT shots must be positive");
  if (qst_shots_per_basis == 0) throw InvalidArgument("config: QST shots must be positive");
  if (!(coherence_k > 0.0)) throw InvalidArgument("config: coherence_k must be positive");
  noise.validate();
  const std::uint64_t total = 3 * qst_shots_per_basis;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] == 0 || checkpoints[k] > total || (k > 0 && checkpoints[k] <= checkpoints[k - 1])) {
      throw InvalidArgument("config: checkpoints must increase within (0, " + std::to_string(total) + "]");
    }
  }
}

std::vector<std::uint64_t> ExperimentConfig::resolved_checkpoints() const {
  if (!checkpoints.empty()) return checkpoints;
  const std::uint64_t total = 3 * qst_shots_per_basis;
  return log_spaced_checkpoints(std::min<std::uint64_t>(10, total), total, 30);
}

EstimatorOptions ExperimentConfig::estimator_options() const {
  EstimatorOptions o;
  o.kind = estimator;
  return o;
}

Json to_json(const ExperimentConfig& c) {
  return {{"seed", c.seed},
          {"n_targets", c.n_targets},
          {"qdt_shots_per_state_per_basis", c.qdt_shots_per_state_per_basis},
          {"qst_shots_per_basis", c.qst_shots_per_basis},
          {"noise", to_json(c.noise)},
          {"readout_only", c.readout_only},
          {"estimator", to_string(c.estimator)},
          {"checkpoints", c.checkpoints},
          {"qdt_layout", to_string(c.qdt_layout)},
          {"exact_calibration", c.exact_calibration},
          {"coherence_k", c.coherence_k},
          {"output_dir", c.output_dir.string()}};
}

ExperimentConfig experiment_config_from_json(const Json& j, const ExperimentConfig& base) {
  if (!j.is_object()) throw SchemaError("config: expected a JSON object");
  ExperimentConfig c = base;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw SchemaError("config: 'preset' must be a string");
    const auto preset = j["preset"].get<std::string>();
    if (preset == "desk") c = ExperimentConfig::desk();
    else if (preset == "paper") c = ExperimentConfig::paper();
    else throw SchemaError("config: unknown preset '" + preset + "' (expected desk or paper)");
  }
  static const std::vector<std::string> known = {
      "preset", "seed", "n_targets", "qdt_shots_per_state_per_basis", "qst_shots_per_basis", "noise",
      "readout_only", "estimator", "checkpoints", "qdt_layout", "exact_calibration", "coherence_k", "output_dir"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw SchemaError("config: unknown field '" + key + "'");
    }
  }
  if (j.contains("seed")) {
    require_unsigned(j, "seed");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("n_targets")) {
    if (!j["n_targets"].is_number_integer()) throw SchemaError("config: 'n_targets' must be an integer");
    c.n_targets = j["n_targets"].get<int>();
  }
  if (j.contains("qdt_shots_per_state_per_basis")) {
    require_unsigned(j, "qdt_shots_per_state_per_basis");
    c.qdt_shots_per_state_per_basis = j["qdt_shots_per_state_per_basis"].get<std::uint64_t>();
  }
  if (j.contains("qst_shots_per_basis")) {
    require_unsigned(j, "qst_shots_per_basis");
    c.qst_shots_per_basis = j["qst_shots_per_basis"].get<std::uint64_t>();
  }
  if (j.contains("noise")) {
    try {
      c.noise = noise_spec_from_json(j["noise"]);
    } catch (const InvalidArgument& e) {
      throw SchemaError(std::string("config: noise: ") + e.what());
    }
  }
  for (const char* flag : {"readout_only", "exact_calibration"}) {
    if (!j.contains(flag)) continue;
    if (!j[flag].is_boolean()) throw SchemaError(std::string("config: '") + flag + "' must be a boolean");
    (std::string(flag) == "readout_only" ? c.readout_only : c.exact_calibration) = j[flag].get<bool>();
  }
  if (j.contains("estimator")) {
    if (!j["estimator"].is_string()) throw SchemaError("config: 'estimator' must be a string");
    try {
      c.estimator = parse_estimator(j["estimator"].get<std::string>());
    } catch (const InvalidArgument& e) {
      throw SchemaError(std::string("config: ") + e.what());
    }
  }
  if (j.contains("checkpoints")) {
    if (!j["checkpoints"].is_array()) throw SchemaError("config: 'checkpoints' must be an array");
    c.checkpoints.clear();
    for (const auto& v : j["checkpoints"]) {
      if (!v.is_number_unsigned()) throw SchemaError("config: checkpoints must be non-negative integers");
      c.checkpoints.push_back(v.get<std::uint64_t>());
    }
  }
  if (j.contains("qdt_layout")) {
    if (!j["qdt_layout"].is_string()) throw SchemaError("config: 'qdt_layout' must be a string");
    c.qdt_layout = parse_layout(j["qdt_layout"].get<std::string>());
  }
  if (j.contains("coherence_k")) {
    if (!j["coherence_k"].is_number()) throw SchemaError("config: 'coherence_k' must be a number");
    c.coherence_k = j["coherence_k"].get<double>();
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw SchemaError("config: 'output_dir' must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  try {
    c.validate();
  } catch (const SchemaError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what());
  }
  return c;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  Json j = to_json(config);
  j.erase("output_dir");
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// Protocol --------------------------------------------------------------------------

int ProtocolResult::unconverged_reconstructions() const {
  int n = 0;
  for (const auto& t : targets) n += t.mitigated.unconverged + t.unmitigated.unconverged;
  return n;
}

bool ProtocolResult::numerical_failure() const {
  if (!qdt.converged()) return true;
  return std::any_of(targets.begin(), targets.end(),
                     [](const TargetResult& t) { return t.mitigated.stalled + t.unmitigated.stalled > 0; });
}

std::string ProtocolResult::convergence_diagnostic() const {
  std::string out;
  for (const auto& r : qdt.reconstructions) {
    if (!r.converged) out += (out.empty() ? "" : "; ") + r.diagnostic;
  }
  const int n = unconverged_reconstructions();
  if (n > 0) {
    int stalled = 0;
    for (const auto& t : targets) stalled += t.mitigated.stalled + t.unmitigated.stalled;
    out += (out.empty() ? "" : "; ") + std::to_string(n) + " state reconstruction(s) hit the MLE iteration cap (" +
           std::to_string(stalled) + " away from a stationary point)";
  }
  return out;
}

std::vector<DensityMatrix> experiment_targets(std::uint64_t seed, int n_targets) {
  if (n_targets < 1) throw InvalidArgument("experiment_targets: n_targets must be at least 1");
  const SeededRng base = SeededRng(seed).split(kTargetStream);
  std::vector<DensityMatrix> out;
  for (int t = 0; t < n_targets; ++t) {
    SeededRng rng = base.split(static_cast<std::uint64_t>(t));
    out.push_back(haar_random_pure_state(2, rng));
  }
  return out;
}

ProtocolResult run_protocol(const ExperimentConfig& config) {
  stage("config", [&] { config.validate(); });
  ProtocolResult result{config, std::nullopt, std::nullopt, {Povm({Effect(Matrix::Identity(2, 2))}, {"1"}), {}}};
  const Simulation sim = simulate_device(config);
  result.true_povm = sim.device;
  result.qdt = calibrate(config, sim, result.qdt_record);
  result.coherence = stage("coherence", [&] {
    return coherent_error_report(result.qdt.povm, pauli_basis_rotations(), coherence_threshold(config));
  });
  result.checkpoints = config.resolved_checkpoints();
  result.targets = simulate_targets(config, sim, result.checkpoints);
  reconstruct_targets(config, result.qdt.povm, result.targets, true, true);
  aggregate_curves(result);
  return result;
}

// Sweeps -----------------------------------------------------------------------------

NoiseSpec default_noise_spec(NoiseKind kind) {
  NoiseSpec s;
  s.kind = kind;
  switch (kind) {
    case NoiseKind::depolarizing: s.params = {{"p", 0.1}}; break;
    case NoiseKind::amplitude_damping: s.params = {{"pulse_duration", 200e-9}, {"T1", 20e-6}}; break;
    case NoiseKind::dephasing: s.params = {{"pulse_duration", 200e-9}, {"T2", 20e-6}}; break;
    case NoiseKind::detuning: s.params = {{"detuning_hz", 4e6}, {"duration", 200e-9}}; break;
    case NoiseKind::thermal: s.params = {{"temperature_k", 0.04}, {"qubit_freq_hz", 6.3e9}}; break;
    case NoiseKind::iq_readout: s.params = {{"separation_sigma", 4.107}}; break;
    case NoiseKind::composite: break;
  }
  return s;
}

double noise_strength(const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::depolarizing: return spec.param_or("p", std::nan(""));
    case NoiseKind::amplitude_damping:
    case NoiseKind::dephasing: return spec.param_or("pulse_duration", std::nan(""));
    case NoiseKind::detuning: return spec.param_or("detuning_hz", std::nan(""));
    case NoiseKind::thermal: return spec.param_or("temperature_k", std::nan(""));
    case NoiseKind::iq_readout: return spec.param_or("separation_sigma", std::nan(""));
    case NoiseKind::composite: break;
  }
  return std::nan("");
}

SweepResult noise_sweep(NoiseKind kind, const std::vector<double>& strengths, const ExperimentConfig& config) {
  if (strengths.empty()) throw InvalidArgument("noise_sweep: no strengths given");
  if (kind == NoiseKind::composite) throw InvalidArgument("noise_sweep: composite noise has no sweep parameter");
  const NoiseSpec base = config.noise.kind == kind ? config.noise : default_noise_spec(kind);
  std::vector<ExperimentConfig> configs;
  for (double s : strengths) {
    ExperimentConfig c = config;
    c.noise = base.with_strength(s);
    stage("sweep", [&] { c.validate(); });
    configs.push_back(std::move(c));
  }
  std::vector<std::optional<ProtocolResult>> runs(configs.size());
  parallel_for(configs.size(), [&](std::size_t k) { runs[k] = run_protocol(configs[k]); });
  SweepResult out;
  out.kind = kind;
  for (std::size_t k = 0; k < runs.size(); ++k) out.entries.push_back({strengths[k], std::move(*runs[k])});
  return out;
}

std::uint64_t shots_per_setting(std::uint64_t total_budget) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(total_budget) / 18.0)));
}

CalibrationSweepResult calibration_sweep(const std::vector<std::optional<std::uint64_t>>& budgets,
                                         const ExperimentConfig& config) {
  if (budgets.empty()) throw InvalidArgument("calibration_sweep: no budgets given");
  for (const auto& b : budgets) {
    if (b && *b == 0) throw InvalidArgument("calibration_sweep: budgets must be positive");
  }
  stage("config", [&] { config.validate(); });
  const Simulation sim = simulate_device(config);
  const auto checkpoints = config.resolved_checkpoints();
  std::vector<TargetResult> targets = simulate_targets(config, sim, checkpoints);
  reconstruct_targets(config, sim.device, targets, false, true);

  CalibrationSweepResult out;
  for (const auto& t : targets) out.unmitigated.push_back(t.saturation_unmitigated());
  out.mean_unmitigated = mean(out.unmitigated);
  for (const auto& budget : budgets) {
    ExperimentConfig c = config;
    c.exact_calibration = !budget.has_value();
    if (budget) c.qdt_shots_per_state_per_basis = shots_per_setting(*budget);
    std::optional<PauliQdtRecord> record;
    const PauliQdtResult qdt = calibrate(c, sim, record);
    reconstruct_targets(c, qdt.povm, targets, true, false);
    CalibrationPoint p;
    p.budget = budget;
    if (budget) p.shots_per_setting = c.qdt_shots_per_state_per_basis;
    for (const auto& t : targets) p.mitigated.push_back(t.saturation_mitigated());
    p.mean_mitigated = mean(p.mitigated);
    out.points.push_back(std::move(p));
  }
  return out;
}

// Ingestion ----------------------------------------------------------------------------

ProtocolResult ingest_experiment(const PauliQdtRecord& qdt, const std::vector<QstData>& qst,
                                 const ExperimentConfig& config) {
  if (qst.empty()) throw InvalidArgument("ingest: no QST data");
  ProtocolResult result{config, std::nullopt, qdt, {Povm({Effect(Matrix::Identity(2, 2))}, {"1"}), {}}};
  result.qdt = stage("qdt", [&] { return reconstruct_pauli_detector(qdt, {}, config.qdt_layout); });
  result.coherence = stage("coherence", [&] {
    return coherent_error_report(result.qdt.povm, pauli_basis_rotations(), coherence_threshold(config));
  });
  const Povm ideal = pauli6_povm();
  for (std::size_t k = 0; k < qst.size(); ++k) {
    const QstData& d = qst[k];
    const std::string name = d.target_label.empty() ? "QST data " + std::to_string(k) : "'" + d.target_label + "'";
    for (PauliBasis b : kPauliBases) {
      const auto bases = d.bases();
      if (std::find(bases.begin(), bases.end(), std::string(to_string(b))) == bases.end()) {
        throw SchemaError("ingest: " + name + ": missing basis '" + std::string(to_string(b)) + "'");
      }
    }
    if (d.outcome_labels != ideal.labels()) {
      throw SchemaError("ingest: " + name + ": bases must appear in the order x, y, z");
    }
    if (k > 0 && d.checkpoints != qst[0].checkpoints) {
      throw SchemaError("ingest: " + name + ": checkpoints differ from the first data set");
    }
    TargetResult t;
    t.label = d.target_label.empty() ? "data_" + std::to_string(k) : d.target_label;
    t.target = d.target_state;
    t.data = d;
    result.targets.push_back(std::move(t));
  }
  result.checkpoints = qst[0].checkpoints;
  reconstruct_targets(config, result.qdt.povm, result.targets, true, true);
  aggregate_curves(result);
  return result;
}

// Files -----------------------------------------------------------------------------------

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    const auto last_nl = text.rfind('\n', pos == 0 ? 0 : pos - 1);
    const std::size_t column = last_nl == std::string::npos || pos == 0 ? pos + 1 : pos - last_nl;
    throw SchemaError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": invalid JSON");
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string curves_csv(const std::vector<SweepEntry>& entries) {
  std::ostringstream out;
  out << "strength,series,target,shots,infidelity\n";
  for (const auto& e : entries) {
    const std::string strength = csv_number(e.strength);
    for (const auto* series : {"mitigated", "unmitigated"}) {
      const bool mit = std::string(series) == "mitigated";
      for (const auto& t : e.run.targets) {
        const auto& inf = mit ? t.mitigated.infidelities : t.unmitigated.infidelities;
        for (std::size_t k = 0; k < inf.size(); ++k) {
          out << strength << ',' << series << ',' << t.label << ',' << e.run.checkpoints[k] << ','
              << format_number(inf[k]) << '\n';
        }
      }
    }
  }
  return out.str();
}

std::string mean_curves_csv(const std::vector<SweepEntry>& entries) {
  std::ostringstream out;
  out << "strength,series,shots,mean_infidelity,std_infidelity\n";
  for (const auto& e : entries) {
    const std::string strength = csv_number(e.strength);
    for (const auto* series : {"mitigated", "unmitigated"}) {
      const auto& curve = std::string(series) == "mitigated" ? e.run.mitigated_curve : e.run.unmitigated_curve;
      if (!curve) continue;
      for (const auto& p : curve->points) {
        out << strength << ',' << series << ',' << p.shots << ',' << format_number(p.mean_infidelity) << ','
            << format_number(p.std_infidelity) << '\n';
      }
    }
  }
  return out.str();
}

std::string saturations_csv(const std::vector<SweepEntry>& entries) {
  std::ostringstream out;
  out << "strength,target,mitigated,unmitigated\n";
  for (const auto& e : entries) {
    for (const auto& t : e.run.targets) {
      if (!t.target) continue;
      out << csv_number(e.strength) << ',' << t.label << ',' << format_number(t.saturation_mitigated()) << ','
          << format_number(t.saturation_unmitigated()) << '\n';
    }
  }
  return out.str();
}

std::string calibration_csv(const CalibrationSweepResult& result) {
  std::ostringstream out;
  out << "budget,target,mitigated,unmitigated\n";
  for (const auto& p : result.points) {
    const std::string budget = p.budget ? std::to_string(*p.budget) : "exact";
    for (std::size_t t = 0; t < p.mitigated.size(); ++t) {
      out << budget << ",haar_" << t << ',' << format_number(p.mitigated[t]) << ','
          << format_number(result.unmitigated[t]) << '\n';
    }
  }
  return out.str();
}

Json run_manifest(const std::string& command, const ExperimentConfig& config,
                  const std::vector<std::string>& outputs) {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config_hash(config)));
  return {{"tool", "remqst"}, {"version", kVersion}, {"command", command}, {"seed", config.seed},
          {"config_hash", hash}, {"config", to_json(config)}, {"outputs", outputs}};
}

namespace {

std::vector<std::string> write_all(const std::filesystem::path& dir,
                                   std::vector<std::pair<std::string, std::string>> files, const std::string& command,
                                   const ExperimentConfig& config) {
  std::vector<std::string> names;
  for (const auto& [name, content] : files) {
    write_file_atomic(dir / name, content);
    names.push_back(name);
  }
  write_file_atomic(dir / "manifest.json", run_manifest(command, config, names).dump(2) + "\n");
  names.push_back("manifest.json");
  return names;
}

Json estimates_json(const ProtocolResult& result) {
  Json list = Json::array();
  for (const auto& t : result.targets) {
    list.push_back({{"target", t.label},
                    {"mitigated", to_json(t.mitigated.estimates.back())},
                    {"unmitigated", to_json(t.unmitigated.estimates.back())}});
  }
  return list;
}

}  // namespace

std::vector<std::string> write_protocol_outputs(const ProtocolResult& result, const std::string& command) {
  const std::vector<SweepEntry> entries{{noise_strength(result.config.noise), result}};
  Json qst = Json::array();
  for (const auto& t : result.targets) qst.push_back(to_json(t.data));
  std::vector<std::pair<std::string, std::string>> files = {
      {"curves.csv", curves_csv(entries)},
      {"mean_curves.csv", mean_curves_csv(entries)},
      {"saturations.csv", saturations_csv(entries)},
      {"povm_estm.json", to_json(result.qdt.povm).dump(2) + "\n"},
      {"coherence_report.json", to_json(result.coherence).dump(2) + "\n"},
      {"estimates.json", estimates_json(result).dump(2) + "\n"},
      {"qst_counts.json", qst.dump() + "\n"},
  };
  if (result.true_povm) files.emplace_back("povm_true.json", to_json(*result.true_povm).dump(2) + "\n");
  if (result.qdt_record) files.emplace_back("qdt_counts.json", to_json(*result.qdt_record).dump(2) + "\n");
  return write_all(result.config.output_dir, std::move(files), command, result.config);
}

std::vector<std::string> write_sweep_outputs(const SweepResult& result, const ExperimentConfig& config,
                                             const std::string& command) {
  Json povms = Json::array();
  for (const auto& e : result.entries) {
    povms.push_back({{"strength", e.strength},
                     {"povm", to_json(e.run.qdt.povm)},
                     {"coherence", to_json(e.run.coherence)}});
  }
  return write_all(config.output_dir,
                   {{"curves.csv", curves_csv(result.entries)},
                    {"mean_curves.csv", mean_curves_csv(result.entries)},
                    {"saturations.csv", saturations_csv(result.entries)},
                    {"povm_estm.json", povms.dump(2) + "\n"}},
                   command, config);
}

std::vector<std::string> write_calibration_outputs(const CalibrationSweepResult& result,
                                                   const ExperimentConfig& config, const std::string& command) {
  std::ostringstream means;
  means << "budget,mean_mitigated,mean_unmitigated\n";
  for (const auto& p : result.points) {
    means << (p.budget ? std::to_string(*p.budget) : "exact") << ',' << format_number(p.mean_mitigated) << ','
          << format_number(result.mean_unmitigated) << '\n';
  }
  return write_all(config.output_dir,
                   {{"calibration.csv", calibration_csv(result)}, {"calibration_means.csv", means.str()}}, command,
                   config);
}

}  // namespace remqst

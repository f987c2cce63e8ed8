#include "remqst/noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "remqst/errors.hpp"
#include "remqst/tolerances.hpp"

namespace remqst {
namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(what) + ": p must lie in [0, 1]");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Matrix diag2(Complex a, Complex b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Matrix ket_bra(int row, int col) {
  Matrix m = Matrix::Zero(2, 2);
  m(row, col) = 1.0;
  return m;
}

}  // namespace

// Channels -------------------------------------------------------------------

KrausChannel depolarizing_channel(double p) {
  require_probability(p, "depolarizing_channel");
  const double w0 = std::sqrt(1.0 - 3.0 * p / 4.0);
  const double w = std::sqrt(p / 4.0);
  return KrausChannel({w0 * Matrix::Identity(2, 2), w * pauli_matrix(Axis::x),
                       w * pauli_matrix(Axis::y), w * pauli_matrix(Axis::z)});
}

KrausChannel dephasing_channel(double factor) {
  if (!(factor >= 0.0 && factor <= 1.0)) throw InvalidArgument("dephasing_channel: factor outside [0, 1]");
  return KrausChannel({std::sqrt((1.0 + factor) / 2.0) * Matrix::Identity(2, 2),
                       std::sqrt((1.0 - factor) / 2.0) * pauli_matrix(Axis::z)});
}

KrausChannel relaxation_channel(double pulse_duration, double t1, double t2) {
  if (!(t1 > 0.0) || !(t2 > 0.0)) throw InvalidArgument("relaxation_channel: T1 and T2 must be positive");
  if (!(pulse_duration >= 0.0)) throw InvalidArgument("relaxation_channel: negative duration");
  // 1/Tphi = 1/T2 - 1/(2 T1) must be non-negative.
  const double rate_phi = 1.0 / t2 - 1.0 / (2.0 * t1);
  if (rate_phi < -1e-12 / t2) throw InvalidArgument("relaxation_channel: unphysical T2 > 2 T1");

  const double gamma = -std::expm1(-pulse_duration / t1);
  const KrausChannel damping({diag2(1.0, std::sqrt(1.0 - gamma)), std::sqrt(gamma) * ket_bra(0, 1)});
  const double factor = std::exp(-pulse_duration * std::max(rate_phi, 0.0));
  return compose_channels(damping, dephasing_channel(factor));
}

double detuning_phase_cycles(double detuning_hz, double duration_s) {
  if (!(duration_s >= 0.0)) throw InvalidArgument("detuning: negative duration");
  return detuning_hz * duration_s;
}

Matrix detuning_error(double detuning_hz, double duration_s) {
  return rotation(Axis::z, 2.0 * std::numbers::pi * detuning_phase_cycles(detuning_hz, duration_s));
}

double thermal_population(double temperature_k, double qubit_freq_hz) {
  if (!(temperature_k >= 0.0)) throw InvalidArgument("thermal_population: negative temperature");
  if (!(qubit_freq_hz > 0.0)) throw InvalidArgument("thermal_population: frequency must be positive");
  if (temperature_k == 0.0) return 0.0;
  const double boltzmann = std::exp(-kPlanckOverBoltzmann * qubit_freq_hz / temperature_k);
  return boltzmann / (1.0 + boltzmann);
}

KrausChannel thermal_channel(double temperature_k, double qubit_freq_hz) {
  const double pe = thermal_population(temperature_k, qubit_freq_hz);
  const double g = std::sqrt(1.0 - pe);
  const double e = std::sqrt(pe);
  return KrausChannel({g * ket_bra(0, 0), g * ket_bra(0, 1), e * ket_bra(1, 1), e * ket_bra(1, 0)});
}

// Preparation errors ---------------------------------------------------------

Matrix split_preparation_error(const Matrix& u_noisy, const Matrix& u_ideal) {
  if (!is_unitary(u_noisy, tol::kUnitary) || !is_unitary(u_ideal, tol::kUnitary)) {
    throw InvalidArgument("split_preparation_error: inputs must be unitary");
  }
  if (u_noisy.rows() != u_ideal.rows()) throw InvalidArgument("split_preparation_error: dimension mismatch");
  return u_noisy * u_ideal.adjoint();
}

KrausChannel preparation_channel(const Matrix& ideal_unitary,
                                 const std::vector<ErrorBranch>& error_ensemble) {
  if (!is_unitary(ideal_unitary, tol::kUnitary)) {
    throw InvalidArgument("preparation_channel: ideal preparation is not unitary");
  }
  if (error_ensemble.empty()) throw InvalidArgument("preparation_channel: empty error ensemble");
  double total = 0.0;
  std::vector<Matrix> ops;
  for (const auto& branch : error_ensemble) {
    if (!(branch.probability >= 0.0)) throw InvalidArgument("preparation_channel: negative probability");
    if (!is_unitary(branch.error_unitary, tol::kUnitary)) {
      throw InvalidArgument("preparation_channel: error branch is not unitary");
    }
    total += branch.probability;
    ops.push_back(std::sqrt(branch.probability) * branch.error_unitary * ideal_unitary);
  }
  if (std::abs(total - 1.0) > tol::kProbabilitySum) {
    throw InvalidArgument("preparation_channel: probabilities do not sum to 1");
  }
  return KrausChannel(std::move(ops));
}

// IQ readout -----------------------------------------------------------------

IqModel IqModel::from_separation(double separation_sigma, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("IqModel: sigma must be positive");
  if (!(separation_sigma >= 0.0) || !std::isfinite(separation_sigma)) {
    throw InvalidArgument("IqModel: separation must be finite and non-negative");
  }
  const double half = 0.5 * separation_sigma * sigma;
  return IqModel{{-half, 0.0}, {half, 0.0}, sigma};
}

NearestCentroidClassifier::NearestCentroidClassifier(Eigen::Vector2d centroid_0, Eigen::Vector2d centroid_1)
    : c0_(std::move(centroid_0)), c1_(std::move(centroid_1)) {
  if ((c1_ - c0_).norm() < 1e-6) {
    throw InvalidArgument("NearestCentroidClassifier: degenerate centroids");
  }
}

int NearestCentroidClassifier::classify(const Eigen::Vector2d& point) const {
  return (point - c1_).squaredNorm() < (point - c0_).squaredNorm() ? 1 : 0;
}

Eigen::Vector2d iq_generate(int state_bit, const IqModel& model, SeededRng& rng) {
  if (state_bit != 0 && state_bit != 1) throw InvalidArgument("iq_generate: bit must be 0 or 1");
  if (!(model.sigma > 0.0)) throw InvalidArgument("iq_generate: sigma must be positive");
  const Eigen::Vector2d& c = state_bit == 0 ? model.centroid_0 : model.centroid_1;
  const double i = rng.normal();
  const double q = rng.normal();
  return c + model.sigma * Eigen::Vector2d(i, q);
}

namespace {

Povm diagonal_povm(const Eigen::Matrix2d& a) {
  std::vector<Effect> effects;
  for (int j = 0; j < 2; ++j) effects.emplace_back(diag2(a(j, 0), a(j, 1)));
  return Povm(std::move(effects), {"0", "1"});
}

}  // namespace

IqCalibration iq_effective_povm(const IqModel& model, std::uint64_t n_calibration_shots, SeededRng& rng) {
  if (n_calibration_shots < 100) throw InvalidArgument("iq_effective_povm: need at least 100 shots");
  if (!(model.sigma > 0.0)) throw InvalidArgument("iq_effective_povm: sigma must be positive");

  Eigen::Vector2d learned[2] = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  for (int bit = 0; bit < 2; ++bit) {
    for (std::uint64_t k = 0; k < n_calibration_shots; ++k) learned[bit] += iq_generate(bit, model, rng);
    learned[bit] /= static_cast<double>(n_calibration_shots);
  }
  NearestCentroidClassifier classifier(learned[0], learned[1]);

  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  for (int bit = 0; bit < 2; ++bit) {
    std::uint64_t reported_one = 0;
    for (std::uint64_t k = 0; k < n_calibration_shots; ++k) {
      reported_one += static_cast<std::uint64_t>(classifier.classify(iq_generate(bit, model, rng)));
    }
    a(1, bit) = static_cast<double>(reported_one) / static_cast<double>(n_calibration_shots);
    a(0, bit) = 1.0 - a(1, bit);
  }
  return IqCalibration{classifier, a, diagonal_povm(a)};
}

Eigen::Matrix2d exact_assignment(const NearestCentroidClassifier& classifier, const IqModel& model) {
  const Eigen::Vector2d midpoint = 0.5 * (classifier.centroid(0) + classifier.centroid(1));
  const Eigen::Vector2d normal = (classifier.centroid(1) - classifier.centroid(0)).normalized();
  Eigen::Matrix2d a;
  for (int bit = 0; bit < 2; ++bit) {
    const Eigen::Vector2d& mu = bit == 0 ? model.centroid_0 : model.centroid_1;
    const double offset = (mu - midpoint).dot(normal) / model.sigma;
    a(0, bit) = normal_cdf(-offset);
    a(1, bit) = 1.0 - a(0, bit);
  }
  return a;
}

Povm apply_assignment(const Povm& paired_povm, const Eigen::Matrix2d& assignment) {
  if (paired_povm.size() % 2 != 0) throw InvalidArgument("apply_assignment: effects must come in pairs");
  for (int b = 0; b < 2; ++b) {
    if (assignment(0, b) < 0.0 || assignment(1, b) < 0.0 ||
        std::abs(assignment(0, b) + assignment(1, b) - 1.0) > tol::kProbabilitySum) {
      throw InvalidArgument("apply_assignment: columns must be probability vectors");
    }
  }
  std::vector<Effect> effects;
  for (std::size_t k = 0; k < paired_povm.size(); k += 2) {
    const Matrix& m0 = paired_povm.effect(k).matrix();
    const Matrix& m1 = paired_povm.effect(k + 1).matrix();
    effects.emplace_back(hermitian_part(assignment(0, 0) * m0 + assignment(0, 1) * m1));
    effects.emplace_back(hermitian_part(assignment(1, 0) * m0 + assignment(1, 1) * m1));
  }
  return Povm(std::move(effects), paired_povm.labels());
}

// NoiseSpec ------------------------------------------------------------------

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::depolarizing: return "depolarizing";
    case NoiseKind::amplitude_damping: return "amplitude_damping";
    case NoiseKind::dephasing: return "dephasing";
    case NoiseKind::detuning: return "detuning";
    case NoiseKind::thermal: return "thermal";
    case NoiseKind::iq_readout: return "iq_readout";
    case NoiseKind::composite: return "composite";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view name) {
  for (NoiseKind k : {NoiseKind::depolarizing, NoiseKind::amplitude_damping, NoiseKind::dephasing,
                      NoiseKind::detuning, NoiseKind::thermal, NoiseKind::iq_readout, NoiseKind::composite}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown noise kind '" + std::string(name) + "'");
}

NoiseSpec NoiseSpec::depolarizing(double p) {
  return NoiseSpec{NoiseKind::depolarizing, {{"p", p}}, {}};
}

NoiseSpec NoiseSpec::iq_readout(double separation_sigma) {
  return NoiseSpec{NoiseKind::iq_readout, {{"separation_sigma", separation_sigma}}, {}};
}

double NoiseSpec::param(const std::string& name) const {
  const auto it = params.find(name);
  if (it == params.end()) {
    throw InvalidArgument("noise '" + to_string(kind) + "': missing parameter '" + name + "'");
  }
  return it->second;
}

double NoiseSpec::param_or(const std::string& name, double fallback) const {
  const auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

bool NoiseSpec::is_preparation() const {
  switch (kind) {
    case NoiseKind::amplitude_damping:
    case NoiseKind::dephasing:
    case NoiseKind::detuning:
    case NoiseKind::thermal: return true;
    default: return false;
  }
}

void NoiseSpec::validate() const {
  const std::string who = "noise '" + to_string(kind) + "'";
  auto positive = [&](const std::string& name) {
    if (!(param(name) > 0.0)) throw InvalidArgument(who + ": '" + name + "' must be positive");
  };
  auto non_negative = [&](const std::string& name) {
    if (!(param(name) >= 0.0)) throw InvalidArgument(who + ": '" + name + "' must be non-negative");
  };
  switch (kind) {
    case NoiseKind::depolarizing:
      require_probability(param("p"), "depolarizing");
      break;
    case NoiseKind::amplitude_damping: {
      non_negative("pulse_duration");
      positive("T1");
      const double t1 = param("T1");
      const double t2 = param_or("T2", 2.0 * t1);
      if (!(t2 > 0.0) || 1.0 / t2 < 1.0 / (2.0 * t1) - 1e-12 / t2) {
        throw InvalidArgument(who + ": requires 0 < T2 <= 2 T1");
      }
      break;
    }
    case NoiseKind::dephasing:
      non_negative("pulse_duration");
      positive("T2");
      break;
    case NoiseKind::detuning:
      param("detuning_hz");
      non_negative("duration");
      break;
    case NoiseKind::thermal:
      non_negative("temperature_k");
      positive("qubit_freq_hz");
      break;
    case NoiseKind::iq_readout:
      non_negative("separation_sigma");
      if (param_or("calibration_shots", 1e5) < 100) {
        throw InvalidArgument(who + ": 'calibration_shots' must be at least 100");
      }
      break;
    case NoiseKind::composite:
      if (!params.empty()) throw InvalidArgument(who + ": composite takes no parameters");
      for (const auto& c : components) c.validate();
      break;
  }
  if (kind != NoiseKind::composite && !components.empty()) {
    throw InvalidArgument(who + ": only composite noise has components");
  }
}

NoiseSpec NoiseSpec::with_strength(double value) const {
  NoiseSpec out = *this;
  switch (kind) {
    case NoiseKind::depolarizing: out.params["p"] = value; break;
    case NoiseKind::amplitude_damping:
    case NoiseKind::dephasing: out.params["pulse_duration"] = value; break;
    case NoiseKind::detuning: out.params["detuning_hz"] = value; break;
    case NoiseKind::thermal: out.params["temperature_k"] = value; break;
    case NoiseKind::iq_readout: out.params["separation_sigma"] = value; break;
    case NoiseKind::composite: throw InvalidArgument("composite noise has no sweep parameter");
  }
  return out;
}

Json to_json(const NoiseSpec& spec) {
  Json j{{"kind", to_string(spec.kind)}};
  if (spec.kind == NoiseKind::composite) {
    Json list = Json::array();
    for (const auto& c : spec.components) list.push_back(to_json(c));
    j["components"] = std::move(list);
    return j;
  }
  Json params = Json::object();
  for (const auto& [name, value] : spec.params) {
    if (std::isinf(value)) params[name] = value > 0 ? "inf" : "-inf";
    else params[name] = value;
  }
  j["params"] = std::move(params);
  return j;
}

NoiseSpec noise_spec_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw SchemaError("noise: expected an object with string field 'kind'");
  }
  NoiseSpec spec;
  spec.kind = parse_noise_kind(j["kind"].get<std::string>());
  if (spec.kind == NoiseKind::composite) {
    if (j.contains("components")) {
      if (!j["components"].is_array()) throw SchemaError("noise: 'components' must be an array");
      for (const auto& c : j["components"]) spec.components.push_back(noise_spec_from_json(c));
    }
  } else {
    if (!j.contains("params") || !j["params"].is_object()) {
      throw SchemaError("noise '" + to_string(spec.kind) + "': missing object 'params'");
    }
    for (const auto& [name, value] : j["params"].items()) {
      if (value.is_number()) {
        spec.params[name] = value.get<double>();
      } else if (value.is_string() && (value == "inf" || value == "Infinity")) {
        spec.params[name] = std::numeric_limits<double>::infinity();
      } else {
        throw SchemaError("noise '" + to_string(spec.kind) + "': parameter '" + name + "' must be numeric");
      }
    }
  }
  spec.validate();
  return spec;
}

// NoiseModel -------------------------------------------------------------------

DensityMatrix NoiseModel::prepare(const DensityMatrix& ideal_pure) const {
  if (preparation.empty()) return ideal_pure;
  bool any_ground = false;
  for (const auto& step : preparation) any_ground |= step.on_ground_state;

  DensityMatrix state = ideal_pure;
  Matrix u;
  if (any_ground) {
    if (ideal_pure.purity() < 1.0 - tol::kPurity) {
      throw InvalidArgument("NoiseModel::prepare: ground-state noise needs a pure target");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(ideal_pure.matrix());
    u = preparation_unitary(es.eigenvectors().col(ideal_pure.dim() - 1));
    DensityMatrix ground = DensityMatrix::from_ket(Vector::Unit(ideal_pure.dim(), 0));
    for (const auto& step : preparation) {
      if (step.on_ground_state) ground = apply_channel(step.channel, ground);
    }
    state = DensityMatrix::from_estimate(u * ground.matrix() * u.adjoint());
  }
  for (const auto& step : preparation) {
    if (!step.on_ground_state) state = apply_channel(step.channel, state);
  }
  return state;
}

Povm NoiseModel::noisy_povm(const Povm& ideal) const {
  Povm out = ideal;
  for (auto it = readout.rbegin(); it != readout.rend(); ++it) out = pull_back(*it, out);
  if (!assignment.isIdentity(0.0)) out = apply_assignment(out, assignment);
  return out;
}

namespace {

KrausChannel channel_for(const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::depolarizing: return depolarizing_channel(spec.param("p"));
    case NoiseKind::amplitude_damping: {
      const double t1 = spec.param("T1");
      return relaxation_channel(spec.param("pulse_duration"), t1, spec.param_or("T2", 2.0 * t1));
    }
    case NoiseKind::dephasing:
      return dephasing_channel(std::exp(-spec.param("pulse_duration") / spec.param("T2")));
    case NoiseKind::detuning:
      return KrausChannel::unitary(detuning_error(spec.param("detuning_hz"), spec.param("duration")));
    case NoiseKind::thermal:
      // Thermal excitation of |0> before a unitary preparation acts on a pure
      // prepared state as depolarizing noise of strength 2 p_e.
      return depolarizing_channel(
          2.0 * thermal_population(spec.param("temperature_k"), spec.param("qubit_freq_hz")));
    default: break;
  }
  throw InvalidArgument("noise '" + to_string(spec.kind) + "' has no single channel");
}

void accumulate(const NoiseSpec& spec, bool readout_only, SeededRng& rng, NoiseModel& model) {
  switch (spec.kind) {
    case NoiseKind::composite:
      for (std::size_t k = 0; k < spec.components.size(); ++k) {
        SeededRng child = rng.split(k);
        accumulate(spec.components[k], readout_only, child, model);
      }
      return;
    case NoiseKind::iq_readout: {
      const double sep = spec.param("separation_sigma");
      if (std::isinf(sep)) return;
      const auto shots = static_cast<std::uint64_t>(spec.param_or("calibration_shots", 1e5));
      const IqModel iq = IqModel::from_separation(sep);
      const IqCalibration cal = iq_effective_povm(iq, shots, rng);
      model.assignment = exact_assignment(cal.classifier, iq) * model.assignment;
      return;
    }
    case NoiseKind::depolarizing:
      model.readout.push_back(channel_for(spec));
      return;
    default: break;
  }
  if (readout_only) {
    model.readout.push_back(channel_for(spec));
  } else if (spec.kind == NoiseKind::thermal) {
    model.preparation.push_back(
        {thermal_channel(spec.param("temperature_k"), spec.param("qubit_freq_hz")), true});
  } else {
    model.preparation.push_back({channel_for(spec), false});
  }
}

}  // namespace

NoiseModel build_noise_model(const NoiseSpec& spec, bool readout_only, SeededRng& rng) {
  spec.validate();
  NoiseModel model;
  accumulate(spec, readout_only, rng, model);
  return model;
}

}  // namespace remqst

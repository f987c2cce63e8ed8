#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "remqst/detector_tomography.hpp"
#include "remqst/errors.hpp"
#include "remqst/noise.hpp"
#include "remqst/sampler.hpp"
#include "support.hpp"

namespace remqst {
namespace {

using test::valid_povm;

double trace_distance(const Matrix& a, const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a - b);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double worst_effect_distance(const Povm& a, const Povm& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, trace_distance(a.effect(i).matrix(), b.effect(i).matrix()));
  }
  return worst;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Outcome-by-state matrix of expected counts.
QdtData expected_data(const Povm& povm, const CalibrationSet& cal, double shots) {
  QdtData d;
  d.counts.resize(static_cast<Eigen::Index>(povm.size()), static_cast<Eigen::Index>(cal.states.size()));
  for (std::size_t s = 0; s < cal.states.size(); ++s) {
    const auto p = born_probabilities(cal.states[s], povm);
    for (std::size_t i = 0; i < p.size(); ++i) d.counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = shots * p[i];
  }
  d.outcome_labels = povm.labels();
  return d;
}

QdtData sampled_data(const Povm& povm, const CalibrationSet& cal, std::uint64_t shots, SeededRng& rng) {
  QdtData d = expected_data(povm, cal, 0.0);
  for (std::size_t s = 0; s < cal.states.size(); ++s) {
    const CountRecord r = simulate_measurement(cal.states[s], povm, shots, rng);
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
      d.counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = static_cast<double>(r.counts[i]);
    }
  }
  return d;
}

std::vector<DensityMatrix> pauli_states() { return CalibrationSet::pauli().states; }
std::vector<std::string> pauli_labels() { return CalibrationSet::pauli().labels; }

TEST(CalibrationSet, InformationalCompleteness) {
  const CalibrationSet pauli = CalibrationSet::pauli();
  EXPECT_EQ(pauli.labels, (std::vector<std::string>{"x0", "x1", "y0", "y1", "z0", "z1"}));
  EXPECT_EQ(pauli.gram_rank(), 4);
  EXPECT_TRUE(pauli.is_informationally_complete());
  EXPECT_TRUE(CalibrationSet::from_labels({"z0", "z1", "x0", "y0"}).is_informationally_complete());
  EXPECT_EQ(CalibrationSet::from_labels({"z0", "z1"}).gram_rank(), 2);
  EXPECT_FALSE(CalibrationSet::from_labels({"z0", "z1", "x0", "x1"}).is_informationally_complete());
}

TEST(QdtMle, ExactFrequenciesRecoverTheDevice) {
  const Povm truth = pull_back(depolarizing_channel(0.2), pauli6_povm());
  const CalibrationSet cal = CalibrationSet::pauli();
  const QdtResult r = qdt_mle(expected_data(truth, cal, 1.0), cal);
  EXPECT_TRUE(valid_povm(r.povm));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    EXPECT_LT(max_abs(r.povm.effect(i).matrix() - truth.effect(i).matrix()), 1e-6) << truth.label(i);
  }

  for (QdtLayout layout : {QdtLayout::per_basis, QdtLayout::joint}) {
    const PauliQdtResult p = reconstruct_pauli_detector_exact(pauli_labels(), pauli_states(), truth, {}, layout);
    EXPECT_TRUE(p.converged());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      EXPECT_LT(max_abs(p.povm.effect(i).matrix() - truth.effect(i).matrix()), 1e-6);
    }
  }
}

TEST(QdtMle, NoiselessProjectiveMeasurement) {
  SeededRng rng(3);
  const Povm z = projective_povm(PauliBasis::z);
  const CalibrationSet cal = CalibrationSet::pauli();
  const QdtResult r = qdt_mle(sampled_data(z, cal, 100000, rng), cal);
  EXPECT_TRUE(valid_povm(r.povm));
  EXPECT_LT(worst_effect_distance(r.povm, z), 0.02);
}

TEST(QdtMle, PerfectDetectorIsProjective) {
  const Povm z = projective_povm(PauliBasis::z);
  const CalibrationSet cal = CalibrationSet::pauli();
  const QdtResult r = qdt_mle(expected_data(z, cal, 100000.0), cal);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(r.povm.effect(i).matrix()(0, 1)), 1e-6);
    EXPECT_LT(max_abs(r.povm.effect(i).matrix() - z.effect(i).matrix()), 1e-4);
  }
}

TEST(QdtMle, LikelihoodIsMonotoneAndOutputValid) {
  SeededRng rng(5);
  const CalibrationSet cal = CalibrationSet::pauli();
  const std::vector<Povm> devices{
      pull_back(depolarizing_channel(0.6), pauli6_povm()),
      pull_back(relaxation_channel(5e-6, 10e-6, 12e-6), pauli6_povm()),
      pull_back(KrausChannel::unitary(haar_random_unitary(2, rng)), pauli6_povm()),
      pauli6_povm(),
  };
  for (const auto& device : devices) {
    for (std::uint64_t shots : {20u, 1000u, 50000u}) {
      QdtOptions opts;
      opts.record_trace = true;
      opts.max_iter = 3000;
      const QdtResult r = qdt_mle(sampled_data(device, cal, shots, rng), cal, opts);
      EXPECT_TRUE(valid_povm(r.povm));
      const auto& trace = r.log_likelihood_trace;
      ASSERT_FALSE(trace.empty());
      for (std::size_t k = 1; k < trace.size(); ++k) {
        EXPECT_GE(trace[k], trace[k - 1] - 1e-9 * std::max(1.0, std::abs(trace[k])));
      }
    }
  }
}

TEST(QdtMle, Errors) {
  const Povm z = projective_povm(PauliBasis::z);
  const CalibrationSet z_only = CalibrationSet::from_labels({"z0", "z1"});
  try {
    qdt_mle(expected_data(z, z_only, 100.0), z_only);
    FAIL() << "expected an IC violation";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("informationally complete"), std::string::npos);
  }
  const CalibrationSet cal = CalibrationSet::pauli();
  QdtData empty_column = expected_data(z, cal, 100.0);
  empty_column.counts.col(2).setZero();
  EXPECT_THROW(qdt_mle(empty_column, cal), InvalidArgument);
  QdtData negative = expected_data(z, cal, 100.0);
  negative.counts(0, 0) = -1.0;
  EXPECT_THROW(qdt_mle(negative, cal), InvalidArgument);
}

TEST(QdtLogLikelihood, Examples) {
  const CalibrationSet one = CalibrationSet::from_labels({"z0"});
  QdtData d;
  d.counts.resize(2, 1);
  d.counts << 500.0, 0.0;
  d.outcome_labels = {"0", "1"};
  EXPECT_DOUBLE_EQ(qdt_log_likelihood(projective_povm(PauliBasis::z), d, one), 0.0);
}

TEST(QdtLogLikelihood, TruthBeatsPerturbations) {
  SeededRng rng(6);
  const Povm truth = pull_back(depolarizing_channel(0.25), pauli6_povm());
  const CalibrationSet cal = CalibrationSet::pauli();
  const QdtData data = expected_data(truth, cal, 1000.0);
  const double best = qdt_log_likelihood(truth, data, cal);
  for (int k = 0; k < 100; ++k) {
    const Matrix u = haar_random_unitary(2, rng);
    const double eps = 0.01 + 0.2 * rng.uniform();
    std::vector<Effect> effects;
    for (const auto& e : truth.effects()) {
      effects.emplace_back((1.0 - eps) * e.matrix() + eps * u.adjoint() * e.matrix() * u);
    }
    const Povm perturbed(std::move(effects), truth.labels());
    EXPECT_LE(qdt_log_likelihood(perturbed, data, cal), best + 1e-9);
  }
}

TEST(QdtMle, ConsistentAsCalibrationGrows) {
  SeededRng rng(7);
  const Povm truth = pull_back(depolarizing_channel(0.3), pauli6_povm());
  std::vector<double> medians;
  for (std::uint64_t shots : {1000u, 10000u, 100000u}) {
    std::vector<double> dist;
    for (int seed = 0; seed < 20; ++seed) {
      const PauliQdtRecord rec = simulate_pauli_qdt(pauli_labels(), pauli_states(), truth, shots, rng);
      dist.push_back(worst_effect_distance(reconstruct_pauli_detector(rec).povm, truth));
    }
    medians.push_back(median(dist));
  }
  EXPECT_GT(medians[0], medians[1]);
  EXPECT_GT(medians[1], medians[2]);
}

TEST(QdtMle, ClassicalNoiseGivesDiagonalEffects) {
  SeededRng rng(8);
  Eigen::Matrix2d a;
  a << 0.93, 0.11, 0.07, 0.89;
  const Povm truth = apply_assignment(pauli6_povm(), a);
  const std::uint64_t shots = 50000;
  const PauliQdtRecord rec = simulate_pauli_qdt(pauli_labels(), pauli_states(), truth, shots, rng);
  const Povm est = reconstruct_pauli_detector(rec).povm;
  const CoherenceReport report = coherent_error_report(est, pauli_basis_rotations(), 0.0);
  for (const auto& e : report.effects) EXPECT_LT(e.max_off_diagonal, 3.0 / std::sqrt(double(shots))) << e.label;
}

TEST(PauliQdt, RecordRoundTripAndLayouts) {
  SeededRng rng(9);
  const Povm truth = pull_back(depolarizing_channel(0.1), pauli6_povm());
  const PauliQdtRecord rec = simulate_pauli_qdt(pauli_labels(), pauli_states(), truth, 2000, rng);
  EXPECT_NO_THROW(rec.validate());
  for (const auto& row : rec.counts) {
    for (const auto& pair : row) EXPECT_EQ(pair[0] + pair[1], 2000u);
  }
  const PauliQdtRecord back = pauli_qdt_record_from_json(to_json(rec));
  EXPECT_EQ(back.counts, rec.counts);
  EXPECT_EQ(back.states, rec.states);
  EXPECT_EQ(to_json(back), to_json(rec));

  const QdtData joint = rec.joint_data();
  EXPECT_EQ(joint.counts.rows(), 6);
  EXPECT_EQ(joint.counts.cols(), 6);
  EXPECT_EQ(rec.basis_data(PauliBasis::y).counts.rows(), 2);

  const PauliQdtResult per_basis = reconstruct_pauli_detector(rec);
  const PauliQdtResult joint_fit = reconstruct_pauli_detector(rec, {}, QdtLayout::joint);
  EXPECT_EQ(per_basis.reconstructions.size(), 3u);
  EXPECT_EQ(joint_fit.reconstructions.size(), 1u);
  EXPECT_TRUE(valid_povm(per_basis.povm));
  EXPECT_TRUE(valid_povm(joint_fit.povm));
  EXPECT_EQ(per_basis.povm.labels(), pauli6_povm().labels());
  EXPECT_LT(worst_effect_distance(per_basis.povm, truth), 0.05);
  EXPECT_LT(worst_effect_distance(joint_fit.povm, truth), 0.05);
}

TEST(PauliQdt, SchemaAndCompletenessErrors) {
  EXPECT_THROW(pauli_qdt_record_from_json(Json::parse(R"({"states": ["z0"], "bases": ["z"]})")), SchemaError);
  EXPECT_THROW(pauli_qdt_record_from_json(Json::parse(
                   R"({"states": ["z0"], "bases": ["z"], "counts": {"z0": {"x": [1, 2]}}})")),
               SchemaError);
  EXPECT_THROW(pauli_qdt_record_from_json(Json::parse(
                   R"({"states": ["z0"], "bases": ["z"], "counts": {"z0": {"z": [1, -2]}}})")),
               SchemaError);

  SeededRng rng(10);
  const Povm truth = pauli6_povm();
  const PauliQdtRecord z_states =
      simulate_pauli_qdt({"z0", "z1"}, {pauli_state("z0"), pauli_state("z1")}, truth, 100, rng);
  try {
    reconstruct_pauli_detector(z_states);
    FAIL() << "expected an IC violation";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("Gram rank 2"), std::string::npos) << e.what();
  }

  PauliQdtRecord missing = simulate_pauli_qdt(pauli_labels(), pauli_states(), truth, 100, rng);
  missing.bases.pop_back();
  for (auto& row : missing.counts) row.pop_back();
  EXPECT_THROW(reconstruct_pauli_detector(missing), InvalidArgument);
}

TEST(Coherence, Examples) {
  const CoherenceReport ideal = coherent_error_report(pauli6_povm(), pauli_basis_rotations(), 1e-9);
  EXPECT_TRUE(ideal.all_classical());
  for (const auto& e : ideal.effects) EXPECT_LT(e.max_off_diagonal, 1e-12);

  const Povm detuned = pull_back(KrausChannel::unitary(detuning_error(4e6, 200e-9)), pauli6_povm());
  const CoherenceReport report = coherent_error_report(detuned, pauli_basis_rotations(), 3e-2);
  EXPECT_FALSE(report.all_classical());
  for (const auto& e : report.effects) {
    if (e.label[0] == 'x' || e.label[0] == 'y') {
      EXPECT_GT(e.max_off_diagonal, 0.1) << e.label;
      EXPECT_FALSE(e.classical);
    } else {
      EXPECT_LT(e.max_off_diagonal, 1e-12);
      EXPECT_TRUE(e.classical);
    }
  }
  const Json j = to_json(report);
  EXPECT_EQ(j["threshold"], 3e-2);
  EXPECT_EQ(j["effects"].size(), 6u);
  EXPECT_FALSE(j["all_classical"].get<bool>());
}

TEST(Coherence, ThresholdAndRotations) {
  EXPECT_NEAR(shot_noise_threshold(240000, 3.0), 3.0 / std::sqrt(240000.0), 1e-15);
  EXPECT_THROW(shot_noise_threshold(0), InvalidArgument);

  // Off-diagonal of 0.02 is below a 3e-2 threshold; 0.04 is above it.
  auto with_offdiag = [](double c) {
    Matrix m0 = Matrix::Zero(2, 2);
    m0 << 0.5, c, c, 0.4;
    const Matrix m1 = Matrix::Identity(2, 2) - m0;
    return Povm({Effect(m0), Effect(m1)}, {"z0", "z1"});
  };
  EXPECT_TRUE(coherent_error_report(with_offdiag(0.02), pauli_basis_rotations(), 3e-2).all_classical());
  EXPECT_FALSE(coherent_error_report(with_offdiag(0.04), pauli_basis_rotations(), 3e-2).all_classical());

  for (const auto& [basis, r] : pauli_basis_rotations()) {
    EXPECT_TRUE(is_unitary(r, 1e-12));
    const Matrix rotated = r * pauli_state(basis + "0").matrix() * r.adjoint();
    EXPECT_LT(max_abs(rotated - pauli_state("z0").matrix()), 1e-12) << basis;
  }
  std::map<std::string, Matrix> partial = pauli_basis_rotations();
  partial.erase("y");
  EXPECT_THROW(coherent_error_report(pauli6_povm(), partial, 0.1), InvalidArgument);
}

TEST(Drift, Examples) {
  SeededRng rng(11);
  const CalibrationSet probes = CalibrationSet::pauli();
  const Povm device = pull_back(depolarizing_channel(0.2), pauli6_povm());

  const DriftReport same = drift_check(device, probes, sampled_data(device, probes, 100000, rng), 0.05);
  EXPECT_TRUE(same.pass);
  EXPECT_EQ(same.infidelities.size(), 6u);

  const Povm drifted = pull_back(depolarizing_channel(0.3), device);
  const QdtData drifted_counts = sampled_data(drifted, probes, 100000, rng);
  const DriftReport bad = drift_check(device, probes, drifted_counts, 0.05);
  EXPECT_FALSE(bad.pass);
  EXPECT_GT(*std::max_element(bad.infidelities.begin(), bad.infidelities.end()), 0.05);

  EXPECT_TRUE(drift_check(device, probes, drifted_counts, 1.0).pass);
}

}  // namespace
}  // namespace remqst

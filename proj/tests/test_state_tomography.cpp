#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "remqst/errors.hpp"
#include "remqst/noise.hpp"
#include "remqst/sampler.hpp"
#include "remqst/state_tomography.hpp"
#include "support.hpp"

namespace remqst {
namespace {

using test::ket0;
using test::valid_state;

std::vector<double> as_doubles(const CountRecord& r) { return {r.counts.begin(), r.counts.end()}; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double trace_distance(const Matrix& a, const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a - b);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

DensityMatrix bloch_state(double x, double y, double z) {
  return DensityMatrix(0.5 * (Matrix::Identity(2, 2) + x * pauli_matrix(Axis::x) + y * pauli_matrix(Axis::y) +
                              z * pauli_matrix(Axis::z)));
}

// Tetrahedral SIC POVM: a minimal informationally complete measurement.
Povm tetrahedral_povm() {
  const double s = 1.0 / std::sqrt(3.0);
  const double dirs[4][3] = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  std::vector<Effect> effects;
  for (const auto& n : dirs) effects.emplace_back(0.5 * bloch_state(n[0], n[1], n[2]).matrix());
  return Povm(std::move(effects), {"a", "b", "c", "d"});
}

TEST(LogLikelihood, Examples) {
  const std::vector<double> certain{50.0, 0.0};
  EXPECT_DOUBLE_EQ(log_likelihood(ket0(), projective_povm(PauliBasis::z), certain), 0.0);

  const std::vector<double> even{40.0, 40.0};
  EXPECT_NEAR(log_likelihood(DensityMatrix::maximally_mixed(2), projective_povm(PauliBasis::z), even),
              80.0 * std::log(0.5), 1e-12);

  const std::vector<double> impossible{0.0, 10.0};
  EXPECT_NEAR(log_likelihood(ket0(), projective_povm(PauliBasis::z), impossible), 10.0 * std::log(1e-300), 1e-6);
}

TEST(LogLikelihood, FrequencyMatchingStateMaximizes) {
  const Povm sic = tetrahedral_povm();
  const DensityMatrix rho = bloch_state(0.3, 0.2, -0.4);
  std::vector<double> counts;
  for (double p : born_probabilities(rho, sic)) counts.push_back(1000.0 * p);
  const double best = log_likelihood(rho, sic, counts);

  SeededRng rng(4);
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix other = hilbert_schmidt_random_state(2, rng);
    EXPECT_LE(log_likelihood(other, sic, counts), best + 1e-9);
  }
  const MleResult mle = qst_mle(sic, counts);
  EXPECT_NEAR(mle.log_likelihood, best, 1e-8);
  EXPECT_LT(trace_distance(mle.state.matrix(), rho.matrix()), 1e-4);
}

TEST(QstMle, ExactProbabilitiesAreAFixedPoint) {
  const Povm pauli6 = pauli6_povm();
  const std::vector<double> exact = born_probabilities(ket0(), pauli6);
  const MleResult r = qst_mle(pauli6, exact);
  EXPECT_LT(trace_distance(r.state.matrix(), ket0().matrix()), 1e-6);
  EXPECT_TRUE(valid_state(r.state));
}

TEST(QstMle, UniformCountsGiveMaximallyMixed) {
  const std::vector<double> uniform(6, 100.0);
  const MleResult r = qst_mle(pauli6_povm(), uniform);
  EXPECT_LT(max_abs(r.state.matrix() - Matrix::Identity(2, 2) / 2.0), 1e-6);
  EXPECT_TRUE(r.converged);
}

TEST(QstMle, MitigationOracle) {
  SeededRng rng(2024);
  const DensityMatrix target = haar_random_pure_state(2, rng);
  const Povm ideal = pauli6_povm();
  const Povm noisy = pull_back(depolarizing_channel(0.4), ideal);
  const std::vector<double> counts = as_doubles(simulate_measurement(target, noisy, 1000000, rng));
  EXPECT_LT(infidelity_pure(target, qst_mle(noisy, counts).state), 5e-3);
  EXPECT_NEAR(infidelity_pure(target, qst_mle(ideal, counts).state), 0.2, 0.01);
}

TEST(QstMle, LikelihoodNeverDecreases) {
  SeededRng rng(8);
  const Povm noisy = pull_back(depolarizing_channel(0.2), pauli6_povm());
  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix target = haar_random_pure_state(2, rng);
    const std::vector<double> counts = as_doubles(simulate_measurement(target, noisy, 300, rng));
    MleOptions opts;
    opts.record_trace = true;
    opts.max_iter = 2000;
    const MleResult r = qst_mle(noisy, counts, opts);
    ASSERT_FALSE(r.log_likelihood_trace.empty());
    for (std::size_t k = 1; k < r.log_likelihood_trace.size(); ++k) {
      EXPECT_GE(r.log_likelihood_trace[k], r.log_likelihood_trace[k - 1] - 1e-9 * std::abs(r.log_likelihood_trace[k]));
    }
    EXPECT_TRUE(valid_state(r.state));
  }
}

TEST(QstMle, RejectsBadInput) {
  const std::vector<double> empty(6, 0.0);
  EXPECT_THROW(qst_mle(pauli6_povm(), empty), InvalidArgument);
  const std::vector<double> wrong_size(4, 1.0);
  EXPECT_THROW(qst_mle(pauli6_povm(), wrong_size), InvalidArgument);
}

TEST(QstBme, ZeroDataGivesPriorMean) {
  SeededRng rng(10);
  BmeOptions opts;
  opts.n_particles = 10000;
  const std::vector<double> none(6, 0.0);
  const BmeResult r = qst_bme(pauli6_povm(), none, opts, rng);
  EXPECT_LT(max_abs(r.state.matrix() - Matrix::Identity(2, 2) / 2.0), 0.02);
  EXPECT_EQ(r.bank.size(), 10000u);
}

TEST(QstBme, ConvergesOnNoiselessData) {
  SeededRng rng(11);
  std::vector<double> bme_inf, mle_inf;
  for (int seed = 0; seed < 20; ++seed) {
    const DensityMatrix target = haar_random_pure_state(2, rng);
    const std::vector<double> counts = as_doubles(simulate_measurement(target, pauli6_povm(), 100000, rng));
    bme_inf.push_back(infidelity_pure(target, qst_bme(pauli6_povm(), counts, {}, rng).state));
    mle_inf.push_back(infidelity_pure(target, qst_mle(pauli6_povm(), counts).state));
  }
  EXPECT_LT(median(bme_inf), std::pow(10.0, -2.5));
  EXPECT_LT(median(mle_inf), std::pow(10.0, -2.5));
}

TEST(QstBme, AgreesWithMleOnLargeSamples) {
  SeededRng rng(22);
  const DensityMatrix target = haar_random_pure_state(2, rng);
  const std::vector<double> counts = as_doubles(simulate_measurement(target, pauli6_povm(), 1000000, rng));
  const DensityMatrix bme = qst_bme(pauli6_povm(), counts, {}, rng).state;
  const DensityMatrix mle = qst_mle(pauli6_povm(), counts).state;
  EXPECT_LT(trace_distance(bme.matrix(), mle.matrix()), 0.01);
}

TEST(QstBme, PhysicalEvenForUnphysicalFrequencies) {
  SeededRng rng(12);
  // Every basis reports only outcome 0: the implied Bloch vector has length sqrt(3).
  const std::vector<double> counts{100, 0, 100, 0, 100, 0};
  const BmeResult r = qst_bme(pauli6_povm(), counts, {}, rng);
  EXPECT_TRUE(valid_state(r.state));
  EXPECT_TRUE(valid_state(qst_mle(pauli6_povm(), counts).state));
}

TEST(QstBme, BankInvariants) {
  SeededRng rng(13);
  const DensityMatrix target = haar_random_pure_state(2, rng);
  const std::vector<double> counts = as_doubles(simulate_measurement(target, pauli6_povm(), 5000, rng));
  BmeOptions opts;
  opts.n_particles = 500;
  const BmeResult r = qst_bme(pauli6_povm(), counts, opts, rng);
  EXPECT_EQ(r.bank.size(), 500u);
  const auto w = r.bank.normalized_weights();
  double total = 0.0;
  for (double x : w) {
    EXPECT_TRUE(std::isfinite(x));
    total += x;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  for (double lw : r.bank.log_weights()) EXPECT_FALSE(std::isnan(lw));
  EXPECT_GT(r.resample_count, 0);
  EXPECT_GE(r.bank.effective_sample_size(), 1.0);
  EXPECT_LE(r.bank.effective_sample_size(), 500.0 + 1e-9);
  opts.n_particles = 50;
  EXPECT_THROW(qst_bme(pauli6_povm(), counts, opts, rng), InvalidArgument);
}

TEST(QstBme, CheckpointEstimatesDependOnlyOnThePrefix) {
  SeededRng data_rng(14);
  const DensityMatrix target = haar_random_pure_state(2, data_rng);
  const QstData data = simulate_qst_data(target, pauli6_povm(), 2000, {30, 300, 3000, 6000}, data_rng);
  SeededRng a(99);
  const auto all = qst_bme_checkpoints(pauli6_povm(), data, {}, a);
  ASSERT_EQ(all.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    SeededRng b(99);
    const auto partial = qst_bme_checkpoints(pauli6_povm(), data.prefix(k), {}, b);
    EXPECT_LT(max_abs(partial.back().matrix() - all[k].matrix()), 1e-12);
  }
}

TEST(QstData, SimulationAndPrefixes) {
  SeededRng rng(15);
  const auto cps = log_spaced_checkpoints(10, 3000, 30);
  EXPECT_EQ(cps.front(), 10u);
  EXPECT_EQ(cps.back(), 3000u);
  for (std::size_t k = 1; k < cps.size(); ++k) EXPECT_GT(cps[k], cps[k - 1]);

  const QstData data = simulate_qst_data(ket0(), pauli6_povm(), 1000, cps, rng);
  EXPECT_NO_THROW(data.validate());
  EXPECT_EQ(data.bases(), (std::vector<std::string>{"x", "y", "z"}));
  for (std::size_t k = 0; k < data.num_checkpoints(); ++k) {
    const auto c = data.counts_at(k);
    double total = 0.0;
    for (double x : c) total += x;
    EXPECT_DOUBLE_EQ(total, static_cast<double>(cps[k]));
    if (k > 0) {
      const auto prev = data.counts_at(k - 1);
      for (std::size_t i = 0; i < c.size(); ++i) EXPECT_GE(c[i], prev[i]);
    }
  }
  const auto f = data.final_counts();
  EXPECT_DOUBLE_EQ(f[4] + f[5], 1000.0);
  EXPECT_DOUBLE_EQ(f[5], 0.0);
  EXPECT_EQ(data.prefix(3).num_checkpoints(), 4u);

  QstData broken = data;
  broken.cumulative[1][0] = broken.cumulative[0][0] > 0 ? broken.cumulative[0][0] - 1 : 0;
  broken.cumulative[1][1] += broken.cumulative[0][0] > 0 ? 1 : 0;
  if (data.cumulative[0][0] > 0) {
    EXPECT_THROW(broken.validate(), InvalidArgument);
  }
  EXPECT_THROW(simulate_qst_data(ket0(), pauli6_povm(), 100, {50, 301}, rng), InvalidArgument);
}

TEST(QstData, JsonRoundTrip) {
  SeededRng rng(16);
  const DensityMatrix target = haar_random_pure_state(2, rng);
  QstData data = simulate_qst_data(target, pauli6_povm(), 200, {20, 200, 600}, rng);
  data.target_label = "t7";
  data.target_state = target;
  const QstData back = qst_data_from_json(to_json(data));
  EXPECT_EQ(back.cumulative, data.cumulative);
  EXPECT_EQ(back.checkpoints, data.checkpoints);
  EXPECT_EQ(back.outcome_labels, data.outcome_labels);
  EXPECT_EQ(back.target_label, "t7");
  ASSERT_TRUE(back.target_state.has_value());
  EXPECT_LT(max_abs(back.target_state->matrix() - target.matrix()), 1e-12);
  EXPECT_THROW(qst_data_from_json(Json::parse(R"({"bases": ["x"]})")), SchemaError);
}

TEST(PowerLaw, ExactSynthetic) {
  std::vector<std::uint64_t> shots{10, 100, 1000, 10000, 100000};
  std::vector<double> inv, sqrt_law;
  for (auto n : shots) {
    inv.push_back(1.0 / static_cast<double>(n));
    sqrt_law.push_back(0.3 / std::sqrt(static_cast<double>(n)));
  }
  const auto c1 = InfidelityCurve::aggregate(shots, {inv});
  const PowerLawFit f1 = fit_power_law(c1, 1, 1000000);
  EXPECT_NEAR(f1.alpha, 1.0, 1e-9);
  EXPECT_NEAR(f1.amplitude, 1.0, 1e-9);
  EXPECT_NEAR(f1.residual, 0.0, 1e-9);

  const PowerLawFit f2 = fit_power_law(InfidelityCurve::aggregate(shots, {sqrt_law}), 1, 1000000);
  EXPECT_NEAR(f2.alpha, 0.5, 1e-9);
  EXPECT_NEAR(f2.amplitude, 0.3, 1e-9);

  std::vector<double> with_zero = inv;
  with_zero[2] = 0.0;
  EXPECT_THROW(fit_power_law(InfidelityCurve::aggregate(shots, {with_zero}), 1, 1000000), InvalidArgument);
  EXPECT_THROW(fit_power_law(c1, 1000, 10000), InvalidArgument);
}

TEST(InfidelityCurve, AggregateMeanAndStd) {
  const auto c = InfidelityCurve::aggregate({10, 20}, {{0.1, 0.4}, {0.3, 0.2}});
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_NEAR(c.points[0].mean_infidelity, 0.2, 1e-15);
  EXPECT_NEAR(c.points[0].std_infidelity, 0.1, 1e-15);
  EXPECT_NEAR(c.points[1].mean_infidelity, 0.3, 1e-15);
  EXPECT_NEAR(c.saturation, 0.3, 1e-15);
}

TEST(InfidelityCurve, CsvGolden) {
  InfidelityCurve curve;
  curve.points = {{10, 0.5, 0.0}, {100, 0.125, 0.03125}, {1000, 1e-05, 2.5e-06}};
  std::ostringstream out;
  write_curve_csv(out, curve);
  EXPECT_EQ(out.str(),
            "shots,mean_infidelity,std_infidelity\n"
            "10,0.5,0\n"
            "100,0.125,0.03125\n"
            "1000,1e-05,2.5e-06\n");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(InfidelityCurve, APrioriPointIsNearOneHalf) {
  SeededRng rng(17);
  std::vector<double> first;
  for (int t = 0; t < 20; ++t) {
    const DensityMatrix target = haar_random_pure_state(2, rng);
    const QstData data = simulate_qst_data(target, pauli6_povm(), 1000, {1, 3000}, rng);
    EstimatorOptions opts;
    opts.kind = Estimator::bme;
    const InfidelityCurve c = infidelity_curve(target, pauli6_povm(), data, opts, rng);
    first.push_back(c.points.front().mean_infidelity);
  }
  double mean = 0.0;
  for (double x : first) mean += x / first.size();
  EXPECT_NEAR(mean, 0.5, 0.1);
}

TEST(InfidelityCurve, NoiselessScaling) {
  SeededRng rng(18);
  const DensityMatrix target = haar_random_pure_state(2, rng);
  const auto cps = log_spaced_checkpoints(100, 300000, 12);
  const QstData data = simulate_qst_data(target, pauli6_povm(), 100000, cps, rng);

  EstimatorOptions bme;
  bme.kind = Estimator::bme;
  const InfidelityCurve b = infidelity_curve(target, pauli6_povm(), data, bme, rng);
  EXPECT_GE(b.alpha, 0.4);
  EXPECT_LE(b.alpha, 1.0);
  for (const auto& p : b.points) {
    EXPECT_GE(p.mean_infidelity, 0.0);
    EXPECT_LE(p.mean_infidelity, 1.0);
  }
  EXPECT_DOUBLE_EQ(b.saturation, b.points.back().mean_infidelity);

  // Aggregate over targets: MLE curves have a clean positive slope.
  std::vector<std::vector<double>> per_target;
  for (int t = 0; t < 10; ++t) {
    const DensityMatrix tt = haar_random_pure_state(2, rng);
    const QstData d = simulate_qst_data(tt, pauli6_povm(), 100000, cps, rng);
    per_target.push_back(reconstruct_checkpoints(tt, pauli6_povm(), d, {}, rng).infidelities);
  }
  for (auto& v : per_target) {
    for (double& x : v) x = std::max(x, 1e-12);
  }
  const PowerLawFit fit = fit_power_law(InfidelityCurve::aggregate(cps, per_target), 1000, 300000);
  EXPECT_GT(fit.alpha, 0.0);
  EXPECT_LE(fit.alpha, 1.0);
}

TEST(InfidelityCurve, UnmitigatedSaturatesAtHalfTheDepolarizingStrength) {
  SeededRng rng(19);
  const double p = 0.3;
  const Povm noisy = pull_back(depolarizing_channel(p), pauli6_povm());
  double mean = 0.0;
  const int targets = 5;
  for (int t = 0; t < targets; ++t) {
    const DensityMatrix target = haar_random_pure_state(2, rng);
    const QstData data = simulate_qst_data(target, noisy, 100000, {300000}, rng);
    mean += reconstruct_checkpoints(target, pauli6_povm(), data, {}, rng).infidelities.back() / targets;
  }
  EXPECT_NEAR(mean, p / 2.0, 0.2 * p / 2.0);
}

TEST(Mitigation, MedianInfidelityFallsEveryDecade) {
  SeededRng rng(20);
  const Povm noisy = pull_back(depolarizing_channel(0.3), pauli6_povm());
  const std::vector<std::uint64_t> cps{100, 1000, 10000, 100000};
  std::vector<std::vector<double>> by_checkpoint(cps.size());
  for (int seed = 0; seed < 20; ++seed) {
    const DensityMatrix target = haar_random_pure_state(2, rng);
    const QstData data = simulate_qst_data(target, noisy, 100000 / 3 + 1, cps, rng);
    const CurveRun run = reconstruct_checkpoints(target, noisy, data, {}, rng);
    for (std::size_t k = 0; k < cps.size(); ++k) by_checkpoint[k].push_back(run.infidelities[k]);
  }
  for (std::size_t k = 1; k < cps.size(); ++k) {
    EXPECT_LT(median(by_checkpoint[k]), median(by_checkpoint[k - 1])) << "checkpoint " << cps[k];
  }
}

TEST(Mitigation, StrongerNoiseCostsMoreShots) {
  SeededRng rng(21);
  auto median_at = [&](double p) {
    const Povm noisy = pull_back(depolarizing_channel(p), pauli6_povm());
    std::vector<double> inf;
    for (int seed = 0; seed < 20; ++seed) {
      const DensityMatrix target = haar_random_pure_state(2, rng);
      const QstData data = simulate_qst_data(target, noisy, 10000 / 3 + 1, {10000}, rng);
      inf.push_back(reconstruct_checkpoints(target, noisy, data, {}, rng).infidelities.back());
    }
    return median(inf);
  };
  EXPECT_GT(median_at(0.5), median_at(0.1));
}

TEST(Estimator, Names) {
  EXPECT_EQ(parse_estimator("mle"), Estimator::mle);
  EXPECT_EQ(parse_estimator("bme"), Estimator::bme);
  EXPECT_EQ(to_string(Estimator::bme), "bme");
  EXPECT_THROW(parse_estimator("lsq"), InvalidArgument);
}

}  // namespace
}  // namespace remqst

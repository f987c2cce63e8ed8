#include "remqst/sampler.hpp"

#include <cmath>
#include <numeric>

#include "remqst/errors.hpp"
#include "remqst/tolerances.hpp"

namespace remqst {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

SeededRng SeededRng::split(std::uint64_t index) const {
  return SeededRng(seed_, splitmix64(stream_ ^ splitmix64(index + 1)));
}

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SeededRng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * factor;
  has_spare_normal_ = true;
  return u * factor;
}

Complex SeededRng::complex_normal() {
  const double re = normal();
  return {re, normal()};
}

std::uint64_t SeededRng::binomial(std::uint64_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("binomial: p outside [0, 1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);

  const double q = 1.0 - p;
  const double nd = static_cast<double>(n);
  if (nd * p < 10.0) {
    // Inversion by sequential search.
    const double s = p / q;
    const double a = (nd + 1.0) * s;
    double r = std::pow(q, nd);
    double u = uniform();
    std::uint64_t x = 0;
    while (u > r) {
      u -= r;
      ++x;
      if (x > n) return n;
      r *= a / static_cast<double>(x) - s;
      if (r <= 0.0) break;
    }
    return x;
  }

  // BTRS: transformed rejection with squeeze (Hormann 1993).
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((nd + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
  for (;;) {
    const double u = uniform() - 0.5;
    double v = uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > nd) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(k + 1.0) - std::lgamma(nd - k + 1.0) + (k - m) * lpq) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

std::vector<double> CountRecord::frequencies() const {
  std::vector<double> f(counts.size(), 0.0);
  if (shots == 0) return f;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    f[i] = static_cast<double>(counts[i]) / static_cast<double>(shots);
  }
  return f;
}

Matrix ginibre_matrix(int dim, SeededRng& rng) {
  Matrix g(dim, dim);
  for (int c = 0; c < dim; ++c) {
    for (int r = 0; r < dim; ++r) g(r, c) = rng.complex_normal();
  }
  return g;
}

Matrix haar_random_unitary(int dim, SeededRng& rng) {
  if (dim < 1) throw InvalidArgument("haar_random_unitary: dim must be positive");
  const Matrix z = ginibre_matrix(dim, rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < dim; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0.0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

DensityMatrix haar_random_pure_state(int dim, SeededRng& rng) {
  if (dim < 2) throw InvalidArgument("haar_random_pure_state: dim must be at least 2");
  const Matrix u = haar_random_unitary(dim, rng);
  return DensityMatrix::from_ket(u.col(0));
}

DensityMatrix hilbert_schmidt_random_state(int dim, SeededRng& rng) {
  if (dim < 2) throw InvalidArgument("hilbert_schmidt_random_state: dim must be at least 2");
  const Matrix g = ginibre_matrix(dim, rng);
  const Matrix gg = g * g.adjoint();
  return DensityMatrix(hermitian_part(gg / gg.trace().real()));
}

CountRecord sample_counts(std::span<const double> probabilities, std::uint64_t n_shots,
                          SeededRng& rng) {
  if (probabilities.empty()) throw InvalidArgument("sample_counts: no outcomes");
  if (n_shots == 0) throw InvalidArgument("sample_counts: n_shots must be positive");
  double total = 0.0;
  for (double p : probabilities) {
    if (p < -tol::kEigenvalue || !std::isfinite(p)) {
      throw InvalidArgument("sample_counts: negative or non-finite probability");
    }
    total += std::max(p, 0.0);
  }
  if (std::abs(total - 1.0) > tol::kProbabilitySum) {
    throw InvalidArgument("sample_counts: probabilities do not sum to 1");
  }

  CountRecord rec;
  rec.shots = n_shots;
  rec.counts.assign(probabilities.size(), 0);
  // Suffix masses so the conditional probability of the last non-zero
  // outcome is exactly 1.
  std::vector<double> suffix(probabilities.size() + 1, 0.0);
  for (std::size_t i = probabilities.size(); i-- > 0;) {
    suffix[i] = suffix[i + 1] + std::max(probabilities[i], 0.0);
  }
  std::uint64_t remaining = n_shots;
  for (std::size_t i = 0; i < probabilities.size() && remaining > 0; ++i) {
    const double p = std::max(probabilities[i], 0.0);
    const double conditional =
        suffix[i + 1] == 0.0 ? 1.0 : (suffix[i] > 0.0 ? std::clamp(p / suffix[i], 0.0, 1.0) : 0.0);
    rec.counts[i] = rng.binomial(remaining, conditional);
    remaining -= rec.counts[i];
  }
  return rec;
}

CountRecord simulate_measurement(const DensityMatrix& state, const Povm& povm,
                                 std::uint64_t n_shots, SeededRng& rng) {
  std::vector<double> p = born_probabilities(state, povm);
  // Clamping in born_probabilities can leave a ~1e-16 excess; renormalize.
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return sample_counts(p, n_shots, rng);
}

}  // namespace remqst

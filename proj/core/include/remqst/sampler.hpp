#pragma once

// Reproducible randomness: seeded streams, Haar and Hilbert-Schmidt random
// states, and multinomial shot sampling.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "remqst/quantum.hpp"

namespace remqst {

/// Deterministic random stream identified by (seed, stream).
///
/// The engine is mt19937_64 seeded through std::seed_seq, both of which are
/// fully specified by the standard. Normal and binomial variates are drawn
/// with in-house algorithms rather than <random> distributions, whose output
/// differs between standard library implementations.
///
/// Not thread-safe; give each concurrent task its own stream via split().
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Independent child stream; identical (parent, index) give identical children.
  SeededRng split(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// Complex normal with independent N(0, 1) real and imaginary parts.
  Complex complex_normal();
  /// Exact Binomial(n, p) draw (inversion for small means, BTRS otherwise).
  std::uint64_t binomial(std::uint64_t n, double p);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

struct CountRecord {
  std::vector<std::uint64_t> counts;
  std::uint64_t shots = 0;

  std::vector<double> frequencies() const;
};

/// d x d matrix of independent complex_normal() entries.
Matrix ginibre_matrix(int dim, SeededRng& rng);

/// Haar-distributed unitary (Ginibre QR with the R-diagonal phase fix).
Matrix haar_random_unitary(int dim, SeededRng& rng);

/// |psi><psi| with |psi> = U|0> for Haar-random U.
DensityMatrix haar_random_pure_state(int dim, SeededRng& rng);

/// G G^dag / Tr(G G^dag) for Ginibre G.
DensityMatrix hilbert_schmidt_random_state(int dim, SeededRng& rng);

/// Multinomial draw of `n_shots` outcomes.
CountRecord sample_counts(std::span<const double> probabilities, std::uint64_t n_shots,
                          SeededRng& rng);

CountRecord simulate_measurement(const DensityMatrix& state, const Povm& povm,
                                 std::uint64_t n_shots, SeededRng& rng);

}  // namespace remqst

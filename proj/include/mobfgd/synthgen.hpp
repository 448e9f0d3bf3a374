#ifndef MOBFGD_SYNTHGEN_HPP
#define MOBFGD_SYNTHGEN_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mobfgd/cdr_ingest.hpp"
#include "mobfgd/entropy.hpp"
#include "mobfgd/markov.hpp"

namespace mobfgd {

/// Tour-plus-noise corpus parameters. Each user cycles through a private
/// tour of `tour_period` distinct locations; at every step the tour location
/// is replaced, with probability rho, by a uniform draw over all
/// `n_locations`. Per-user rho is uniform on [noise_min, noise_max].
struct GeneratorConfig {
  std::size_t n_users = 2000;
  std::size_t seq_length = 5000;
  std::size_t n_locations = 16;
  double noise_min = 0.0;
  double noise_max = 1.0;
  std::size_t tour_period = 8;
  std::uint64_t seed = 1;
  Timestamp start_time = 1404172800;  // 2014-07-01 00:00:00 UTC
  std::int64_t step_seconds = 3600;

  /// Throws DomainError on an inconsistent configuration.
  void validate() const;
};

struct SyntheticCorpus {
  std::vector<Trajectory> trajectories;  ///< sorted by user id
  std::vector<double> noise;             ///< rho of each user
};

/// Deterministic for a given config; every user draws from its own
/// substream, so the thread count does not change the output.
SyntheticCorpus generate(const GeneratorConfig& config, unsigned threads = 1);

struct SweepRow {
  EntropyProfile entropy;
  PredictionResult prediction;
  double noise = 0.0;
};

/// Generates a corpus and scores entropy and prediction for every user.
std::vector<SweepRow> entropy_accuracy_sweep(const GeneratorConfig& config, const EvaluationOptions& evaluation = {},
                                             unsigned threads = 1);

/// Spearman rank correlation with average ranks for ties. Throws
/// DomainError for fewer than 2 pairs or unequal lengths.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace mobfgd

#endif  // MOBFGD_SYNTHGEN_HPP

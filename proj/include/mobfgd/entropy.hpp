#ifndef MOBFGD_ENTROPY_HPP
#define MOBFGD_ENTROPY_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mobfgd/cdr_ingest.hpp"
#include "mobfgd/common.hpp"

namespace mobfgd {

/// Per-user entropies, all in bits.
struct EntropyProfile {
  std::string user_id;
  double s_rand = 0.0;  ///< log2 of the number of distinct locations
  double s_unc = 0.0;   ///< Shannon entropy of the visit frequencies
  double s_real = 0.0;  ///< Lempel-Ziv entropy-rate estimate
  std::size_t n_unique_locations = 0;
  std::size_t sequence_length = 0;
};

/// log2 of the number of distinct symbols. Throws DomainError if empty.
double random_entropy(std::span<const Symbol> sequence);
double random_entropy(const Trajectory& trajectory);

/// Entropy of the empirical symbol distribution. Throws DomainError if empty.
double uncorrelated_entropy(std::span<const Symbol> sequence);
double uncorrelated_entropy(const Trajectory& trajectory);

/// Match lengths Lambda_i of the Lempel-Ziv entropy-rate estimator.
///
/// Lambda_i is the length of the shortest substring starting at i that does
/// not occur entirely inside sequence[0, i). When every substring starting
/// at i occurs there, Lambda_i is one more than the suffix length. So
/// Lambda_0 = 1 and Lambda_i = (longest in-prefix match at i) + 1.
///
/// Uses a suffix array with range-minimum tables, O(n log n) overall.
std::vector<std::size_t> lz_match_lengths(std::span<const Symbol> sequence);

/// Same quantity by direct scanning of every prefix substring, with no
/// index. Quadratic; refuses sequences longer than kOracleMaxLength.
std::vector<std::size_t> lz_match_lengths_bruteforce(std::span<const Symbol> sequence);

inline constexpr std::size_t kOracleMaxLength = 5000;

/// Entropy rate estimate S = n log2(n) / sum(Lambda_i), in bits.
/// Throws DomainError when n < 2.
double real_entropy_lz(std::span<const Symbol> sequence);
double real_entropy_lz(const Trajectory& trajectory);

/// real_entropy_lz computed from lz_match_lengths_bruteforce.
/// Throws DomainError when n < 2 or n > kOracleMaxLength.
double real_entropy_oracle(std::span<const Symbol> sequence);
double real_entropy_oracle(const Trajectory& trajectory);

EntropyProfile entropy_profile(const Trajectory& trajectory);
EntropyProfile entropy_profile(std::string user_id, std::span<const Symbol> sequence);

}  // namespace mobfgd

#endif  // MOBFGD_ENTROPY_HPP

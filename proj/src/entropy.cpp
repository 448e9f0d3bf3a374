#include "mobfgd/entropy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

namespace mobfgd {

namespace {

void require_nonempty(std::span<const Symbol> seq) {
  if (seq.empty()) throw DomainError("entropy of an empty sequence is undefined");
}

std::unordered_map<Symbol, std::size_t> histogram(std::span<const Symbol> seq) {
  std::unordered_map<Symbol, std::size_t> counts;
  for (auto s : seq) ++counts[s];
  return counts;
}

/// Suffix array by prefix doubling over cyclic shifts of seq + sentinel.
std::vector<std::uint32_t> suffix_array(std::span<const Symbol> seq) {
  const std::size_t n = seq.size() + 1;
  std::vector<std::uint32_t> key(n);
  for (std::size_t i = 0; i + 1 < n; ++i) key[i] = seq[i] + 1;
  key[n - 1] = 0;

  // Compress symbols to [0, classes).
  std::vector<std::uint32_t> sorted_keys(key);
  std::sort(sorted_keys.begin(), sorted_keys.end());
  sorted_keys.erase(std::unique(sorted_keys.begin(), sorted_keys.end()), sorted_keys.end());
  std::vector<std::uint32_t> cls(n), p(n), pn(n), cn(n);
  for (std::size_t i = 0; i < n; ++i) {
    cls[i] = static_cast<std::uint32_t>(std::lower_bound(sorted_keys.begin(), sorted_keys.end(), key[i]) -
                                        sorted_keys.begin());
  }
  std::size_t classes = sorted_keys.size();
  std::vector<std::uint32_t> cnt(std::max(classes, n) + 1, 0);
  for (std::size_t i = 0; i < n; ++i) ++cnt[cls[i]];
  for (std::size_t i = 1; i < classes; ++i) cnt[i] += cnt[i - 1];
  for (std::size_t i = n; i-- > 0;) p[--cnt[cls[i]]] = static_cast<std::uint32_t>(i);

  for (std::size_t h = 1; h < n && classes < n; h <<= 1) {
    for (std::size_t i = 0; i < n; ++i) pn[i] = static_cast<std::uint32_t>((p[i] + n - h) % n);
    std::fill(cnt.begin(), cnt.begin() + static_cast<std::ptrdiff_t>(classes), 0);
    for (std::size_t i = 0; i < n; ++i) ++cnt[cls[pn[i]]];
    for (std::size_t i = 1; i < classes; ++i) cnt[i] += cnt[i - 1];
    for (std::size_t i = n; i-- > 0;) p[--cnt[cls[pn[i]]]] = pn[i];
    cn[p[0]] = 0;
    classes = 1;
    for (std::size_t i = 1; i < n; ++i) {
      const auto cur0 = cls[p[i]], prev0 = cls[p[i - 1]];
      const auto cur1 = cls[(p[i] + h) % n], prev1 = cls[(p[i - 1] + h) % n];
      if (cur0 != prev0 || cur1 != prev1) ++classes;
      cn[p[i]] = static_cast<std::uint32_t>(classes - 1);
    }
    cls.swap(cn);
  }
  // Drop the sentinel suffix, which always sorts first.
  return {p.begin() + 1, p.end()};
}

/// Kasai: lcp[k] = LCP(suffix sa[k], suffix sa[k+1]).
std::vector<std::uint32_t> lcp_array(std::span<const Symbol> seq, const std::vector<std::uint32_t>& sa,
                                     const std::vector<std::uint32_t>& rank) {
  const std::size_t n = seq.size();
  std::vector<std::uint32_t> lcp(n > 0 ? n - 1 : 0, 0);
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rank[i] + 1 < n) {
      const std::size_t j = sa[rank[i] + 1];
      while (i + h < n && j + h < n && seq[i + h] == seq[j + h]) ++h;
      lcp[rank[i]] = static_cast<std::uint32_t>(h);
      if (h > 0) --h;
    } else {
      h = 0;
    }
  }
  return lcp;
}

/// Static range-minimum table over an array of uint32.
class RangeMin {
 public:
  explicit RangeMin(std::vector<std::uint32_t> values) {
    const std::size_t n = values.size();
    table_.push_back(std::move(values));
    for (std::size_t w = 1; 2 * w <= n; w <<= 1) {
      const auto& prev = table_.back();
      std::vector<std::uint32_t> next(n - 2 * w + 1);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = std::min(prev[i], prev[i + w]);
      table_.push_back(std::move(next));
    }
  }

  /// Minimum over [lo, hi], inclusive; requires lo <= hi.
  std::uint32_t query(std::size_t lo, std::size_t hi) const {
    const std::size_t len = hi - lo + 1;
    const auto level = static_cast<std::size_t>(std::bit_width(len) - 1);
    return std::min(table_[level][lo], table_[level][hi + 1 - (std::size_t{1} << level)]);
  }

 private:
  std::vector<std::vector<std::uint32_t>> table_;
};

double rate_from_lengths(std::size_t n, const std::vector<std::size_t>& lengths) {
  const auto total = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  return static_cast<double>(n) * std::log2(static_cast<double>(n)) / static_cast<double>(total);
}

}  // namespace

double random_entropy(std::span<const Symbol> sequence) {
  require_nonempty(sequence);
  return std::log2(static_cast<double>(histogram(sequence).size()));
}

double uncorrelated_entropy(std::span<const Symbol> sequence) {
  require_nonempty(sequence);
  const auto counts = histogram(sequence);
  // Sum in count order so the result does not depend on hash iteration.
  std::vector<std::size_t> c;
  c.reserve(counts.size());
  for (const auto& [sym, k] : counts) c.push_back(k);
  std::sort(c.begin(), c.end());
  const double n = static_cast<double>(sequence.size());
  double h = 0.0;
  for (auto k : c) {
    const double p = static_cast<double>(k) / n;
    h -= p * std::log2(p);
  }
  // Clamp rounding excess above the log2(N) bound.
  return std::clamp(h, 0.0, std::log2(static_cast<double>(c.size())));
}

std::vector<std::size_t> lz_match_lengths(std::span<const Symbol> sequence) {
  const std::size_t n = sequence.size();
  std::vector<std::size_t> lengths(n);
  if (n == 0) return lengths;

  const auto sa = suffix_array(sequence);
  std::vector<std::uint32_t> rank(n);
  for (std::size_t k = 0; k < n; ++k) rank[sa[k]] = static_cast<std::uint32_t>(k);
  const RangeMin lcp_min(lcp_array(sequence, sa, rank));
  const RangeMin start_min(sa);

  // True when sequence[i, i+len) occurs at some j with j + len <= i.
  const auto occurs_before = [&](std::size_t i, std::size_t len) {
    const std::size_t r = rank[i];
    // Widen [lo, hi] to every suffix sharing at least `len` symbols with i.
    std::size_t lo = r, hi = r;
    {
      std::size_t a = 0, b = r;  // smallest lo in [a, b] with min lcp[lo, r) >= len
      while (a < b) {
        const std::size_t mid = (a + b) / 2;
        if (lcp_min.query(mid, r - 1) >= len) b = mid; else a = mid + 1;
      }
      lo = a;
    }
    {
      std::size_t a = r, b = n - 1;  // largest hi in [a, b] with min lcp[r, hi) >= len
      while (a < b) {
        const std::size_t mid = (a + b + 1) / 2;
        if (lcp_min.query(r, mid - 1) >= len) a = mid; else b = mid - 1;
      }
      hi = a;
    }
    return static_cast<std::size_t>(start_min.query(lo, hi)) + len <= i;
  };

  std::size_t match = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // A match of length m at i-1 leaves a match of length m-1 at i.
    match = match > 0 ? match - 1 : 0;
    while (i + match < n && occurs_before(i, match + 1)) ++match;
    lengths[i] = match + 1;
  }
  return lengths;
}

std::vector<std::size_t> lz_match_lengths_bruteforce(std::span<const Symbol> sequence) {
  const std::size_t n = sequence.size();
  if (n > kOracleMaxLength) {
    throw DomainError("brute-force match lengths refuse n=" + std::to_string(n) + " > " +
                      std::to_string(kOracleMaxLength));
  }
  std::vector<std::size_t> lengths(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = 1;
    for (;; ++len) {
      if (i + len > n) break;  // every substring starting at i occurs before i
      bool found = false;
      for (std::size_t j = 0; j + len <= i && !found; ++j) {
        found = std::equal(sequence.begin() + static_cast<std::ptrdiff_t>(j),
                           sequence.begin() + static_cast<std::ptrdiff_t>(j + len),
                           sequence.begin() + static_cast<std::ptrdiff_t>(i));
      }
      if (!found) break;
    }
    lengths[i] = len;
  }
  return lengths;
}

double real_entropy_lz(std::span<const Symbol> sequence) {
  if (sequence.size() < 2) throw DomainError("real entropy needs at least 2 events");
  return rate_from_lengths(sequence.size(), lz_match_lengths(sequence));
}

double real_entropy_oracle(std::span<const Symbol> sequence) {
  if (sequence.size() < 2) throw DomainError("real entropy needs at least 2 events");
  return rate_from_lengths(sequence.size(), lz_match_lengths_bruteforce(sequence));
}

double random_entropy(const Trajectory& trajectory) { return random_entropy(encode_locations(trajectory).symbols); }

double uncorrelated_entropy(const Trajectory& trajectory) {
  return uncorrelated_entropy(encode_locations(trajectory).symbols);
}

double real_entropy_lz(const Trajectory& trajectory) { return real_entropy_lz(encode_locations(trajectory).symbols); }

double real_entropy_oracle(const Trajectory& trajectory) {
  return real_entropy_oracle(encode_locations(trajectory).symbols);
}

EntropyProfile entropy_profile(std::string user_id, std::span<const Symbol> sequence) {
  EntropyProfile p;
  p.user_id = std::move(user_id);
  p.s_rand = random_entropy(sequence);
  p.s_unc = uncorrelated_entropy(sequence);
  p.s_real = real_entropy_lz(sequence);
  p.n_unique_locations = histogram(sequence).size();
  p.sequence_length = sequence.size();
  return p;
}

EntropyProfile entropy_profile(const Trajectory& trajectory) {
  return entropy_profile(trajectory.user_id(), encode_locations(trajectory).symbols);
}

}  // namespace mobfgd

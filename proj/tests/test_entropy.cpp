#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mobfgd/entropy.hpp"
#include "mobfgd/synthgen.hpp"

using namespace mobfgd;

namespace {

std::vector<Symbol> iid(std::size_t n, Symbol alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Symbol> pick(0, alphabet - 1);
  std::vector<Symbol> out(n);
  for (auto& s : out) s = pick(rng);
  return out;
}

std::vector<Symbol> periodic(std::size_t n, std::vector<Symbol> cycle) {
  std::vector<Symbol> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = cycle[i % cycle.size()];
  return out;
}

Trajectory as_trajectory(std::initializer_list<const char*> locations) {
  std::vector<Event> events;
  Timestamp t = 1404172800;
  for (const char* l : locations) events.push_back({t += 60, l});
  return Trajectory("u", std::move(events));
}

}  // namespace

TEST_SUITE("entropy") {
  TEST_CASE("random entropy is log2 of the distinct count") {
    CHECK(random_entropy(as_trajectory({"A", "B", "C", "D"})) == 2.0);
    CHECK(random_entropy(as_trajectory({"A", "A", "A"})) == 0.0);
    CHECK(random_entropy(as_trajectory({"A", "A", "B"})) == 1.0);
    for (Symbol k = 1; k < 40; ++k) {
      std::vector<Symbol> seq(k);
      std::iota(seq.begin(), seq.end(), 0);
      CHECK(random_entropy(seq) == std::log2(static_cast<double>(k)));
    }
    CHECK_THROWS_AS(random_entropy(std::vector<Symbol>{}), DomainError);
  }

  TEST_CASE("uncorrelated entropy") {
    CHECK(uncorrelated_entropy(as_trajectory({"A", "A", "B", "B"})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(uncorrelated_entropy(as_trajectory({"A", "A", "A", "A"})) == 0.0);
    CHECK(uncorrelated_entropy(as_trajectory({"A", "A", "A", "B"})) == doctest::Approx(0.811278).epsilon(1e-6));
  }

  TEST_CASE("match lengths follow the definition") {
    CHECK(lz_match_lengths(std::vector<Symbol>{0, 1}) == std::vector<std::size_t>{1, 1});
    CHECK(lz_match_lengths(std::vector<Symbol>{0, 0, 0, 0}) == std::vector<std::size_t>{1, 2, 3, 2});
    CHECK(lz_match_lengths(std::vector<Symbol>{0, 1, 0, 1, 0, 1}) == std::vector<std::size_t>{1, 1, 3, 3, 3, 2});
    CHECK(lz_match_lengths_bruteforce(std::vector<Symbol>{0, 1, 0, 1, 0, 1}) ==
          std::vector<std::size_t>{1, 1, 3, 3, 3, 2});
  }

  TEST_CASE("two-symbol sequence value") {
    // n log2 n / sum = 2 * 1 / 2
    CHECK(real_entropy_lz(std::vector<Symbol>{0, 1}) == doctest::Approx(1.0));
    CHECK(real_entropy_oracle(std::vector<Symbol>{0, 1}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(real_entropy_lz(std::vector<Symbol>{0}), DomainError);
  }

  TEST_CASE("ABABAB agrees exactly with the oracle") {
    const std::vector<Symbol> seq{0, 1, 0, 1, 0, 1};
    CHECK(real_entropy_lz(seq) == real_entropy_oracle(seq));
    CHECK(real_entropy_lz(seq) == doctest::Approx(6.0 * std::log2(6.0) / 13.0));
  }

  TEST_CASE("constant sequences approach zero") {
    double previous = 1e9;
    for (std::size_t n : {100u, 1000u, 10000u}) {
      const double s = real_entropy_lz(std::vector<Symbol>(n, 7));
      CHECK(s < previous);
      previous = s;
    }
    CHECK(real_entropy_lz(std::vector<Symbol>(1000, 0)) < 0.05);
  }

  TEST_CASE("uniform-4 source is within 10% of 2 bits") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const double s = real_entropy_lz(iid(10000, 4, seed));
      CHECK(std::abs(s - 2.0) <= 0.2);
    }
  }

  TEST_CASE("suffix-array lengths equal the brute-force oracle") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 2 + rng() % 300;
      const Symbol alphabet = 1 + static_cast<Symbol>(rng() % 6);
      const auto seq = iid(n, alphabet, rng());
      REQUIRE(lz_match_lengths(seq) == lz_match_lengths_bruteforce(seq));
    }
    for (std::size_t n : {1000u, 5000u}) {
      for (Symbol alphabet : {1u, 2u, 4u, 16u}) {
        const auto seq = iid(n, alphabet, n + alphabet);
        const double fast = real_entropy_lz(seq), slow = real_entropy_oracle(seq);
        CHECK(std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
      }
      const auto cyc = periodic(n, {3, 1, 4, 1, 5});
      CHECK(lz_match_lengths(cyc) == lz_match_lengths_bruteforce(cyc));
    }
  }

  TEST_CASE("the oracle refuses long input") {
    CHECK_THROWS_AS(real_entropy_oracle(std::vector<Symbol>(kOracleMaxLength + 1, 0)), DomainError);
    CHECK_NOTHROW(real_entropy_lz(std::vector<Symbol>(kOracleMaxLength + 1, 0)));
  }

  TEST_CASE("profiles of constant and alternating users") {
    const auto constant = entropy_profile("c", std::vector<Symbol>(1000, 0));
    CHECK(constant.s_rand == 0.0);
    CHECK(constant.s_unc == 0.0);
    CHECK(constant.s_real < 0.05);
    CHECK(constant.sequence_length == 1000);
    CHECK(constant.n_unique_locations == 1);

    const auto alt = entropy_profile("a", periodic(1000, {0, 1}));
    CHECK(alt.s_rand == 1.0);
    CHECK(alt.s_unc == doctest::Approx(1.0));
    CHECK(alt.s_real < 0.5);
    CHECK(alt.s_real == real_entropy_oracle(periodic(1000, {0, 1})));
  }

  TEST_CASE("s_unc <= s_rand exactly on synthetic users") {
    GeneratorConfig config;
    config.n_users = 1000;
    config.seq_length = 400;
    config.seed = 5;
    const auto corpus = generate(config);
    for (const auto& t : corpus.trajectories) {
      const auto p = entropy_profile(t);
      CHECK(p.s_unc <= p.s_rand);
      CHECK(p.s_rand == std::log2(static_cast<double>(p.n_unique_locations)));
    }
  }

  TEST_CASE("relabeling leaves all entropies unchanged") {
    const auto seq = iid(3000, 6, 11);
    const std::vector<Symbol> perm{4, 0, 5, 2, 1, 3};
    std::vector<Symbol> relabeled(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) relabeled[i] = perm[seq[i]] + 100;
    const auto a = entropy_profile("a", seq);
    const auto b = entropy_profile("b", relabeled);
    CHECK(a.s_rand == b.s_rand);
    CHECK(a.s_unc == doctest::Approx(b.s_unc).epsilon(1e-14));
    CHECK(a.s_real == b.s_real);
  }
}

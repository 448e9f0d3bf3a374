#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "mobfgd/interval_stats.hpp"
#include "mobfgd/synthgen.hpp"

using namespace mobfgd;

namespace {

GeneratorConfig single_user(double rho, std::size_t locations, std::size_t period, std::size_t length,
                            std::uint64_t seed = 1) {
  GeneratorConfig config;
  config.n_users = 1;
  config.seq_length = length;
  config.n_locations = locations;
  config.tour_period = period;
  config.noise_min = config.noise_max = rho;
  config.seed = seed;
  return config;
}

std::string as_text(const SyntheticCorpus& corpus) {
  std::ostringstream out;
  write_trajectories(out, corpus.trajectories);
  return out.str();
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("noise-free period-2 tour") {
    const auto corpus = generate(single_user(0.0, 16, 2, 1000));
    REQUIRE(corpus.trajectories.size() == 1);
    const auto& t = corpus.trajectories.front();
    REQUIRE(t.events().size() == 1000);
    for (std::size_t i = 2; i < t.events().size(); ++i) CHECK(t.events()[i].location == t.events()[i - 2].location);
    CHECK(t.events()[0].location != t.events()[1].location);
    CHECK(real_entropy_lz(t) < 0.05);
    CHECK(evaluate_prequential(t).accuracy >= 0.99);
  }

  TEST_CASE("pure noise on four locations") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto corpus = generate(single_user(1.0, 4, 4, 10000, seed));
      const auto& t = corpus.trajectories.front();
      CHECK(std::abs(real_entropy_lz(t) - 2.0) <= 0.2);
      CHECK(std::abs(evaluate_prequential(t).accuracy - 0.25) <= 0.02);
    }
  }

  TEST_CASE("hourly timestamps") {
    const auto corpus = generate(single_user(0.5, 8, 4, 48));
    const auto& events = corpus.trajectories.front().events();
    for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i].time - events[i - 1].time == 3600);
    CHECK(corpus.trajectories.front().active_days() == 2);
  }

  TEST_CASE("same config gives identical corpora at any thread count") {
    GeneratorConfig config;
    config.n_users = 64;
    config.seq_length = 300;
    config.seed = 77;
    const auto reference = as_text(generate(config));
    CHECK(as_text(generate(config)) == reference);
    CHECK(as_text(generate(config, 4)) == reference);
    config.seed = 78;
    CHECK(as_text(generate(config)) != reference);
  }

  TEST_CASE("invalid configurations are rejected") {
    GeneratorConfig config;
    config.n_locations = 1;
    CHECK_THROWS_AS(generate(config), DomainError);
    config = {};
    config.tour_period = 17;
    CHECK_THROWS_AS(generate(config), DomainError);
    config = {};
    config.tour_period = 0;
    CHECK_THROWS_AS(generate(config), DomainError);
    config = {};
    config.noise_max = 1.5;
    CHECK_THROWS_AS(generate(config), DomainError);
    config = {};
    config.noise_min = 0.6;
    config.noise_max = 0.4;
    CHECK_THROWS_AS(generate(config), DomainError);
  }

  TEST_CASE("per-user noise lies in the configured range") {
    GeneratorConfig config;
    config.n_users = 200;
    config.seq_length = 10;
    config.noise_min = 0.2;
    config.noise_max = 0.3;
    const auto corpus = generate(config);
    REQUIRE(corpus.noise.size() == 200);
    for (double rho : corpus.noise) {
      CHECK(rho >= 0.2);
      CHECK(rho <= 0.3);
    }
  }

  TEST_CASE("sweep rows, rank correlation and spread") {
    GeneratorConfig config;
    config.n_users = 400;
    config.seq_length = 2000;
    config.seed = 3;
    const auto rows = entropy_accuracy_sweep(config);
    REQUIRE(rows.size() == 400);
    std::vector<double> s, acc;
    for (const auto& r : rows) {
      CHECK(r.entropy.user_id == r.prediction.user_id);
      s.push_back(r.entropy.s_real);
      acc.push_back(r.prediction.accuracy);
    }
    CHECK(spearman_correlation(s, acc) < -0.8);

    const auto binned = bin_values(s, acc);
    for (const auto& bucket : binned.accuracies) {
      if (bucket.size() < 2) continue;
      double mean = 0;
      for (double a : bucket) mean += a / bucket.size();
      double var = 0;
      for (double a : bucket) var += (a - mean) * (a - mean);
      CHECK(var > 0.0);
    }
  }

  TEST_CASE("spearman correlation") {
    const std::vector<double> x{1, 2, 3, 4, 5}, up{2, 4, 6, 8, 10}, down{5, 4, 3, 2, 1};
    CHECK(spearman_correlation(x, up) == doctest::Approx(1.0));
    CHECK(spearman_correlation(x, down) == doctest::Approx(-1.0));
    const std::vector<double> tied{1, 1, 2, 2, 3};
    CHECK(spearman_correlation(x, tied) == doctest::Approx(0.9486832981).epsilon(1e-9));
    CHECK_THROWS_AS(spearman_correlation(std::vector<double>{1}, std::vector<double>{1}), DomainError);
    CHECK_THROWS_AS(spearman_correlation(x, std::vector<double>{1, 2}), DomainError);
  }

  TEST_CASE("mean entropy rises with noise") {
    double previous = -1.0;
    for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      GeneratorConfig config;
      config.n_users = 40;
      config.seq_length = 2000;
      config.noise_min = config.noise_max = rho;
      config.seed = 11;
      double mean = 0;
      for (const auto& t : generate(config).trajectories) mean += real_entropy_lz(t) / 40.0;
      CHECK(mean > previous);
      previous = mean;
    }
  }

  TEST_CASE("entropy coverage of the full-range corpus") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      GeneratorConfig config;
      config.seed = seed;
      const auto corpus = generate(config);
      std::vector<double> s(corpus.trajectories.size());
      parallel_for(s.size(), 0, [&](std::size_t i) { s[i] = real_entropy_lz(corpus.trajectories[i]); });
      const std::vector<double> dummy(s.size(), 0.5);
      const auto binned = bin_values(s, dummy);
      std::size_t populated = 0;
      for (const auto& bucket : binned.accuracies) populated += bucket.size() >= 10 ? 1 : 0;
      MESSAGE("seed " << seed << ": " << populated << " intervals with >= 10 users");
      CHECK(populated >= 20);
    }
  }
}

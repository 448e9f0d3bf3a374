#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mobfgd/interval_stats.hpp"

using namespace mobfgd;

namespace {

std::vector<double> truncated_normal(std::size_t n, double mu, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(mu, sigma);
  std::vector<double> out;
  while (out.size() < n) {
    const double x = normal(rng);
    if (x >= 0.0 && x <= 1.0) out.push_back(x);
  }
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("interval_stats") {
  TEST_CASE("half-open interval membership") {
    const EntropyBinning b;
    CHECK(b.upper_limit() == doctest::Approx(4.2));
    REQUIRE(b.index_of(0.049));
    CHECK(b.label(*b.index_of(0.049)) == doctest::Approx(0.05));
    REQUIRE(b.index_of(2.50));
    CHECK(b.label(*b.index_of(2.50)) == doctest::Approx(2.55));
    CHECK(*b.index_of(0.0) == 0);
    CHECK(*b.index_of(0.05) == 1);
    CHECK(*b.index_of(4.1999) == 83);
    CHECK_FALSE(b.index_of(4.2));
    CHECK_FALSE(b.index_of(4.25));
    CHECK_FALSE(b.index_of(-0.01));
    for (std::size_t i = 0; i < b.n_intervals; ++i) {
      CHECK(*b.index_of(b.lower(i)) == i);
      CHECK(*b.index_of_label(b.label(i)) == i);
    }
    CHECK_FALSE(b.index_of_label(2.548));
    CHECK_FALSE(b.index_of_label(0.0));
  }

  TEST_CASE("binning counts spill") {
    const std::vector<double> s{0.049, 2.50, 4.25, -1.0, 3.0};
    const std::vector<double> acc{0.9, 0.5, 0.1, 1.0, 0.4};
    const auto binned = bin_values(s, acc);
    CHECK(binned.spill_above == 1);
    CHECK(binned.spill_below == 1);
    CHECK(binned.binned() == 3);
    CHECK(binned.accuracies[0] == std::vector<double>{0.9});
    CHECK(binned.accuracies[50] == std::vector<double>{0.5});
  }

  TEST_CASE("bin_users requires matching users") {
    std::vector<EntropyProfile> profiles(2);
    std::vector<PredictionResult> results(2);
    profiles[0].user_id = results[0].user_id = "a";
    profiles[1].user_id = "b";
    results[1].user_id = "c";
    CHECK_THROWS_AS(bin_users(profiles, results), DomainError);
    results[1].user_id = "b";
    profiles[1].s_real = 1.01;
    results[1].accuracy = 0.7;
    const auto binned = bin_users(profiles, results);
    CHECK(binned.accuracies[20] == std::vector<double>{0.7});
  }

  TEST_CASE("partition property") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> s(-0.5, 5.0), a(0.0, 1.0);
    std::vector<double> es(5000), as(5000);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < es.size(); ++i) {
      es[i] = s(rng);
      as[i] = a(rng);
      if (es[i] >= 0.0 && es[i] < 4.2) ++inside;
    }
    const auto binned = bin_values(es, as);
    CHECK(binned.binned() == inside);
    CHECK(binned.binned() + binned.spill() == es.size());
  }

  TEST_CASE("KDE peak of a narrow normal") {
    const auto samples = truncated_normal(10000, 0.5, 0.05, 42);
    const auto grid = kde(samples);
    REQUIRE(grid);
    CHECK(grid->x.size() == 256);
    const auto peak = std::max_element(grid->density.begin(), grid->density.end());
    const double expected = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * 0.05);
    CHECK(std::abs(*peak - expected) <= 0.05 * expected);
    CHECK(std::abs(grid->x[static_cast<std::size_t>(peak - grid->density.begin())] - 0.5) <= 0.02);
  }

  TEST_CASE("KDE mass is 1 within tolerance") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> samples(2 + rng() % 500);
      const double lo = u(rng), span = u(rng) * (1.0 - lo);
      for (auto& x : samples) x = lo + span * u(rng);
      const auto grid = kde(samples);
      if (!grid) continue;
      const double mass = trapezoid_mass(*grid);
      CHECK(mass >= 0.98);
      CHECK(mass <= 1.02);
      CHECK(grid->raw_mass > 0.0);
    }
    const auto interior = kde(truncated_normal(2000, 0.5, 0.05, 1), {.normalize = false});
    REQUIRE(interior);
    CHECK(trapezoid_mass(*interior) == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("degenerate KDE input") {
    CHECK_FALSE(kde(std::vector<double>{0.3, 0.3, 0.3}));
    CHECK_FALSE(kde(std::vector<double>{0.3}));
    CHECK_FALSE(kde(std::vector<double>{}));
  }

  TEST_CASE("Silverman bandwidth") {
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5};
    // sd = 0.158114, IQR = 0.2 -> min(0.158114, 0.149254)
    CHECK(silverman_bandwidth(x) == doctest::Approx(0.9 * (0.2 / 1.34) * std::pow(5.0, -0.2)).epsilon(1e-12));
    const std::vector<double> flat_iqr{0.5, 0.5, 0.5, 0.5, 0.9};
    const double sd = std::sqrt((4 * 0.08 * 0.08 + 0.32 * 0.32) / 4.0);
    CHECK(silverman_bandwidth(flat_iqr) == doctest::Approx(0.9 * sd * std::pow(5.0, -0.2)).epsilon(1e-12));
  }

  TEST_CASE("moment fallback for small samples") {
    const std::vector<double> two{0.5, 0.7};
    const auto fit = fit_interval_gaussian(two, nullptr);
    CHECK(fit.method == FitMethod::Moments);
    CHECK(fit.mu == doctest::Approx(0.6));
    CHECK(fit.sigma == doctest::Approx(0.141421).epsilon(1e-6));
    const auto grid = kde(two);
    CHECK(fit_interval_gaussian(two, grid ? &*grid : nullptr).method == FitMethod::Moments);

    const auto one = fit_interval_gaussian(std::vector<double>{0.8}, nullptr);
    CHECK(one.mu == 0.8);
    CHECK(one.sigma == 1e-4);
    CHECK_THROWS_AS(fit_interval_gaussian(std::vector<double>{}, nullptr), DomainError);
  }

  TEST_CASE("KDE least squares recovers generator parameters") {
    const auto samples = truncated_normal(10000, 0.5, 0.05, 42);
    const auto grid = kde(samples);
    REQUIRE(grid);
    const auto fit = fit_interval_gaussian(samples, &*grid);
    CHECK(fit.method == FitMethod::KdeLeastSquares);
    CHECK(std::abs(fit.mu - 0.5) <= 0.01);
    CHECK(std::abs(fit.sigma - 0.05) <= 0.01);
  }

  TEST_CASE("KS statistic of one point") {
    const auto r = ks_test(std::vector<double>{0.0}, 0.0, 1.0);
    CHECK(r.statistic == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("KS statistic on the plug-in quantile grid") {
    for (std::size_t m : {5u, 20u, 100u}) {
      std::vector<double> x(m);
      for (std::size_t i = 0; i < m; ++i) x[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(m));
      CHECK(ks_test(x, 0.0, 1.0).statistic == doctest::Approx(0.5 / static_cast<double>(m)).epsilon(1e-9));
    }
  }

  TEST_CASE("KS calibration") {
    int passes = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.3, 0.1);
      std::vector<double> x(1000);
      for (auto& v : x) v = normal(rng);
      const auto a = ks_test(x, 0.3, 0.1);
      const auto b = ks_test(x, 0.3, 0.1);
      CHECK(a.pass == b.pass);
      CHECK(a.p_value == b.p_value);
      passes += a.pass ? 1 : 0;
    }
    CHECK(passes >= 45);
  }

  TEST_CASE("Kolmogorov survival function") {
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(kolmogorov_survival(1.2238) == doctest::Approx(0.10).epsilon(1e-3));
    CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.963945).epsilon(1e-5));
    // both series agree where they hand over
    CHECK(kolmogorov_survival(1.18 - 1e-12) == doctest::Approx(kolmogorov_survival(1.18)).epsilon(1e-9));
    CHECK(kolmogorov_survival(5.0) < 1e-20);
  }

  TEST_CASE("KS rejects a wrong distribution") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.5, 0.1);
    std::vector<double> x(1000);
    for (auto& v : x) v = normal(rng);
    CHECK_FALSE(ks_test(x, 0.6, 0.1).pass);
    CHECK_THROWS_AS(ks_test(x, 0.5, 0.0), DomainError);
    CHECK_THROWS_AS(ks_test(std::vector<double>{}, 0.5, 0.1), DomainError);
  }

  TEST_CASE("mse") {
    const std::vector<double> a{0.1, 0.2, 0.3};
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0}) == 0.5);
    const std::vector<double> o{1, 2, 3, 4}, p{1.5, 1, 3.2, 5};
    const std::vector<double> o2{4, 1, 3, 2}, p2{5, 1.5, 3.2, 1};
    CHECK(mse(o, p) == doctest::Approx(mse(o2, p2)).epsilon(1e-15));
    CHECK_THROWS_AS(mse(std::vector<double>{}, std::vector<double>{}), DomainError);
    CHECK_THROWS_AS(mse(o, a), DomainError);
  }

  TEST_CASE("fit_intervals covers populated intervals in order") {
    std::vector<double> s, acc;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> noise(0.0, 0.03);
    for (int label : {3, 10, 40}) {
      for (int i = 0; i < 50; ++i) {
        s.push_back(0.05 * label + 0.01);
        acc.push_back(std::clamp(0.9 - 0.01 * label + noise(rng), 0.0, 1.0));
      }
    }
    s.push_back(3.0);
    acc.push_back(0.42);
    const auto fits = fit_intervals(bin_values(s, acc), {.threads = 2});
    REQUIRE(fits.size() == 4);
    CHECK(fits[0].index == 3);
    CHECK(fits[0].s == doctest::Approx(0.2));
    CHECK(fits[0].user_count == 50);
    CHECK(fits[0].method == FitMethod::KdeLeastSquares);
    REQUIRE(fits[0].kde);
    CHECK(trapezoid_mass(*fits[0].kde) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(fits[2].index == 40);
    CHECK(fits[3].user_count == 1);
    CHECK(fits[3].mu == 0.42);
    CHECK(fits[3].sigma == 1e-4);
    CHECK(fits[0].mu > fits[1].mu);
    const auto serial = fit_intervals(bin_values(s, acc));
    for (std::size_t i = 0; i < fits.size(); ++i) {
      CHECK(fits[i].mu == serial[i].mu);
      CHECK(fits[i].ks.statistic == serial[i].ks.statistic);
    }
  }
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "mobfgd/fgd_model.hpp"

using namespace mobfgd;

namespace {

FunctionalGaussianModel reference_model(bool truncated = false) {
  LinearFit mu;
  mu.a = -0.1726;
  mu.b = 0.9845;
  GaussianCurveFit sigma;
  sigma.amplitude = 0.09415;
  sigma.center = 2.548;
  sigma.width = 1.96;
  return FunctionalGaussianModel(mu, sigma, {}, truncated, {"fixture", "1970-01-01T00:00:00Z", "mobfgd 0.1.0"});
}

double peak(double sigma) { return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma); }

}  // namespace

TEST_SUITE("fgd_model") {
  TEST_CASE("mu at reference labels") {
    const auto model = reference_model();
    CHECK(std::abs(model.mu_of(2.55) - 0.54437) < 1e-9);
    CHECK(std::abs(model.mu_of(0.05) - 0.97587) < 1e-9);

    LinearFit flat;
    flat.b = 0.6;
    const FunctionalGaussianModel constant(flat, reference_model().sigma_fit());
    for (double s : constant.domain()) CHECK(constant.mu_of(s) == 0.6);
  }

  TEST_CASE("sigma identities") {
    const auto model = reference_model();
    CHECK(std::abs(model.sigma_of(2.548, true) - 0.09415) < 1e-15);
    CHECK(std::abs(model.sigma_of(2.55) - 0.09415 * std::exp(-std::pow(0.002 / 1.96, 2))) < 1e-15);
    CHECK(std::abs(model.sigma_of(2.55) - 0.09415) < 1e-6);
    const double at_edge = 0.09415 / std::numbers::e;
    CHECK(model.sigma_of(2.548 + 1.96, true) == doctest::Approx(at_edge).epsilon(1e-12));
    CHECK(model.sigma_of(2.548 - 1.96, true) == doctest::Approx(at_edge).epsilon(1e-12));
  }

  TEST_CASE("zero amplitude is rejected") {
    GaussianCurveFit sigma;
    sigma.amplitude = 0.0;
    sigma.center = 2.5;
    sigma.width = 2.0;
    CHECK_THROWS_AS(FunctionalGaussianModel(LinearFit{}, sigma), DomainError);
    sigma.amplitude = 0.1;
    sigma.width = 0.0;
    CHECK_THROWS_AS(FunctionalGaussianModel(LinearFit{}, sigma), DomainError);
  }

  TEST_CASE("pdf at the mean") {
    const auto model = reference_model();
    CHECK(std::abs(model.pdf(0.54437, 2.55) - 4.2372) < 1e-3);
  }

  TEST_CASE("peak height at every label") {
    const auto model = reference_model();
    const auto labels = model.domain();
    REQUIRE(labels.size() == 84);
    for (double s : labels) {
      const double mu = model.mu_of(s), sigma = model.sigma_of(s);
      CHECK(std::abs(model.pdf(mu, s) - peak(sigma)) < 1e-9);
      const double shoulder = peak(sigma) * std::exp(-0.5);
      CHECK(model.pdf(mu + sigma, s) == doctest::Approx(shoulder).epsilon(1e-12));
      CHECK(model.pdf(mu - sigma, s) == doctest::Approx(shoulder).epsilon(1e-12));
    }
  }

  TEST_CASE("normalization and half mass below the mean") {
    const auto model = reference_model();
    for (double s : {0.05, 1.0, 2.55, 4.2}) {
      const double mu = model.mu_of(s), sigma = model.sigma_of(s);
      const auto density = [&](double x) { return model.pdf(x, s); };
      CHECK(std::abs(adaptive_simpson(density, mu - 10 * sigma, mu + 10 * sigma) - 1.0) < 1e-6);
      CHECK(std::abs(adaptive_simpson(density, mu - 12 * sigma, mu) - 0.5) < 1e-6);
      CHECK(std::abs(model.cdf(mu, s) - 0.5) < 1e-12);
    }
  }

  TEST_CASE("mu is affine and decreasing") {
    const auto model = reference_model();
    const auto labels = model.domain();
    for (std::size_t i = 0; i + 2 < labels.size(); i += 3) {
      const double s1 = labels[i], s2 = labels[i + 2], mid = labels[i + 1];
      CHECK(model.mu_of(s1) + model.mu_of(s2) == doctest::Approx(2 * model.mu_of(mid)).epsilon(1e-12));
    }
    for (std::size_t i = 1; i < labels.size(); ++i) CHECK(model.mu_of(labels[i]) < model.mu_of(labels[i - 1]));
  }

  TEST_CASE("off-grid labels are out of domain") {
    const auto model = reference_model();
    CHECK_THROWS_AS(model.mu_of(2.56), OutOfDomain);
    CHECK_THROWS_AS(model.sigma_of(0.0), OutOfDomain);
    CHECK_THROWS_AS(model.pdf(0.5, 4.25), OutOfDomain);
    CHECK_THROWS_AS(model.probability(0.0, 1.0, -0.05), OutOfDomain);
    CHECK_NOTHROW(model.pdf(0.5, 2.56, true));
    CHECK_NOTHROW(model.mu_of(2.55));
    CHECK_NOTHROW(model.mu_of(0.05 * 7));
  }

  TEST_CASE("sampling") {
    const auto model = reference_model();
    const auto draws = model.sample(2.55, 100000, 42);
    REQUIRE(draws.size() == 100000);
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
    CHECK(std::abs(mean - 0.54437) < 0.002);
    CHECK(model.sample(2.55, 1000, 7) == model.sample(2.55, 1000, 7));
    CHECK(model.sample(2.55, 1000, 7) != model.sample(2.55, 1000, 8));

    const auto truncated = reference_model(true);
    for (double s : {0.05, 4.2}) {
      for (double x : truncated.sample(s, 20000, 3)) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
      }
    }
  }

  TEST_CASE("truncated variant") {
    const auto model = reference_model(true);
    for (double s : {0.05, 0.5, 2.55, 4.2}) {
      CHECK(std::abs(model.probability(0.0, 1.0, s) - 1.0) < 1e-6);
      CHECK(model.cdf(1.0, s) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // near s = 0.05 the mean sits close to 1, so truncation must lift the density
    CHECK(model.pdf(0.97, 0.05) > reference_model().pdf(0.97, 0.05));
    CHECK_THROWS_AS(model.pdf(1.2, 0.05), OutOfDomain);
    CHECK_THROWS_AS(model.pdf(-0.01, 0.05), OutOfDomain);
  }

  TEST_CASE("one-sigma mass of the untruncated model") {
    const auto model = reference_model();
    for (double s : {0.05, 2.55, 4.2}) {
      const double mu = model.mu_of(s), sigma = model.sigma_of(s);
      CHECK(std::abs(model.probability(mu - sigma, mu + sigma, s) - 0.682689492) < 1e-4);
    }
  }

  TEST_CASE("serialization round trip") {
    for (bool truncated : {false, true}) {
      const auto model = reference_model(truncated);
      const auto text = model.serialize();
      const auto back = FunctionalGaussianModel::deserialize(text);
      CHECK(back == model);
      CHECK(back.serialize() == text);
      CHECK(back.mu_fit().a == -0.1726);
      CHECK(back.mu_fit().b == 0.9845);
      CHECK(back.sigma_fit().amplitude == 0.09415);
      CHECK(back.sigma_fit().center == 2.548);
      CHECK(back.sigma_fit().width == 1.96);
      CHECK(back.truncated() == truncated);
      CHECK(back.provenance() == model.provenance());
    }

    LinearFit mu;
    mu.a = -0.17753333333333332;
    mu.b = 0.9924988888888887;
    GaussianCurveFit sigma;
    sigma.amplitude = 0.095270812345678901;
    sigma.center = 2.6887;
    sigma.width = 2.0769000000000002;
    const FunctionalGaussianModel odd(mu, sigma);
    CHECK(FunctionalGaussianModel::deserialize(odd.serialize()) == odd);
  }

  TEST_CASE("missing or malformed fields are named") {
    auto doc = reference_model().to_json();
    doc["sigma"].erase("w");
    try {
      FunctionalGaussianModel::from_json(doc);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("sigma.w") != std::string::npos);
    }

    auto bad = reference_model().to_json();
    bad["mu"]["a"] = "steep";
    try {
      FunctionalGaussianModel::from_json(bad);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("mu.a") != std::string::npos);
    }
    CHECK_THROWS_AS(FunctionalGaussianModel::deserialize("{not json"), ParseError);
    auto zero = reference_model().to_json();
    zero["sigma"]["A"] = 0.0;
    CHECK_THROWS_AS(FunctionalGaussianModel::from_json(zero), ParseError);
  }

  TEST_CASE("adaptive Simpson") {
    CHECK(adaptive_simpson([](double x) { return x * x; }, 0.0, 3.0) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) ==
          doctest::Approx(2.0).epsilon(1e-9));
  }
}

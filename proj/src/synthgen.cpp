#include "mobfgd/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace mobfgd {

namespace {

std::string padded(char prefix, std::size_t value, std::size_t max_value) {
  const auto width = std::to_string(max_value).size();
  auto digits = std::to_string(value);
  return std::string(1, prefix) + std::string(width - digits.size(), '0') + digits;
}

std::mt19937_64 user_stream(std::uint64_t seed, std::size_t user) {
  const auto u = static_cast<std::uint64_t>(user);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(u >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_users == 0) throw DomainError("generator: n_users must be positive");
  if (seq_length == 0) throw DomainError("generator: seq_length must be positive");
  if (n_locations < 2) throw DomainError("generator: n_locations must be at least 2");
  if (tour_period < 1 || tour_period > n_locations) {
    throw DomainError("generator: tour_period must lie in [1, n_locations]");
  }
  if (!(noise_min >= 0.0 && noise_max <= 1.0 && noise_min <= noise_max)) {
    throw DomainError("generator: noise range must satisfy 0 <= min <= max <= 1");
  }
  if (step_seconds <= 0) throw DomainError("generator: step_seconds must be positive");
}

SyntheticCorpus generate(const GeneratorConfig& config, unsigned threads) {
  config.validate();
  std::vector<std::string> location_ids(config.n_locations);
  for (std::size_t l = 0; l < config.n_locations; ++l) location_ids[l] = padded('L', l, config.n_locations - 1);

  std::vector<std::optional<Trajectory>> users(config.n_users);
  std::vector<double> noise(config.n_users);
  parallel_for(config.n_users, threads, [&](std::size_t u) {
    auto rng = user_stream(config.seed, u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any_location(0, config.n_locations - 1);

    const double rho = config.noise_min + (config.noise_max - config.noise_min) * unit(rng);
    std::vector<std::size_t> pool(config.n_locations);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<std::size_t> tour(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(config.tour_period));

    std::vector<Event> events;
    events.reserve(config.seq_length);
    for (std::size_t t = 0; t < config.seq_length; ++t) {
      std::size_t loc = tour[t % config.tour_period];
      if (unit(rng) < rho) loc = any_location(rng);
      events.push_back({config.start_time + static_cast<Timestamp>(t) * config.step_seconds, location_ids[loc]});
    }
    noise[u] = rho;
    users[u].emplace(padded('u', u, config.n_users - 1), std::move(events));
  });

  SyntheticCorpus corpus;
  corpus.trajectories.reserve(config.n_users);
  for (auto& u : users) corpus.trajectories.push_back(std::move(*u));
  corpus.noise = std::move(noise);
  return corpus;
}

std::vector<SweepRow> entropy_accuracy_sweep(const GeneratorConfig& config, const EvaluationOptions& evaluation,
                                             unsigned threads) {
  const auto corpus = generate(config, threads);
  std::vector<SweepRow> rows(corpus.trajectories.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const auto& traj = corpus.trajectories[i];
    const auto symbols = encode_locations(traj).symbols;
    rows[i].entropy = entropy_profile(traj.user_id(), symbols);
    rows[i].prediction = evaluate_prequential(traj.user_id(), symbols, evaluation);
    rows[i].noise = corpus.noise[i];
  });
  return rows;
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("Spearman correlation needs two equal lists of >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mobfgd

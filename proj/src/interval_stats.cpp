#include "mobfgd/interval_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mobfgd/curve_fit.hpp"

namespace mobfgd {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation with denominator m - 1.
double sd_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

/// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

std::optional<std::size_t> EntropyBinning::index_of(double s) const noexcept {
  if (!(s >= 0.0) || s >= upper_limit()) return std::nullopt;
  auto idx = static_cast<std::size_t>(std::floor(s / width));
  // Align with the boundaries as computed by lower().
  while (idx > 0 && s < lower(idx)) --idx;
  while (idx + 1 < n_intervals && s >= lower(idx + 1)) ++idx;
  return std::min(idx, n_intervals - 1);
}

std::optional<std::size_t> EntropyBinning::index_of_label(double s) const noexcept {
  const double n = std::round(s / width);
  if (n < 1.0 || n > static_cast<double>(n_intervals)) return std::nullopt;
  const auto idx = static_cast<std::size_t>(n) - 1;
  if (std::abs(label(idx) - s) > 1e-9) return std::nullopt;
  return idx;
}

std::size_t BinnedAccuracies::binned() const noexcept {
  std::size_t total = 0;
  for (const auto& bin : accuracies) total += bin.size();
  return total;
}

BinnedAccuracies bin_values(std::span<const double> entropies, std::span<const double> accuracies,
                            const EntropyBinning& binning) {
  if (entropies.size() != accuracies.size()) throw DomainError("entropy and accuracy lists differ in length");
  if (!(binning.width > 0.0) || binning.n_intervals == 0) throw DomainError("invalid entropy binning");
  BinnedAccuracies out;
  out.binning = binning;
  out.accuracies.resize(binning.n_intervals);
  for (std::size_t i = 0; i < entropies.size(); ++i) {
    const double s = entropies[i];
    if (const auto idx = binning.index_of(s)) {
      out.accuracies[*idx].push_back(accuracies[i]);
    } else if (s >= binning.upper_limit()) {
      ++out.spill_above;
    } else {
      ++out.spill_below;
    }
  }
  return out;
}

BinnedAccuracies bin_users(std::span<const EntropyProfile> profiles, std::span<const PredictionResult> results,
                           const EntropyBinning& binning) {
  if (profiles.size() != results.size()) throw DomainError("profile and prediction lists differ in length");
  std::vector<double> s(profiles.size()), acc(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (profiles[i].user_id != results[i].user_id) {
      throw DomainError("user mismatch at row " + std::to_string(i) + ": '" + profiles[i].user_id + "' vs '" +
                        results[i].user_id + "'");
    }
    s[i] = profiles[i].s_real;
    acc[i] = results[i].accuracy;
  }
  return bin_values(s, acc, binning);
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) return 0.0;
  const double sd = sd_of(samples);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

double trapezoid_mass(const KdeGrid& grid) {
  double acc = 0.0;
  for (std::size_t j = 1; j < grid.x.size(); ++j) {
    acc += 0.5 * (grid.density[j] + grid.density[j - 1]) * (grid.x[j] - grid.x[j - 1]);
  }
  return acc;
}

std::optional<KdeGrid> kde(std::span<const double> samples, const KdeOptions& options) {
  if (samples.size() < 2 || options.grid_size < 2) return std::nullopt;
  const double h = silverman_bandwidth(samples);
  if (!(h > 0.0)) return std::nullopt;

  KdeGrid grid;
  grid.bandwidth = h;
  grid.x.resize(options.grid_size);
  grid.density.assign(options.grid_size, 0.0);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t j = 0; j < options.grid_size; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(options.grid_size - 1);
    grid.x[j] = x;
    double acc = 0.0;
    for (double xi : samples) {
      const double z = (x - xi) / h;
      acc += std::exp(-0.5 * z * z);
    }
    grid.density[j] = acc * norm;
  }
  grid.raw_mass = trapezoid_mass(grid);
  if (options.normalize && grid.raw_mass > 0.0) {
    for (auto& d : grid.density) d /= grid.raw_mass;
  }
  return grid;
}

std::string_view to_string(FitMethod method) {
  return method == FitMethod::KdeLeastSquares ? "kde-least-squares" : "moments";
}

IntervalGaussian fit_interval_gaussian(std::span<const double> accuracies, const KdeGrid* grid,
                                       const IntervalGaussianOptions& options) {
  if (accuracies.empty()) throw DomainError("cannot fit an empty interval");
  IntervalGaussian moments;
  moments.mu = mean_of(accuracies);
  moments.sigma = std::max(sd_of(accuracies), options.sigma_floor);
  moments.method = FitMethod::Moments;

  if (accuracies.size() < options.min_kde_count || grid == nullptr || grid->x.size() < 3) return moments;
  const double spacing = grid->x[1] - grid->x[0];
  if (grid->bandwidth < spacing) return moments;  // the grid cannot resolve a narrower kernel

  std::vector<DataPoint> points(grid->x.size());
  for (std::size_t j = 0; j < points.size(); ++j) points[j] = {grid->x[j], grid->density[j]};
  try {
    const auto fit = lm_gaussian_pdf(points, moments.mu, moments.sigma);
    if (fit.solver.converged && std::isfinite(fit.mu) && fit.mu >= 0.0 && fit.mu <= 1.0 && fit.sigma > 0.0) {
      return {fit.mu, std::max(fit.sigma, options.sigma_floor), FitMethod::KdeLeastSquares};
    }
  } catch (const DomainError&) {
  }
  return moments;
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double kTermTolerance = 1e-10;
  if (lambda < 1.18) {
    // P(K <= lambda) = sqrt(2 pi) / lambda * sum exp(-(2j-1)^2 pi^2 / (8 lambda^2))
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int j = 1; j < 1000; ++j) {
      const double odd = 2.0 * j - 1.0;
      const double term = std::exp(-odd * odd * c);
      cdf += term;
      if (term < kTermTolerance) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  // Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2)
  double q = 0.0;
  for (int j = 1; j < 1000; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += (j % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < kTermTolerance) break;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> samples, double mu, double sigma, double alpha) {
  if (samples.empty()) throw DomainError("KS test needs at least one sample");
  if (!(sigma > 0.0)) throw DomainError("KS test needs sigma > 0");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - mu) / sigma);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  KsResult out;
  out.statistic = d;
  out.p_value = kolmogorov_survival(std::sqrt(m) * d);
  out.pass = out.p_value > alpha;
  return out;
}

double mse(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.empty() || observed.size() != predicted.size()) {
    throw DomainError("MSE needs two non-empty lists of equal length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - predicted[i];
    acc += d * d;
  }
  return acc / static_cast<double>(observed.size());
}

std::vector<IntervalFit> fit_intervals(const BinnedAccuracies& binned, const IntervalFitOptions& options) {
  std::vector<std::size_t> populated;
  for (std::size_t i = 0; i < binned.accuracies.size(); ++i) {
    if (!binned.accuracies[i].empty()) populated.push_back(i);
  }
  std::vector<IntervalFit> fits(populated.size());
  parallel_for(populated.size(), options.threads, [&](std::size_t k) {
    const std::size_t idx = populated[k];
    const auto& acc = binned.accuracies[idx];
    IntervalFit& fit = fits[k];
    fit.index = idx;
    fit.s = binned.binning.label(idx);
    fit.user_count = acc.size();
    fit.kde = kde(acc, options.kde);
    const auto g = fit_interval_gaussian(acc, fit.kde ? &*fit.kde : nullptr, options.gaussian);
    fit.mu = g.mu;
    fit.sigma = g.sigma;
    fit.method = g.method;
    fit.ks = ks_test(acc, fit.mu, fit.sigma, options.alpha);
  });
  return fits;
}

}  // namespace mobfgd

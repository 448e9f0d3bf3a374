#ifndef MOBFGD_INTERVAL_STATS_HPP
#define MOBFGD_INTERVAL_STATS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mobfgd/common.hpp"
#include "mobfgd/entropy.hpp"
#include "mobfgd/markov.hpp"

namespace mobfgd {

/// Half-open entropy intervals [width*(n-1), width*n), n = 1..count, each
/// labelled by its upper bound width*n.
struct EntropyBinning {
  double width = 0.05;
  std::size_t n_intervals = 84;

  /// Label of the zero-based interval `index`, i.e. width * (index + 1).
  double label(std::size_t index) const noexcept { return width * static_cast<double>(index + 1); }
  double lower(std::size_t index) const noexcept { return width * static_cast<double>(index); }
  double upper_limit() const noexcept { return width * static_cast<double>(n_intervals); }
  /// Interval holding s, or nullopt when s < 0 or s >= upper_limit().
  std::optional<std::size_t> index_of(double s) const noexcept;
  /// Index whose label equals s to within 1e-9, if any.
  std::optional<std::size_t> index_of_label(double s) const noexcept;
};

struct BinnedAccuracies {
  EntropyBinning binning;
  std::vector<std::vector<double>> accuracies;  ///< one list per interval, input order
  std::size_t spill_below = 0;                  ///< entropies < 0 (or NaN)
  std::size_t spill_above = 0;                  ///< entropies >= upper_limit()

  std::size_t spill() const noexcept { return spill_below + spill_above; }
  std::size_t binned() const noexcept;
};

/// Places each user's real entropy in its interval. `profiles[i]` and
/// `results[i]` must describe the same user (DomainError otherwise).
BinnedAccuracies bin_users(std::span<const EntropyProfile> profiles, std::span<const PredictionResult> results,
                           const EntropyBinning& binning = {});
BinnedAccuracies bin_values(std::span<const double> entropies, std::span<const double> accuracies,
                            const EntropyBinning& binning = {});

struct KdeGrid {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
  /// Trapezoid mass on [0, 1] before renormalization.
  double raw_mass = 0.0;
};

struct KdeOptions {
  std::size_t grid_size = 256;
  /// Rescale the grid to unit trapezoid mass on [0, 1].
  bool normalize = true;
};

/// Silverman's rule: 0.9 min(sd, IQR/1.34) m^(-1/5). When the IQR is zero
/// the sample standard deviation is used alone.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian-kernel density evaluated at grid_size equally spaced points on
/// [0, 1]. Returns nullopt for fewer than 2 samples or zero variance.
std::optional<KdeGrid> kde(std::span<const double> samples, const KdeOptions& options = {});

/// Trapezoid rule over the grid.
double trapezoid_mass(const KdeGrid& grid);

enum class FitMethod { KdeLeastSquares, Moments };
std::string_view to_string(FitMethod method);

struct IntervalGaussianOptions {
  std::size_t min_kde_count = 30;
  double sigma_floor = 1e-4;
};

struct IntervalGaussian {
  double mu = 0.0;
  double sigma = 0.0;
  FitMethod method = FitMethod::Moments;
};

/// Gaussian parameters of one interval's accuracies.
///
/// With at least min_kde_count samples and a usable grid, the normal pdf is
/// least-squares fitted to the KDE grid starting from the sample moments.
/// The fit is kept only if it converged with 0 <= mu <= 1 and sigma > 0 and
/// the kernel bandwidth spans at least one grid step; otherwise the sample
/// mean and (m-1) standard deviation are used, sigma floored at sigma_floor.
/// Throws DomainError on an empty sample.
IntervalGaussian fit_interval_gaussian(std::span<const double> accuracies, const KdeGrid* grid,
                                       const IntervalGaussianOptions& options = {});

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool pass = true;
};

/// Kolmogorov limiting survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

/// One-sample Kolmogorov-Smirnov test against Normal(mu, sigma). The
/// p-value is the asymptotic Q(sqrt(m) D); pass means p_value > alpha.
/// Throws DomainError for an empty sample or sigma <= 0.
KsResult ks_test(std::span<const double> samples, double mu, double sigma, double alpha = 0.05);

/// Mean squared difference. Throws DomainError on empty or unequal inputs.
double mse(std::span<const double> observed, std::span<const double> predicted);

struct IntervalFit {
  std::size_t index = 0;
  double s = 0.0;
  std::size_t user_count = 0;
  double mu = 0.0;
  double sigma = 0.0;
  FitMethod method = FitMethod::Moments;
  std::optional<KdeGrid> kde;
  KsResult ks;
};

struct IntervalFitOptions {
  KdeOptions kde;
  IntervalGaussianOptions gaussian;
  double alpha = 0.05;
  unsigned threads = 1;
};

/// Fits every populated interval, in interval order.
std::vector<IntervalFit> fit_intervals(const BinnedAccuracies& binned, const IntervalFitOptions& options = {});

}  // namespace mobfgd

#endif  // MOBFGD_INTERVAL_STATS_HPP

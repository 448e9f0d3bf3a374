#ifndef MOBFGD_FGD_MODEL_HPP
#define MOBFGD_FGD_MODEL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mobfgd/common.hpp"
#include "mobfgd/curve_fit.hpp"
#include "mobfgd/interval_stats.hpp"

namespace mobfgd {

/// An entropy label outside the model's discrete domain, or an accuracy
/// outside [0, 1] for a truncated model.
class OutOfDomain : public DomainError {
 public:
  using DomainError::DomainError;
};

struct Provenance {
  std::string dataset;
  std::string timestamp;
  std::string tool_version;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Conditional accuracy density given an entropy label s:
///
///   p(x | s) = N(x; mu(s), sigma(s)),  mu(s) = a s + b,
///   sigma(s) = A exp(-((s - m) / w)^2)
///
/// s ranges over the interval labels {width * n | n = 1..n_intervals}.
/// Passing `extrapolate = true` to a query accepts any finite s. A truncated
/// model renormalizes the density to x in [0, 1].
class FunctionalGaussianModel {
 public:
  /// Throws DomainError unless sigma(s) > 0 at every domain label.
  FunctionalGaussianModel(LinearFit mu, GaussianCurveFit sigma, EntropyBinning binning = {}, bool truncated = false,
                          Provenance provenance = {});

  const LinearFit& mu_fit() const noexcept { return mu_; }
  const GaussianCurveFit& sigma_fit() const noexcept { return sigma_; }
  const EntropyBinning& binning() const noexcept { return binning_; }
  bool truncated() const noexcept { return truncated_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  /// All domain labels in increasing order.
  std::vector<double> domain() const;

  double mu_of(double s, bool extrapolate = false) const;
  double sigma_of(double s, bool extrapolate = false) const;
  double pdf(double x, double s, bool extrapolate = false) const;
  /// P(X <= x | s).
  double cdf(double x, double s, bool extrapolate = false) const;
  /// P(lo <= X <= hi | s) by adaptive Simpson quadrature of pdf.
  double probability(double lo, double hi, double s, bool extrapolate = false, double tolerance = 1e-9) const;
  /// Deterministic draws for a given seed; truncated models resample until
  /// the draw lies in [0, 1].
  std::vector<double> sample(double s, std::size_t count, std::uint64_t seed, bool extrapolate = false) const;

  FunctionalGaussianModel with_truncation(bool truncated) const;

  nlohmann::json to_json() const;
  /// Throws ParseError naming the offending field, e.g. "sigma.w".
  static FunctionalGaussianModel from_json(const nlohmann::json& doc);
  std::string serialize() const;
  static FunctionalGaussianModel deserialize(std::string_view text);

  friend bool operator==(const FunctionalGaussianModel& a, const FunctionalGaussianModel& b);

 private:
  void check_domain(double s, bool extrapolate) const;
  double truncation_mass(double mu, double sigma) const;

  LinearFit mu_;
  GaussianCurveFit sigma_;
  EntropyBinning binning_;
  bool truncated_ = false;
  Provenance provenance_;
};

/// Adaptive Simpson quadrature of f over [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tolerance = 1e-9,
                        int max_depth = 50);

}  // namespace mobfgd

#endif  // MOBFGD_FGD_MODEL_HPP

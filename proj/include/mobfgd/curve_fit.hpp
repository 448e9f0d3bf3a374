#ifndef MOBFGD_CURVE_FIT_HPP
#define MOBFGD_CURVE_FIT_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mobfgd/common.hpp"

namespace mobfgd {

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
};

// ---------------------------------------------------------------------------
// Levenberg-Marquardt engine

struct LmSettings {
  double initial_damping = 1e-3;
  double damping_factor = 10.0;     ///< multiply on rejection, divide on acceptance
  double cost_tolerance = 1e-10;    ///< relative decrease of an accepted step
  double step_tolerance = 1e-12;    ///< absolute norm of a proposed step
  int max_iterations = 200;
};

struct LmReport {
  bool converged = false;
  int iterations = 0;
  int accepted_steps = 0;
  double cost = 0.0;                 ///< final sum of squared residuals
  std::vector<double> cost_history;  ///< initial cost, then every accepted cost
};

/// Fills residuals (size m) and, when non-null, the m x p Jacobian of the
/// residuals at `params`.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian)>;

/// Optional in-place projection applied to every trial point.
using Projection = std::function<void(Eigen::VectorXd& params)>;

struct LmResult {
  Eigen::VectorXd params;
  LmReport report;
};

/// Minimizes the sum of squared residuals with Marquardt-scaled damping.
/// A trial step is accepted only if it lowers the cost, so accepted costs
/// are strictly decreasing.
LmResult levenberg_marquardt(const ResidualFunction& residuals, Eigen::VectorXd initial,
                             const LmSettings& settings = {}, const Projection& project = {});

// ---------------------------------------------------------------------------
// Model families and their analytic gradients.
//
// The curve families use the width form exp(-((s - m) / w)^2); the width w
// equals sqrt(2) times a standard deviation. The pdf family is the
// normalized normal density in (mu, sigma).

namespace models {

double gaussian_curve(double s, std::span<const double, 3> p);
void gaussian_curve_gradient(double s, std::span<const double, 3> p, std::span<double, 3> grad);

double double_gaussian_curve(double s, std::span<const double, 6> p);
void double_gaussian_curve_gradient(double s, std::span<const double, 6> p, std::span<double, 6> grad);

double gaussian_pdf(double x, double mu, double sigma);
void gaussian_pdf_gradient(double x, double mu, double sigma, std::span<double, 2> grad);

}  // namespace models

// ---------------------------------------------------------------------------
// Fits

/// y = a s + b.
struct LinearFit {
  double a = 0.0;
  double b = 0.0;
  double residual_mse = 0.0;

  double operator()(double s) const noexcept { return a * s + b; }
};

/// Coefficients ordered from the highest power down: c2 s^2 + c1 s + c0.
struct PolynomialFit {
  std::vector<double> coefficients;
  double residual_mse = 0.0;

  double operator()(double s) const noexcept;
};

/// A exp(-((s - m) / w)^2), with A >= 0 and w > 0.
struct GaussianCurveFit {
  double amplitude = 0.0;
  double center = 0.0;
  double width = 1.0;
  double residual_mse = 0.0;
  LmReport solver;

  double operator()(double s) const noexcept;
};

/// Sum of two width-form Gaussians, ordered so that first.center <= second.center.
struct DoubleGaussianCurveFit {
  double amplitude1 = 0.0, center1 = 0.0, width1 = 1.0;
  double amplitude2 = 0.0, center2 = 0.0, width2 = 1.0;
  double residual_mse = 0.0;
  bool collapsed = false;  ///< components share a center (|m1 - m2| < 1e-6)
  LmReport solver;

  double operator()(double s) const noexcept;
  std::array<double, 6> params() const noexcept {
    return {amplitude1, center1, width1, amplitude2, center2, width2};
  }
};

struct GaussianPdfFit {
  double mu = 0.0;
  double sigma = 1.0;
  double residual_mse = 0.0;
  LmReport solver;
};

/// Closed-form least squares line. Throws DomainError without two distinct
/// abscissae. `weights`, when non-empty, must match points in size.
LinearFit ols_linear(std::span<const DataPoint> points, std::span<const double> weights = {});

/// Least squares polynomial via column-pivoted QR. Throws DomainError on a
/// rank-deficient design.
PolynomialFit ols_polynomial(std::span<const DataPoint> points, std::size_t degree = 2,
                             std::span<const double> weights = {});

/// Width-form Gaussian fit. Default start: A = max y, m = x at max y, w = 1.
/// Throws DomainError for fewer than 3 points or all-zero y.
GaussianCurveFit lm_gaussian(std::span<const DataPoint> points,
                             std::optional<std::array<double, 3>> init = std::nullopt,
                             const LmSettings& settings = {}, std::span<const double> weights = {});

/// Two-component fit. Default start: the two highest well-separated local
/// maxima of y, widths 1. Throws DomainError for fewer than 6 points or
/// all-zero y.
DoubleGaussianCurveFit lm_double_gaussian(std::span<const DataPoint> points,
                                          std::optional<std::array<double, 6>> init = std::nullopt,
                                          const LmSettings& settings = {}, std::span<const double> weights = {});

/// Fits the normalized normal density to (x, density) grid points, starting
/// from (mu0, sigma0). Throws DomainError for fewer than 3 points or
/// sigma0 <= 0.
GaussianPdfFit lm_gaussian_pdf(std::span<const DataPoint> grid, double mu0, double sigma0,
                               const LmSettings& settings = {});

enum class SigmaModel { Polynomial, Gaussian, DoubleGaussian };

std::string_view to_string(SigmaModel model);
std::size_t parameter_count(SigmaModel model);

/// Lowest residual MSE wins; ties go to the model with fewer parameters,
/// then to declaration order.
SigmaModel select_sigma_model(const PolynomialFit& polynomial, const GaussianCurveFit& gaussian,
                              const DoubleGaussianCurveFit& double_gaussian);

}  // namespace mobfgd

#endif  // MOBFGD_CURVE_FIT_HPP

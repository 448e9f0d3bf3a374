#include "mobfgd/curve_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace mobfgd {

// ---------------------------------------------------------------------------
// Engine

LmResult levenberg_marquardt(const ResidualFunction& residuals, Eigen::VectorXd initial,
                             const LmSettings& settings, const Projection& project) {
  LmResult out;
  out.params = std::move(initial);
  if (project) project(out.params);
  const auto p = out.params.size();

  Eigen::VectorXd r, r_trial;
  Eigen::MatrixXd jac;
  residuals(out.params, r, &jac);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) throw DomainError("Levenberg-Marquardt: non-finite cost at the initial point");
  auto& rep = out.report;
  rep.cost_history.push_back(cost);

  double lambda = settings.initial_damping;
  while (rep.iterations < settings.max_iterations) {
    if (cost == 0.0) {
      rep.converged = true;
      break;
    }
    ++rep.iterations;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    const double diag_floor = 1e-12 * std::max(1.0, jtj.diagonal().maxCoeff());
    Eigen::MatrixXd damped = jtj;
    for (Eigen::Index i = 0; i < p; ++i) damped(i, i) += lambda * std::max(jtj(i, i), diag_floor);
    const Eigen::VectorXd step = damped.ldlt().solve(-grad);
    if (!step.allFinite()) {
      lambda *= settings.damping_factor;
      continue;
    }
    if (step.norm() < settings.step_tolerance) {
      rep.converged = true;
      break;
    }
    Eigen::VectorXd trial = out.params + step;
    if (project) project(trial);
    residuals(trial, r_trial, nullptr);
    const double trial_cost = r_trial.squaredNorm();
    if (std::isfinite(trial_cost) && trial_cost < cost) {
      const double relative_decrease = (cost - trial_cost) / cost;
      out.params = std::move(trial);
      cost = trial_cost;
      ++rep.accepted_steps;
      rep.cost_history.push_back(cost);
      lambda /= settings.damping_factor;
      residuals(out.params, r, &jac);
      if (relative_decrease < settings.cost_tolerance) {
        rep.converged = true;
        break;
      }
    } else {
      lambda *= settings.damping_factor;
    }
  }
  rep.cost = cost;
  return out;
}

// ---------------------------------------------------------------------------
// Models

namespace models {

double gaussian_curve(double s, std::span<const double, 3> p) {
  const double u = (s - p[1]) / p[2];
  return p[0] * std::exp(-u * u);
}

void gaussian_curve_gradient(double s, std::span<const double, 3> p, std::span<double, 3> grad) {
  const double u = (s - p[1]) / p[2];
  const double e = std::exp(-u * u);
  grad[0] = e;
  grad[1] = p[0] * e * 2.0 * u / p[2];
  grad[2] = p[0] * e * 2.0 * u * u / p[2];
}

double double_gaussian_curve(double s, std::span<const double, 6> p) {
  return gaussian_curve(s, p.first<3>()) + gaussian_curve(s, p.last<3>());
}

void double_gaussian_curve_gradient(double s, std::span<const double, 6> p, std::span<double, 6> grad) {
  gaussian_curve_gradient(s, p.first<3>(), grad.first<3>());
  gaussian_curve_gradient(s, p.last<3>(), grad.last<3>());
}

double gaussian_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

void gaussian_pdf_gradient(double x, double mu, double sigma, std::span<double, 2> grad) {
  const double z = (x - mu) / sigma;
  const double f = gaussian_pdf(x, mu, sigma);
  grad[0] = f * z / sigma;
  grad[1] = f * (z * z - 1.0) / sigma;
}

}  // namespace models

namespace {

void check_weights(std::span<const DataPoint> points, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != points.size()) {
    throw DomainError("weights size does not match the number of points");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and non-negative");
  }
}

double weight_at(std::span<const double> weights, std::size_t i) { return weights.empty() ? 1.0 : weights[i]; }

std::size_t distinct_abscissae(std::span<const DataPoint> points) {
  std::set<double> xs;
  for (const auto& p : points) xs.insert(p.x);
  return xs.size();
}

void require_nonzero_y(std::span<const DataPoint> points) {
  if (std::all_of(points.begin(), points.end(), [](const DataPoint& p) { return p.y == 0.0; })) {
    throw DomainError("degenerate fit: all y values are zero");
  }
}

template <typename Model>
double residual_mse(std::span<const DataPoint> points, const Model& f) {
  double acc = 0.0;
  for (const auto& pt : points) {
    const double d = f(pt.x) - pt.y;
    acc += d * d;
  }
  return acc / static_cast<double>(points.size());
}

/// Residuals sqrt(w_i) (f(x_i) - y_i) for a P-parameter model with gradient.
template <std::size_t P, typename Value, typename Gradient>
ResidualFunction curve_residuals(std::span<const DataPoint> points, std::span<const double> weights, Value value,
                                 Gradient gradient) {
  return [=](const Eigen::VectorXd& params, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const auto m = static_cast<Eigen::Index>(points.size());
    r.resize(m);
    if (jac) jac->resize(m, static_cast<Eigen::Index>(P));
    std::array<double, P> theta{};
    std::copy(params.data(), params.data() + P, theta.begin());
    std::array<double, P> g{};
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& pt = points[static_cast<std::size_t>(i)];
      const double sw = std::sqrt(weight_at(weights, static_cast<std::size_t>(i)));
      r[i] = sw * (value(pt.x, std::span<const double, P>(theta)) - pt.y);
      if (jac) {
        gradient(pt.x, std::span<const double, P>(theta), std::span<double, P>(g));
        for (std::size_t j = 0; j < P; ++j) (*jac)(i, static_cast<Eigen::Index>(j)) = sw * g[j];
      }
    }
  };
}

std::vector<DataPoint> sorted_by_x(std::span<const DataPoint> points) {
  std::vector<DataPoint> pts(points.begin(), points.end());
  std::stable_sort(pts.begin(), pts.end(), [](const DataPoint& a, const DataPoint& b) { return a.x < b.x; });
  return pts;
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear least squares

double PolynomialFit::operator()(double s) const noexcept {
  double acc = 0.0;
  for (double c : coefficients) acc = acc * s + c;
  return acc;
}

LinearFit ols_linear(std::span<const DataPoint> points, std::span<const double> weights) {
  check_weights(points, weights);
  if (points.size() < 2 || distinct_abscissae(points) < 2) {
    throw DomainError("linear fit needs at least two distinct abscissae");
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weight_at(weights, i);
    sw += w;
    sx += w * points[i].x;
    sy += w * points[i].y;
  }
  if (sw <= 0.0) throw DomainError("linear fit: weights sum to zero");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weight_at(weights, i);
    const double dx = points[i].x - mx;
    sxx += w * dx * dx;
    sxy += w * dx * (points[i].y - my);
  }
  if (sxx <= 0.0) throw DomainError("linear fit needs at least two distinct weighted abscissae");
  LinearFit fit;
  fit.a = sxy / sxx;
  fit.b = my - fit.a * mx;
  fit.residual_mse = residual_mse(points, fit);
  return fit;
}

PolynomialFit ols_polynomial(std::span<const DataPoint> points, std::size_t degree, std::span<const double> weights) {
  check_weights(points, weights);
  const std::size_t cols = degree + 1;
  if (points.size() < cols || distinct_abscissae(points) < cols) {
    throw DomainError("polynomial fit of degree " + std::to_string(degree) + " needs at least " +
                      std::to_string(cols) + " distinct abscissae");
  }
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(m, static_cast<Eigen::Index>(cols));
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& pt = points[static_cast<std::size_t>(i)];
    const double sw = std::sqrt(weight_at(weights, static_cast<std::size_t>(i)));
    double power = 1.0;
    for (std::size_t j = cols; j-- > 0;) {
      design(i, static_cast<Eigen::Index>(j)) = sw * power;
      power *= pt.x;
    }
    rhs[i] = sw * pt.y;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < static_cast<Eigen::Index>(cols)) throw DomainError("polynomial fit: rank-deficient design");
  const Eigen::VectorXd coef = qr.solve(rhs);
  PolynomialFit fit;
  fit.coefficients.assign(coef.data(), coef.data() + coef.size());
  fit.residual_mse = residual_mse(points, fit);
  return fit;
}

// ---------------------------------------------------------------------------
// Nonlinear fits

double GaussianCurveFit::operator()(double s) const noexcept {
  const std::array<double, 3> p{amplitude, center, width};
  return models::gaussian_curve(s, p);
}

double DoubleGaussianCurveFit::operator()(double s) const noexcept {
  const auto p = params();
  return models::double_gaussian_curve(s, p);
}

GaussianCurveFit lm_gaussian(std::span<const DataPoint> points, std::optional<std::array<double, 3>> init,
                             const LmSettings& settings, std::span<const double> weights) {
  check_weights(points, weights);
  if (points.size() < 3) throw DomainError("Gaussian curve fit needs at least 3 points");
  require_nonzero_y(points);
  if (!init) {
    const auto top = std::max_element(points.begin(), points.end(),
                                      [](const DataPoint& a, const DataPoint& b) { return a.y < b.y; });
    init = std::array<double, 3>{top->y, top->x, 1.0};
  }
  Eigen::VectorXd start(3);
  start << (*init)[0], (*init)[1], (*init)[2];
  const auto res = curve_residuals<3>(points, weights, models::gaussian_curve, models::gaussian_curve_gradient);
  const auto nonneg_amplitude = [](Eigen::VectorXd& p) { p[0] = std::max(p[0], 0.0); };
  auto lm = levenberg_marquardt(res, start, settings, nonneg_amplitude);

  GaussianCurveFit fit;
  fit.amplitude = lm.params[0];
  fit.center = lm.params[1];
  fit.width = std::abs(lm.params[2]);
  fit.solver = std::move(lm.report);
  fit.residual_mse = residual_mse(points, fit);
  return fit;
}

namespace {

/// Seeds for the two-component fit from the local maxima of y.
std::array<double, 6> double_gaussian_seed(std::span<const DataPoint> points) {
  const auto pts = sorted_by_x(points);
  const std::size_t n = pts.size();
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || pts[i].y >= pts[i - 1].y;
    const bool right_ok = i + 1 == n || pts[i].y >= pts[i + 1].y;
    if (left_ok && right_ok) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return pts[a].y > pts[b].y; });
  const std::size_t first = peaks.front();
  const double min_separation = (pts.back().x - pts.front().x) / 4.0;
  std::optional<std::size_t> second;
  for (std::size_t k = 1; k < peaks.size(); ++k) {
    if (std::abs(pts[peaks[k]].x - pts[first].x) >= min_separation) {
      second = peaks[k];
      break;
    }
  }
  if (!second) {
    // No separated peak: seed the second component mid-way into the longer side.
    const double mid_left = 0.5 * (pts.front().x + pts[first].x);
    const double mid_right = 0.5 * (pts[first].x + pts.back().x);
    const double target = (pts[first].x - pts.front().x) > (pts.back().x - pts[first].x) ? mid_left : mid_right;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(pts[i].x - target) < std::abs(pts[best].x - target)) best = i;
    }
    second = best;
  }
  return {pts[first].y, pts[first].x, 1.0, std::max(pts[*second].y, 0.0), pts[*second].x, 1.0};
}

}  // namespace

DoubleGaussianCurveFit lm_double_gaussian(std::span<const DataPoint> points, std::optional<std::array<double, 6>> init,
                                          const LmSettings& settings, std::span<const double> weights) {
  check_weights(points, weights);
  if (points.size() < 6) throw DomainError("double Gaussian fit needs at least 6 points");
  require_nonzero_y(points);
  if (!init) init = double_gaussian_seed(points);
  Eigen::VectorXd start(6);
  for (Eigen::Index j = 0; j < 6; ++j) start[j] = (*init)[static_cast<std::size_t>(j)];
  const auto res = curve_residuals<6>(points, weights, models::double_gaussian_curve,
                                      models::double_gaussian_curve_gradient);
  const auto nonneg_amplitudes = [](Eigen::VectorXd& p) {
    p[0] = std::max(p[0], 0.0);
    p[3] = std::max(p[3], 0.0);
  };
  auto lm = levenberg_marquardt(res, start, settings, nonneg_amplitudes);

  DoubleGaussianCurveFit fit;
  std::array<double, 3> c1{lm.params[0], lm.params[1], std::abs(lm.params[2])};
  std::array<double, 3> c2{lm.params[3], lm.params[4], std::abs(lm.params[5])};
  if (c2[1] < c1[1]) std::swap(c1, c2);
  fit.amplitude1 = c1[0];
  fit.center1 = c1[1];
  fit.width1 = c1[2];
  fit.amplitude2 = c2[0];
  fit.center2 = c2[1];
  fit.width2 = c2[2];
  fit.collapsed = std::abs(fit.center1 - fit.center2) < 1e-6;
  fit.solver = std::move(lm.report);
  fit.residual_mse = residual_mse(points, fit);
  return fit;
}

GaussianPdfFit lm_gaussian_pdf(std::span<const DataPoint> grid, double mu0, double sigma0,
                               const LmSettings& settings) {
  if (grid.size() < 3) throw DomainError("Gaussian pdf fit needs at least 3 grid points");
  if (!(sigma0 > 0.0)) throw DomainError("Gaussian pdf fit needs an initial sigma > 0");
  require_nonzero_y(grid);
  const auto value = [](double x, std::span<const double, 2> p) { return models::gaussian_pdf(x, p[0], p[1]); };
  const auto gradient = [](double x, std::span<const double, 2> p, std::span<double, 2> g) {
    models::gaussian_pdf_gradient(x, p[0], p[1], g);
  };
  Eigen::VectorXd start(2);
  start << mu0, sigma0;
  auto lm = levenberg_marquardt(curve_residuals<2>(grid, {}, value, gradient), start, settings);

  GaussianPdfFit fit;
  fit.mu = lm.params[0];
  fit.sigma = std::abs(lm.params[1]);
  fit.solver = std::move(lm.report);
  fit.residual_mse = residual_mse(grid, [&](double x) { return models::gaussian_pdf(x, fit.mu, fit.sigma); });
  return fit;
}

// ---------------------------------------------------------------------------
// Model selection

std::string_view to_string(SigmaModel model) {
  switch (model) {
    case SigmaModel::Polynomial: return "polynomial";
    case SigmaModel::Gaussian: return "gaussian";
    case SigmaModel::DoubleGaussian: return "double_gaussian";
  }
  return "unknown";
}

std::size_t parameter_count(SigmaModel model) {
  return model == SigmaModel::DoubleGaussian ? 6 : 3;
}

SigmaModel select_sigma_model(const PolynomialFit& polynomial, const GaussianCurveFit& gaussian,
                              const DoubleGaussianCurveFit& double_gaussian) {
  const std::array<std::pair<SigmaModel, double>, 3> candidates{{
      {SigmaModel::Polynomial, polynomial.residual_mse},
      {SigmaModel::Gaussian, gaussian.residual_mse},
      {SigmaModel::DoubleGaussian, double_gaussian.residual_mse},
  }};
  auto best = candidates[0];
  for (const auto& c : candidates) {
    if (c.second < best.second ||
        (c.second == best.second && parameter_count(c.first) < parameter_count(best.first))) {
      best = c;
    }
  }
  return best.first;
}

}  // namespace mobfgd

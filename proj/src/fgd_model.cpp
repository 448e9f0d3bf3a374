#include "mobfgd/fgd_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mobfgd {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double simpson(double fa, double fm, double fb, double a, double b) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tolerance, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tolerance) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, tolerance / 2.0, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, tolerance / 2.0, depth - 1);
}

/// Dotted field path; `parent` is empty for top-level fields.
std::string field_path(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

const nlohmann::json& member(const nlohmann::json& obj, std::string_view key, const std::string& parent) {
  if (!obj.is_object()) {
    throw ParseError("model document: '" + (parent.empty() ? std::string("<root>") : parent) + "' is not an object");
  }
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("model document: missing field '" + field_path(parent, key) + "'");
  return *it;
}

double number_field(const nlohmann::json& obj, std::string_view key, const std::string& parent) {
  const auto& v = member(obj, key, parent);
  if (!v.is_number()) throw ParseError("model document: field '" + field_path(parent, key) + "' is not a number");
  return v.get<double>();
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tolerance, int max_depth) {
  if (a == b) return 0.0;
  if (a > b) return -adaptive_simpson(f, b, a, tolerance, max_depth);
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson_step(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tolerance, max_depth);
}

FunctionalGaussianModel::FunctionalGaussianModel(LinearFit mu, GaussianCurveFit sigma, EntropyBinning binning,
                                                 bool truncated, Provenance provenance)
    : mu_(mu), sigma_(std::move(sigma)), binning_(binning), truncated_(truncated), provenance_(std::move(provenance)) {
  if (!(binning_.width > 0.0) || binning_.n_intervals == 0) throw DomainError("invalid entropy binning");
  if (!std::isfinite(mu_.a) || !std::isfinite(mu_.b)) throw DomainError("mu(s) coefficients must be finite");
  if (!(sigma_.amplitude > 0.0) || !std::isfinite(sigma_.amplitude) || !(sigma_.width != 0.0) ||
      !std::isfinite(sigma_.width) || !std::isfinite(sigma_.center)) {
    throw DomainError("sigma(s) needs a finite amplitude > 0 and a finite nonzero width");
  }
  sigma_.width = std::abs(sigma_.width);
  for (double s : domain()) {
    if (!(sigma_(s) > 0.0)) throw DomainError("sigma(s) vanishes at domain label s=" + std::to_string(s));
  }
}

std::vector<double> FunctionalGaussianModel::domain() const {
  std::vector<double> out(binning_.n_intervals);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = binning_.label(i);
  return out;
}

void FunctionalGaussianModel::check_domain(double s, bool extrapolate) const {
  if (!std::isfinite(s)) throw OutOfDomain("entropy label must be finite");
  if (extrapolate) return;
  if (!binning_.index_of_label(s)) {
    throw OutOfDomain("entropy label s=" + std::to_string(s) + " is not one of {" + std::to_string(binning_.width) +
                      "*n | n=1.." + std::to_string(binning_.n_intervals) + "}");
  }
}

double FunctionalGaussianModel::mu_of(double s, bool extrapolate) const {
  check_domain(s, extrapolate);
  return mu_(s);
}

double FunctionalGaussianModel::sigma_of(double s, bool extrapolate) const {
  check_domain(s, extrapolate);
  const double sigma = sigma_(s);
  if (!(sigma > 0.0)) throw OutOfDomain("sigma(s) underflows at s=" + std::to_string(s));
  return sigma;
}

double FunctionalGaussianModel::truncation_mass(double mu, double sigma) const {
  return normal_cdf((1.0 - mu) / sigma) - normal_cdf((0.0 - mu) / sigma);
}

double FunctionalGaussianModel::pdf(double x, double s, bool extrapolate) const {
  const double mu = mu_of(s, extrapolate);
  const double sigma = sigma_of(s, extrapolate);
  const double density = models::gaussian_pdf(x, mu, sigma);
  if (!truncated_) return density;
  if (!(x >= 0.0 && x <= 1.0)) throw OutOfDomain("truncated model: accuracy x must lie in [0, 1]");
  return density / truncation_mass(mu, sigma);
}

double FunctionalGaussianModel::cdf(double x, double s, bool extrapolate) const {
  const double mu = mu_of(s, extrapolate);
  const double sigma = sigma_of(s, extrapolate);
  if (!truncated_) return normal_cdf((x - mu) / sigma);
  const double lo = normal_cdf((0.0 - mu) / sigma);
  const double clipped = std::clamp(x, 0.0, 1.0);
  return (normal_cdf((clipped - mu) / sigma) - lo) / truncation_mass(mu, sigma);
}

double FunctionalGaussianModel::probability(double lo, double hi, double s, bool extrapolate, double tolerance) const {
  const double mu = mu_of(s, extrapolate);
  const double sigma = sigma_of(s, extrapolate);
  if (hi < lo) std::swap(lo, hi);
  // Mass outside mu +- 12 sigma is below 1e-32.
  lo = std::max(lo, mu - 12.0 * sigma);
  hi = std::min(hi, mu + 12.0 * sigma);
  if (truncated_) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, 1.0);
  }
  if (hi <= lo) return 0.0;
  return adaptive_simpson([&](double x) { return pdf(x, s, extrapolate); }, lo, hi, tolerance);
}

std::vector<double> FunctionalGaussianModel::sample(double s, std::size_t count, std::uint64_t seed,
                                                    bool extrapolate) const {
  const double mu = mu_of(s, extrapolate);
  const double sigma = sigma_of(s, extrapolate);
  if (truncated_ && truncation_mass(mu, sigma) < 1e-12) {
    throw OutOfDomain("truncated model has no mass in [0, 1] at s=" + std::to_string(s));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(mu, sigma);
  std::vector<double> out;
  out.reserve(count);
  while (out.size() < count) {
    const double x = normal(rng);
    if (truncated_ && (x < 0.0 || x > 1.0)) continue;
    out.push_back(x);
  }
  return out;
}

FunctionalGaussianModel FunctionalGaussianModel::with_truncation(bool truncated) const {
  FunctionalGaussianModel copy = *this;
  copy.truncated_ = truncated;
  return copy;
}

nlohmann::json FunctionalGaussianModel::to_json() const {
  nlohmann::json out;
  out["mu"] = {{"a", mu_.a}, {"b", mu_.b}};
  out["sigma"] = {{"A", sigma_.amplitude}, {"m", sigma_.center}, {"w", sigma_.width}};
  out["interval_width"] = binning_.width;
  out["n_intervals"] = binning_.n_intervals;
  out["truncated"] = truncated_;
  out["provenance"] = {{"dataset", provenance_.dataset},
                       {"timestamp", provenance_.timestamp},
                       {"tool_version", provenance_.tool_version}};
  return out;
}

FunctionalGaussianModel FunctionalGaussianModel::from_json(const nlohmann::json& doc) {
  const std::string root;
  const auto& mu = member(doc, "mu", root);
  const auto& sigma = member(doc, "sigma", root);
  LinearFit mu_fit;
  mu_fit.a = number_field(mu, "a", "mu");
  mu_fit.b = number_field(mu, "b", "mu");
  GaussianCurveFit sigma_fit;
  sigma_fit.amplitude = number_field(sigma, "A", "sigma");
  sigma_fit.center = number_field(sigma, "m", "sigma");
  sigma_fit.width = number_field(sigma, "w", "sigma");
  EntropyBinning binning;
  binning.width = number_field(doc, "interval_width", root);
  const auto& n = member(doc, "n_intervals", root);
  if (!n.is_number_unsigned() && !(n.is_number_integer() && n.get<long long>() > 0)) {
    throw ParseError("model document: field 'n_intervals' is not a positive integer");
  }
  binning.n_intervals = n.get<std::size_t>();
  const auto& truncated = member(doc, "truncated", root);
  if (!truncated.is_boolean()) throw ParseError("model document: field 'truncated' is not a boolean");
  Provenance prov;
  if (const auto it = doc.find("provenance"); it != doc.end() && it->is_object()) {
    prov.dataset = it->value("dataset", "");
    prov.timestamp = it->value("timestamp", "");
    prov.tool_version = it->value("tool_version", "");
  }
  try {
    return FunctionalGaussianModel(mu_fit, sigma_fit, binning, truncated.get<bool>(), std::move(prov));
  } catch (const DomainError& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
}

std::string FunctionalGaussianModel::serialize() const { return to_json().dump(2) + "\n"; }

FunctionalGaussianModel FunctionalGaussianModel::deserialize(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model document is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

bool operator==(const FunctionalGaussianModel& a, const FunctionalGaussianModel& b) {
  return a.mu_.a == b.mu_.a && a.mu_.b == b.mu_.b && a.sigma_.amplitude == b.sigma_.amplitude &&
         a.sigma_.center == b.sigma_.center && a.sigma_.width == b.sigma_.width &&
         a.binning_.width == b.binning_.width && a.binning_.n_intervals == b.binning_.n_intervals &&
         a.truncated_ == b.truncated_ && a.provenance_ == b.provenance_;
}

}  // namespace mobfgd

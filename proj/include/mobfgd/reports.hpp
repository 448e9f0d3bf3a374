#ifndef MOBFGD_REPORTS_HPP
#define MOBFGD_REPORTS_HPP

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mobfgd/curve_fit.hpp"
#include "mobfgd/entropy.hpp"
#include "mobfgd/interval_stats.hpp"
#include "mobfgd/markov.hpp"

namespace mobfgd {

/// `user_id,n,unique_locations,s_rand,s_unc,s_real`, six decimals.
void write_entropy_report(std::ostream& out, std::span<const EntropyProfile> rows);
std::vector<EntropyProfile> read_entropy_report(std::istream& in);

/// `user_id,order,attempts,hits,accuracy`, accuracy with six decimals.
void write_accuracy_report(std::ostream& out, std::span<const PredictionResult> rows);
std::vector<PredictionResult> read_accuracy_report(std::istream& in);

/// `s,user_count,mu,sigma,fit_method,ks_D,ks_p,ks_pass`, preceded by a
/// `#` comment line noting that the KS parameters come from the same data.
void write_interval_report(std::ostream& out, std::span<const IntervalFit> rows);

/// {tag, params[], residual_mse, converged, iterations} for one model.
nlohmann::json fit_record(const LinearFit& fit);
nlohmann::json fit_record(const PolynomialFit& fit);
nlohmann::json fit_record(const GaussianCurveFit& fit);
nlohmann::json fit_record(const DoubleGaussianCurveFit& fit);

/// Fixed-point decimal rendering used by every CSV report.
std::string format_fixed(double value, int decimals);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);
std::string read_file(const std::filesystem::path& path);

}  // namespace mobfgd

#endif  // MOBFGD_REPORTS_HPP

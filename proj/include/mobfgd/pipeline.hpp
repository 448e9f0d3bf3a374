#ifndef MOBFGD_PIPELINE_HPP
#define MOBFGD_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mobfgd/curve_fit.hpp"
#include "mobfgd/fgd_model.hpp"
#include "mobfgd/interval_stats.hpp"
#include "mobfgd/markov.hpp"
#include "mobfgd/synthgen.hpp"

namespace mobfgd {

/// A stage could not produce a result from valid inputs (CLI exit code 1).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or contradictory settings (CLI exit code 2).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  std::uint64_t seed = 1;

  // generate
  GeneratorConfig generator;

  // ingest
  std::string format = "auto";  ///< auto | cdr | trajectory
  std::string cdr_columns;      ///< NAME=index overrides for header-less CDR files
  char delimiter = ',';
  std::string utc_offset = "+00:00";
  bool collapse_duplicates = false;
  std::size_t min_active_days = 150;
  std::optional<std::string> roam_city;

  // analyze
  std::size_t markov_order = 2;
  UnseenContext unseen_context = UnseenContext::Backoff;
  std::optional<double> split;
  bool exclude_unpredicted = false;
  bool skip_bad_users = false;

  // fit
  EntropyBinning binning;
  std::size_t min_bin_size = 10;
  std::size_t kde_grid_size = 256;
  std::size_t min_kde_count = 30;
  double ks_alpha = 0.05;
  bool truncated_model = false;
  std::string fixture;  ///< "" or "paper9"
  std::string dataset;
  std::string provenance_time;

  // eval
  std::filesystem::path model;
  std::optional<double> s;
  std::optional<double> x;
  std::optional<double> x_min;
  std::optional<double> x_max;
  bool extrapolate = false;

  /// Applies one `key = value` setting; '-' and '_' are interchangeable in
  /// keys. Throws UsageError naming an unknown key or a bad value.
  void set(std::string_view key, std::string_view value);
  /// Every key accepted by set().
  static std::vector<std::string> keys();
};

/// Flat key/value pairs from a TOML or JSON document (sniffed by a leading
/// '{'). Section and object nesting is ignored; only leaf names count.
std::vector<std::pair<std::string, std::string>> read_config_document(const std::filesystem::path& path);

/// Fixed output names inside PipelineConfig::output_dir.
namespace files {
inline constexpr std::string_view kCorpus = "corpus.csv";
inline constexpr std::string_view kTrajectories = "trajectories.csv";
inline constexpr std::string_view kIngestSummary = "ingest_summary.json";
inline constexpr std::string_view kEntropy = "entropy.csv";
inline constexpr std::string_view kAccuracy = "accuracy.csv";
inline constexpr std::string_view kIntervals = "intervals.csv";
inline constexpr std::string_view kFitReport = "fit_report.json";
inline constexpr std::string_view kModel = "model.json";
inline constexpr std::string_view kPlotDir = "plots";
}  // namespace files

/// Diagnostics sink for warnings (spill, skipped users, malformed lines).
using Logger = std::function<void(std::string_view)>;

struct GenerateSummary {
  std::size_t users = 0;
  std::size_t events = 0;
  std::filesystem::path output;
};

struct IngestSummary {
  std::size_t users_in = 0;
  std::size_t users_kept = 0;
  std::size_t records_in = 0;
  std::size_t records_kept = 0;
  /// Records that did not reach the trajectory file: malformed lines,
  /// roaming-filtered or collapsed records and records of users below the
  /// active-day threshold.
  std::size_t spill = 0;
  std::size_t malformed = 0;

  nlohmann::json to_json() const;
};

struct AnalyzeSummary {
  std::size_t users = 0;
  std::size_t skipped = 0;
};

struct FitOutcome {
  BinnedAccuracies binned;
  std::vector<IntervalFit> intervals;  ///< every populated interval
  std::vector<IntervalFit> used;       ///< intervals with >= min_bin_size users
  LinearFit mu;
  PolynomialFit sigma_polynomial;
  GaussianCurveFit sigma_gaussian;
  std::optional<DoubleGaussianCurveFit> sigma_double;
  SigmaModel selected = SigmaModel::Gaussian;
  std::optional<FunctionalGaussianModel> model;
  nlohmann::json report;
};

struct EvalOutcome {
  double s = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  std::optional<double> pdf;          ///< at a point x
  std::optional<double> probability;  ///< over [x_min, x_max]

  std::string to_text() const;
};

/// Writes the synthetic corpus in trajectory format to `<out>/corpus.csv`.
GenerateSummary run_generate(const PipelineConfig& config, const Logger& log = {});

/// Reads CDR or trajectory input, applies the active-day filter and writes
/// `<out>/trajectories.csv` and `<out>/ingest_summary.json`. Throws IoError
/// naming a missing input.
IngestSummary run_ingest(const PipelineConfig& config, const Logger& log = {});

/// Scores every user of `<out>/trajectories.csv` (or config.input when
/// set), writing the entropy and accuracy reports. A user that cannot be
/// scored raises AnalysisError unless skip_bad_users is set.
AnalyzeSummary run_analyze(const PipelineConfig& config, const Logger& log = {});

/// Interval statistics, mu(s) and sigma(s) fits, model selection and plot
/// data. Throws AnalysisError when fewer than 5 intervals reach min_bin_size.
FitOutcome run_fit(const PipelineConfig& config, const Logger& log = {});

/// Fits the nine reference (s, mu, sigma) interval estimates selected by
/// config.fixture and writes the same reports as run_fit, minus the
/// per-user plot data.
FitOutcome run_fixture_fit(const PipelineConfig& config, const Logger& log = {});

/// Reference interval estimates: labels 0.05 + 0.5 k, k = 0..8.
struct FixturePoint {
  double s, mu, sigma;
};
std::vector<FixturePoint> fixture_points(std::string_view name);

/// Evaluates the model at config.s: the pdf at config.x and/or the mass
/// over [x_min, x_max]. Throws OutOfDomain for s off the label grid unless
/// extrapolate is set.
EvalOutcome run_eval(const PipelineConfig& config);

/// generate, ingest, analyze, fit, then eval over [0, 1] at the label of
/// the most populated interval.
EvalOutcome run_all(const PipelineConfig& config, const Logger& log = {});

/// FNV-1a hex digest, used for the default dataset tag.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace mobfgd

#endif  // MOBFGD_PIPELINE_HPP

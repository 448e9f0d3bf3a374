#include "mobfgd/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mobfgd/cdr_ingest.hpp"
#include "mobfgd/entropy.hpp"
#include "mobfgd/reports.hpp"

namespace mobfgd {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTrajectoryHeader = "user_id,timestamp,location_id";

void warn(const Logger& log, const std::string& message) {
  if (log) log(message);
}

std::string normalize_key(std::string_view key) {
  std::string out(key);
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw UsageError("setting '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw UsageError("setting '" + std::string(key) + "': expected a boolean, got '" + std::string(text) + "'");
}

using Setter = void (*)(PipelineConfig&, std::string_view, std::string_view);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"input", [](PipelineConfig& c, std::string_view, std::string_view v) { c.input = std::string(v); }},
      {"output_dir", [](PipelineConfig& c, std::string_view, std::string_view v) { c.output_dir = std::string(v); }},
      {"threads",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.threads = parse_value<unsigned>(k, v); }},
      {"seed",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.seed = parse_value<std::uint64_t>(k, v); }},
      {"n_users",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.generator.n_users = parse_value<std::size_t>(k, v);
       }},
      {"seq_length",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.generator.seq_length = parse_value<std::size_t>(k, v);
       }},
      {"n_locations",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.generator.n_locations = parse_value<std::size_t>(k, v);
       }},
      {"noise_min",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.generator.noise_min = parse_value<double>(k, v); }},
      {"noise_max",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.generator.noise_max = parse_value<double>(k, v); }},
      {"tour_period",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.generator.tour_period = parse_value<std::size_t>(k, v);
       }},
      {"start_time",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.generator.start_time = parse_value<Timestamp>(k, v);
       }},
      {"step_seconds",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.generator.step_seconds = parse_value<std::int64_t>(k, v);
       }},
      {"format",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         if (v != "auto" && v != "cdr" && v != "trajectory") {
           throw UsageError("setting '" + std::string(k) + "': expected auto, cdr or trajectory");
         }
         c.format = std::string(v);
       }},
      {"cdr_columns", [](PipelineConfig& c, std::string_view, std::string_view v) { c.cdr_columns = std::string(v); }},
      {"delimiter",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         if (v == "\\t" || v == "tab") v = "\t";
         if (v.size() != 1) throw UsageError("setting '" + std::string(k) + "': expected one character");
         c.delimiter = v.front();
       }},
      {"utc_offset",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         if (!parse_utc_offset(v)) throw UsageError("setting '" + std::string(k) + "': expected +HH:MM, UTC or Z");
         c.utc_offset = std::string(v);
       }},
      {"collapse_duplicates",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.collapse_duplicates = parse_bool(k, v); }},
      {"min_active_days",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.min_active_days = parse_value<std::size_t>(k, v);
       }},
      {"roam_city", [](PipelineConfig& c, std::string_view, std::string_view v) { c.roam_city = std::string(v); }},
      {"markov_order",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.markov_order = parse_value<std::size_t>(k, v); }},
      {"unseen_context",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         if (v == "backoff") {
           c.unseen_context = UnseenContext::Backoff;
         } else if (v == "miss") {
           c.unseen_context = UnseenContext::Miss;
         } else {
           throw UsageError("setting '" + std::string(k) + "': expected backoff or miss");
         }
       }},
      {"split",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         const double f = parse_value<double>(k, v);
         if (!(f > 0.0 && f < 1.0)) throw UsageError("setting '" + std::string(k) + "': expected a fraction in (0, 1)");
         c.split = f;
       }},
      {"exclude_unpredicted",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.exclude_unpredicted = parse_bool(k, v); }},
      {"skip_bad_users",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.skip_bad_users = parse_bool(k, v); }},
      {"interval_width",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.binning.width = parse_value<double>(k, v); }},
      {"n_intervals",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.binning.n_intervals = parse_value<std::size_t>(k, v);
       }},
      {"min_bin_size",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.min_bin_size = parse_value<std::size_t>(k, v); }},
      {"kde_grid_size",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.kde_grid_size = parse_value<std::size_t>(k, v);
       }},
      {"min_kde_count",
       [](PipelineConfig& c, std::string_view k, std::string_view v) {
         c.min_kde_count = parse_value<std::size_t>(k, v);
       }},
      {"ks_alpha",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.ks_alpha = parse_value<double>(k, v); }},
      {"truncated_model",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.truncated_model = parse_bool(k, v); }},
      {"fixture", [](PipelineConfig& c, std::string_view, std::string_view v) { c.fixture = std::string(v); }},
      {"dataset", [](PipelineConfig& c, std::string_view, std::string_view v) { c.dataset = std::string(v); }},
      {"provenance_time",
       [](PipelineConfig& c, std::string_view, std::string_view v) { c.provenance_time = std::string(v); }},
      {"model", [](PipelineConfig& c, std::string_view, std::string_view v) { c.model = std::string(v); }},
      {"s", [](PipelineConfig& c, std::string_view k, std::string_view v) { c.s = parse_value<double>(k, v); }},
      {"x", [](PipelineConfig& c, std::string_view k, std::string_view v) { c.x = parse_value<double>(k, v); }},
      {"x_min", [](PipelineConfig& c, std::string_view k, std::string_view v) { c.x_min = parse_value<double>(k, v); }},
      {"x_max", [](PipelineConfig& c, std::string_view k, std::string_view v) { c.x_max = parse_value<double>(k, v); }},
      {"extrapolate",
       [](PipelineConfig& c, std::string_view k, std::string_view v) { c.extrapolate = parse_bool(k, v); }},
  };
  return table;
}

std::int64_t offset_seconds(const PipelineConfig& config) {
  const auto offset = parse_utc_offset(config.utc_offset);
  if (!offset) throw UsageError("bad utc offset '" + config.utc_offset + "'");
  return *offset;
}

void require_input(const fs::path& path) {
  if (path.empty()) throw UsageError("no input path given");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw IoError("input not found: " + path.string());
}

std::ifstream open_input(const fs::path& path) {
  require_input(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

bool looks_like_trajectory_file(const fs::path& path) {
  auto in = open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    return line == kTrajectoryHeader;
  }
  return false;
}

Trajectory collapse_runs(const Trajectory& t, std::int64_t utc_offset) {
  std::vector<Event> events;
  events.reserve(t.size());
  for (const auto& e : t.events()) {
    if (events.empty() || events.back().location != e.location) events.push_back(e);
  }
  return Trajectory(t.user_id(), std::move(events), utc_offset);
}

std::string iso_utc(std::int64_t epoch) {
  const auto t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string provenance_timestamp(const PipelineConfig& config) {
  if (!config.provenance_time.empty()) return config.provenance_time;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
    std::int64_t epoch = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), epoch);
    if (ec == std::errc() && ptr == text.data() + text.size()) return iso_utc(epoch);
  }
  return iso_utc(0);
}

std::string tool_version() { return std::string("mobfgd ") + MOBFGD_VERSION; }

struct CurveFits {
  LinearFit mu;
  PolynomialFit polynomial;
  GaussianCurveFit gaussian;
  std::optional<DoubleGaussianCurveFit> double_gaussian;
  std::string double_gaussian_error;
  SigmaModel selected = SigmaModel::Gaussian;
};

CurveFits fit_curves(const std::vector<DataPoint>& mu_points, const std::vector<DataPoint>& sigma_points) {
  CurveFits fits;
  fits.mu = ols_linear(mu_points);
  fits.polynomial = ols_polynomial(sigma_points, 2);
  fits.gaussian = lm_gaussian(sigma_points);
  try {
    fits.double_gaussian = lm_double_gaussian(sigma_points);
  } catch (const DomainError& e) {
    fits.double_gaussian_error = e.what();
  }
  DoubleGaussianCurveFit unavailable;
  unavailable.residual_mse = std::numeric_limits<double>::infinity();
  fits.selected =
      select_sigma_model(fits.polynomial, fits.gaussian, fits.double_gaussian ? *fits.double_gaussian : unavailable);
  return fits;
}

nlohmann::json curve_report(const CurveFits& fits) {
  nlohmann::json out;
  out["mu"] = fit_record(fits.mu);
  nlohmann::json candidates = nlohmann::json::array();
  candidates.push_back(fit_record(fits.polynomial));
  candidates.push_back(fit_record(fits.gaussian));
  if (fits.double_gaussian) {
    candidates.push_back(fit_record(*fits.double_gaussian));
  } else {
    candidates.push_back({{"tag", to_string(SigmaModel::DoubleGaussian)}, {"skipped", fits.double_gaussian_error}});
  }
  out["sigma_candidates"] = std::move(candidates);
  out["sigma_selected"] = to_string(fits.selected);
  return out;
}

std::string optional_fixed(const std::optional<double>& v, int decimals) {
  return v ? format_fixed(*v, decimals) : std::string();
}

void write_curve_plots(const fs::path& plot_dir, const EntropyBinning& binning, const std::vector<FixturePoint>& observed,
                       const std::vector<std::size_t>& counts, const CurveFits& fits,
                       const FunctionalGaussianModel& model) {
  std::map<long long, std::size_t> by_label;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (const auto idx = binning.index_of_label(observed[i].s)) by_label[static_cast<long long>(*idx)] = i;
  }
  write_file_atomic(plot_dir / "mu_curve.csv", [&](std::ostream& out) {
    out << "s,user_count,mu_observed,mu_fit\n";
    for (std::size_t i = 0; i < binning.n_intervals; ++i) {
      const double s = binning.label(i);
      const auto it = by_label.find(static_cast<long long>(i));
      out << format_fixed(s, 2) << ',' << (it == by_label.end() ? 0 : counts[it->second]) << ','
          << (it == by_label.end() ? std::string() : format_fixed(observed[it->second].mu, 6)) << ','
          << format_fixed(fits.mu(s), 6) << '\n';
    }
  });
  write_file_atomic(plot_dir / "sigma_curves.csv", [&](std::ostream& out) {
    out << "s,sigma_observed,polynomial,gaussian,double_gaussian\n";
    for (std::size_t i = 0; i < binning.n_intervals; ++i) {
      const double s = binning.label(i);
      const auto it = by_label.find(static_cast<long long>(i));
      std::optional<double> dg;
      if (fits.double_gaussian) dg = (*fits.double_gaussian)(s);
      out << format_fixed(s, 2) << ','
          << (it == by_label.end() ? std::string() : format_fixed(observed[it->second].sigma, 6)) << ','
          << format_fixed(fits.polynomial(s), 6) << ',' << format_fixed(fits.gaussian(s), 6) << ','
          << optional_fixed(dg, 6) << '\n';
    }
  });
  write_file_atomic(plot_dir / "sigma_mse.csv", [&](std::ostream& out) {
    out << "model,parameters,residual_mse,selected\n";
    const auto row = [&](SigmaModel m, std::optional<double> v) {
      out << to_string(m) << ',' << parameter_count(m) << ',' << (v ? format_fixed(*v, 10) : std::string()) << ','
          << (m == fits.selected ? "true" : "false") << '\n';
    };
    row(SigmaModel::Polynomial, fits.polynomial.residual_mse);
    row(SigmaModel::Gaussian, fits.gaussian.residual_mse);
    row(SigmaModel::DoubleGaussian,
        fits.double_gaussian ? std::optional<double>(fits.double_gaussian->residual_mse) : std::nullopt);
  });
  write_file_atomic(plot_dir / "model_density.csv", [&](std::ostream& out) {
    out << "s,x,pdf\n";
    for (double s : model.domain()) {
      for (int k = 0; k <= 100; ++k) {
        const double x = k / 100.0;
        out << format_fixed(s, 2) << ',' << format_fixed(x, 2) << ',' << format_fixed(model.pdf(x, s), 6) << '\n';
      }
    }
  });
}

FunctionalGaussianModel build_model(const PipelineConfig& config, const CurveFits& fits, std::string dataset) {
  try {
    return FunctionalGaussianModel(fits.mu, fits.gaussian, config.binning, config.truncated_model,
                                   Provenance{std::move(dataset), provenance_timestamp(config), tool_version()});
  } catch (const DomainError& e) {
    throw AnalysisError(std::string("fitted model is unusable: ") + e.what());
  }
}

void write_fit_outputs(const PipelineConfig& config, FitOutcome& outcome) {
  const auto& dir = config.output_dir;
  write_file_atomic(dir / files::kIntervals, [&](std::ostream& out) { write_interval_report(out, outcome.used); });
  write_file_atomic(dir / files::kFitReport, outcome.report.dump(2) + "\n");
  write_file_atomic(dir / files::kModel, outcome.model->serialize());
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value) {
  const auto name = normalize_key(key);
  const auto& table = setters();
  std::string_view canonical = name;
  if (name == "output" || name == "out") canonical = "output_dir";
  const auto it = table.find(std::string(canonical));
  if (it == table.end()) throw UsageError("unknown setting '" + std::string(key) + "'");
  it->second(*this, canonical, value);
}

std::vector<std::string> PipelineConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_document(const fs::path& path) {
  require_input(path);
  const auto text = read_file(path);
  std::vector<std::pair<std::string, std::string>> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("config " + path.string() + ": " + e.what());
    }
    const auto flatten = [&](const auto& self, const nlohmann::json& node) -> void {
      for (const auto& [k, v] : node.items()) {
        if (v.is_object()) {
          self(self, v);
        } else if (v.is_string()) {
          out.emplace_back(k, v.template get<std::string>());
        } else if (v.is_boolean() || v.is_number()) {
          out.emplace_back(k, v.dump());
        } else {
          throw ParseError("config " + path.string() + ": value of '" + k + "' must be a string, number or boolean");
        }
      }
    };
    flatten(flatten, doc);
    return out;
  }
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (item.inputs.size() != 1) {
      throw ParseError("config " + path.string() + ": '" + item.name + "' must have exactly one value");
    }
    out.emplace_back(item.name, item.inputs.front());
  }
  return out;
}

nlohmann::json IngestSummary::to_json() const {
  return {{"users_in", users_in},       {"users_kept", users_kept}, {"records_in", records_in},
          {"records_kept", records_kept}, {"spill", spill},           {"malformed", malformed}};
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GenerateSummary run_generate(const PipelineConfig& config, const Logger&) {
  auto gen = config.generator;
  gen.seed = config.seed;
  const auto corpus = generate(gen, config.threads);
  GenerateSummary summary;
  summary.users = corpus.trajectories.size();
  for (const auto& t : corpus.trajectories) summary.events += t.size();
  summary.output = config.output_dir / files::kCorpus;
  write_file_atomic(summary.output, [&](std::ostream& out) { write_trajectories(out, corpus.trajectories); });
  return summary;
}

IngestSummary run_ingest(const PipelineConfig& config, const Logger& log) {
  require_input(config.input);
  const auto offset = offset_seconds(config);
  const bool trajectory_format =
      config.format == "trajectory" || (config.format == "auto" && looks_like_trajectory_file(config.input));

  IngestSummary summary;
  std::vector<Trajectory> users;
  if (trajectory_format) {
    auto in = open_input(config.input);
    users = read_trajectories(in, offset);
    for (const auto& t : users) summary.records_in += t.size();
    if (config.roam_city) warn(log, "roam-city filter ignored for trajectory input");
    if (config.collapse_duplicates) {
      for (auto& t : users) t = collapse_runs(t, offset);
    }
  } else {
    auto in = open_input(config.input);
    CdrLayout layout;
    layout.delimiter = config.delimiter;
    if (!config.cdr_columns.empty()) layout = CdrLayout::from_mapping(config.cdr_columns, config.delimiter);
    std::vector<CdrRecord> records;
    parse_records(
        in, layout, [&](CdrRecord&& r) { records.push_back(std::move(r)); },
        [&](ParseDiagnostic&& d) {
          if (++summary.malformed <= 20) warn(log, "line " + std::to_string(d.line) + ": " + d.message);
        },
        offset);
    if (summary.malformed > 20) warn(log, std::to_string(summary.malformed) + " malformed lines in total");
    summary.records_in = records.size() + summary.malformed;
    IngestOptions options;
    options.utc_offset_seconds = offset;
    options.collapse_duplicates = config.collapse_duplicates;
    options.roam_city = config.roam_city;
    users = build_trajectories(records, options);
  }
  summary.users_in = users.size();
  std::erase_if(users, [&](const Trajectory& t) { return t.active_days() < config.min_active_days; });
  summary.users_kept = users.size();
  for (const auto& t : users) summary.records_kept += t.size();
  summary.spill = summary.records_in - summary.records_kept;

  write_file_atomic(config.output_dir / files::kTrajectories, [&](std::ostream& out) { write_trajectories(out, users); });
  write_file_atomic(config.output_dir / files::kIngestSummary, summary.to_json().dump(2) + "\n");
  return summary;
}

AnalyzeSummary run_analyze(const PipelineConfig& config, const Logger& log) {
  const auto path = config.input.empty() ? config.output_dir / files::kTrajectories : config.input;
  auto in = open_input(path);
  const auto users = read_trajectories(in, offset_seconds(config));

  EvaluationOptions evaluation;
  evaluation.order = config.markov_order;
  evaluation.policy = config.unseen_context;
  evaluation.split = config.split;
  evaluation.exclude_unpredicted = config.exclude_unpredicted;

  std::vector<EntropyProfile> profiles(users.size());
  std::vector<PredictionResult> results(users.size());
  std::vector<std::string> errors(users.size());
  parallel_for(users.size(), config.threads, [&](std::size_t i) {
    try {
      const auto symbols = encode_locations(users[i]).symbols;
      profiles[i] = entropy_profile(users[i].user_id(), symbols);
      results[i] = evaluate_prequential(users[i].user_id(), symbols, evaluation);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  });

  AnalyzeSummary summary;
  std::vector<EntropyProfile> kept_profiles;
  std::vector<PredictionResult> kept_results;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (errors[i].empty()) {
      kept_profiles.push_back(std::move(profiles[i]));
      kept_results.push_back(std::move(results[i]));
      continue;
    }
    const auto message = "user " + users[i].user_id() + ": " + errors[i];
    if (!config.skip_bad_users) throw AnalysisError(message);
    warn(log, "skipped " + message);
    ++summary.skipped;
  }
  summary.users = kept_profiles.size();
  write_file_atomic(config.output_dir / files::kEntropy,
                    [&](std::ostream& out) { write_entropy_report(out, kept_profiles); });
  write_file_atomic(config.output_dir / files::kAccuracy,
                    [&](std::ostream& out) { write_accuracy_report(out, kept_results); });
  return summary;
}

FitOutcome run_fit(const PipelineConfig& config, const Logger& log) {
  if (!config.fixture.empty()) return run_fixture_fit(config, log);
  const auto& dir = config.output_dir;
  const auto entropy_path = dir / files::kEntropy;
  const auto accuracy_path = dir / files::kAccuracy;
  require_input(entropy_path);
  require_input(accuracy_path);
  const auto entropy_text = read_file(entropy_path);
  const auto accuracy_text = read_file(accuracy_path);
  std::istringstream entropy_in(entropy_text), accuracy_in(accuracy_text);
  const auto profiles = read_entropy_report(entropy_in);
  const auto results = read_accuracy_report(accuracy_in);
  if (profiles.size() != results.size()) {
    throw AnalysisError("entropy and accuracy reports list different numbers of users");
  }

  FitOutcome outcome;
  try {
    outcome.binned = bin_users(profiles, results, config.binning);
  } catch (const DomainError& e) {
    throw AnalysisError(e.what());
  }
  if (outcome.binned.spill() > 0) {
    warn(log, std::to_string(outcome.binned.spill()) + " users fall outside the entropy intervals (" +
                  std::to_string(outcome.binned.spill_below) + " below, " +
                  std::to_string(outcome.binned.spill_above) + " above)");
  }

  IntervalFitOptions options;
  options.kde.grid_size = config.kde_grid_size;
  options.gaussian.min_kde_count = config.min_kde_count;
  options.alpha = config.ks_alpha;
  options.threads = config.threads;
  outcome.intervals = fit_intervals(outcome.binned, options);
  for (const auto& f : outcome.intervals) {
    if (f.user_count >= config.min_bin_size) outcome.used.push_back(f);
  }
  if (outcome.used.size() < 5) {
    throw AnalysisError("only " + std::to_string(outcome.used.size()) + " entropy intervals have at least " +
                        std::to_string(config.min_bin_size) + " users; 5 are needed");
  }

  const auto points_of = [](const std::vector<IntervalFit>& fits) {
    std::vector<DataPoint> mu, sigma;
    for (const auto& f : fits) {
      mu.push_back({f.s, f.mu});
      sigma.push_back({f.s, f.sigma});
    }
    return std::pair{mu, sigma};
  };
  const auto [mu_points, sigma_points] = points_of(outcome.used);
  CurveFits fits;
  try {
    fits = fit_curves(mu_points, sigma_points);
  } catch (const DomainError& e) {
    throw AnalysisError(std::string("curve fit failed: ") + e.what());
  }
  outcome.mu = fits.mu;
  outcome.sigma_polynomial = fits.polynomial;
  outcome.sigma_gaussian = fits.gaussian;
  outcome.sigma_double = fits.double_gaussian;
  outcome.selected = fits.selected;

  const auto dataset = config.dataset.empty() ? "fnv1a:" + fnv1a_hex(entropy_text + accuracy_text) : config.dataset;
  outcome.model = build_model(config, fits, dataset);

  auto& report = outcome.report;
  report = curve_report(fits);
  report["model_sigma"] = to_string(SigmaModel::Gaussian);
  report["binning"] = {{"interval_width", config.binning.width}, {"n_intervals", config.binning.n_intervals}};
  report["users"] = profiles.size();
  report["spill"] = {{"below", outcome.binned.spill_below}, {"above", outcome.binned.spill_above}};
  report["min_bin_size"] = config.min_bin_size;
  report["intervals_populated"] = outcome.intervals.size();
  report["intervals_used"] = outcome.used.size();
  std::size_t ks_passed = 0;
  double mass_min = std::numeric_limits<double>::infinity(), mass_max = -mass_min;
  std::size_t kde_count = 0;
  for (const auto& f : outcome.used) {
    ks_passed += f.ks.pass ? 1 : 0;
    if (f.kde) {
      const double mass = trapezoid_mass(*f.kde);
      mass_min = std::min(mass_min, mass);
      mass_max = std::max(mass_max, mass);
      ++kde_count;
    }
  }
  report["ks_pass_fraction"] = static_cast<double>(ks_passed) / static_cast<double>(outcome.used.size());
  report["kde_intervals"] = kde_count;
  if (kde_count > 0) report["kde_mass"] = {{"min", mass_min}, {"max", mass_max}};
  try {
    const auto [all_mu, all_sigma] = points_of(outcome.intervals);
    report["all_intervals"] = curve_report(fit_curves(all_mu, all_sigma));
  } catch (const DomainError& e) {
    report["all_intervals"] = {{"error", e.what()}};
  }
  report["provenance"] = outcome.model->to_json()["provenance"];

  write_fit_outputs(config, outcome);

  const auto plot_dir = dir / files::kPlotDir;
  std::vector<FixturePoint> observed;
  std::vector<std::size_t> counts;
  for (const auto& f : outcome.used) {
    observed.push_back({f.s, f.mu, f.sigma});
    counts.push_back(f.user_count);
  }
  write_curve_plots(plot_dir, config.binning, observed, counts, fits, *outcome.model);

  write_file_atomic(plot_dir / "entropy_histogram.csv", [&](std::ostream& out) {
    const auto& b = config.binning;
    std::vector<std::array<std::size_t, 3>> hist(b.n_intervals, {0, 0, 0});
    for (const auto& p : profiles) {
      const double values[3] = {p.s_rand, p.s_unc, p.s_real};
      for (int k = 0; k < 3; ++k) {
        if (const auto idx = b.index_of(values[k])) ++hist[*idx][static_cast<std::size_t>(k)];
      }
    }
    out << "s_lower,s_upper,s_rand,s_unc,s_real\n";
    for (std::size_t i = 0; i < b.n_intervals; ++i) {
      out << format_fixed(b.lower(i), 2) << ',' << format_fixed(b.label(i), 2) << ',' << hist[i][0] << ','
          << hist[i][1] << ',' << hist[i][2] << '\n';
    }
  });
  write_file_atomic(plot_dir / "accuracy_scatter.csv", [&](std::ostream& out) {
    out << "user_id,s_real,accuracy\n";
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      out << profiles[i].user_id << ',' << format_fixed(profiles[i].s_real, 6) << ','
          << format_fixed(results[i].accuracy, 6) << '\n';
    }
  });
  write_file_atomic(plot_dir / "interval_density.csv", [&](std::ostream& out) {
    out << "s,x,kde,gaussian\n";
    for (const auto& f : outcome.used) {
      if (!f.kde) continue;
      for (std::size_t k = 0; k < f.kde->x.size(); ++k) {
        const double x = f.kde->x[k];
        out << format_fixed(f.s, 2) << ',' << format_fixed(x, 6) << ',' << format_fixed(f.kde->density[k], 6) << ','
            << format_fixed(models::gaussian_pdf(x, f.mu, f.sigma), 6) << '\n';
      }
    }
  });
  return outcome;
}

std::vector<FixturePoint> fixture_points(std::string_view name) {
  if (name != "paper9") throw UsageError("unknown fixture '" + std::string(name) + "' (known: paper9)");
  return {{0.05, 0.999, 0.002}, {0.55, 0.928, 0.019}, {1.05, 0.814, 0.070},
          {1.55, 0.689, 0.084}, {2.05, 0.580, 0.0865}, {2.55, 0.500, 0.081},
          {3.05, 0.449, 0.079}, {3.55, 0.419, 0.102}, {4.05, 0.279, 0.057}};
}

FitOutcome run_fixture_fit(const PipelineConfig& config, const Logger&) {
  const auto points = fixture_points(config.fixture);
  std::vector<DataPoint> mu_points, sigma_points;
  FitOutcome outcome;
  for (const auto& p : points) {
    mu_points.push_back({p.s, p.mu});
    sigma_points.push_back({p.s, p.sigma});
    IntervalFit f;
    f.s = p.s;
    f.mu = p.mu;
    f.sigma = p.sigma;
    if (const auto idx = config.binning.index_of_label(p.s)) f.index = *idx;
    outcome.used.push_back(f);
  }
  outcome.intervals = outcome.used;
  const auto fits = fit_curves(mu_points, sigma_points);
  outcome.mu = fits.mu;
  outcome.sigma_polynomial = fits.polynomial;
  outcome.sigma_gaussian = fits.gaussian;
  outcome.sigma_double = fits.double_gaussian;
  outcome.selected = fits.selected;
  const auto dataset = config.dataset.empty() ? "fixture:" + config.fixture : config.dataset;
  outcome.model = build_model(config, fits, dataset);

  auto& report = outcome.report;
  report = curve_report(fits);
  report["model_sigma"] = to_string(SigmaModel::Gaussian);
  report["fixture"] = config.fixture;
  report["binning"] = {{"interval_width", config.binning.width}, {"n_intervals", config.binning.n_intervals}};
  report["intervals_used"] = points.size();
  report["provenance"] = outcome.model->to_json()["provenance"];
  write_fit_outputs(config, outcome);
  write_curve_plots(config.output_dir / files::kPlotDir, config.binning, points,
                    std::vector<std::size_t>(points.size(), 0), fits, *outcome.model);
  return outcome;
}

std::string EvalOutcome::to_text() const {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "s=%.10g mu=%.10g sigma=%.10g\n", s, mu, sigma);
  out += buf;
  if (pdf) {
    std::snprintf(buf, sizeof buf, "pdf=%.10g\n", *pdf);
    out += buf;
  }
  if (probability) {
    std::snprintf(buf, sizeof buf, "probability=%.10g\n", *probability);
    out += buf;
  }
  return out;
}

EvalOutcome run_eval(const PipelineConfig& config) {
  const auto path = config.model.empty() ? config.output_dir / files::kModel : config.model;
  require_input(path);
  const auto model = FunctionalGaussianModel::deserialize(read_file(path));
  if (!config.s) throw UsageError("eval needs an entropy label s");
  const bool range = config.x_min || config.x_max;
  if (range && !(config.x_min && config.x_max)) throw UsageError("eval needs both x_min and x_max for a range");
  if (!config.x && !range) throw UsageError("eval needs x or an x range");

  EvalOutcome outcome;
  outcome.s = *config.s;
  outcome.mu = model.mu_of(outcome.s, config.extrapolate);
  outcome.sigma = model.sigma_of(outcome.s, config.extrapolate);
  if (config.x) outcome.pdf = model.pdf(*config.x, outcome.s, config.extrapolate);
  if (range) outcome.probability = model.probability(*config.x_min, *config.x_max, outcome.s, config.extrapolate);
  return outcome;
}

EvalOutcome run_all(const PipelineConfig& config, const Logger& log) {
  run_generate(config, log);
  auto ingest = config;
  ingest.input = config.output_dir / files::kCorpus;
  ingest.format = "trajectory";
  run_ingest(ingest, log);
  auto staged = config;
  staged.input.clear();
  staged.fixture.clear();
  run_analyze(staged, log);
  const auto fit = run_fit(staged, log);

  const auto busiest = std::max_element(fit.used.begin(), fit.used.end(), [](const auto& a, const auto& b) {
    return a.user_count < b.user_count;
  });
  staged.model = config.output_dir / files::kModel;
  staged.s = busiest->s;
  staged.x.reset();
  staged.x_min = 0.0;
  staged.x_max = 1.0;
  const auto outcome = run_eval(staged);
  write_file_atomic(config.output_dir / "eval.txt", outcome.to_text());
  return outcome;
}

}  // namespace mobfgd

// mobfgd command-line front-end.
//
// Exit codes: 0 success, 1 analysis failure, 2 I/O or usage error,
// 3 value outside a model or parameter domain.

#include <iostream>
#include <list>
#include <string>

#include <CLI11.hpp>

#include "mobfgd/pipeline.hpp"

namespace {

constexpr int kAnalysisFailure = 1;
constexpr int kUsage = 2;
constexpr int kDomain = 3;

std::string dashed(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

/// Options are collected as text and applied through PipelineConfig::set,
/// after the config file, so both routes share one key table.
class Settings {
 public:
  void option(CLI::App* app, const std::string& key, const std::string& help, const std::string& alias = {}) {
    auto& b = bound_.emplace_back();
    b.key = key;
    std::string names = "--" + dashed(key);
    if (!alias.empty()) names = alias + "," + names;
    b.opt = app->add_option(names, b.value, help);
  }

  void flag(CLI::App* app, const std::string& key, const std::string& help) {
    auto& b = bound_.emplace_back();
    b.key = key;
    b.opt = app->add_flag("--" + dashed(key), help);
    b.is_flag = true;
  }

  void apply(mobfgd::PipelineConfig& config) const {
    for (const auto& b : bound_) {
      if (b.opt->count() == 0) continue;
      config.set(b.key, b.is_flag ? "true" : b.value);
    }
  }

 private:
  struct Bound {
    std::string key;
    std::string value;
    CLI::Option* opt = nullptr;
    bool is_flag = false;
  };
  std::list<Bound> bound_;
};

void generator_options(Settings& s, CLI::App* app) {
  s.option(app, "n_users", "Number of synthetic users");
  s.option(app, "seq_length", "Events per user");
  s.option(app, "n_locations", "Size of the location pool");
  s.option(app, "noise_min", "Lower end of the per-user noise range");
  s.option(app, "noise_max", "Upper end of the per-user noise range");
  s.option(app, "tour_period", "Distinct locations in each user's tour");
  s.option(app, "start_time", "Epoch seconds of the first event");
  s.option(app, "step_seconds", "Seconds between events");
}

void analyze_options(Settings& s, CLI::App* app) {
  s.option(app, "markov_order", "Markov context length");
  s.option(app, "unseen_context", "backoff or miss");
  s.option(app, "split", "Train on this leading fraction instead of prequential scoring");
  s.flag(app, "exclude_unpredicted", "Drop steps without a prediction from the denominator");
  s.flag(app, "skip_bad_users", "Skip users that cannot be scored instead of failing");
}

void fit_options(Settings& s, CLI::App* app) {
  s.option(app, "interval_width", "Entropy interval width (bits)");
  s.option(app, "n_intervals", "Number of entropy intervals");
  s.option(app, "min_bin_size", "Users needed for an interval to enter the curve fits");
  s.option(app, "kde_grid_size", "KDE grid points on [0, 1]");
  s.option(app, "min_kde_count", "Users needed for the KDE least-squares fit");
  s.option(app, "ks_alpha", "KS significance level");
  s.flag(app, "truncated_model", "Renormalize the model density to [0, 1]");
  s.option(app, "dataset", "Dataset tag recorded in the model");
  s.option(app, "provenance_time", "Timestamp recorded in the model");
}

void log_warning(std::string_view message) { std::cerr << "warning: " << message << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy/accuracy modelling of mobility traces", "mobfgd"};
  app.set_version_flag("--version", std::string(MOBFGD_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  Settings settings;
  std::string config_path;
  app.add_option("--config", config_path, "TOML or JSON file of pipeline settings");
  settings.option(&app, "threads", "Worker threads (0 = all cores)");
  settings.option(&app, "seed", "Random seed");

  auto* generate = app.add_subcommand("generate", "Write a synthetic trajectory corpus");
  settings.option(generate, "output_dir", "Output directory", "-o");
  generator_options(settings, generate);

  auto* ingest = app.add_subcommand("ingest", "Build filtered trajectories from CDR or trajectory files");
  settings.option(ingest, "input", "Input file", "-i");
  settings.option(ingest, "output_dir", "Output directory", "-o");
  settings.option(ingest, "format", "auto, cdr or trajectory");
  settings.option(ingest, "cdr_columns", "NAME=index column overrides for header-less CDR files");
  settings.option(ingest, "delimiter", "CDR field delimiter");
  settings.option(ingest, "utc_offset", "Local timezone of wall-clock times, e.g. +08:00");
  settings.flag(ingest, "collapse_duplicates", "Drop consecutive repeats of a location");
  settings.option(ingest, "min_active_days", "Active days needed to keep a user");
  settings.option(ingest, "roam_city", "Keep only records with this ROAM_CITY_ID");

  auto* analyze = app.add_subcommand("analyze", "Write per-user entropy and accuracy reports");
  settings.option(analyze, "input", "Trajectory file (default: <out>/trajectories.csv)", "-i");
  settings.option(analyze, "output_dir", "Output directory", "-o");
  settings.option(analyze, "utc_offset", "Local timezone for active-day counting");
  analyze_options(settings, analyze);

  auto* fit = app.add_subcommand("fit", "Fit interval statistics, mu(s), sigma(s) and the model");
  settings.option(fit, "output_dir", "Directory holding the analyze reports; outputs go here", "-o");
  settings.option(fit, "fixture", "Fit a built-in set of interval estimates instead (paper9)");
  fit_options(settings, fit);

  auto* eval = app.add_subcommand("eval", "Evaluate a model at an entropy label");
  settings.option(eval, "model", "Model JSON (default: <out>/model.json)", "-m");
  settings.option(eval, "output_dir", "Output directory", "-o");
  settings.option(eval, "s", "Entropy label");
  settings.option(eval, "x", "Accuracy at which to print the density");
  settings.option(eval, "x_min", "Lower end of a probability range");
  settings.option(eval, "x_max", "Upper end of a probability range");
  settings.flag(eval, "extrapolate", "Accept entropy values off the label grid");

  auto* run_all = app.add_subcommand("run-all", "generate, ingest, analyze, fit and eval in one go");
  settings.option(run_all, "output_dir", "Output directory", "-o");
  generator_options(settings, run_all);
  settings.option(run_all, "min_active_days", "Active days needed to keep a user");
  analyze_options(settings, run_all);
  fit_options(settings, run_all);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    mobfgd::PipelineConfig config;
    if (!config_path.empty()) {
      for (const auto& [key, value] : mobfgd::read_config_document(config_path)) config.set(key, value);
    }
    settings.apply(config);

    if (generate->parsed()) {
      const auto summary = mobfgd::run_generate(config, log_warning);
      std::cout << "wrote " << summary.users << " users, " << summary.events << " events to "
                << summary.output.string() << '\n';
    } else if (ingest->parsed()) {
      std::cout << mobfgd::run_ingest(config, log_warning).to_json().dump(2) << '\n';
    } else if (analyze->parsed()) {
      const auto summary = mobfgd::run_analyze(config, log_warning);
      std::cout << "scored " << summary.users << " users";
      if (summary.skipped > 0) std::cout << ", skipped " << summary.skipped;
      std::cout << '\n';
    } else if (fit->parsed()) {
      const auto outcome = mobfgd::run_fit(config, log_warning);
      std::cout << "intervals used: " << outcome.used.size() << '\n'
                << "mu(s) = " << outcome.mu.a << " s + " << outcome.mu.b << '\n'
                << "sigma(s) = " << outcome.sigma_gaussian.amplitude << " exp(-((s - " << outcome.sigma_gaussian.center
                << ") / " << outcome.sigma_gaussian.width << ")^2)\n"
                << "sigma model selected: " << mobfgd::to_string(outcome.selected) << '\n';
    } else if (eval->parsed()) {
      std::cout << mobfgd::run_eval(config).to_text();
    } else if (run_all->parsed()) {
      std::cout << mobfgd::run_all(config, log_warning).to_text();
    }
  } catch (const mobfgd::AnalysisError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAnalysisFailure;
  } catch (const mobfgd::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const mobfgd::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const mobfgd::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const mobfgd::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAnalysisFailure;
  }
  return 0;
}

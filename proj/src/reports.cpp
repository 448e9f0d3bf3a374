#include "mobfgd/reports.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mobfgd {

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view chomp(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line_no, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

/// Reads data rows after checking the header. Blank and `#` lines are skipped.
template <typename Row>
std::vector<Row> read_rows(std::istream& in, std::string_view header, std::size_t columns,
                           Row (*convert)(const std::vector<std::string_view>&, std::size_t)) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = chomp(line);
    if (text.empty() || text.front() == '#') continue;
    if (!seen_header) {
      if (text != header) {
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" + std::string(header) + "'");
      }
      seen_header = true;
      continue;
    }
    const auto fields = split(text, ',');
    if (fields.size() != columns) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) + " fields, got " +
                       std::to_string(fields.size()));
    }
    rows.push_back(convert(fields, line_no));
  }
  if (!seen_header) throw ParseError("report is empty, expected header '" + std::string(header) + "'");
  return rows;
}

constexpr std::string_view kEntropyHeader = "user_id,n,unique_locations,s_rand,s_unc,s_real";
constexpr std::string_view kAccuracyHeader = "user_id,order,attempts,hits,accuracy";

EntropyProfile entropy_row(const std::vector<std::string_view>& f, std::size_t line_no) {
  EntropyProfile p;
  p.user_id = std::string(f[0]);
  p.sequence_length = parse_number<std::size_t>(f[1], line_no, "n");
  p.n_unique_locations = parse_number<std::size_t>(f[2], line_no, "unique_locations");
  p.s_rand = parse_number<double>(f[3], line_no, "s_rand");
  p.s_unc = parse_number<double>(f[4], line_no, "s_unc");
  p.s_real = parse_number<double>(f[5], line_no, "s_real");
  return p;
}

PredictionResult accuracy_row(const std::vector<std::string_view>& f, std::size_t line_no) {
  PredictionResult r;
  r.user_id = std::string(f[0]);
  r.order = parse_number<std::size_t>(f[1], line_no, "order");
  r.attempts = parse_number<std::size_t>(f[2], line_no, "attempts");
  r.hits = parse_number<std::size_t>(f[3], line_no, "hits");
  r.accuracy = parse_number<double>(f[4], line_no, "accuracy");
  return r;
}

nlohmann::json solver_fields(nlohmann::json record, const LmReport& solver) {
  record["converged"] = solver.converged;
  record["iterations"] = solver.iterations;
  return record;
}

}  // namespace

std::string format_fixed(double value, int decimals) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out(buf, static_cast<std::size_t>(n));
  if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') out.erase(0, 1);
  return out;
}

void write_entropy_report(std::ostream& out, std::span<const EntropyProfile> rows) {
  out << kEntropyHeader << '\n';
  for (const auto& r : rows) {
    out << r.user_id << ',' << r.sequence_length << ',' << r.n_unique_locations << ',' << format_fixed(r.s_rand, 6)
        << ',' << format_fixed(r.s_unc, 6) << ',' << format_fixed(r.s_real, 6) << '\n';
  }
}

std::vector<EntropyProfile> read_entropy_report(std::istream& in) {
  return read_rows<EntropyProfile>(in, kEntropyHeader, 6, &entropy_row);
}

void write_accuracy_report(std::ostream& out, std::span<const PredictionResult> rows) {
  out << kAccuracyHeader << '\n';
  for (const auto& r : rows) {
    out << r.user_id << ',' << r.order << ',' << r.attempts << ',' << r.hits << ',' << format_fixed(r.accuracy, 6)
        << '\n';
  }
}

std::vector<PredictionResult> read_accuracy_report(std::istream& in) {
  return read_rows<PredictionResult>(in, kAccuracyHeader, 5, &accuracy_row);
}

void write_interval_report(std::ostream& out, std::span<const IntervalFit> rows) {
  out << "# ks_p is optimistic: mu and sigma are estimated from the same accuracies (no Lilliefors correction)\n";
  out << "s,user_count,mu,sigma,fit_method,ks_D,ks_p,ks_pass\n";
  for (const auto& r : rows) {
    out << format_fixed(r.s, 2) << ',' << r.user_count << ',' << format_fixed(r.mu, 6) << ','
        << format_fixed(r.sigma, 6) << ',' << to_string(r.method) << ',' << format_fixed(r.ks.statistic, 6) << ','
        << format_fixed(r.ks.p_value, 6) << ',' << (r.ks.pass ? "true" : "false") << '\n';
  }
}

nlohmann::json fit_record(const LinearFit& fit) {
  return {{"tag", "linear"}, {"params", {fit.a, fit.b}}, {"residual_mse", fit.residual_mse},
          {"converged", true},  {"iterations", 0}};
}

nlohmann::json fit_record(const PolynomialFit& fit) {
  return {{"tag", to_string(SigmaModel::Polynomial)},
          {"params", fit.coefficients},
          {"residual_mse", fit.residual_mse},
          {"converged", true},
          {"iterations", 0}};
}

nlohmann::json fit_record(const GaussianCurveFit& fit) {
  return solver_fields({{"tag", to_string(SigmaModel::Gaussian)},
                        {"params", {fit.amplitude, fit.center, fit.width}},
                        {"residual_mse", fit.residual_mse}},
                       fit.solver);
}

nlohmann::json fit_record(const DoubleGaussianCurveFit& fit) {
  const auto p = fit.params();
  return solver_fields({{"tag", to_string(SigmaModel::DoubleGaussian)},
                        {"params", std::vector<double>(p.begin(), p.end())},
                        {"residual_mse", fit.residual_mse},
                        {"collapsed", fit.collapsed}},
                       fit.solver);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  write_file_atomic(path, [&](std::ostream& out) { out.write(content.data(), static_cast<std::streamsize>(content.size())); });
}

void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    writer(out);
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mobfgd

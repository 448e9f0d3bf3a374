#include "mobfgd/cdr_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

namespace mobfgd {

namespace {

constexpr std::array<std::string_view, kCdrFieldCount> kFieldNames{
    "SERVICE_NBR", "CALL_TYPE", "OPPOSITE_NO", "TOLLTYPE_ID", "ROAM_TYPE",    "START_TIME",
    "END_TIME",    "DURATION",  "CITY_ID",     "ROAM_CITY_ID", "OPPCITY_ID", "LAC_ID"};

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::optional<CdrField> field_by_name(std::string_view name) {
  const auto key = upper(trim(name));
  for (std::size_t i = 0; i < kCdrFieldCount; ++i) {
    if (kFieldNames[i] == key) return static_cast<CdrField>(i);
  }
  return std::nullopt;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool getline_chomp(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::string_view cdr_field_name(CdrField field) {
  return kFieldNames.at(static_cast<std::size_t>(field));
}

CdrLayout CdrLayout::from_header(std::string_view header, char delimiter) {
  CdrLayout layout;
  layout.delimiter = delimiter;
  layout.has_header = true;
  const auto cols = split(header, delimiter);
  std::array<bool, kCdrFieldCount> seen{};
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (auto f = field_by_name(cols[i])) {
      const auto idx = static_cast<std::size_t>(*f);
      if (seen[idx]) throw ParseError("duplicate header column " + std::string(kFieldNames[idx]));
      seen[idx] = true;
      layout.column[idx] = i;
    }
  }
  for (std::size_t i = 0; i < kCdrFieldCount; ++i) {
    if (!seen[i]) throw ParseError("header is missing column " + std::string(kFieldNames[i]));
  }
  return layout;
}

CdrLayout CdrLayout::from_mapping(std::string_view mapping, char delimiter) {
  CdrLayout layout;
  layout.delimiter = delimiter;
  layout.has_header = false;
  for (auto entry : split(mapping, ',')) {
    entry = trim(entry);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) throw ParseError("column mapping entry without '=': " + std::string(entry));
    const auto field = field_by_name(entry.substr(0, eq));
    const auto index = parse_int<std::size_t>(trim(entry.substr(eq + 1)));
    if (!field) throw ParseError("unknown CDR column: " + std::string(entry.substr(0, eq)));
    if (!index) throw ParseError("bad column index in mapping: " + std::string(entry));
    layout.column[static_cast<std::size_t>(*field)] = *index;
  }
  return layout;
}

std::optional<std::int64_t> parse_utc_offset(std::string_view text) {
  text = trim(text);
  if (text.empty() || text == "Z" || text == "UTC" || text == "utc") return 0;
  if (text.size() != 6 || (text[0] != '+' && text[0] != '-') || text[3] != ':') return std::nullopt;
  const auto hh = parse_int<int>(text.substr(1, 2));
  const auto mm = parse_int<int>(text.substr(4, 2));
  if (!hh || !mm || *hh > 14 || *mm > 59) return std::nullopt;
  const std::int64_t seconds = *hh * 3600 + *mm * 60;
  return text[0] == '-' ? -seconds : seconds;
}

std::optional<Timestamp> parse_timestamp(std::string_view text, std::int64_t utc_offset_seconds) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.find_first_not_of("+-0123456789") == std::string_view::npos) {
    return parse_int<Timestamp>(text.front() == '+' ? text.substr(1) : text);
  }
  // YYYY-MM-DD HH:MM:SS
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || (text[10] != ' ' && text[10] != 'T') ||
      text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  const auto y = parse_int<int>(text.substr(0, 4));
  const auto mo = parse_int<unsigned>(text.substr(5, 2));
  const auto d = parse_int<unsigned>(text.substr(8, 2));
  const auto h = parse_int<int>(text.substr(11, 2));
  const auto mi = parse_int<int>(text.substr(14, 2));
  const auto s = parse_int<int>(text.substr(17, 2));
  if (!y || !mo || !d || !h || !mi || !s) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*mo}, std::chrono::day{*d}};
  if (!ymd.ok() || *h > 23 || *mi > 59 || *s > 60) return std::nullopt;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + *h * 3600 + *mi * 60 + *s - utc_offset_seconds;
}

std::int64_t calendar_day(Timestamp t, std::int64_t utc_offset_seconds) {
  return floor_div(t + utc_offset_seconds, 86400);
}

void parse_records(std::istream& source, const CdrLayout& layout,
                   const std::function<void(CdrRecord&&)>& on_record,
                   const std::function<void(ParseDiagnostic&&)>& on_diagnostic,
                   std::int64_t utc_offset_seconds) {
  if (!source.good()) throw IoError("CDR source is not readable");
  CdrLayout effective = layout;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = layout.has_header;
  const auto max_column = [&] { return *std::max_element(effective.column.begin(), effective.column.end()); };
  std::size_t expected = std::max(kCdrFieldCount, max_column() + 1);

  while (getline_chomp(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      try {
        effective = CdrLayout::from_header(line, layout.delimiter);
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      }
      expected = std::max(kCdrFieldCount, max_column() + 1);
      continue;
    }
    const auto cols = split(line, effective.delimiter);
    if (cols.size() != expected) {
      on_diagnostic({line_no, "expected " + std::to_string(expected) + " fields, found " +
                                  std::to_string(cols.size())});
      continue;
    }
    const auto col = [&](CdrField f) { return trim(cols[effective.column[static_cast<std::size_t>(f)]]); };
    const auto start = parse_timestamp(col(CdrField::StartTime), utc_offset_seconds);
    if (!start) {
      on_diagnostic({line_no, "unparseable START_TIME '" + std::string(col(CdrField::StartTime)) + "'"});
      continue;
    }
    CdrRecord rec;
    rec.service_nbr = col(CdrField::ServiceNbr);
    rec.lac_id = col(CdrField::LacId);
    if (rec.service_nbr.empty() || rec.lac_id.empty()) {
      on_diagnostic({line_no, "empty SERVICE_NBR or LAC_ID"});
      continue;
    }
    rec.start_time = *start;
    rec.roam_city_id = col(CdrField::RoamCityId);
    rec.call_type = col(CdrField::CallType);
    rec.opposite_no = col(CdrField::OppositeNo);
    rec.tolltype_id = col(CdrField::TolltypeId);
    rec.roam_type = col(CdrField::RoamType);
    rec.end_time = col(CdrField::EndTime);
    rec.duration = col(CdrField::Duration);
    rec.city_id = col(CdrField::CityId);
    rec.oppcity_id = col(CdrField::OppcityId);
    on_record(std::move(rec));
  }
  if (source.bad()) throw IoError("read error on CDR source");
}

ParsedRecords parse_records(std::istream& source, const CdrLayout& layout, std::int64_t utc_offset_seconds) {
  ParsedRecords out;
  parse_records(
      source, layout, [&](CdrRecord&& r) { out.records.push_back(std::move(r)); },
      [&](ParseDiagnostic&& d) { out.diagnostics.push_back(std::move(d)); }, utc_offset_seconds);
  return out;
}

Trajectory::Trajectory(std::string user_id, std::vector<Event> events, std::int64_t utc_offset_seconds)
    : user_id_(std::move(user_id)), events_(std::move(events)) {
  if (user_id_.empty()) throw DomainError("trajectory user id is empty");
  if (events_.empty()) throw DomainError("trajectory of user '" + user_id_ + "' has no events");
  std::stable_sort(events_.begin(), events_.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  std::int64_t last_day = calendar_day(events_.front().time, utc_offset_seconds);
  active_days_ = 1;
  for (const auto& e : events_) {
    const auto day = calendar_day(e.time, utc_offset_seconds);
    if (day != last_day) {
      ++active_days_;
      last_day = day;
    }
  }
}

std::vector<Trajectory> build_trajectories(std::span<const CdrRecord> records, const IngestOptions& options) {
  std::map<std::string, std::vector<Event>> by_user;
  for (const auto& r : records) {
    if (options.roam_city && r.roam_city_id != *options.roam_city) continue;
    by_user[r.service_nbr].push_back({r.start_time, r.lac_id});
  }
  std::vector<Trajectory> out;
  out.reserve(by_user.size());
  for (auto& [user, events] : by_user) {
    Trajectory traj(user, std::move(events), options.utc_offset_seconds);
    if (options.collapse_duplicates) {
      std::vector<Event> kept;
      for (const auto& e : traj.events()) {
        if (kept.empty() || kept.back().location != e.location) kept.push_back(e);
      }
      traj = Trajectory(user, std::move(kept), options.utc_offset_seconds);
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<Trajectory> filter_active(std::span<const Trajectory> trajectories, std::size_t min_active_days) {
  std::vector<Trajectory> out;
  for (const auto& t : trajectories) {
    if (t.active_days() >= min_active_days) out.push_back(t);
  }
  return out;
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories) {
  std::vector<const Trajectory*> order;
  order.reserve(trajectories.size());
  for (const auto& t : trajectories) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(),
                   [](const Trajectory* a, const Trajectory* b) { return a->user_id() < b->user_id(); });
  out << "user_id,timestamp,location_id\n";
  for (const auto* t : order) {
    for (const auto& e : t->events()) out << t->user_id() << ',' << e.time << ',' << e.location << '\n';
  }
  if (!out) throw IoError("failed writing trajectory file");
}

std::vector<Trajectory> read_trajectories(std::istream& in, std::int64_t utc_offset_seconds) {
  if (!in.good()) throw IoError("trajectory source is not readable");
  std::map<std::string, std::vector<Event>> by_user;
  std::string line;
  std::size_t line_no = 0;
  while (getline_chomp(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (line_no == 1 && cols.size() == 3 && trim(cols[0]) == "user_id") continue;
    if (cols.size() != 3) {
      throw ParseError("trajectory file line " + std::to_string(line_no) + ": expected 3 fields, found " +
                       std::to_string(cols.size()));
    }
    const auto t = parse_timestamp(cols[1], utc_offset_seconds);
    const auto user = trim(cols[0]);
    const auto loc = trim(cols[2]);
    if (!t || user.empty() || loc.empty()) {
      throw ParseError("trajectory file line " + std::to_string(line_no) + ": malformed row");
    }
    by_user[std::string(user)].push_back({*t, std::string(loc)});
  }
  if (in.bad()) throw IoError("read error on trajectory source");
  std::vector<Trajectory> out;
  out.reserve(by_user.size());
  for (auto& [user, events] : by_user) out.emplace_back(user, std::move(events), utc_offset_seconds);
  return out;
}

EncodedSequence encode_locations(const Trajectory& trajectory) {
  EncodedSequence enc;
  for (const auto& e : trajectory.events()) enc.alphabet.push_back(e.location);
  std::sort(enc.alphabet.begin(), enc.alphabet.end());
  enc.alphabet.erase(std::unique(enc.alphabet.begin(), enc.alphabet.end()), enc.alphabet.end());
  std::unordered_map<std::string_view, Symbol> index;
  index.reserve(enc.alphabet.size());
  for (std::size_t i = 0; i < enc.alphabet.size(); ++i) index.emplace(enc.alphabet[i], static_cast<Symbol>(i));
  enc.symbols.reserve(trajectory.size());
  for (const auto& e : trajectory.events()) enc.symbols.push_back(index.at(e.location));
  return enc;
}

}  // namespace mobfgd

#ifndef MOBFGD_CDR_INGEST_HPP
#define MOBFGD_CDR_INGEST_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobfgd/common.hpp"

namespace mobfgd {

/// Columns of a CDR record, in their canonical file order.
enum class CdrField : std::size_t {
  ServiceNbr,
  CallType,
  OppositeNo,
  TolltypeId,
  RoamType,
  StartTime,
  EndTime,
  Duration,
  CityId,
  RoamCityId,
  OppcityId,
  LacId,
};

inline constexpr std::size_t kCdrFieldCount = 12;

/// Upper-case column name as it appears in CDR headers, e.g. "LAC_ID".
std::string_view cdr_field_name(CdrField field);

/// One call detail record. Only the user, time, roaming city and location
/// area are interpreted; the other eight columns are carried verbatim.
struct CdrRecord {
  std::string service_nbr;
  Timestamp start_time = 0;
  std::string roam_city_id;
  std::string lac_id;

  std::string call_type;
  std::string opposite_no;
  std::string tolltype_id;
  std::string roam_type;
  std::string end_time;
  std::string duration;
  std::string city_id;
  std::string oppcity_id;
};

/// Physical layout of a delimited CDR file.
struct CdrLayout {
  char delimiter = ',';
  /// When set, the first line is a header and column positions come from it.
  bool has_header = true;
  /// column[field] is the zero-based column holding `field`.
  std::array<std::size_t, kCdrFieldCount> column{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

  /// Resolves column positions from a header line. Names are matched
  /// case-insensitively; all twelve must be present.
  static CdrLayout from_header(std::string_view header, char delimiter = ',');

  /// Applies `NAME=index` overrides, comma separated, on top of the
  /// canonical order, e.g. "LAC_ID=0,SERVICE_NBR=11".
  static CdrLayout from_mapping(std::string_view mapping, char delimiter = ',');
};

/// Recoverable per-line problem reported while parsing.
struct ParseDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string message;
};

/// Parses "YYYY-MM-DD HH:MM:SS" (a 'T' separator is also accepted) or
/// integral epoch seconds. Wall-clock strings are read in the fixed timezone
/// `utc_offset_seconds` east of UTC.
std::optional<Timestamp> parse_timestamp(std::string_view text, std::int64_t utc_offset_seconds = 0);

/// Days since 1970-01-01 of the local calendar date of `t`.
std::int64_t calendar_day(Timestamp t, std::int64_t utc_offset_seconds = 0);

/// Parses a "+HH:MM" / "-HH:MM" / "UTC" / "Z" timezone designator.
std::optional<std::int64_t> parse_utc_offset(std::string_view text);

/// Streaming parser: calls on_record for every well-formed line and
/// on_diagnostic for every malformed one, in input order. Blank lines are
/// skipped. Throws IoError when the stream cannot be read.
void parse_records(std::istream& source, const CdrLayout& layout,
                   const std::function<void(CdrRecord&&)>& on_record,
                   const std::function<void(ParseDiagnostic&&)>& on_diagnostic,
                   std::int64_t utc_offset_seconds = 0);

struct ParsedRecords {
  std::vector<CdrRecord> records;
  std::vector<ParseDiagnostic> diagnostics;
};

ParsedRecords parse_records(std::istream& source, const CdrLayout& layout,
                            std::int64_t utc_offset_seconds = 0);

struct Event {
  Timestamp time = 0;
  std::string location;

  friend bool operator==(const Event&, const Event&) = default;
};

/// A user's time-ordered location sequence.
///
/// Construction stable-sorts the events by time and counts distinct local
/// calendar dates. Throws DomainError on an empty event list or user id.
class Trajectory {
 public:
  Trajectory(std::string user_id, std::vector<Event> events, std::int64_t utc_offset_seconds = 0);

  const std::string& user_id() const noexcept { return user_id_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  std::size_t active_days() const noexcept { return active_days_; }

 private:
  std::string user_id_;
  std::vector<Event> events_;
  std::size_t active_days_ = 0;
};

struct IngestOptions {
  std::int64_t utc_offset_seconds = 0;
  /// Drop consecutive repeats of the same location after sorting.
  bool collapse_duplicates = false;
  /// Keep only records whose ROAM_CITY_ID equals this value.
  std::optional<std::string> roam_city;
};

/// Groups records by user, sorted by user id. Events keep input order among
/// equal timestamps.
std::vector<Trajectory> build_trajectories(std::span<const CdrRecord> records,
                                           const IngestOptions& options = {});

/// Keeps trajectories with at least `min_active_days` active days, in order.
std::vector<Trajectory> filter_active(std::span<const Trajectory> trajectories,
                                      std::size_t min_active_days = 150);

/// Writes `user_id,timestamp,location_id` rows (with a header), sorted by
/// user id then timestamp.
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories);

/// Reads the trajectory file format back. Rows of a user need not be
/// contiguous. Throws ParseError with the line number on a malformed row.
std::vector<Trajectory> read_trajectories(std::istream& in, std::int64_t utc_offset_seconds = 0);

/// A trajectory's locations mapped to dense symbols whose numeric order is
/// the lexicographic order of the location ids.
struct EncodedSequence {
  std::vector<Symbol> symbols;
  std::vector<std::string> alphabet;  // alphabet[symbol] is the location id
};

EncodedSequence encode_locations(const Trajectory& trajectory);

}  // namespace mobfgd

#endif  // MOBFGD_CDR_INGEST_HPP

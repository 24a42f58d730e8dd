// Dataset ingestion: raw smartphone log lines -> typed events, partitioned
// by user and calendar day. A raw line is one JSON object whose single
// top-level key names the sensor, matching the published UbiqLog layout.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lifegraph/timeutil.hpp"

namespace lifegraph {

enum class SensorKind : int {
  WiFi = 0,
  Location = 1,
  SMS = 2,
  Call = 3,
  ApplicationUsage = 4,
  BluetoothProximity = 5,
  ActivityState = 6,
};

constexpr int kSensorCount = 7;

const char* sensor_name(SensorKind k);
std::optional<SensorKind> sensor_from_name(const std::string& name);

enum class Gender : char { M = 'M', F = 'F' };

struct LifelogEvent {
  std::string user_id;
  SensorKind sensor = SensorKind::WiFi;
  std::string entity_key;
  int64_t start = 0;
  std::optional<int64_t> end;
  std::map<std::string, std::string> attrs;
};

struct ParseReject {
  enum class Reason { UnknownSensor, MalformedStructure, UnparseableTimestamp };
  Reason reason;
  std::string line;

  const char* reason_text() const;
};

using ParseResult = std::variant<LifelogEvent, ParseReject>;

// Parse one raw log line. Total: any byte sequence yields an event or a
// reject, never a throw. timestamp_format is the strftime-style pattern
// documented in timeutil.hpp.
ParseResult parse_log_line(const std::string& line, const std::string& timestamp_format);

struct UserMeta {
  std::string user_id;
  Gender gender = Gender::M;
  int64_t day_count = 0;
  std::string archetype;  // ground-truth label for synthetic users, else empty
};

struct ScanStats {
  int64_t accepted = 0;
  int64_t rejected = 0;
  int64_t files = 0;
  int64_t unreadable_files = 0;
};

struct RejectRecord {
  std::string file;
  int64_t line_number;
  ParseReject reject;
};

struct ScanOptions {
  // Regular expression over the user directory name; capture group 1 is the
  // user id, group 2 the gender letter.
  std::string user_dir_pattern = R"(^(\d+)_([MF])$)";
  std::string timestamp_format = "%m-%d-%Y %H:%M:%S";
};

using EventSink = std::function<void(LifelogEvent&&)>;
using RejectSink = std::function<void(const RejectRecord&)>;

// Scan a dataset root. For each directory matching the pattern, every
// regular file under it is read line by line. Events are delivered to the
// sink sorted per user by (start, sensor, entity, file order). Throws
// EmptyDatasetError when no directory matches.
std::vector<UserMeta> scan_dataset(const std::filesystem::path& root, const ScanOptions& opts,
                                   const EventSink& on_event, const RejectSink& on_reject,
                                   ScanStats* stats = nullptr);

struct DayBucket {
  std::string user_id;
  int64_t date = 0;  // epoch day
  std::vector<LifelogEvent> events;
};

// Split one user's events into per-day buckets. Events are sorted by start
// time; an event whose end crosses midnight is clipped at the day boundary
// and its remainder re-emitted into the next day's bucket.
std::vector<DayBucket> partition_by_day(std::vector<LifelogEvent> events);

}  // namespace lifegraph

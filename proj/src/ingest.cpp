#include "lifegraph/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>

#include <json.hpp>

#include "lifegraph/common.hpp"

namespace lifegraph {

namespace {

const char* const kSensorNames[kSensorCount] = {
    "WiFi", "Location", "SMS", "Call", "ApplicationUsage", "BluetoothProximity", "ActivityState",
};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// The public dataset is not consistent about sensor key spelling; accept the
// variants seen in the wild, case-insensitively, with spaces stripped.
std::optional<SensorKind> sensor_from_key(const std::string& raw) {
  std::string k;
  for (char c : raw)
    if (c != ' ') k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (k == "wifi") return SensorKind::WiFi;
  if (k == "location") return SensorKind::Location;
  if (k == "sms") return SensorKind::SMS;
  if (k == "call") return SensorKind::Call;
  if (k == "application" || k == "applicationusage") return SensorKind::ApplicationUsage;
  if (k == "bluetooth" || k == "bluetoothproximity") return SensorKind::BluetoothProximity;
  if (k == "activity" || k == "activitystate") return SensorKind::ActivityState;
  return std::nullopt;
}

std::string json_to_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Case-insensitive field lookup; removes the field from the map when found
// so leftovers land in attrs.
std::optional<std::string> take_field(std::map<std::string, std::string>& fields,
                                      std::initializer_list<const char*> names) {
  for (const char* name : names) {
    std::string want = lower(name);
    for (auto it = fields.begin(); it != fields.end(); ++it) {
      if (lower(it->first) == want) {
        std::string v = it->second;
        fields.erase(it);
        return v;
      }
    }
  }
  return std::nullopt;
}

// Round a coordinate to 3 decimals so identical places collapse to one
// source node.
std::string round_coord(const std::string& s) {
  try {
    double v = std::stod(s);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
  } catch (...) {
    return s;
  }
}

}  // namespace

const char* sensor_name(SensorKind k) { return kSensorNames[static_cast<int>(k)]; }

std::optional<SensorKind> sensor_from_name(const std::string& name) {
  for (int i = 0; i < kSensorCount; ++i) {
    if (name == kSensorNames[i]) return static_cast<SensorKind>(i);
  }
  return sensor_from_key(name);
}

const char* ParseReject::reason_text() const {
  switch (reason) {
    case Reason::UnknownSensor: return "unknown sensor key";
    case Reason::MalformedStructure: return "malformed structure";
    case Reason::UnparseableTimestamp: return "unparseable timestamp";
  }
  return "unknown";
}

ParseResult parse_log_line(const std::string& line, const std::string& timestamp_format) {
  auto reject = [&](ParseReject::Reason r) { return ParseReject{r, line}; };

  nlohmann::json doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || doc.size() != 1) {
    return reject(ParseReject::Reason::MalformedStructure);
  }
  auto item = doc.begin();
  auto kind = sensor_from_key(item.key());
  if (!kind) return reject(ParseReject::Reason::UnknownSensor);
  if (!item.value().is_object()) return reject(ParseReject::Reason::MalformedStructure);

  std::map<std::string, std::string> fields;
  for (const auto& [k, v] : item.value().items()) fields[k] = json_to_text(v);

  LifelogEvent ev;
  ev.sensor = *kind;

  // Entity key, per sensor.
  switch (*kind) {
    case SensorKind::Call:
      ev.entity_key = take_field(fields, {"Number", "Address"}).value_or("");
      break;
    case SensorKind::SMS:
      ev.entity_key = take_field(fields, {"Address", "Number"}).value_or("");
      break;
    case SensorKind::ApplicationUsage:
      ev.entity_key = take_field(fields, {"ProcessName", "AppName", "name"}).value_or("");
      break;
    case SensorKind::WiFi: {
      auto ssid = take_field(fields, {"SSID"});
      if (ssid && !ssid->empty()) {
        ev.entity_key = *ssid;
      } else {
        ev.entity_key = take_field(fields, {"BSSID"}).value_or("");
      }
      break;
    }
    case SensorKind::BluetoothProximity:
      ev.entity_key = take_field(fields, {"address", "name"}).value_or("");
      break;
    case SensorKind::Location: {
      auto place = take_field(fields, {"place", "PlaceName"});
      if (place && !place->empty()) {
        ev.entity_key = *place;
      } else {
        auto lat = take_field(fields, {"Latitude", "lat"});
        auto lon = take_field(fields, {"Longitude", "lon", "lng"});
        if (lat && lon) ev.entity_key = round_coord(*lat) + "," + round_coord(*lon);
      }
      break;
    }
    case SensorKind::ActivityState:
      ev.entity_key = take_field(fields, {"State", "activity", "label"}).value_or("");
      break;
  }
  if (ev.entity_key.empty()) return reject(ParseReject::Reason::MalformedStructure);

  // Start time. ApplicationUsage records carry explicit Start/End; the
  // others carry a single "time" field.
  auto start_text = take_field(fields, {"Start", "time", "Time", "date", "Date"});
  if (!start_text) return reject(ParseReject::Reason::UnparseableTimestamp);
  auto start = parse_timestamp(*start_text, timestamp_format);
  if (!start) return reject(ParseReject::Reason::UnparseableTimestamp);
  ev.start = *start;

  if (auto end_text = take_field(fields, {"End", "end"})) {
    auto end = parse_timestamp(*end_text, timestamp_format);
    if (!end) return reject(ParseReject::Reason::UnparseableTimestamp);
    if (*end < ev.start) return reject(ParseReject::Reason::MalformedStructure);
    ev.end = *end;
  }
  // Call duration in seconds stands in for an explicit end time.
  if (!ev.end && ev.sensor == SensorKind::Call) {
    if (auto dur = take_field(fields, {"Duration"})) {
      try {
        long sec = std::stol(*dur);
        if (sec > 0) ev.end = ev.start + sec;
        fields["Duration"] = *dur;  // keep the raw value visible in attrs
      } catch (...) {
        fields["Duration"] = *dur;
      }
    }
  }

  ev.attrs = std::move(fields);
  return ev;
}

std::vector<UserMeta> scan_dataset(const std::filesystem::path& root, const ScanOptions& opts,
                                   const EventSink& on_event, const RejectSink& on_reject,
                                   ScanStats* stats) {
  namespace fs = std::filesystem;
  std::regex dir_re;
  try {
    dir_re = std::regex(opts.user_dir_pattern);
  } catch (const std::regex_error& e) {
    throw UsageError(std::string("bad user_dir_pattern: ") + e.what());
  }

  if (!fs::exists(root) || !fs::is_directory(root)) {
    throw EmptyDatasetError("dataset root does not exist: " + root.string());
  }

  struct UserDir {
    std::string user_id;
    Gender gender;
    fs::path path;
  };
  std::vector<UserDir> users;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, dir_re) || m.size() < 3) continue;
    Gender g = (m[2].str() == "F" || m[2].str() == "f") ? Gender::F : Gender::M;
    users.push_back({m[1].str(), g, entry.path()});
  }
  if (users.empty()) {
    throw EmptyDatasetError("no user directories matching pattern under " + root.string());
  }
  std::sort(users.begin(), users.end(),
            [](const UserDir& a, const UserDir& b) { return a.user_id < b.user_id; });

  ScanStats local;
  std::vector<UserMeta> metas;
  for (const auto& u : users) {
    // Deterministic file order.
    std::vector<fs::path> files;
    for (const auto& f : fs::recursive_directory_iterator(u.path)) {
      if (f.is_regular_file()) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());

    struct Keyed {
      LifelogEvent ev;
      size_t file_index;
      int64_t line_number;
    };
    std::vector<Keyed> events;
    for (size_t fi = 0; fi < files.size(); ++fi) {
      std::ifstream in(files[fi]);
      if (!in) {
        std::fprintf(stderr, "warning: unreadable file skipped: %s\n", files[fi].string().c_str());
        ++local.unreadable_files;
        continue;
      }
      ++local.files;
      std::string line;
      int64_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ParseResult res = parse_log_line(line, opts.timestamp_format);
        if (auto* ev = std::get_if<LifelogEvent>(&res)) {
          ev->user_id = u.user_id;
          events.push_back({std::move(*ev), fi, lineno});
        } else {
          ++local.rejected;
          on_reject({files[fi].string(), lineno, std::get<ParseReject>(std::move(res))});
        }
      }
    }

    std::stable_sort(events.begin(), events.end(), [](const Keyed& a, const Keyed& b) {
      if (a.ev.start != b.ev.start) return a.ev.start < b.ev.start;
      if (a.ev.sensor != b.ev.sensor) return a.ev.sensor < b.ev.sensor;
      if (a.ev.entity_key != b.ev.entity_key) return a.ev.entity_key < b.ev.entity_key;
      if (a.file_index != b.file_index) return a.file_index < b.file_index;
      return a.line_number < b.line_number;
    });

    std::vector<int64_t> days;
    for (auto& k : events) {
      days.push_back(day_of(k.ev.start));
      ++local.accepted;
      on_event(std::move(k.ev));
    }
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());

    UserMeta meta;
    meta.user_id = u.user_id;
    meta.gender = u.gender;
    meta.day_count = static_cast<int64_t>(days.size());
    metas.push_back(std::move(meta));
  }
  if (stats) *stats = local;
  return metas;
}

std::vector<DayBucket> partition_by_day(std::vector<LifelogEvent> events) {
  std::vector<DayBucket> out;
  if (events.empty()) return out;

  // Clip events that cross midnight; the remainder goes to the next day,
  // possibly repeatedly for multi-day events.
  std::vector<LifelogEvent> pieces;
  for (auto& ev : events) {
    LifelogEvent cur = std::move(ev);
    while (cur.end && *cur.end > (day_of(cur.start) + 1) * kSecondsPerDay) {
      int64_t boundary = (day_of(cur.start) + 1) * kSecondsPerDay;
      LifelogEvent head = cur;
      head.end = boundary;
      pieces.push_back(std::move(head));
      cur.start = boundary;
    }
    pieces.push_back(std::move(cur));
  }

  std::stable_sort(pieces.begin(), pieces.end(),
                   [](const LifelogEvent& a, const LifelogEvent& b) {
                     if (a.user_id != b.user_id) return a.user_id < b.user_id;
                     if (a.start != b.start) return a.start < b.start;
                     if (a.sensor != b.sensor) return a.sensor < b.sensor;
                     if (a.entity_key != b.entity_key) return a.entity_key < b.entity_key;
                     return a.end.value_or(a.start) < b.end.value_or(b.start);
                   });

  for (auto& ev : pieces) {
    int64_t day = day_of(ev.start);
    if (out.empty() || out.back().date != day || out.back().user_id != ev.user_id) {
      out.push_back(DayBucket{ev.user_id, day, {}});
    }
    out.back().events.push_back(std::move(ev));
  }
  return out;
}

}  // namespace lifegraph

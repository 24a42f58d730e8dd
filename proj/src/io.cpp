#include "lifegraph/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lifegraph/common.hpp"

namespace lifegraph {

std::string header_line(const ExportHeader& header) {
  return "# lifegraph config=" + header.config_hash + " seed=" + std::to_string(header.seed) + "\n";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return out;
}

// Yield non-empty, non-comment lines.
std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace

void write_events(const std::filesystem::path& path, const std::vector<LifelogEvent>& events,
                  const ExportHeader& header) {
  std::string out = header_line(header);
  out += "user_id\tsensor\tentity_key\tstart\tend\n";
  for (const auto& ev : events) {
    out += ev.user_id + "\t" + sensor_name(ev.sensor) + "\t" + ev.entity_key + "\t" +
           format_iso(ev.start) + "\t" + (ev.end ? format_iso(*ev.end) : "") + "\n";
  }
  write_text_file(path, out);
}

std::vector<LifelogEvent> read_events(const std::filesystem::path& path) {
  std::vector<LifelogEvent> events;
  auto lines = data_lines(read_text_file(path));
  for (const auto& line : lines) {
    auto cols = split_tabs(line);
    if (cols.size() != 5) throw DataError("event file " + path.string() + ": bad row: " + line);
    if (cols[0] == "user_id") continue;  // column header
    LifelogEvent ev;
    ev.user_id = cols[0];
    auto sensor = sensor_from_name(cols[1]);
    if (!sensor) throw DataError("event file: unknown sensor " + cols[1]);
    ev.sensor = *sensor;
    ev.entity_key = cols[2];
    auto start = parse_iso(cols[3]);
    if (!start) throw DataError("event file: bad start " + cols[3]);
    ev.start = *start;
    if (!cols[4].empty()) {
      auto end = parse_iso(cols[4]);
      if (!end) throw DataError("event file: bad end " + cols[4]);
      ev.end = *end;
    }
    events.push_back(std::move(ev));
  }
  return events;
}

void write_users(const std::filesystem::path& path, const std::vector<UserMeta>& users,
                 const ExportHeader& header) {
  std::string out = header_line(header);
  out += "user_id\tgender\tday_count\tarchetype\n";
  for (const auto& u : users) {
    out += u.user_id + "\t";
    out += static_cast<char>(u.gender);
    out += "\t" + std::to_string(u.day_count) + "\t" + (u.archetype.empty() ? "-" : u.archetype) +
           "\n";
  }
  write_text_file(path, out);
}

std::vector<UserMeta> read_users(const std::filesystem::path& path) {
  std::vector<UserMeta> users;
  for (const auto& line : data_lines(read_text_file(path))) {
    auto cols = split_tabs(line);
    if (cols.size() != 4) throw DataError("users file " + path.string() + ": bad row: " + line);
    if (cols[0] == "user_id") continue;
    UserMeta u;
    u.user_id = cols[0];
    u.gender = cols[1] == "F" ? Gender::F : Gender::M;
    u.day_count = std::stoll(cols[2]);
    if (cols[3] != "-") u.archetype = cols[3];
    users.push_back(std::move(u));
  }
  return users;
}

void write_reject_log(const std::filesystem::path& path, const std::vector<RejectRecord>& rejects,
                      const ExportHeader& header) {
  std::string out = header_line(header);
  for (const auto& r : rejects) {
    out += r.file + ":" + std::to_string(r.line_number) + "\t" + r.reject.reason_text() + "\t" +
           r.reject.line + "\n";
  }
  write_text_file(path, out);
}

void write_embeddings(const std::filesystem::path& path, const std::vector<EmbeddingRow>& rows,
                      const ExportHeader& header) {
  std::string out = header_line(header);
  out += "user_id\tdate\tsex";
  size_t dim = rows.empty() ? 0 : rows.front().z.size();
  for (size_t i = 0; i < dim; ++i) out += "\tz_" + std::to_string(i);
  out += "\n";
  for (const auto& r : rows) {
    out += r.user_id + "\t" + format_date(r.date) + "\t";
    out += static_cast<char>(r.sex);
    for (double v : r.z) out += "\t" + format_double(v);
    out += "\n";
  }
  write_text_file(path, out);
}

std::vector<EmbeddingRow> read_embeddings(const std::filesystem::path& path) {
  std::vector<EmbeddingRow> rows;
  for (const auto& line : data_lines(read_text_file(path))) {
    auto cols = split_tabs(line);
    if (cols.size() < 4) throw DataError("embeddings " + path.string() + ": bad row: " + line);
    if (cols[0] == "user_id") continue;
    EmbeddingRow r;
    r.user_id = cols[0];
    auto date = parse_date(cols[1]);
    if (!date) throw DataError("embeddings: bad date " + cols[1]);
    r.date = *date;
    r.sex = cols[2] == "F" ? Gender::F : Gender::M;
    for (size_t i = 3; i < cols.size(); ++i) r.z.push_back(std::stod(cols[i]));
    rows.push_back(std::move(r));
  }
  return rows;
}

// --- block files -------------------------------------------------------------

namespace {

void append_u64_le(std::string& out, uint64_t bits, int bytes) {
  for (int i = 0; i < bytes; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

uint64_t read_u64_le(const std::string& bytes, size_t pos, int n) {
  uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

BlockWriter::BlockWriter(std::string dtype) : dtype_(std::move(dtype)) {
  if (dtype_ != "f64" && dtype_ != "f32") throw UsageError("block dtype must be f64 or f32");
}

void BlockWriter::add(const std::string& name, std::span<const double> data,
                      std::vector<int> shape) {
  size_t expect = 1;
  for (int s : shape) expect *= static_cast<size_t>(s);
  if (expect != data.size()) {
    throw DimensionError("block " + name + ": shape does not match data size");
  }
  nlohmann::json entry;
  entry["name"] = name;
  entry["shape"] = shape;
  entry["dtype"] = dtype_;
  entry["offset"] = bytes_.size();
  entry["count"] = data.size();
  entries_.push_back(std::move(entry));
  if (dtype_ == "f64") {
    for (double v : data) {
      uint64_t bits;
      std::memcpy(&bits, &v, 8);
      append_u64_le(bytes_, bits, 8);
    }
  } else {
    for (double v : data) {
      float f = static_cast<float>(v);
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      append_u64_le(bytes_, bits, 4);
    }
  }
}

BlockReader::BlockReader(nlohmann::json manifest, std::string bytes) : bytes_(std::move(bytes)) {
  try {
    for (const auto& e : manifest) {
      Entry entry;
      entry.shape = e.at("shape").get<std::vector<int>>();
      entry.dtype = e.at("dtype").get<std::string>();
      entry.offset = e.at("offset").get<size_t>();
      entry.count = e.at("count").get<size_t>();
      size_t width = entry.dtype == "f64" ? 8 : 4;
      if (entry.dtype != "f64" && entry.dtype != "f32") {
        throw DataError("block dtype " + entry.dtype + " unsupported");
      }
      if (entry.offset + entry.count * width > bytes_.size()) {
        throw DataError("block " + e.at("name").get<std::string>() + " exceeds binary size");
      }
      entries_[e.at("name").get<std::string>()] = std::move(entry);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("bad block manifest: ") + ex.what());
  }
}

bool BlockReader::has(const std::string& name) const { return entries_.count(name) > 0; }

std::vector<int> BlockReader::shape(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DataError("missing block " + name);
  return it->second.shape;
}

std::vector<double> BlockReader::read(const std::string& name,
                                      const std::vector<int>& expected_shape) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DataError("missing block " + name);
  const Entry& e = it->second;
  if (!expected_shape.empty() && e.shape != expected_shape) {
    throw CompatibilityError("block " + name + " has unexpected shape");
  }
  std::vector<double> out(e.count);
  if (e.dtype == "f64") {
    for (size_t i = 0; i < e.count; ++i) {
      uint64_t bits = read_u64_le(bytes_, e.offset + 8 * i, 8);
      double v;
      std::memcpy(&v, &bits, 8);
      out[i] = v;
    }
  } else {
    for (size_t i = 0; i < e.count; ++i) {
      uint32_t bits = static_cast<uint32_t>(read_u64_le(bytes_, e.offset + 4 * i, 4));
      float f;
      std::memcpy(&f, &bits, 4);
      out[i] = static_cast<double>(f);
    }
  }
  return out;
}

}  // namespace lifegraph

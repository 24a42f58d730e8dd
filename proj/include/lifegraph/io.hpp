// File formats shared between pipeline stages: tab-separated event and
// metadata files, the embeddings table, and the manifest + flat-float binary
// convention used by checkpoints and feature sidecars. Every text artifact
// starts with a header comment recording the config hash and seed, and all
// writers are byte-deterministic.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifegraph/graph.hpp"
#include "lifegraph/ingest.hpp"

namespace lifegraph {

std::string header_line(const ExportHeader& header);

// Full-precision, locale-independent float formatting (round-trips exactly).
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Normalized event file: user_id, sensor, entity_key, start, end (ISO-8601,
// empty when absent), one event per line.
void write_events(const std::filesystem::path& path, const std::vector<LifelogEvent>& events,
                  const ExportHeader& header);
std::vector<LifelogEvent> read_events(const std::filesystem::path& path);

// users table: user_id, gender, day_count, archetype ('-' when unknown).
void write_users(const std::filesystem::path& path, const std::vector<UserMeta>& users,
                 const ExportHeader& header);
std::vector<UserMeta> read_users(const std::filesystem::path& path);

void write_reject_log(const std::filesystem::path& path, const std::vector<RejectRecord>& rejects,
                      const ExportHeader& header);

// Embedding rows as written by the embed stage.
struct EmbeddingRow {
  std::string user_id;
  int64_t date = 0;
  Gender sex = Gender::M;
  std::vector<double> z;
};

void write_embeddings(const std::filesystem::path& path, const std::vector<EmbeddingRow>& rows,
                      const ExportHeader& header);
std::vector<EmbeddingRow> read_embeddings(const std::filesystem::path& path);

// --- manifest + flat binary blocks ------------------------------------------
// Named double arrays in one little-endian binary file ("f64" or "f32"),
// described by JSON manifest entries {name, shape, dtype, offset, count}.

class BlockWriter {
 public:
  explicit BlockWriter(std::string dtype);
  void add(const std::string& name, std::span<const double> data, std::vector<int> shape);
  nlohmann::json manifest() const { return entries_; }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string dtype_;
  std::string bytes_;
  nlohmann::json entries_ = nlohmann::json::array();
};

class BlockReader {
 public:
  BlockReader(nlohmann::json manifest, std::string bytes);
  bool has(const std::string& name) const;
  std::vector<double> read(const std::string& name, const std::vector<int>& expected_shape) const;
  std::vector<int> shape(const std::string& name) const;

 private:
  struct Entry {
    std::vector<int> shape;
    std::string dtype;
    size_t offset;
    size_t count;
  };
  std::map<std::string, Entry> entries_;
  std::string bytes_;
};

}  // namespace lifegraph

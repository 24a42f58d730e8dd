// Error classes shared across the pipeline. Each class maps to a fixed
// process exit code so callers can dispatch on failures without parsing text.
#pragma once

#include <stdexcept>
#include <string>

namespace lifegraph {

// Exit codes used by the CLI. 0 is success, 1 is reserved for unexpected
// internal errors.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitPipelineOrder = 3,
  kExitCompatibility = 4,
  kExitData = 5,
  kExitCheckFailed = 6,
};

class Error : public std::runtime_error {
 public:
  Error(std::string cls, const std::string& msg, int exit_code)
      : std::runtime_error(cls + ": " + msg),
        cls_(std::move(cls)),
        exit_code_(exit_code) {}

  const std::string& cls() const { return cls_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string cls_;
  int exit_code_;
};

// Bad arguments, bad config values, unknown formats.
struct UsageError : Error {
  explicit UsageError(const std::string& msg)
      : Error("UsageError", msg, kExitUsage) {}
};

// Matrix/vector shape mismatch.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg)
      : Error("DimensionError", msg, kExitUsage) {}
};

// A subcommand was invoked before its predecessor produced the needed file.
struct PipelineOrderError : Error {
  explicit PipelineOrderError(const std::string& msg)
      : Error("PipelineOrderError", msg, kExitPipelineOrder) {}
};

// Checkpoint/schema/config mismatch between pipeline stages.
struct CompatibilityError : Error {
  explicit CompatibilityError(const std::string& msg)
      : Error("CompatibilityError", msg, kExitCompatibility) {}
};

// Dataset scan found nothing usable, or an artifact file is corrupt.
struct DataError : Error {
  explicit DataError(const std::string& msg)
      : Error("DataError", msg, kExitData) {}
};

struct EmptyDatasetError : Error {
  explicit EmptyDatasetError(const std::string& msg)
      : Error("EmptyDataset", msg, kExitData) {}
};

// A gradient check exceeded its tolerance; the message names the block.
struct CheckFailed : Error {
  explicit CheckFailed(const std::string& msg)
      : Error("CheckFailed", msg, kExitCheckFailed) {}
};

}  // namespace lifegraph

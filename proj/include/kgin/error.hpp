#pragma once

#include <stdexcept>
#include <string>

namespace kgin {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI for exit codes and error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define KGIN_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(tag, what) {}       \
  };

KGIN_DEFINE_ERROR(DimensionError, "dimension")
KGIN_DEFINE_ERROR(RangeError, "range")
KGIN_DEFINE_ERROR(NumericError, "numeric")
KGIN_DEFINE_ERROR(TrainingError, "training")
KGIN_DEFINE_ERROR(UnsupportedSizeError, "unsupported_size")
KGIN_DEFINE_ERROR(DegenerateInputError, "degenerate_input")
KGIN_DEFINE_ERROR(FormatError, "format")
KGIN_DEFINE_ERROR(SpecError, "spec")
KGIN_DEFINE_ERROR(ConfigError, "config")
KGIN_DEFINE_ERROR(PartitionError, "partition")
KGIN_DEFINE_ERROR(CheckpointError, "checkpoint")
KGIN_DEFINE_ERROR(IoError, "io")

#undef KGIN_DEFINE_ERROR

}  // namespace kgin

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mrl {

enum class ErrorCode {
  // fusion
  NegativeMass,
  NotNormalized,
  FrameMismatch,
  DegenerateK,
  LengthMismatch,
  TotalConflict,
  InvalidWeights,
  // envs
  LayoutInfeasible,
  InvalidLayout,
  EpisodeDone,
  IncompleteEpisode,
  InvalidAction,
  // rl
  ShapeMismatch,
  NonFiniteInput,
  EmptyBuffer,
  NonFiniteLoss,
  SupportViolation,
  InvalidConfig,
  CheckpointFormat,
  // moral feedback
  TemplateMissing,
  PromptTooLong,
  NoJsonFound,
  BadSum,
  BadKey,
  BadValue,
  ProviderUnavailable,
  ClusterQueryFailed,
  CacheFormat,
  // harness / cli
  InvalidRunSpec,
  AuditMismatch,
  MalformedCsv,
  Io,
};

std::string_view to_string(ErrorCode code);

// Domain error raised by every module. `detail` carries auxiliary payload
// such as the raw provider transcript that failed to parse.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mrl

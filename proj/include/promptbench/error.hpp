#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace promptbench {

enum class Errc {
  // problemstore
  MissingManifest,
  MalformedBundle,
  DuplicateProblemId,
  MissingTests,
  AssetNotFound,
  MalformedTest,
  InvalidProblem,
  UnknownCourse,
  UnknownProblem,
  // promptpipeline / codefilter
  EmptyPrompt,
  BackendTimeout,
  BackendRejected,
  QuotaExceeded,
  FilterExhausted,
  NoCode,
  // sandboxrunner
  DriverUnrenderable,
  SandboxUnreachable,
  SandboxProtocolError,
  // sessionlog
  IndexConflict,
  StoreUnavailable,
  MalformedRecord,
  // apiservice
  MalformedRequest,
  UnknownSession,
  Unauthorized,
  SubmissionInFlight,
  InvalidConfig,
};

std::string_view to_string(Errc code) noexcept;

// All failures raised by the library carry one of the codes above; the HTTP
// layer maps codes to status values.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

} // namespace promptbench

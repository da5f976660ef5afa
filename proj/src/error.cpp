#include "promptbench/error.hpp"

namespace promptbench {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingManifest: return "MissingManifest";
    case Errc::MalformedBundle: return "MalformedBundle";
    case Errc::DuplicateProblemId: return "DuplicateProblemId";
    case Errc::MissingTests: return "MissingTests";
    case Errc::AssetNotFound: return "AssetNotFound";
    case Errc::MalformedTest: return "MalformedTest";
    case Errc::InvalidProblem: return "InvalidProblem";
    case Errc::UnknownCourse: return "UnknownCourse";
    case Errc::UnknownProblem: return "UnknownProblem";
    case Errc::EmptyPrompt: return "EmptyPrompt";
    case Errc::BackendTimeout: return "BackendTimeout";
    case Errc::BackendRejected: return "BackendRejected";
    case Errc::QuotaExceeded: return "QuotaExceeded";
    case Errc::FilterExhausted: return "FilterExhausted";
    case Errc::NoCode: return "NoCode";
    case Errc::DriverUnrenderable: return "DriverUnrenderable";
    case Errc::SandboxUnreachable: return "SandboxUnreachable";
    case Errc::SandboxProtocolError: return "SandboxProtocolError";
    case Errc::IndexConflict: return "IndexConflict";
    case Errc::StoreUnavailable: return "StoreUnavailable";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::MalformedRequest: return "MalformedRequest";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::Unauthorized: return "Unauthorized";
    case Errc::SubmissionInFlight: return "SubmissionInFlight";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

} // namespace promptbench

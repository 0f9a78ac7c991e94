#include "mrl/error.hpp"

namespace mrl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::DegenerateK: return "DegenerateK";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TotalConflict: return "TotalConflict";
    case ErrorCode::InvalidWeights: return "InvalidWeights";
    case ErrorCode::LayoutInfeasible: return "LayoutInfeasible";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::EpisodeDone: return "EpisodeDone";
    case ErrorCode::IncompleteEpisode: return "IncompleteEpisode";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyBuffer: return "EmptyBuffer";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CheckpointFormat: return "CheckpointFormat";
    case ErrorCode::TemplateMissing: return "TemplateMissing";
    case ErrorCode::PromptTooLong: return "PromptTooLong";
    case ErrorCode::NoJsonFound: return "NoJsonFound";
    case ErrorCode::BadSum: return "BadSum";
    case ErrorCode::BadKey: return "BadKey";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::ClusterQueryFailed: return "ClusterQueryFailed";
    case ErrorCode::CacheFormat: return "CacheFormat";
    case ErrorCode::InvalidRunSpec: return "InvalidRunSpec";
    case ErrorCode::AuditMismatch: return "AuditMismatch";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace mrl

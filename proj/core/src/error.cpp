#include "chartgraph/error.hpp"

namespace chartgraph {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InvalidDistance: return "InvalidDistance";
    case ErrorCode::EmptyAnnotation: return "EmptyAnnotation";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoCandidate: return "NoCandidate";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::ZeroLengthText: return "ZeroLengthText";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::TapeMismatch: return "TapeMismatch";
    case ErrorCode::MissingLabelNode: return "MissingLabelNode";
    case ErrorCode::UnknownObjectId: return "UnknownObjectId";
    case ErrorCode::IndexOutOfVocab: return "IndexOutOfVocab";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace chartgraph

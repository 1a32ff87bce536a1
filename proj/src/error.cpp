#include "mtlab/error.hpp"

namespace mtlab {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLineCountMismatch: return "LineCountMismatch";
    case ErrorCode::kInvalidEncoding: return "InvalidEncoding";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kVocabTooSmall: return "VocabTooSmall";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotScalar: return "NotScalar";
    case ErrorCode::kNoTape: return "NoTape";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIdOutOfRange: return "IdOutOfRange";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kVocabMismatch: return "VocabMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFormat: return "FormatError";
  }
  return "Error";
}

}  // namespace mtlab

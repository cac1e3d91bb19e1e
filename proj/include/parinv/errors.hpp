#pragma once

#include <stdexcept>
#include <string>

namespace parinv {

/* Runtime failures outside graph validation. Codes keep CLI exit behavior
 * and tests decoupled from message wording. */
class ExecError : public std::runtime_error {
public:
  enum class Code {
    MissingInput,
    TypeMismatch,
    ShapeMismatch,
    ArityMismatch,
    NotTotalized,
    UnsupportedKind,
    ForwardUndefined,
    GenerationExhausted,
    InvalidArgument,
  };

  ExecError(Code code, std::string message)
      : std::runtime_error(render(code) + ": " + message), code_(code) {}

  Code code() const { return code_; }

  static std::string render(Code c) {
    switch (c) {
    case Code::MissingInput: return "MissingInput";
    case Code::TypeMismatch: return "TypeMismatch";
    case Code::ShapeMismatch: return "ShapeMismatch";
    case Code::ArityMismatch: return "ArityMismatch";
    case Code::NotTotalized: return "NotTotalized";
    case Code::UnsupportedKind: return "UnsupportedKind";
    case Code::ForwardUndefined: return "ForwardUndefined";
    case Code::GenerationExhausted: return "GenerationExhausted";
    case Code::InvalidArgument: return "InvalidArgument";
    }
    return "ExecError";
  }

private:
  Code code_;
};

} // namespace parinv

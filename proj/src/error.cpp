#include "fraglab/error.hpp"

namespace fraglab {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::UnsupportedModel: return "unsupported-model";
        case ErrorKind::PreconditionViolation: return "precondition-violation";
        case ErrorKind::NumericalFailure: return "numerical-failure";
        case ErrorKind::WindowDegenerate: return "window-degenerate";
        case ErrorKind::StabilityViolation: return "stability-violation";
    }
    return "unknown";
}

}  // namespace fraglab

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mapd {

/// Machine-parseable failure categories. The CLI prints these verbatim so
/// callers can branch on them without scraping message text.
enum class ErrorCode {
    parse,        // malformed input file or config
    io,           // file system failure
    precondition, // operation called outside its contract
    infeasible,   // request cannot be satisfied (e.g. class floor too high)
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::infeasible: return "infeasible";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

} // namespace mapd

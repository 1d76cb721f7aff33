#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace divbound {

enum class Errc {
  domain_error,
  overflow,
  precondition_n_too_small,
  unsupported_dimension,
  not_positive_definite,
  quadrature_failure,
  pathological_input,
  iteration_limit,
  internal,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::domain_error: return "DOMAIN_ERROR";
    case Errc::overflow: return "OVERFLOW";
    case Errc::precondition_n_too_small: return "PRECONDITION_N_TOO_SMALL";
    case Errc::unsupported_dimension: return "UNSUPPORTED_DIMENSION";
    case Errc::not_positive_definite: return "NOT_POSITIVE_DEFINITE";
    case Errc::quadrature_failure: return "QUADRATURE_FAILURE";
    case Errc::pathological_input: return "PATHOLOGICAL_INPUT";
    case Errc::iteration_limit: return "ITERATION_LIMIT";
    case Errc::internal: return "INTERNAL";
  }
  return "UNKNOWN";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Caller-side problems (bad input, out-of-range dimension) as opposed to
  /// numerical breakdown inside the library.
  bool is_precondition() const noexcept {
    return code_ == Errc::domain_error || code_ == Errc::precondition_n_too_small ||
           code_ == Errc::unsupported_dimension || code_ == Errc::not_positive_definite ||
           code_ == Errc::pathological_input;
  }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace divbound

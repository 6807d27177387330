#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wobble {

enum class Errc {
  invalid_argument,
  io_error,
  bad_magic,
  truncated,
  version_mismatch,
  length_mismatch,
  extent_overflow,
  dim_mismatch,
  out_of_range,
  unknown_mode,
  parse_error,
  spawn_failure,
  connect_failure,
  handshake_error,
  timeout,
  transport_failure,
  protocol_violation,
  unsupported,
  incompatible,
  degenerate,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind of failure without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace wobble

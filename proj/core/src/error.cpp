#include "wobble/error.hpp"

namespace wobble {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::io_error: return "io_error";
    case Errc::bad_magic: return "bad_magic";
    case Errc::truncated: return "truncated";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::extent_overflow: return "extent_overflow";
    case Errc::dim_mismatch: return "dim_mismatch";
    case Errc::out_of_range: return "out_of_range";
    case Errc::unknown_mode: return "unknown_mode";
    case Errc::parse_error: return "parse_error";
    case Errc::spawn_failure: return "spawn_failure";
    case Errc::connect_failure: return "connect_failure";
    case Errc::handshake_error: return "handshake_error";
    case Errc::timeout: return "timeout";
    case Errc::transport_failure: return "transport_failure";
    case Errc::protocol_violation: return "protocol_violation";
    case Errc::unsupported: return "unsupported";
    case Errc::incompatible: return "incompatible";
    case Errc::degenerate: return "degenerate";
  }
  return "unknown";
}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace wobble

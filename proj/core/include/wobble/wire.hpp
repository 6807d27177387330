#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "wobble/oracle.hpp"

// Newline-delimited JSON protocol shared by the stdio and HTTP transports.
//   hello:    {"hello":{"classes":k,"input_dim":d,"probs":bool}}
//   request:  {"id":u64,"inputs":[[f64,...],...]}
//   response: {"id":u64,"labels":[u32,...],"probs":[[f64,...],...]?}
//   error:    {"id":u64,"error":str}
namespace wobble::wire {

std::string encode_hello(const OracleInfo& info);
OracleInfo decode_hello(std::string_view text);

struct Request {
  std::uint64_t id = 0;
  Matrix inputs;
};

std::string encode_request(std::uint64_t id, const Matrix& inputs);
Request decode_request(std::string_view text);

struct Response {
  std::uint64_t id = 0;
  PredictionBatch batch;
  std::optional<std::string> error;
};

std::string encode_response(std::uint64_t id, const PredictionBatch& batch);
std::string encode_error(std::uint64_t id, std::string_view message);
Response decode_response(std::string_view text);

/// Serves `classifier` over line-oriented streams until EOF: writes the
/// handshake, then answers each request line. Malformed requests get an
/// error response and the loop continues.
void serve_lines(const Classifier& classifier, std::istream& in, std::ostream& out);

/// Answers one request line (used by both stdio and HTTP servers).
std::string answer_request(const Classifier& classifier, std::string_view line);

}  // namespace wobble::wire

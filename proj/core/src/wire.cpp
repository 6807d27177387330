#include "wobble/wire.hpp"

#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace wobble::wire {

namespace {

using nlohmann::json;

json parse_line(std::string_view text, Errc code) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(code, std::string("malformed JSON message: ") + e.what());
  }
}

Matrix rows_to_matrix(const json& rows, Errc code, const char* what) {
  if (!rows.is_array() || rows.empty()) fail(code, std::string(what) + " must be a non-empty array");
  Matrix m;
  std::vector<double> row;
  for (const auto& r : rows) {
    if (!r.is_array()) fail(code, std::string(what) + " rows must be arrays");
    row.clear();
    for (const auto& v : r) {
      if (!v.is_number()) fail(code, std::string(what) + " values must be numbers");
      row.push_back(v.get<double>());
    }
    if (!m.empty() && row.size() != m.cols()) fail(code, std::string(what) + " rows differ in length");
    m.append_row(row);
  }
  return m;
}

json matrix_to_rows(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(json(std::vector<double>(r.begin(), r.end())));
  }
  return rows;
}

}  // namespace

std::string encode_hello(const OracleInfo& info) {
  json j = {{"hello",
             {{"classes", info.classes},
              {"input_dim", info.input_dim},
              {"probs", info.supports_probs}}}};
  return j.dump();
}

OracleInfo decode_hello(std::string_view text) {
  const auto j = parse_line(text, Errc::handshake_error);
  if (!j.is_object() || !j.contains("hello") || !j["hello"].is_object()) {
    fail(Errc::handshake_error, "handshake must be {\"hello\":{...}}");
  }
  const auto& h = j["hello"];
  OracleInfo info;
  try {
    const auto& k = h.at("classes");
    const auto& d = h.at("input_dim");
    if (!k.is_number_unsigned() || !d.is_number_unsigned()) {
      fail(Errc::handshake_error, "handshake classes/input_dim must be unsigned integers");
    }
    info.classes = k.get<std::uint32_t>();
    info.input_dim = d.get<std::size_t>();
    info.supports_probs = h.value("probs", false);
  } catch (const json::exception& e) {
    fail(Errc::handshake_error, std::string("malformed handshake: ") + e.what());
  }
  validate_handshake(info);
  return info;
}

std::string encode_request(std::uint64_t id, const Matrix& inputs) {
  return json{{"id", id}, {"inputs", matrix_to_rows(inputs)}}.dump();
}

Request decode_request(std::string_view text) {
  const auto j = parse_line(text, Errc::protocol_violation);
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned()) {
    fail(Errc::protocol_violation, "request needs an unsigned integer id");
  }
  Request r;
  r.id = j["id"].get<std::uint64_t>();
  if (!j.contains("inputs")) fail(Errc::protocol_violation, "request has no inputs");
  r.inputs = rows_to_matrix(j["inputs"], Errc::protocol_violation, "inputs");
  return r;
}

std::string encode_response(std::uint64_t id, const PredictionBatch& batch) {
  json j = {{"id", id}, {"labels", batch.labels}};
  if (batch.probs) j["probs"] = matrix_to_rows(*batch.probs);
  return j.dump();
}

std::string encode_error(std::uint64_t id, std::string_view message) {
  return json{{"id", id}, {"error", std::string(message)}}.dump();
}

Response decode_response(std::string_view text) {
  const auto j = parse_line(text, Errc::protocol_violation);
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned()) {
    fail(Errc::protocol_violation, "response needs an unsigned integer id");
  }
  Response r;
  r.id = j["id"].get<std::uint64_t>();
  if (j.contains("error")) {
    r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
    return r;
  }
  if (!j.contains("labels") || !j["labels"].is_array()) {
    fail(Errc::protocol_violation, "response has no labels array");
  }
  for (const auto& v : j["labels"]) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xFFFFFFFFull) {
      fail(Errc::protocol_violation, "labels must be u32 values");
    }
    r.batch.labels.push_back(v.get<std::uint32_t>());
  }
  if (j.contains("probs") && !j["probs"].is_null()) {
    r.batch.probs = rows_to_matrix(j["probs"], Errc::protocol_violation, "probs");
  }
  return r;
}

std::string answer_request(const Classifier& classifier, std::string_view line) {
  std::uint64_t id = 0;
  try {
    // Recover the id even when the rest of the request is bad.
    const auto j = json::parse(line, nullptr, false);
    if (j.is_object() && j.contains("id") && j["id"].is_number_unsigned()) {
      id = j["id"].get<std::uint64_t>();
    }
    const auto req = decode_request(line);
    const auto info = classifier.info();
    if (req.inputs.cols() != info.input_dim) {
      return encode_error(id, "input length " + std::to_string(req.inputs.cols()) +
                                  " != input_dim " + std::to_string(info.input_dim));
    }
    return encode_response(req.id, classifier.classify(req.inputs));
  } catch (const std::exception& e) {
    return encode_error(id, e.what());
  }
}

void serve_lines(const Classifier& classifier, std::istream& in, std::ostream& out) {
  out << encode_hello(classifier.info()) << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << answer_request(classifier, line) << '\n' << std::flush;
  }
}

}  // namespace wobble::wire

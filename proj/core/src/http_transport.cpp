#include <httplib.h>

#include "wobble/oracle.hpp"
#include "wobble/wire.hpp"

namespace wobble {

namespace {

class HttpTransport final : public OracleTransport {
 public:
  HttpTransport(std::string base_url, std::chrono::milliseconds timeout)
      : base_url_(std::move(base_url)), client_(base_url_) {
    if (!client_.is_valid()) fail(Errc::connect_failure, "invalid oracle URL: " + base_url_);
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    client_.set_connection_timeout(secs, usecs);
    client_.set_read_timeout(secs, usecs);
    client_.set_write_timeout(secs, usecs);
  }

  OracleInfo handshake() override {
    auto res = client_.Get("/hello");
    if (!res) fail(classify_error(res.error()), "GET /hello failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      fail(Errc::handshake_error, "GET /hello returned status " + std::to_string(res->status));
    }
    return wire::decode_hello(res->body);
  }

  PredictionBatch classify_chunk(const Matrix& inputs) override {
    const auto id = next_id_++;
    auto res = client_.Post("/classify", wire::encode_request(id, inputs), "application/json");
    if (!res) {
      fail(classify_error(res.error()), "POST /classify failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      fail(Errc::transport_failure, "POST /classify returned status " + std::to_string(res->status));
    }
    const auto response = wire::decode_response(res->body);
    if (response.id != id) fail(Errc::protocol_violation, "response id does not echo request id");
    if (response.error) fail(Errc::transport_failure, "oracle error: " + *response.error);
    return response.batch;
  }

  std::string description() const override { return "http:" + base_url_; }

 private:
  static Errc classify_error(httplib::Error e) {
    switch (e) {
      case httplib::Error::Connection:
        return Errc::connect_failure;
      case httplib::Error::ConnectionTimeout:
        return Errc::timeout;
      default:
        return Errc::transport_failure;
    }
  }

  std::string base_url_;
  httplib::Client client_;
  std::uint64_t next_id_ = 0;
};

}  // namespace

std::unique_ptr<OracleTransport> make_http_transport(const std::string& base_url,
                                                     std::chrono::milliseconds timeout) {
  return std::make_unique<HttpTransport>(base_url, timeout);
}

}  // namespace wobble

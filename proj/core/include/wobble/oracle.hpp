#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wobble/matrix.hpp"
#include "wobble/mlp.hpp"

namespace wobble {

/// Metadata fixed by the oracle's handshake.
struct OracleInfo {
  std::uint32_t classes = 0;
  std::size_t input_dim = 0;
  bool supports_probs = false;

  friend bool operator==(const OracleInfo&, const OracleInfo&) = default;
};

struct PredictionBatch {
  std::vector<std::uint32_t> labels;
  std::optional<Matrix> probs;  // [batch, classes] when the oracle offers soft outputs
};

struct InProcessModel {
  std::filesystem::path model_path;
};
struct SubprocessCommand {
  std::string command_line;  // run through /bin/sh -c
};
struct HttpEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080
};

using Transport = std::variant<InProcessModel, SubprocessCommand, HttpEndpoint>;

inline constexpr std::chrono::milliseconds kDefaultOracleTimeout{30'000};

struct OracleSpec {
  Transport transport;
  std::size_t max_batch = 256;
  std::chrono::milliseconds timeout = kDefaultOracleTimeout;
};

/// Parses the command-line oracle notation: "cmd:<command line>",
/// "http:<url>" (or a bare http:// / https:// URL), otherwise a model path.
OracleSpec parse_oracle_spec(std::string_view text, std::size_t max_batch = 256,
                             std::chrono::milliseconds timeout = kDefaultOracleTimeout);

std::string describe(const OracleSpec& spec);

/// A classifier evaluated inside this process. Implementations must be pure:
/// the same inputs always give the same outputs, and concurrent calls are safe.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual OracleInfo info() const = 0;
  virtual PredictionBatch classify(const Matrix& inputs) const = 0;
};

class MlpClassifier final : public Classifier {
 public:
  explicit MlpClassifier(MlpModel model);
  OracleInfo info() const override;
  PredictionBatch classify(const Matrix& inputs) const override;
  const MlpModel& model() const noexcept { return model_; }

 private:
  MlpModel model_;
};

/// Low-level request/response channel to one oracle.
class OracleTransport {
 public:
  virtual ~OracleTransport() = default;
  virtual OracleInfo handshake() = 0;
  virtual PredictionBatch classify_chunk(const Matrix& inputs) = 0;
  virtual std::string description() const = 0;
};

std::unique_ptr<OracleTransport> make_subprocess_transport(const std::string& command_line,
                                                           std::chrono::milliseconds timeout);
std::unique_ptr<OracleTransport> make_http_transport(const std::string& base_url,
                                                     std::chrono::milliseconds timeout);
std::unique_ptr<OracleTransport> make_in_process_transport(std::shared_ptr<const Classifier> c,
                                                           std::string name);

/// Validated, batch-splitting front end over a transport. A handle belongs to
/// one worker at a time; open one handle per worker for concurrency.
class OracleHandle {
 public:
  OracleHandle(std::unique_ptr<OracleTransport> transport, std::size_t max_batch);

  OracleHandle(OracleHandle&&) noexcept = default;
  OracleHandle& operator=(OracleHandle&&) noexcept = default;

  const OracleInfo& info() const noexcept { return info_; }
  std::uint32_t classes() const noexcept { return info_.classes; }
  std::size_t input_dim() const noexcept { return info_.input_dim; }
  bool supports_probs() const noexcept { return info_.supports_probs; }
  std::size_t max_batch() const noexcept { return max_batch_; }

  /// Transport description plus handshake metadata.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  /// One label per input row, in order. Splits into chunks of at most
  /// max_batch rows; any failure fails the whole call.
  PredictionBatch classify(const Matrix& inputs);

 private:
  std::unique_ptr<OracleTransport> transport_;
  std::size_t max_batch_;
  OracleInfo info_;
  std::string fingerprint_;
};

OracleHandle open_oracle(const OracleSpec& spec);
OracleHandle open_in_process(std::shared_ptr<const Classifier> classifier,
                             std::size_t max_batch = 256, std::string name = "in-process");

inline PredictionBatch classify_batch(OracleHandle& h, const Matrix& inputs) {
  return h.classify(inputs);
}

/// Creates a fresh handle per worker.
using OracleFactory = std::function<OracleHandle()>;

OracleFactory factory_for(const OracleSpec& spec);
OracleFactory factory_for(std::shared_ptr<const Classifier> classifier,
                          std::size_t max_batch = 256, std::string name = "in-process");

/// Protocol checks applied to every chunk returned by a transport.
void validate_predictions(const PredictionBatch& batch, const OracleInfo& info,
                          std::size_t expected_rows);

void validate_handshake(const OracleInfo& info);

}  // namespace wobble

#include "wobble/oracle.hpp"

#include <cmath>
#include <sstream>

namespace wobble {

namespace {

class InProcessTransport final : public OracleTransport {
 public:
  InProcessTransport(std::shared_ptr<const Classifier> c, std::string name)
      : classifier_(std::move(c)), name_(std::move(name)) {
    if (!classifier_) fail(Errc::invalid_argument, "null classifier");
  }
  OracleInfo handshake() override { return classifier_->info(); }
  PredictionBatch classify_chunk(const Matrix& inputs) override {
    return classifier_->classify(inputs);
  }
  std::string description() const override { return "inproc:" + name_; }

 private:
  std::shared_ptr<const Classifier> classifier_;
  std::string name_;
};

}  // namespace

OracleSpec parse_oracle_spec(std::string_view text, std::size_t max_batch,
                             std::chrono::milliseconds timeout) {
  OracleSpec spec;
  spec.max_batch = max_batch;
  spec.timeout = timeout;
  if (text.empty()) fail(Errc::invalid_argument, "empty oracle specification");
  if (text.starts_with("cmd:")) {
    spec.transport = SubprocessCommand{std::string(text.substr(4))};
  } else if (text.starts_with("http://") || text.starts_with("https://")) {
    spec.transport = HttpEndpoint{std::string(text)};
  } else if (text.starts_with("http:")) {
    auto rest = std::string(text.substr(5));
    if (!rest.starts_with("http://") && !rest.starts_with("https://")) rest = "http://" + rest;
    spec.transport = HttpEndpoint{rest};
  } else {
    spec.transport = InProcessModel{std::filesystem::path(std::string(text))};
  }
  if (spec.max_batch == 0) fail(Errc::invalid_argument, "max_batch must be >= 1");
  return spec;
}

std::string describe(const OracleSpec& spec) {
  return std::visit(
      [](const auto& t) -> std::string {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, InProcessModel>) {
          return "model:" + t.model_path.string();
        } else if constexpr (std::is_same_v<T, SubprocessCommand>) {
          return "cmd:" + t.command_line;
        } else {
          return "http:" + t.base_url;
        }
      },
      spec.transport);
}

MlpClassifier::MlpClassifier(MlpModel model) : model_(std::move(model)) {
  validate_mlp(model_);
}

OracleInfo MlpClassifier::info() const {
  return {static_cast<std::uint32_t>(model_.classes()), model_.input_dim(), true};
}

PredictionBatch MlpClassifier::classify(const Matrix& inputs) const {
  PredictionBatch out;
  out.labels.resize(inputs.rows());
  out.probs = Matrix(inputs.rows(), model_.classes());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    const auto p = mlp_forward(model_, inputs.row(i));
    out.labels[i] = static_cast<std::uint32_t>(argmax(p));
    std::copy(p.begin(), p.end(), out.probs->row(i).begin());
  }
  return out;
}

void validate_handshake(const OracleInfo& info) {
  if (info.classes < 2) fail(Errc::handshake_error, "oracle must report at least 2 classes");
  if (info.input_dim < 1) fail(Errc::handshake_error, "oracle must report input_dim >= 1");
}

void validate_predictions(const PredictionBatch& batch, const OracleInfo& info,
                          std::size_t expected_rows) {
  if (batch.labels.size() != expected_rows) {
    fail(Errc::protocol_violation, "oracle returned " + std::to_string(batch.labels.size()) +
                                       " labels for " + std::to_string(expected_rows) +
                                       " inputs");
  }
  for (auto y : batch.labels) {
    if (y >= info.classes) {
      fail(Errc::protocol_violation, "oracle label " + std::to_string(y) +
                                         " not below class count " +
                                         std::to_string(info.classes));
    }
  }
  if (!batch.probs) return;
  const auto& p = *batch.probs;
  if (p.rows() != expected_rows || p.cols() != info.classes) {
    fail(Errc::protocol_violation, "oracle probability matrix has the wrong shape");
  }
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double sum = 0.0;
    for (double v : p.row(i)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        fail(Errc::protocol_violation, "oracle probabilities must be finite and nonnegative");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-5) {
      fail(Errc::protocol_violation, "oracle probabilities do not sum to 1");
    }
    if (argmax(p.row(i)) != batch.labels[i]) {
      fail(Errc::protocol_violation, "oracle label disagrees with argmax of its probabilities");
    }
  }
}

OracleHandle::OracleHandle(std::unique_ptr<OracleTransport> transport, std::size_t max_batch)
    : transport_(std::move(transport)), max_batch_(max_batch) {
  if (!transport_) fail(Errc::invalid_argument, "null oracle transport");
  if (max_batch_ == 0) fail(Errc::invalid_argument, "max_batch must be >= 1");
  info_ = transport_->handshake();
  validate_handshake(info_);
  std::ostringstream fp;
  fp << transport_->description() << "|k=" << info_.classes << "|d=" << info_.input_dim
     << "|probs=" << (info_.supports_probs ? 1 : 0);
  fingerprint_ = fp.str();
}

PredictionBatch OracleHandle::classify(const Matrix& inputs) {
  if (inputs.rows() == 0) fail(Errc::invalid_argument, "empty batch");
  if (inputs.cols() != info_.input_dim) {
    fail(Errc::dim_mismatch, "input length " + std::to_string(inputs.cols()) +
                                 " does not match oracle input_dim " +
                                 std::to_string(info_.input_dim));
  }
  PredictionBatch out;
  out.labels.reserve(inputs.rows());
  bool have_probs = true;
  Matrix probs(0, info_.classes);
  for (std::size_t first = 0; first < inputs.rows(); first += max_batch_) {
    const std::size_t count = std::min(max_batch_, inputs.rows() - first);
    auto chunk = transport_->classify_chunk(
        count == inputs.rows() ? inputs : inputs.slice_rows(first, count));
    validate_predictions(chunk, info_, count);
    out.labels.insert(out.labels.end(), chunk.labels.begin(), chunk.labels.end());
    if (chunk.probs && have_probs) {
      for (std::size_t i = 0; i < chunk.probs->rows(); ++i) probs.append_row(chunk.probs->row(i));
    } else {
      have_probs = false;
    }
  }
  if (have_probs) out.probs = std::move(probs);
  return out;
}

std::unique_ptr<OracleTransport> make_in_process_transport(std::shared_ptr<const Classifier> c,
                                                           std::string name) {
  return std::make_unique<InProcessTransport>(std::move(c), std::move(name));
}

OracleHandle open_in_process(std::shared_ptr<const Classifier> classifier, std::size_t max_batch,
                             std::string name) {
  return OracleHandle(make_in_process_transport(std::move(classifier), std::move(name)),
                      max_batch);
}

OracleHandle open_oracle(const OracleSpec& spec) {
  return std::visit(
      [&](const auto& t) -> OracleHandle {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, InProcessModel>) {
          auto model = std::make_shared<MlpClassifier>(load_mlp(t.model_path));
          return open_in_process(std::move(model), spec.max_batch, t.model_path.string());
        } else if constexpr (std::is_same_v<T, SubprocessCommand>) {
          return OracleHandle(make_subprocess_transport(t.command_line, spec.timeout),
                              spec.max_batch);
        } else {
          return OracleHandle(make_http_transport(t.base_url, spec.timeout), spec.max_batch);
        }
      },
      spec.transport);
}

OracleFactory factory_for(const OracleSpec& spec) {
  if (const auto* m = std::get_if<InProcessModel>(&spec.transport)) {
    // Load once; the model is immutable and shared by all workers.
    std::shared_ptr<const Classifier> model =
        std::make_shared<MlpClassifier>(load_mlp(m->model_path));
    auto name = m->model_path.string();
    auto max_batch = spec.max_batch;
    return [model, name, max_batch] { return open_in_process(model, max_batch, name); };
  }
  return [spec] { return open_oracle(spec); };
}

OracleFactory factory_for(std::shared_ptr<const Classifier> classifier, std::size_t max_batch,
                          std::string name) {
  return [classifier = std::move(classifier), max_batch, name = std::move(name)] {
    return open_in_process(classifier, max_batch, name);
  };
}

}  // namespace wobble

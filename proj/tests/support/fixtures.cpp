#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>

namespace wobble::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  path_ = fs::temp_directory_path() /
          ("wobble-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo,
                      double hi) {
  CounterRng rng(seed, 0x55);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

std::vector<double> normal_sample(std::size_t n, double mean, double sd, CounterRng& rng) {
  std::vector<double> out(n);
  for (auto& v : out) v = mean + sd * rng.normal();
  return out;
}

DenseLayer random_layer(std::size_t in, std::size_t out, Activation act, double scale,
                        CounterRng& rng) {
  std::vector<float> w(in * out), b(out);
  for (auto& v : w) v = static_cast<float>(scale * rng.normal());
  for (auto& v : b) v = static_cast<float>(scale * rng.normal());
  return DenseLayer{Tensor({in, out}, std::move(w)), Tensor({out}, std::move(b)), act};
}

MlpModel random_mlp(std::size_t in, std::size_t hidden, std::size_t classes, std::uint64_t seed,
                    double scale) {
  CounterRng rng(seed, 0x31);
  MlpModel m;
  m.layers.push_back(random_layer(in, hidden, Activation::relu, scale, rng));
  m.layers.push_back(random_layer(hidden, classes, Activation::none, scale, rng));
  return m;
}

MlpModel linear_model(const std::vector<std::vector<double>>& w, const std::vector<double>& b) {
  const std::size_t in = w.size();
  const std::size_t out = b.size();
  std::vector<float> wf;
  for (const auto& row : w) {
    if (row.size() != out) fail(Errc::dim_mismatch, "linear_model: ragged weights");
    for (double v : row) wf.push_back(static_cast<float>(v));
  }
  std::vector<float> bf(b.begin(), b.end());
  MlpModel m;
  m.layers.push_back(
      DenseLayer{Tensor({in, out}, std::move(wf)), Tensor({out}, std::move(bf)), Activation::none});
  return m;
}

Tensor vector_tensor(const std::vector<double>& v) {
  return Tensor({v.size()}, std::vector<float>(v.begin(), v.end()));
}

TriggerSpec make_trigger(std::string id, std::vector<double> mask, std::vector<double> pattern,
                         TriggerMode mode, std::optional<std::uint32_t> target) {
  TriggerSpec t;
  t.id = std::move(id);
  t.mask = vector_tensor(mask);
  t.pattern = vector_tensor(pattern);
  t.mode = mode;
  t.target_class = target;
  validate_trigger(t);
  return t;
}

}  // namespace wobble::testing

#include "wobble/data_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace wobble {

namespace {

constexpr std::uint8_t kMagic[4] = {'W', 'O', 'B', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(bytes[offset + static_cast<std::size_t>(i)]) << (8 * i);
  }
  return v;
}

std::size_t checked_product(const std::vector<std::size_t>& dims) {
  std::size_t total = 1;
  for (auto d : dims) {
    if (d != 0 && total > std::numeric_limits<std::size_t>::max() / d) {
      fail(Errc::extent_overflow, "tensor element count overflows");
    }
    total *= d;
  }
  return total;
}

std::filesystem::path resolve(const std::filesystem::path& base_dir,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

nlohmann::json parse_manifest(const std::filesystem::path& manifest) {
  try {
    return nlohmann::json::parse(read_text_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, manifest.string() + ": " + e.what());
  }
}

template <typename T>
T required_field(const nlohmann::json& j, const char* key,
                 const std::filesystem::path& manifest) {
  if (!j.is_object() || !j.contains(key)) {
    fail(Errc::parse_error, manifest.string() + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, manifest.string() + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> d, std::vector<float> values)
    : dims(std::move(d)), data(std::move(values)) {
  if (dims.empty()) fail(Errc::invalid_argument, "tensor needs at least one dimension");
  for (auto e : dims) {
    if (e == 0) fail(Errc::invalid_argument, "tensor extents must be >= 1");
  }
  if (checked_product(dims) != data.size()) {
    fail(Errc::dim_mismatch, "tensor data length does not match dims");
  }
}

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
  return a.dims == b.dims && a.data.size() == b.data.size() &&
         (a.data.empty() ||
          std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.dims.empty()) fail(Errc::invalid_argument, "tensor needs at least one dimension");
  if (t.dims.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(Errc::extent_overflow, "too many dimensions");
  }
  for (auto e : t.dims) {
    if (e > std::numeric_limits<std::uint32_t>::max()) {
      fail(Errc::extent_overflow, "tensor extent exceeds u32");
    }
  }
  if (checked_product(t.dims) != t.data.size()) {
    fail(Errc::dim_mismatch, "tensor data length does not match dims");
  }

  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * t.dims.size() + 4 * t.data.size());
  for (auto m : kMagic) out.push_back(m);
  put_u32(out, kTensorFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto e : t.dims) put_u32(out, static_cast<std::uint32_t>(e));
  for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(Errc::bad_magic, "not a WOBT tensor (bad magic)");
  }
  if (bytes.size() < 12) fail(Errc::truncated, "WOBT header truncated");
  const auto version = get_u32(bytes, 4);
  if (version != kTensorFormatVersion) {
    fail(Errc::version_mismatch, "unsupported WOBT version " + std::to_string(version));
  }
  const std::size_t ndim = get_u32(bytes, 8);
  if (ndim == 0) fail(Errc::invalid_argument, "WOBT tensor with zero dimensions");
  const std::size_t header = 12 + 4 * ndim;
  if (bytes.size() < header) fail(Errc::truncated, "WOBT extents truncated");

  std::vector<std::size_t> dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = get_u32(bytes, 12 + 4 * i);
    if (dims[i] == 0) fail(Errc::invalid_argument, "WOBT extent of zero");
  }
  const std::size_t count = checked_product(dims);
  const std::size_t payload = bytes.size() - header;
  if (payload / 4 < count) {
    fail(Errc::truncated, "WOBT payload truncated: expected " + std::to_string(count) +
                              " values, found " + std::to_string(payload / 4));
  }
  if (payload != 4 * count) {
    fail(Errc::length_mismatch, "WOBT payload longer than header declares");
  }

  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  }
  return Tensor(std::move(dims), std::move(data));
}

std::size_t save_tensor(const Tensor& t, const std::filesystem::path& destination) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + destination.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io_error, "write failed: " + destination.string());
  return bytes.size();
}

Tensor load_tensor(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open for reading: " + source.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

std::vector<std::size_t> Dataset::indices_of_class(std::uint32_t label) const {
  if (!labels) fail(Errc::invalid_argument, "dataset has no labels");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels->size(); ++i) {
    if ((*labels)[i] == label) out.push_back(i);
  }
  return out;
}

void validate_dataset(const Dataset& ds) {
  if (ds.inputs.rows() == 0 || ds.inputs.cols() == 0) {
    fail(Errc::invalid_argument, "dataset inputs must be a non-empty [N, d] matrix");
  }
  if (ds.labels) {
    if (ds.labels->size() != ds.inputs.rows()) {
      fail(Errc::dim_mismatch, "dataset label count differs from input count");
    }
    for (auto y : *ds.labels) {
      if (y >= ds.classes) {
        fail(Errc::out_of_range, "dataset label " + std::to_string(y) +
                                     " not below class count " +
                                     std::to_string(ds.classes));
      }
    }
  }
}

Tensor matrix_to_tensor(const Matrix& m) {
  std::vector<float> data(m.data().begin(), m.data().end());
  return Tensor({m.rows(), m.cols()}, std::move(data));
}

Matrix tensor_to_matrix(const Tensor& t) {
  if (t.dims.size() != 2) fail(Errc::dim_mismatch, "expected a rank-2 tensor");
  std::vector<double> data(t.data.begin(), t.data.end());
  return Matrix(t.dims[0], t.dims[1], std::move(data));
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  const auto j = parse_manifest(manifest);
  const auto base = manifest.parent_path();
  Dataset ds;
  ds.inputs = tensor_to_matrix(
      load_tensor(resolve(base, required_field<std::string>(j, "inputs_path", manifest))));
  const auto classes = required_field<long long>(j, "classes", manifest);
  if (classes < 1 || classes > std::numeric_limits<std::uint32_t>::max()) {
    fail(Errc::out_of_range, "dataset class count out of range");
  }
  ds.classes = static_cast<std::uint32_t>(classes);
  if (j.contains("labels_path") && !j.at("labels_path").is_null()) {
    const auto lt = load_tensor(resolve(base, required_field<std::string>(j, "labels_path", manifest)));
    if (lt.dims.size() != 1) fail(Errc::dim_mismatch, "labels tensor must have dims [N]");
    std::vector<std::uint32_t> labels(lt.size());
    for (std::size_t i = 0; i < lt.size(); ++i) {
      const double v = std::nearbyint(static_cast<double>(lt.data[i]));
      if (!(v >= 0.0) || v >= static_cast<double>(ds.classes)) {
        fail(Errc::out_of_range, "label out of range at index " + std::to_string(i));
      }
      labels[i] = static_cast<std::uint32_t>(v);
    }
    ds.labels = std::move(labels);
  }
  validate_dataset(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& manifest) {
  validate_dataset(ds);
  const auto stem = manifest.stem().string();
  const auto base = manifest.parent_path();
  nlohmann::json j;
  j["inputs_path"] = stem + ".inputs.wobt";
  save_tensor(matrix_to_tensor(ds.inputs), base / (stem + ".inputs.wobt"));
  if (ds.labels) {
    const std::size_t n = ds.labels->size();
    std::vector<float> lv(ds.labels->begin(), ds.labels->end());
    save_tensor(Tensor({n}, std::move(lv)), base / (stem + ".labels.wobt"));
    j["labels_path"] = stem + ".labels.wobt";
  }
  j["classes"] = ds.classes;
  write_text_file(manifest, j.dump(2) + "\n");
}

std::string_view to_string(TriggerMode mode) noexcept {
  return mode == TriggerMode::overlay ? "overlay" : "additive";
}

TriggerMode parse_trigger_mode(std::string_view text) {
  if (text == "overlay") return TriggerMode::overlay;
  if (text == "additive") return TriggerMode::additive;
  fail(Errc::unknown_mode, "unknown trigger mode '" + std::string(text) + "'");
}

void validate_trigger(const TriggerSpec& t) {
  if (t.mask.dims != t.pattern.dims) {
    fail(Errc::dim_mismatch, "trigger mask and pattern dims differ");
  }
  if (t.mask.data.empty()) fail(Errc::invalid_argument, "empty trigger mask");
  for (float m : t.mask.data) {
    if (!(m >= 0.0f && m <= 1.0f)) {
      fail(Errc::out_of_range, "trigger mask value outside [0, 1]");
    }
  }
  for (float p : t.pattern.data) {
    if (!std::isfinite(p)) fail(Errc::out_of_range, "trigger pattern not finite");
  }
}

TriggerSpec load_trigger(const std::filesystem::path& manifest) {
  const auto j = parse_manifest(manifest);
  const auto base = manifest.parent_path();
  TriggerSpec t;
  t.id = manifest.stem().string();
  t.mask = load_tensor(resolve(base, required_field<std::string>(j, "mask_path", manifest)));
  t.pattern = load_tensor(resolve(base, required_field<std::string>(j, "pattern_path", manifest)));
  t.mode = parse_trigger_mode(required_field<std::string>(j, "mode", manifest));
  if (j.contains("target_class") && !j.at("target_class").is_null()) {
    const auto tc = required_field<long long>(j, "target_class", manifest);
    if (tc < 0 || tc > std::numeric_limits<std::uint32_t>::max()) {
      fail(Errc::out_of_range, "trigger target_class out of range");
    }
    t.target_class = static_cast<std::uint32_t>(tc);
  }
  validate_trigger(t);
  return t;
}

void save_trigger(const TriggerSpec& t, const std::filesystem::path& manifest) {
  validate_trigger(t);
  const auto stem = manifest.stem().string();
  const auto base = manifest.parent_path();
  save_tensor(t.mask, base / (stem + ".mask.wobt"));
  save_tensor(t.pattern, base / (stem + ".pattern.wobt"));
  nlohmann::json j;
  j["mask_path"] = stem + ".mask.wobt";
  j["pattern_path"] = stem + ".pattern.wobt";
  j["mode"] = std::string(to_string(t.mode));
  if (t.target_class) j["target_class"] = *t.target_class;
  write_text_file(manifest, j.dump(2) + "\n");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(Errc::io_error, "write failed: " + path.string());
}

}  // namespace wobble

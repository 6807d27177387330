#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wobble/matrix.hpp"

namespace wobble {

/// N-dimensional float32 array. `data` is row-major and its length always
/// equals the product of `dims`.
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> dims, std::vector<float> data);

  std::size_t size() const noexcept { return data.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Bitwise comparison, so NaN payloads and signed zeros are distinguished.
bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;

inline constexpr std::uint32_t kTensorFormatVersion = 1;

// "WOBT" container: magic, u32 version, u32 ndim, u32 extents, f32 payload.
// All integers and floats are little-endian.
std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

std::size_t save_tensor(const Tensor& t, const std::filesystem::path& destination);
Tensor load_tensor(const std::filesystem::path& source);

struct Dataset {
  Matrix inputs;  // [N, d], pixel scale [0, 1] by convention
  std::optional<std::vector<std::uint32_t>> labels;
  std::uint32_t classes = 0;

  std::size_t size() const noexcept { return inputs.rows(); }
  std::size_t dim() const noexcept { return inputs.cols(); }

  /// Row indices whose label equals `label`. Requires labels.
  std::vector<std::size_t> indices_of_class(std::uint32_t label) const;
};

void validate_dataset(const Dataset& ds);

/// Manifest: {"inputs_path": str, "labels_path": str?, "classes": int}.
/// Relative paths resolve against the manifest's directory. Labels are a
/// WOBT tensor of dims [N] rounded to the nearest integer.
Dataset load_dataset(const std::filesystem::path& manifest);
void save_dataset(const Dataset& ds, const std::filesystem::path& manifest);

Tensor matrix_to_tensor(const Matrix& m);
Matrix tensor_to_matrix(const Tensor& t);

enum class TriggerMode { overlay, additive };

std::string_view to_string(TriggerMode mode) noexcept;
TriggerMode parse_trigger_mode(std::string_view text);

/// Mask-and-pattern perturbation. Patterns are applied in normalized [0, 1]
/// input space.
struct TriggerSpec {
  std::string id;
  Tensor mask;     // values in [0, 1]
  Tensor pattern;  // same dims as mask
  TriggerMode mode = TriggerMode::overlay;
  std::optional<std::uint32_t> target_class;

  std::size_t dim() const noexcept { return mask.size(); }
};

void validate_trigger(const TriggerSpec& t);

/// Manifest: {"mask_path": str, "pattern_path": str,
///            "mode": "overlay"|"additive", "target_class": int?}.
TriggerSpec load_trigger(const std::filesystem::path& manifest);
void save_trigger(const TriggerSpec& t, const std::filesystem::path& manifest);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace wobble

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epa {

/// One manifest entry; `offset` is in bytes from the start of the payload.
struct TensorEntry {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::uint64_t offset = 0;

  std::uint64_t element_count() const;
  std::uint64_t byte_size() const { return element_count() * 4; }

  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

/// In-memory form of the EPA1 container:
///
///   "EPA1" | u32 LE manifest length | JSON manifest | f32 LE payload
///
/// The manifest is a JSON array of {"name", "shape", "offset"} objects.
/// Payload bytes are kept verbatim, so write(parse(bytes)) reproduces any
/// file whose manifest is in canonical form (the form `serialize` emits).
class TensorBundle {
 public:
  static constexpr std::string_view kMagic = "EPA1";

  TensorBundle() = default;
  /// Validates names, extents and overlap; throws Format on violation.
  TensorBundle(std::vector<TensorEntry> manifest, std::vector<std::uint8_t> payload);

  /// Appends a tensor at the end of the payload.
  void add(std::string name, std::vector<std::uint64_t> shape, std::span<const float> values);
  void add(std::string name, std::vector<std::uint64_t> shape, std::span<const double> values);

  const std::vector<TensorEntry>& manifest() const noexcept { return manifest_; }
  std::span<const std::uint8_t> payload() const noexcept { return payload_; }

  bool contains(std::string_view name) const;
  const TensorEntry& entry(std::string_view name) const;
  /// Decodes the tensor's little-endian f32 payload.
  std::vector<float> read_f32(std::string_view name) const;
  /// Decoded and widened to 64-bit, checked against `expected_shape`.
  std::vector<double> read_f64(std::string_view name,
                               std::span<const std::uint64_t> expected_shape) const;

  std::string manifest_json() const;
  std::vector<std::uint8_t> serialize() const;
  static TensorBundle parse(std::span<const std::uint8_t> bytes);

  friend bool operator==(const TensorBundle&, const TensorBundle&) = default;

 private:
  void validate() const;

  std::vector<TensorEntry> manifest_;
  std::vector<std::uint8_t> payload_;
};

TensorBundle load_bundle(const std::filesystem::path& path);
void save_bundle(const TensorBundle& bundle, const std::filesystem::path& path);

}  // namespace epa

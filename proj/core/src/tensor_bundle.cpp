#include "epa/tensor_bundle.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <nlohmann/json.hpp>

#include "epa/error.hpp"
#include "epa/io.hpp"

namespace epa {
namespace {

using json = nlohmann::json;

void append_f32_le(std::vector<std::uint8_t>& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  out.push_back(static_cast<std::uint8_t>(bits));
  out.push_back(static_cast<std::uint8_t>(bits >> 8));
  out.push_back(static_cast<std::uint8_t>(bits >> 16));
  out.push_back(static_cast<std::uint8_t>(bits >> 24));
}

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string shape_string(std::span<const std::uint64_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace

std::uint64_t TensorEntry::element_count() const {
  std::uint64_t n = 1;
  for (auto extent : shape) {
    if (extent != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / extent)
      fail(ErrorCode::Format, "tensor '" + name + "' extent product overflows");
    n *= extent;
  }
  return n;
}

TensorBundle::TensorBundle(std::vector<TensorEntry> manifest, std::vector<std::uint8_t> payload)
    : manifest_(std::move(manifest)), payload_(std::move(payload)) {
  validate();
}

void TensorBundle::validate() const {
  struct Span {
    std::uint64_t begin, end;
    const std::string* name;
  };
  std::vector<Span> spans;
  spans.reserve(manifest_.size());
  for (const auto& e : manifest_) {
    if (e.name.empty()) fail(ErrorCode::Format, "tensor with empty name");
    const auto size = e.byte_size();
    if (e.offset > payload_.size() || size > payload_.size() - e.offset) {
      fail(ErrorCode::Format, "tensor '" + e.name + "' (" + std::to_string(size) +
                                  " bytes at offset " + std::to_string(e.offset) +
                                  ") exceeds payload of " + std::to_string(payload_.size()) +
                                  " bytes");
    }
    spans.push_back({e.offset, e.offset + size, &e.name});
  }
  std::vector<const std::string*> names;
  for (const auto& s : spans) names.push_back(s.name);
  std::sort(names.begin(), names.end(), [](auto* a, auto* b) { return *a < *b; });
  for (std::size_t i = 1; i < names.size(); ++i)
    if (*names[i] == *names[i - 1]) fail(ErrorCode::Format, "duplicate tensor '" + *names[i] + "'");

  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].begin < spans[i - 1].end && spans[i].begin != spans[i].end &&
        spans[i - 1].begin != spans[i - 1].end) {
      fail(ErrorCode::Format,
           "tensors '" + *spans[i - 1].name + "' and '" + *spans[i].name + "' overlap");
    }
  }
}

void TensorBundle::add(std::string name, std::vector<std::uint64_t> shape,
                       std::span<const float> values) {
  TensorEntry entry{std::move(name), std::move(shape), payload_.size()};
  if (entry.element_count() != values.size()) {
    fail(ErrorCode::ShapeMismatch, "tensor '" + entry.name + "' shape " +
                                       shape_string(entry.shape) + " does not hold " +
                                       std::to_string(values.size()) + " values");
  }
  if (contains(entry.name)) fail(ErrorCode::Format, "duplicate tensor '" + entry.name + "'");
  payload_.reserve(payload_.size() + values.size() * 4);
  for (float v : values) append_f32_le(payload_, v);
  manifest_.push_back(std::move(entry));
}

void TensorBundle::add(std::string name, std::vector<std::uint64_t> shape,
                       std::span<const double> values) {
  std::vector<float> narrowed(values.begin(), values.end());
  add(std::move(name), std::move(shape), std::span<const float>(narrowed));
}

bool TensorBundle::contains(std::string_view name) const {
  return std::any_of(manifest_.begin(), manifest_.end(),
                     [&](const TensorEntry& e) { return e.name == name; });
}

const TensorEntry& TensorBundle::entry(std::string_view name) const {
  for (const auto& e : manifest_)
    if (e.name == name) return e;
  fail(ErrorCode::Format, "bundle has no tensor '" + std::string(name) + "'");
}

std::vector<float> TensorBundle::read_f32(std::string_view name) const {
  const auto& e = entry(name);
  std::vector<float> out(e.element_count());
  const std::uint8_t* p = payload_.data() + e.offset;
  for (std::size_t i = 0; i < out.size(); ++i, p += 4)
    out[i] = std::bit_cast<float>(read_u32_le(p));
  return out;
}

std::vector<double> TensorBundle::read_f64(std::string_view name,
                                           std::span<const std::uint64_t> expected_shape) const {
  const auto& e = entry(name);
  if (!std::equal(e.shape.begin(), e.shape.end(), expected_shape.begin(), expected_shape.end())) {
    fail(ErrorCode::ShapeMismatch, "tensor '" + e.name + "' has shape " + shape_string(e.shape) +
                                       ", expected " + shape_string(expected_shape));
  }
  const auto f = read_f32(name);
  return {f.begin(), f.end()};
}

std::string TensorBundle::manifest_json() const {
  json arr = json::array();
  for (const auto& e : manifest_) arr.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
  return arr.dump();
}

std::vector<std::uint8_t> TensorBundle::serialize() const {
  const std::string manifest = manifest_json();
  if (manifest.size() > std::numeric_limits<std::uint32_t>::max())
    fail(ErrorCode::Format, "manifest too large");
  const auto len = static_cast<std::uint32_t>(manifest.size());
  std::vector<std::uint8_t> out;
  out.reserve(8 + manifest.size() + payload_.size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.insert(out.end(), payload_.begin(), payload_.end());
  return out;
}

TensorBundle TensorBundle::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0)
    fail(ErrorCode::Format, "bad magic: not an EPA1 bundle");
  const std::uint32_t len = read_u32_le(bytes.data() + 4);
  if (len > bytes.size() - 8) {
    fail(ErrorCode::Format, "manifest length " + std::to_string(len) + " exceeds file size " +
                                std::to_string(bytes.size()));
  }
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + 8), len);
  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& ex) {
    fail(ErrorCode::Format, std::string("malformed bundle manifest: ") + ex.what());
  }
  if (!manifest.is_array()) fail(ErrorCode::Format, "bundle manifest must be a JSON array");
  std::vector<TensorEntry> entries;
  for (const auto& item : manifest) {
    try {
      TensorEntry e;
      e.name = item.at("name").get<std::string>();
      e.shape = item.at("shape").get<std::vector<std::uint64_t>>();
      e.offset = item.at("offset").get<std::uint64_t>();
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      fail(ErrorCode::Format, std::string("malformed manifest entry: ") + ex.what());
    }
  }
  std::vector<std::uint8_t> payload(bytes.begin() + 8 + len, bytes.end());
  return TensorBundle(std::move(entries), std::move(payload));
}

TensorBundle load_bundle(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  return TensorBundle::parse(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

void save_bundle(const TensorBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = bundle.serialize();
  write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace epa

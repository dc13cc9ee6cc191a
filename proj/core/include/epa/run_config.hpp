#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epa/linalg.hpp"
#include "epa/vocab.hpp"

namespace epa {

/// Settings shared by the analysis commands. Defaults reproduce the
/// experimental constants: 500 sequences, top-5, three norms, 10 bins of 50.
struct RunConfig {
  std::filesystem::path model;
  std::filesystem::path vocab;
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> freq;
  std::filesystem::path out = ".";

  std::size_t sample = 500;
  bool shuffle_sample = false;
  std::size_t k = 5;
  std::vector<Norm> norms{kAllNorms.begin(), kAllNorms.end()};
  std::size_t spearman_top = 20;
  std::size_t bins = 10;
  std::size_t per_bin = 50;
  std::uint64_t seed = 0;
  Norm layer_norm = Norm::l2;
  bool disable_layernorm = false;
  bool per_position = false;
  std::size_t probe_depth = 5;
  std::optional<std::size_t> heads;
  std::vector<std::string> special_tokens = default_special_tokens();
  /// 0 = EPA_THREADS or hardware concurrency.
  unsigned threads = 0;

  /// Throws InvalidArgument for non-positive numeric fields or no norms.
  void validate() const;
};

/// Applies the keys present in a JSON object onto `config`. Keys mirror the
/// long flag names with '-' replaced by '_' ("per_bin", "probe_depth", ...).
void apply_config_json(RunConfig& config, std::string_view json_text);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

std::vector<Norm> parse_norm_list(std::string_view comma_separated);

}  // namespace epa

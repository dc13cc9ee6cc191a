#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epa/encoder_model.hpp"
#include "epa/run_config.hpp"

namespace epa {

/// Files produced by a command, kept in memory until `write_outputs` so a
/// single writer touches the filesystem at the end.
struct CommandOutput {
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  std::string summary;                                     // printed to stdout
  std::vector<std::string> warnings;                       // printed to stderr

  const std::string& file(const std::string& name) const;
};

void write_outputs(const CommandOutput& output, const std::filesystem::path& dir);

enum class SynthGeometry { uniform, clustered };

struct SynthOptions {
  std::uint64_t seed = 0;
  ModelDims dims;
  SynthGeometry geometry = SynthGeometry::uniform;
  /// Corpus size written next to the model; 0 uses the geometry default
  /// (200 uniform, 2000 clustered).
  std::size_t sequences = 0;
};

/// vocab.txt, model.epa and corpus.jsonl; summary is the tensor inventory.
CommandOutput run_synth(const SynthOptions& options);
/// frequency.csv, frequency.svg, agreement.csv
CommandOutput run_frequency(const RunConfig& config);
/// commonness.csv, commonness.svg
CommandOutput run_commonness(const RunConfig& config);
/// layers.csv, layers.svg
CommandOutput run_layers(const RunConfig& config);
/// probe.txt, probe.csv. With `position`, probe.txt also lists that
/// position's top-m tokens at every layer.
CommandOutput run_probe(const RunConfig& config, std::int64_t sequence_id,
                        std::optional<std::size_t> position = std::nullopt);

}  // namespace epa

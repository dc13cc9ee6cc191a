#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epa/vocab.hpp"

namespace epa {

struct CorpusSequence {
  std::int64_t id = 0;
  std::vector<TokenId> token_ids;
  std::optional<int> label;

  std::size_t length() const noexcept { return token_ids.size(); }
  friend bool operator==(const CorpusSequence&, const CorpusSequence&) = default;
};

using Corpus = std::vector<CorpusSequence>;

/// JSON-lines: {"id": int, "token_ids": [int], "label": 0|1}. Blank lines are
/// ignored. Every id must be below `vocab_size`.
Corpus parse_corpus(std::string_view text, std::size_t vocab_size);
Corpus load_corpus(const std::filesystem::path& path, std::size_t vocab_size);
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

const CorpusSequence& find_sequence(const Corpus& corpus, std::int64_t id);

/// First `n` sequences, or a seeded uniform sample of `n` without replacement
/// (kept in corpus order) when `shuffle` is set.
Corpus sample_corpus(const Corpus& corpus, std::size_t n, bool shuffle, std::uint64_t seed);

/// Raw occurrence counts over the vocabulary.
struct FrequencyTable {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::uint64_t count(TokenId id) const;
  double relative(TokenId id) const;
};

FrequencyTable compute_frequency_table(const Corpus& corpus, std::size_t vocab_size);
/// {"token_id_as_string": count}; ids absent from the file count as 0.
FrequencyTable parse_frequency_json(std::string_view text, std::size_t vocab_size);
FrequencyTable load_frequency_json(const std::filesystem::path& path, std::size_t vocab_size);
std::string serialize_frequency_json(const FrequencyTable& table);

}  // namespace epa

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "epa/vocab.hpp"

namespace epa {

struct WordPieceOptions {
  std::string unk_token = "[UNK]";
  std::string continuation_prefix = "##";
  /// Words longer than this many code points map straight to [UNK].
  std::size_t max_chars_per_word = 100;
  /// Also split ASCII punctuation into standalone words, as BERT's basic
  /// tokenizer does. Off by default: plain whitespace splitting.
  bool split_punctuation = false;
};

/// Greedy longest-match-first WordPiece over ASCII-lowercased,
/// whitespace-separated words.
class WordPieceTokenizer {
 public:
  explicit WordPieceTokenizer(const Vocab& vocab, WordPieceOptions options = {});

  std::vector<TokenId> encode(std::string_view text) const;
  std::vector<TokenId> encode_word(std::string_view word) const;

 private:
  const Vocab* vocab_;
  WordPieceOptions options_;
  TokenId unk_;
};

std::vector<TokenId> tokenize_wordpiece(std::string_view text, const Vocab& vocab,
                                        const WordPieceOptions& options = {});

}  // namespace epa

#include "epa/tokenizer.hpp"

#include <cctype>

#include "epa/error.hpp"

namespace epa {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_continuation_byte(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

std::size_t code_point_count(std::string_view s) {
  std::size_t n = 0;
  for (char c : s)
    if (!is_continuation_byte(c)) ++n;
  return n;
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > begin) words.push_back(text.substr(begin, i - begin));
  }
  return words;
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

WordPieceTokenizer::WordPieceTokenizer(const Vocab& vocab, WordPieceOptions options)
    : vocab_(&vocab), options_(std::move(options)) {
  auto unk = vocab.find(options_.unk_token);
  if (!unk) fail(ErrorCode::InvalidArgument, "vocabulary lacks the unknown token '" +
                                                 options_.unk_token + "'");
  unk_ = *unk;
}

std::vector<TokenId> WordPieceTokenizer::encode_word(std::string_view word) const {
  if (word.empty()) return {};
  if (code_point_count(word) > options_.max_chars_per_word) return {unk_};

  std::vector<TokenId> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::optional<TokenId> match;
    while (end > start) {
      candidate.clear();
      if (start > 0) candidate = options_.continuation_prefix;
      candidate.append(word.substr(start, end - start));
      if (auto id = vocab_->find(candidate)) {
        match = id;
        break;
      }
      // Step back one whole code point.
      do {
        --end;
      } while (end > start && is_continuation_byte(word[end]));
    }
    if (!match) return {unk_};
    pieces.push_back(*match);
    start = end;
  }
  return pieces;
}

std::vector<TokenId> WordPieceTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  auto emit = [&](std::string_view word) {
    auto pieces = encode_word(lowercase_ascii(word));
    ids.insert(ids.end(), pieces.begin(), pieces.end());
  };
  for (auto word : split_whitespace(text)) {
    // Special tokens written verbatim ("[CLS]") bypass lowercasing.
    if (auto id = vocab_->find(word); id && vocab_->is_special(*id)) {
      ids.push_back(*id);
      continue;
    }
    if (!options_.split_punctuation) {
      emit(word);
      continue;
    }
    std::size_t begin = 0;
    for (std::size_t i = 0; i < word.size(); ++i) {
      if (!is_ascii_punct(word[i])) continue;
      if (i > begin) emit(word.substr(begin, i - begin));
      emit(word.substr(i, 1));
      begin = i + 1;
    }
    if (begin < word.size()) emit(word.substr(begin));
  }
  return ids;
}

std::vector<TokenId> tokenize_wordpiece(std::string_view text, const Vocab& vocab,
                                        const WordPieceOptions& options) {
  return WordPieceTokenizer(vocab, options).encode(text);
}

}  // namespace epa

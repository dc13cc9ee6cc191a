#include "epa/vocab.hpp"

#include <algorithm>

#include "epa/error.hpp"
#include "epa/io.hpp"

namespace epa {

bool is_valid_utf8(std::string_view text) noexcept {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (lead < 0x80) {
      ++i;
      continue;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
    } else {
      return false;
    }
    if (i + extra >= text.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cont & 0x3F);
    }
    // Overlong forms, surrogates and values past U+10FFFF are invalid.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000))
      return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

Vocab::Vocab(std::vector<std::string> tokens, const std::vector<std::string>& special_tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2) fail(ErrorCode::InvalidArgument, "vocabulary needs at least 2 tokens");
  index_.reserve(tokens_.size());
  special_.assign(tokens_.size(), 0);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto& tok = tokens_[i];
    if (tok.empty()) fail(ErrorCode::Format, "empty token at id " + std::to_string(i));
    auto [it, inserted] = index_.emplace(tok, static_cast<TokenId>(i));
    if (!inserted) {
      fail(ErrorCode::Format, "duplicate token '" + tok + "' at ids " +
                                  std::to_string(it->second) + " and " + std::to_string(i));
    }
    if (std::find(special_tokens.begin(), special_tokens.end(), tok) != special_tokens.end())
      special_[i] = 1;
  }
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size())
    fail(ErrorCode::OutOfRange, "token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocab::special_ids() const {
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < special_.size(); ++i)
    if (special_[i]) ids.push_back(static_cast<TokenId>(i));
  return ids;
}

std::string Vocab::serialize() const {
  std::string out;
  for (const auto& tok : tokens_) {
    out += tok;
    out += '\n';
  }
  return out;
}

Vocab parse_vocab(std::string_view text, const std::vector<std::string>& special_tokens) {
  if (text.empty()) fail(ErrorCode::Format, "empty vocabulary file");
  if (!is_valid_utf8(text)) fail(ErrorCode::Format, "vocabulary is not valid UTF-8");
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    tokens.emplace_back(line);
    start = end + 1;
  }
  return Vocab(std::move(tokens), special_tokens);
}

Vocab load_vocab(const std::filesystem::path& path,
                 const std::vector<std::string>& special_tokens) {
  return parse_vocab(read_file(path), special_tokens);
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
  write_file(path, vocab.serialize());
}

}  // namespace epa

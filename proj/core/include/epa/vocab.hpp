#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace epa {

using TokenId = std::uint32_t;

inline const std::vector<std::string>& default_special_tokens() {
  static const std::vector<std::string> specials{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  return specials;
}

/// Token strings indexed by id. Ids are zero-based line positions of vocab.txt.
class Vocab {
 public:
  Vocab() = default;
  /// Throws on duplicate or empty tokens and on fewer than two entries.
  explicit Vocab(std::vector<std::string> tokens,
                 const std::vector<std::string>& special_tokens = default_special_tokens());

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool is_special(TokenId id) const { return id < special_.size() && special_[id] != 0; }
  std::vector<TokenId> special_ids() const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// One token per line, `\n` terminated.
  std::string serialize() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<std::uint8_t> special_;
};

bool is_valid_utf8(std::string_view text) noexcept;

Vocab parse_vocab(std::string_view text,
                  const std::vector<std::string>& special_tokens = default_special_tokens());
Vocab load_vocab(const std::filesystem::path& path,
                 const std::vector<std::string>& special_tokens = default_special_tokens());
void save_vocab(const Vocab& vocab, const std::filesystem::path& path);

}  // namespace epa

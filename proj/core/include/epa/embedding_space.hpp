#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "epa/corpus.hpp"
#include "epa/linalg.hpp"
#include "epa/vocab.hpp"

namespace epa {

/// The vocabulary-indexed embedding matrix E with cached row l2 norms.
class EmbeddingTable {
 public:
  /// Throws Degenerate for any all-zero row: cosine against it is undefined.
  explicit EmbeddingTable(Matrix matrix);

  std::size_t size() const noexcept { return matrix_.rows(); }
  std::size_t width() const noexcept { return matrix_.cols(); }
  std::span<const double> row(TokenId id) const { return matrix_.row(id); }
  double row_norm(TokenId id) const { return norms_[id]; }
  const Matrix& matrix() const noexcept { return matrix_; }

 private:
  Matrix matrix_;
  std::vector<double> norms_;
};

/// Admissibility mask over token ids.
class TokenMask {
 public:
  static TokenMask all(std::size_t vocab_size);
  static TokenMask non_special(const Vocab& vocab);

  explicit TokenMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  std::size_t size() const noexcept { return bits_.size(); }
  bool admits(TokenId id) const { return id < bits_.size() && bits_[id] != 0; }
  void set(TokenId id, bool on) { bits_.at(id) = on ? 1 : 0; }

 private:
  std::vector<std::uint8_t> bits_;
};

struct Neighbor {
  TokenId id = 0;
  double similarity = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Top-k tokens by cosine against an arbitrary query vector, descending,
/// ties by lowest id. `exclude` removes one token from consideration.
/// Throws Degenerate for a zero query.
std::vector<Neighbor> top_k_by_cosine(std::span<const double> query, const EmbeddingTable& table,
                                      std::size_t k, const TokenMask& candidates,
                                      std::optional<TokenId> exclude = std::nullopt);

/// argmax over admitted Tok != tok of cos(E(tok), E(Tok)); lowest id wins ties.
Neighbor nearest_token(TokenId tok, const EmbeddingTable& table, const TokenMask& candidates);

std::vector<Neighbor> top_k_nearest_tokens(TokenId tok, const EmbeddingTable& table, std::size_t k,
                                           const TokenMask& candidates);

/// Row j is E(x_j); a pure lookup.
Matrix embed_sequence(std::span<const TokenId> tokens, const EmbeddingTable& table);

struct Substitution {
  std::size_t position = 0;
  TokenId original = 0;
  TokenId replacement = 0;
  double similarity = 0.0;
  std::array<double, 3> shifts{};  // indexed by Norm

  double shift(Norm norm) const { return shifts[static_cast<std::size_t>(norm)]; }
};

/// Norm of E(original) - E(replacement).
double row_shift(const EmbeddingTable& table, TokenId original, TokenId replacement, Norm norm);

/// ||E(x) - E(x')|| over the flattened sequence matrices. Also evaluates the
/// single-row form and throws Internal if the two disagree beyond 1e-12.
double sequence_shift(std::span<const TokenId> tokens, const Substitution& sub,
                      const EmbeddingTable& table, Norm norm);

using PositionPredicate = std::function<bool(std::size_t position, TokenId token)>;

struct SubstitutionPolicy {
  TokenMask candidates;
  /// Empty admits every position.
  PositionPredicate perturbable;
};

/// Candidates are all non-special tokens; special positions are not perturbed.
SubstitutionPolicy default_policy(const Vocab& vocab);

/// Eq.-1 neighbours memoized per token id. Built up front so that concurrent
/// readers need no synchronization.
class NeighborCache {
 public:
  NeighborCache(const EmbeddingTable& table, const TokenMask& candidates,
                std::span<const TokenId> tokens, unsigned threads = 1);

  const Neighbor& at(TokenId tok) const;
  bool contains(TokenId tok) const { return tok < has_.size() && has_[tok]; }

 private:
  std::vector<Neighbor> neighbors_;
  std::vector<std::uint8_t> has_;
};

/// For each perturbable position the Eq.-1 replacement is found once; all
/// three norm shifts are recorded and positions are ranked ascending by the
/// shift under `norm`, ties by position. Returns the first min(k, #positions).
std::vector<Substitution> minimal_substitutions(std::span<const TokenId> tokens,
                                                const EmbeddingTable& table, std::size_t k,
                                                Norm norm, const SubstitutionPolicy& policy,
                                                const NeighborCache* cache = nullptr);

}  // namespace epa

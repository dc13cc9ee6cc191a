#include "epa/embedding_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epa/error.hpp"
#include "epa/parallel.hpp"

namespace epa {
namespace {

bool ranks_before(const Neighbor& a, const Neighbor& b) {
  return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
}

void check_token(TokenId tok, const EmbeddingTable& table) {
  if (tok >= table.size()) {
    fail(ErrorCode::OutOfRange, "token id " + std::to_string(tok) +
                                    " outside embedding table of " +
                                    std::to_string(table.size()) + " rows");
  }
}

}  // namespace

EmbeddingTable::EmbeddingTable(Matrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() < 2 || matrix_.cols() == 0)
    fail(ErrorCode::InvalidArgument, "embedding table needs at least 2 rows and 1 column");
  norms_.resize(matrix_.rows());
  for (std::size_t r = 0; r < matrix_.rows(); ++r) {
    const auto row = matrix_.row(r);
    for (double x : row)
      if (!std::isfinite(x))
        fail(ErrorCode::Format, "non-finite value in embedding row " + std::to_string(r));
    norms_[r] = vector_norm(row, Norm::l2);
    if (norms_[r] == 0.0)
      fail(ErrorCode::Degenerate, "embedding row " + std::to_string(r) + " is all zeros");
  }
}

TokenMask TokenMask::all(std::size_t vocab_size) {
  return TokenMask(std::vector<std::uint8_t>(vocab_size, 1));
}

TokenMask TokenMask::non_special(const Vocab& vocab) {
  std::vector<std::uint8_t> bits(vocab.size(), 1);
  for (auto id : vocab.special_ids()) bits[id] = 0;
  return TokenMask(std::move(bits));
}

std::vector<Neighbor> top_k_by_cosine(std::span<const double> query, const EmbeddingTable& table,
                                      std::size_t k, const TokenMask& candidates,
                                      std::optional<TokenId> exclude) {
  if (query.size() != table.width()) {
    fail(ErrorCode::ShapeMismatch, "query of width " + std::to_string(query.size()) +
                                       " against table of width " +
                                       std::to_string(table.width()));
  }
  const double qnorm = vector_norm(query, Norm::l2);
  if (qnorm == 0.0) fail(ErrorCode::Degenerate, "cosine query vector is all zeros");
  std::vector<Neighbor> scored;
  scored.reserve(table.size());
  for (TokenId t = 0; t < table.size(); ++t) {
    if (!candidates.admits(t) || (exclude && *exclude == t)) continue;
    scored.push_back({t, dot(query, table.row(t)) / (qnorm * table.row_norm(t))});
  }
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), ranks_before);
  scored.resize(keep);
  return scored;
}

std::vector<Neighbor> top_k_nearest_tokens(TokenId tok, const EmbeddingTable& table, std::size_t k,
                                           const TokenMask& candidates) {
  check_token(tok, table);
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  auto out = top_k_by_cosine(table.row(tok), table, k, candidates, tok);
  if (out.empty()) {
    fail(ErrorCode::InvalidArgument,
         "no admissible replacement candidate for token " + std::to_string(tok));
  }
  return out;
}

Neighbor nearest_token(TokenId tok, const EmbeddingTable& table, const TokenMask& candidates) {
  return top_k_nearest_tokens(tok, table, 1, candidates).front();
}

Matrix embed_sequence(std::span<const TokenId> tokens, const EmbeddingTable& table) {
  Matrix out(tokens.size(), table.width());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    check_token(tokens[j], table);
    std::copy_n(table.row(tokens[j]).begin(), table.width(), out.row(j).begin());
  }
  return out;
}

double row_shift(const EmbeddingTable& table, TokenId original, TokenId replacement, Norm norm) {
  check_token(original, table);
  check_token(replacement, table);
  const auto a = table.row(original);
  const auto b = table.row(replacement);
  Vector diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return vector_norm(diff, norm);
}

double sequence_shift(std::span<const TokenId> tokens, const Substitution& sub,
                      const EmbeddingTable& table, Norm norm) {
  if (sub.position >= tokens.size()) {
    fail(ErrorCode::OutOfRange, "substitution position " + std::to_string(sub.position) +
                                    " outside sequence of length " +
                                    std::to_string(tokens.size()));
  }
  if (tokens[sub.position] != sub.original)
    fail(ErrorCode::InvalidArgument, "substitution original token does not match the sequence");
  std::vector<TokenId> perturbed(tokens.begin(), tokens.end());
  perturbed[sub.position] = sub.replacement;
  const Matrix diff = subtract(embed_sequence(tokens, table), embed_sequence(perturbed, table));
  const double whole = vector_norm(diff.values(), norm);
  const double single = row_shift(table, sub.original, sub.replacement, norm);
  if (std::abs(whole - single) > 1e-12)
    fail(ErrorCode::Internal, "flattened and single-row shifts disagree");
  return whole;
}

SubstitutionPolicy default_policy(const Vocab& vocab) {
  auto mask = TokenMask::non_special(vocab);
  return {mask, [mask](std::size_t, TokenId tok) { return mask.admits(tok); }};
}

NeighborCache::NeighborCache(const EmbeddingTable& table, const TokenMask& candidates,
                             std::span<const TokenId> tokens, unsigned threads) {
  has_.assign(table.size(), 0);
  neighbors_.resize(table.size());
  std::vector<TokenId> distinct;
  for (TokenId t : tokens) {
    check_token(t, table);
    if (!has_[t]) {
      has_[t] = 1;
      distinct.push_back(t);
    }
  }
  parallel_for(distinct.size(), threads, [&](std::size_t i) {
    neighbors_[distinct[i]] = nearest_token(distinct[i], table, candidates);
  });
}

const Neighbor& NeighborCache::at(TokenId tok) const {
  if (!contains(tok)) fail(ErrorCode::OutOfRange, "token " + std::to_string(tok) + " not cached");
  return neighbors_[tok];
}

std::vector<Substitution> minimal_substitutions(std::span<const TokenId> tokens,
                                                const EmbeddingTable& table, std::size_t k,
                                                Norm norm, const SubstitutionPolicy& policy,
                                                const NeighborCache* cache) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  std::vector<Substitution> records;
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const TokenId tok = tokens[pos];
    check_token(tok, table);
    if (policy.perturbable && !policy.perturbable(pos, tok)) continue;
    const Neighbor nn = cache && cache->contains(tok) ? cache->at(tok)
                                                      : nearest_token(tok, table, policy.candidates);
    Substitution sub{pos, tok, nn.id, nn.similarity, {}};
    for (Norm n : kAllNorms) sub.shifts[static_cast<std::size_t>(n)] = row_shift(table, tok, nn.id, n);
    records.push_back(sub);
  }
  if (records.empty()) fail(ErrorCode::InvalidArgument, "sequence has no perturbable positions");
  std::stable_sort(records.begin(), records.end(), [norm](const Substitution& a, const Substitution& b) {
    const double sa = a.shift(norm), sb = b.shift(norm);
    return sa != sb ? sa < sb : a.position < b.position;
  });
  records.resize(std::min(k, records.size()));
  return records;
}

}  // namespace epa

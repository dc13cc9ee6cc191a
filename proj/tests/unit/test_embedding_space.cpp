#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "epa/embedding_space.hpp"
#include "epa/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace epa;

namespace {

EmbeddingTable table_of(std::size_t cols, std::vector<double> values) {
  const std::size_t rows = values.size() / cols;
  return EmbeddingTable(Matrix(rows, cols, std::move(values)));
}

}  // namespace

TEST_CASE("embedding table validation") {
  CHECK_THROWS_AS(table_of(2, {1, 0, 0, 0}), Error);
  CHECK_THROWS_AS(table_of(2, {1, NAN, 0, 1}), Error);
  const EmbeddingTable t = table_of(2, {3, 4, 0, 1});
  CHECK(t.row_norm(0) == 5.0);
  CHECK(t.row_norm(1) == 1.0);
}

TEST_CASE("nearest token") {
  const EmbeddingTable e = table_of(2, {1, 0, 0.9, 0.1, 0, 1});
  const TokenMask all = TokenMask::all(3);
  const Neighbor nn = nearest_token(0, e, all);
  CHECK(nn.id == 1);
  CHECK(std::fabs(nn.similarity - 0.993883734673619) < 1e-15);

  const EmbeddingTable scaled = table_of(2, {1, 2, 2, 4, -2, 1});
  const Neighbor s = nearest_token(0, scaled, all);
  CHECK(s.id == 1);
  CHECK(std::fabs(s.similarity - 1.0) < 1e-15);

  // ids 1 and 2 are mirror images about the query direction.
  const EmbeddingTable tie = table_of(2, {1, 0, 1, 1, 1, -1});
  CHECK(nearest_token(0, tie, all).id == 1);

  TokenMask only_self(std::vector<std::uint8_t>{1, 0, 0});
  CHECK_THROWS_AS(nearest_token(0, e, only_self), Error);
  TokenMask skip_b(std::vector<std::uint8_t>{1, 0, 1});
  CHECK(nearest_token(0, e, skip_b).id == 2);
}

TEST_CASE("top-k nearest tokens") {
  const EmbeddingTable e = table_of(2, {1, 0, 0.6, 0.8, 0.8, 0.6, -1, 0.1, 0.8, 0.6});
  const TokenMask all = TokenMask::all(5);
  const auto one = top_k_nearest_tokens(0, e, 1, all);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == nearest_token(0, e, all));

  const auto full = top_k_nearest_tokens(0, e, 99, all);
  REQUIRE(full.size() == 4);
  CHECK(full[0].id == 2);
  CHECK(full[1].id == 4);  // same row as id 2
  CHECK(full[2].id == 1);
  CHECK(full[3].id == 3);

  const oracle::Rows rows = fixture::to_rows(e.matrix());
  const auto ref = oracle::probe_row(rows[0], rows, 5);
  // the oracle keeps the query itself at the top
  REQUIRE(ref[0].id == 0);
  for (std::size_t i = 0; i < full.size(); ++i) {
    CHECK(full[i].id == ref[i + 1].id);
    CHECK(std::fabs(full[i].similarity - ref[i + 1].sim) < 1e-15);
  }
}

TEST_CASE("embed sequence") {
  const EmbeddingTable e = table_of(2, {1, 0, 0, 1, 2, 3});
  const Matrix one = embed_sequence(std::vector<TokenId>{2}, e);
  CHECK(one == Matrix(1, 2, {2, 3}));
  CHECK(embed_sequence(std::vector<TokenId>{1, 1}, e) == Matrix(2, 2, {0, 1, 0, 1}));
  CHECK(embed_sequence(std::vector<TokenId>{2, 0, 1}, e) == Matrix(3, 2, {2, 3, 1, 0, 0, 1}));
}

TEST_CASE("sequence shift") {
  const EmbeddingTable e = table_of(2, {1, 0, 0.9, 0.1, 1, 0});
  const std::vector<TokenId> x{0, 1};
  Substitution sub{0, 0, 1, 0.0, {}};
  CHECK(sequence_shift(x, sub, e, Norm::l1) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(std::fabs(sequence_shift(x, sub, e, Norm::l2) - 0.1414213562373095) < 1e-15);
  CHECK(std::fabs(sequence_shift(x, sub, e, Norm::linf) - 0.1) < 1e-15);

  Substitution dup{0, 0, 2, 1.0, {}};
  for (Norm n : kAllNorms) CHECK(sequence_shift(x, dup, e, n) == 0.0);

  Substitution bad{5, 0, 1, 0.0, {}};
  CHECK_THROWS_AS(sequence_shift(x, bad, e, Norm::l2), Error);
}

TEST_CASE("minimal substitutions basics") {
  const Vocab vocab = fixture::numbered_vocab(9);
  Rng rng(31);
  const EmbeddingTable e(fixture::gaussian_matrix(rng, 9, 4));
  const SubstitutionPolicy policy = default_policy(vocab);

  const auto single = minimal_substitutions(std::vector<TokenId>{2, 7, 3}, e, 5, Norm::l2, policy);
  REQUIRE(single.size() == 1);
  CHECK(single[0].position == 1);
  CHECK(single[0].original == 7);

  CHECK_THROWS_AS(minimal_substitutions(std::vector<TokenId>{2, 3}, e, 5, Norm::l2, policy), Error);
  CHECK_THROWS_AS(minimal_substitutions(std::vector<TokenId>{5, 6}, e, 0, Norm::l2, policy), Error);

  const std::vector<TokenId> x{2, 5, 6, 7, 8, 6, 3};
  for (Norm n : kAllNorms) {
    const auto subs = minimal_substitutions(x, e, 10, n, policy);
    CHECK(subs.size() == 5);
    for (std::size_t i = 1; i < subs.size(); ++i) {
      CHECK(subs[i - 1].shift(n) <= subs[i].shift(n));
      if (subs[i - 1].shift(n) == subs[i].shift(n)) CHECK(subs[i - 1].position < subs[i].position);
    }
    for (const auto& s : subs) {
      CHECK(s.replacement != s.original);
      CHECK_FALSE(vocab.is_special(s.replacement));
      for (Norm m : kAllNorms) CHECK(s.shift(m) >= 0.0);
    }
  }

  SubstitutionPolicy everything{TokenMask::all(9), {}};
  const auto with_specials = minimal_substitutions(x, e, 10, Norm::l2, everything);
  CHECK(with_specials.size() == x.size());
}

TEST_CASE("minimal substitutions against the substitution grid") {
  const Vocab vocab = fixture::numbered_vocab(40);
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const EmbeddingTable e(fixture::gaussian_matrix(rng, 40, 1 + rng.below(6)));
    const auto rows = fixture::to_rows(e.matrix());
    const SubstitutionPolicy policy = default_policy(vocab);
    const auto x = fixture::random_sequence(rng, 40, 3 + rng.below(12), true);
    if (std::none_of(x.begin(), x.end(), [&](TokenId t) { return !vocab.is_special(t); })) continue;
    const NeighborCache cache(e, policy.candidates, x);
    const std::size_t k = 1 + rng.below(6);
    for (int n = 0; n < 3; ++n) {
      const Norm norm = static_cast<Norm>(n);
      const auto got = minimal_substitutions(x, e, k, norm, policy, trial % 2 ? &cache : nullptr);
      const auto want = oracle::brute_minimal(
          x, rows, k, n, [&](std::uint32_t c) { return !vocab.is_special(c); },
          [&](std::size_t, std::uint32_t t) { return !vocab.is_special(t); });
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].position == want[i].position);
        CHECK(got[i].replacement == want[i].replacement);
        CHECK(std::fabs(got[i].shift(norm) - want[i].shift) < 1e-12);
      }
    }
  }
}

TEST_CASE("property: flattening equivalence") {
  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t v = 3 + rng.below(30);
    const EmbeddingTable e(fixture::gaussian_matrix(rng, v, 1 + rng.below(16)));
    const auto x = fixture::random_sequence(rng, v, 1 + rng.below(16), false);
    const std::size_t pos = rng.below(x.size());
    TokenId rep = static_cast<TokenId>(rng.below(v));
    if (rep == x[pos]) rep = (rep + 1) % static_cast<TokenId>(v);
    Substitution sub{pos, x[pos], rep, 0.0, {}};
    double prev = 0.0;
    for (Norm n : {Norm::linf, Norm::l2, Norm::l1}) {
      const double full = sequence_shift(x, sub, e, n);
      CHECK(std::fabs(full - row_shift(e, x[pos], rep, n)) <= 1e-12);
      CHECK(full >= prev);
      prev = full;
    }
  }
}

TEST_CASE("neighbour cache matches direct scans") {
  Rng rng(34);
  const EmbeddingTable e(fixture::gaussian_matrix(rng, 50, 5));
  const TokenMask mask = TokenMask::all(50);
  std::vector<TokenId> tokens{1, 4, 4, 9, 49};
  const NeighborCache serial(e, mask, tokens, 1), pooled(e, mask, tokens, 4);
  for (TokenId t : tokens) {
    CHECK(serial.at(t) == nearest_token(t, e, mask));
    CHECK(pooled.at(t) == serial.at(t));
  }
  CHECK_FALSE(serial.contains(2));
  CHECK_THROWS_AS(serial.at(2), Error);
}

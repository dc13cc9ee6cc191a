#include "epa/synth.hpp"

#include <cmath>
#include <cstdio>

#include "epa/error.hpp"
#include "epa/random.hpp"

namespace epa {
namespace {

constexpr std::size_t kSpecialCount = 5;

Vocab synthetic_vocab(std::size_t size) {
  std::vector<std::string> tokens(default_special_tokens());
  char name[32];
  for (std::size_t i = 0; tokens.size() < size; ++i) {
    std::snprintf(name, sizeof name, "tok%04zu", i);
    tokens.emplace_back(name);
  }
  return Vocab(std::move(tokens));
}

double draw(Rng& rng) { return static_cast<double>(static_cast<float>(rng.uniform(-0.1, 0.1))); }

Matrix draw_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = draw(rng);
  return m;
}

Vector draw_vector(Rng& rng, std::size_t n) {
  Vector v(n);
  for (double& x : v) x = draw(rng);
  return v;
}

LayerNormParams unit_layer_norm(std::size_t d) { return {Vector(d, 1.0), Vector(d, 0.0)}; }

void check_dims(const ModelDims& dims) {
  dims.validate();
  if (dims.vocab_size < kSpecialCount + 2) {
    fail(ErrorCode::InvalidArgument,
         "vocab_size must be at least 7 (5 special tokens plus 2 substitutable tokens)");
  }
}

}  // namespace

SyntheticModel synthesize_model(std::uint64_t seed, const ModelDims& dims) {
  check_dims(dims);
  Rng rng(seed);
  const auto d = dims.width;
  EncoderModel m;
  m.dims = dims;
  m.tok_emb = draw_matrix(rng, dims.vocab_size, d);
  m.pos_emb = draw_matrix(rng, dims.max_position, d);
  m.emb_ln = unit_layer_norm(d);
  for (std::size_t i = 0; i < dims.layers; ++i) {
    EncoderLayer l;
    l.wq = draw_matrix(rng, d, d);
    l.wk = draw_matrix(rng, d, d);
    l.wv = draw_matrix(rng, d, d);
    l.wo = draw_matrix(rng, d, d);
    l.bq = draw_vector(rng, d);
    l.bk = draw_vector(rng, d);
    l.bv = draw_vector(rng, d);
    l.bo = draw_vector(rng, d);
    l.w1 = draw_matrix(rng, d, dims.ffn_width);
    l.b1 = draw_vector(rng, dims.ffn_width);
    l.w2 = draw_matrix(rng, dims.ffn_width, d);
    l.b2 = draw_vector(rng, d);
    l.ln1 = unit_layer_norm(d);
    l.ln2 = unit_layer_norm(d);
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return {synthetic_vocab(dims.vocab_size), std::move(m)};
}

Corpus synthesize_uniform_corpus(std::uint64_t seed, const Vocab& vocab, std::size_t sequences,
                                 std::size_t min_words, std::size_t max_words) {
  if (min_words == 0 || max_words < min_words)
    fail(ErrorCode::InvalidArgument, "need 1 <= min_words <= max_words");
  const auto cls = vocab.find("[CLS]");
  const auto sep = vocab.find("[SEP]");
  std::vector<TokenId> words;
  for (TokenId t = 0; t < vocab.size(); ++t)
    if (!vocab.is_special(t)) words.push_back(t);
  if (words.empty()) fail(ErrorCode::InvalidArgument, "vocabulary has no regular tokens");

  Rng rng(seed);
  Corpus corpus;
  for (std::size_t s = 0; s < sequences; ++s) {
    CorpusSequence seq;
    seq.id = static_cast<std::int64_t>(s);
    const auto n = min_words + rng.below(max_words - min_words + 1);
    if (cls) seq.token_ids.push_back(*cls);
    for (std::size_t i = 0; i < n; ++i) seq.token_ids.push_back(words[rng.below(words.size())]);
    if (sep) seq.token_ids.push_back(*sep);
    seq.label = static_cast<int>(rng.below(2));
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

SyntheticFixture synthesize_clustered_fixture(std::uint64_t seed, const ModelDims& dims,
                                              const ClusteredGeometry& geometry) {
  if (geometry.cluster_size < 2) fail(ErrorCode::InvalidArgument, "cluster_size must be >= 2");
  if (geometry.min_words == 0 || geometry.max_words < geometry.min_words)
    fail(ErrorCode::InvalidArgument, "need 1 <= min_words <= max_words");
  if (geometry.max_words + 2 > dims.max_position)
    fail(ErrorCode::InvalidArgument, "max_words + 2 exceeds max_position");

  auto [vocab, model] = synthesize_model(seed, dims);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto d = dims.width;
  const std::size_t regular = dims.vocab_size - kSpecialCount;
  const double noise_scale = 1.0 / std::sqrt(static_cast<double>(d));

  Vector centre(d);
  for (std::size_t rank = 0; rank < regular; ++rank) {
    if (rank % geometry.cluster_size == 0) {
      double n2 = 0.0;
      for (double& c : centre) {
        c = rng.normal();
        n2 += c * c;
      }
      const double inv = 1.0 / std::sqrt(n2);
      for (double& c : centre) c *= inv;
    }
    const double rarity = regular > 1 ? static_cast<double>(rank) / (regular - 1) : 0.0;
    const double spread =
        geometry.spread_common + (geometry.spread_rare - geometry.spread_common) * rarity;
    auto row = model.tok_emb.row(kSpecialCount + rank);
    for (std::size_t j = 0; j < d; ++j)
      row[j] = static_cast<double>(static_cast<float>(centre[j] + spread * noise_scale * rng.normal()));
  }

  // Zipf sampling by inverse CDF over ranks.
  std::vector<double> cdf(regular);
  double acc = 0.0;
  for (std::size_t r = 0; r < regular; ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), geometry.zipf_exponent);
    cdf[r] = acc;
  }
  const TokenId cls = *vocab.find("[CLS]");
  const TokenId sep = *vocab.find("[SEP]");
  Corpus corpus;
  for (std::size_t s = 0; s < geometry.sequences; ++s) {
    CorpusSequence seq;
    seq.id = static_cast<std::int64_t>(s);
    const auto n = geometry.min_words + rng.below(geometry.max_words - geometry.min_words + 1);
    seq.token_ids.push_back(cls);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.unit() * acc;
      std::size_t lo = 0, hi = regular - 1;
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cdf[mid] > u) hi = mid;
        else lo = mid + 1;
      }
      seq.token_ids.push_back(static_cast<TokenId>(kSpecialCount + lo));
    }
    seq.token_ids.push_back(sep);
    seq.label = static_cast<int>(rng.below(2));
    corpus.push_back(std::move(seq));
  }
  return {std::move(vocab), std::move(model), std::move(corpus)};
}

}  // namespace epa

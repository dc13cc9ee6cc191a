#pragma once

#include <cstdint>

#include "epa/corpus.hpp"
#include "epa/encoder_model.hpp"
#include "epa/vocab.hpp"

namespace epa {

struct SyntheticModel {
  Vocab vocab;
  EncoderModel model;
};

/// Deterministic toy encoder. Ids 0-4 are [PAD] [UNK] [CLS] [SEP] [MASK];
/// the rest are "tok0000", "tok0001", ... Every weight and bias is a float
/// drawn from uniform(-0.1, 0.1); LayerNorm gains are 1 and shifts 0.
SyntheticModel synthesize_model(std::uint64_t seed, const ModelDims& dims);

/// Random corpus over the non-special tokens of `vocab`: each sequence is
/// [CLS] w1 ... wn [SEP] with n uniform in [min_words, max_words].
Corpus synthesize_uniform_corpus(std::uint64_t seed, const Vocab& vocab, std::size_t sequences,
                                 std::size_t min_words, std::size_t max_words);

struct ClusteredGeometry {
  std::size_t sequences = 2000;
  std::size_t min_words = 6;
  std::size_t max_words = 14;
  std::size_t cluster_size = 4;
  double zipf_exponent = 1.0;
  /// Noise scale around a cluster centre grows linearly with frequency rank
  /// from `spread_common` (most frequent) to `spread_rare` (least frequent).
  double spread_common = 0.05;
  double spread_rare = 1.5;
};

struct SyntheticFixture {
  Vocab vocab;
  EncoderModel model;
  Corpus corpus;
};

/// Fixture where commonness and embedding isolation are coupled:
///
///   * non-special token k has frequency rank k; the corpus draws words from
///     a Zipf(rank + 1) law, so low ids are common and high ids rare;
///   * tokens are grouped by consecutive rank into clusters of
///     `cluster_size`, each with a random unit centre;
///   * a token's row is centre + spread(rank) * g, g ~ N(0, I/d), where the
///     spread grows with rank.
///
/// Common tokens therefore sit in tight clusters whose Eq.-1 neighbour is a
/// near-duplicate, while rare tokens are isolated. Encoder weights are drawn
/// as in synthesize_model.
SyntheticFixture synthesize_clustered_fixture(std::uint64_t seed, const ModelDims& dims,
                                              const ClusteredGeometry& geometry = {});

}  // namespace epa

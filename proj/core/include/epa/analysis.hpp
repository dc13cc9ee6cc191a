#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epa/corpus.hpp"
#include "epa/embedding_space.hpp"
#include "epa/encoder.hpp"
#include "epa/stats.hpp"

namespace epa {

// ---------------------------------------------------------------------------
// Frequency of minimal-shift tokens

/// How often each ORIGINAL token lands in a sequence's top-k minimal set.
struct FrequencyProfile {
  Norm norm = Norm::l2;
  std::map<TokenId, std::uint64_t> counts;

  std::uint64_t count(TokenId id) const;
  std::uint64_t total() const;
};

struct FrequencyOptions {
  std::size_t k = 5;
  std::vector<Norm> norms{kAllNorms.begin(), kAllNorms.end()};
  unsigned threads = 1;
};

/// One profile per entry of options.norms, in that order. Each norm ranks
/// positions independently.
std::vector<FrequencyProfile> frequency_analysis(const Corpus& sample, const EmbeddingTable& table,
                                                 const SubstitutionPolicy& policy,
                                                 const FrequencyOptions& options = {});

struct AgreementMatrix {
  std::vector<Norm> norms;
  std::vector<std::vector<double>> pearson;
  std::vector<std::vector<double>> spearman;
  std::size_t aligned_tokens = 0;   // union of nonzero tokens
  std::size_t spearman_tokens = 0;  // after the top-n restriction
};

/// Profiles are aligned on the union of their nonzero tokens (zero filled).
/// Pearson uses the full aligned vectors; Spearman uses the `top_n` tokens
/// by count summed across profiles (ties by id) when given.
AgreementMatrix norm_agreement(const std::vector<FrequencyProfile>& profiles,
                               std::optional<std::size_t> top_n = std::nullopt);

/// Tokens ordered by count summed over profiles, descending, ties by id.
std::vector<TokenId> rank_by_total(const std::vector<FrequencyProfile>& profiles);

// ---------------------------------------------------------------------------
// Commonness

/// min-max normalized log(1 + count) over the whole vocabulary.
std::vector<double> commonness(const FrequencyTable& freq);

/// floor(bins * score), with a score of 1 in the last bin.
std::size_t commonness_bin(double score, std::size_t bins);

struct CommonnessSample {
  TokenId token = 0;
  double commonness = 0.0;
  double shift = 0.0;  // l2
  std::size_t bin = 0;
  std::int64_t sequence_id = 0;
  std::size_t position = 0;
  TokenId replacement = 0;
};

struct CommonnessOptions {
  std::size_t bins = 10;
  std::size_t per_bin = 50;
  std::uint64_t seed = 0;
};

struct CommonnessResult {
  std::vector<CommonnessSample> samples;  // grouped by bin, ascending
  RegressionFit fit;                      // shift against commonness
  std::vector<std::size_t> skipped_bins;
  std::vector<std::string> warnings;
};

/// Per equal-width bin: the distinct tokens whose score falls in the bin and
/// which occur at a perturbable position are shuffled (seeded); each is
/// paired with a seeded carrier sentence not yet used in that bin, until
/// `per_bin` samples. The first perturbable occurrence in the carrier is
/// perturbed via Eq. 1. Empty bins are skipped with a warning.
CommonnessResult commonness_analysis(const Corpus& corpus, const EmbeddingTable& table,
                                     const FrequencyTable& freq, const SubstitutionPolicy& policy,
                                     const CommonnessOptions& options = {});

// ---------------------------------------------------------------------------
// Layer propagation

struct LayerStat {
  std::size_t n = 0;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct PropagationRecord {
  std::int64_t sequence_id = 0;
  std::size_t rank = 0;  // 1-based position in the minimal-substitution list
  Substitution substitution;
  std::vector<double> distances;  // one per trace index
};

struct PropagationSummary {
  std::vector<std::string> layer_labels;      // raw, h0, ..., hL
  std::vector<LayerStat> overall;             // per layer
  std::vector<std::vector<LayerStat>> by_rank;  // [rank - 1][layer]
  std::vector<PropagationRecord> records;
};

struct PropagationOptions {
  std::size_t k = 5;
  /// Ranks the substitutions and measures the hidden-state distance.
  Norm norm = Norm::l2;
  /// Distance of the perturbed position's row only, instead of the whole
  /// flattened hidden-state matrix.
  bool per_position = false;
  ForwardOptions forward;
  unsigned threads = 1;
};

/// Mean and 95% t interval; with fewer than two values the interval
/// collapses onto the mean.
LayerStat summarize(std::span<const double> values);

PropagationSummary layer_propagation(const Corpus& sample, const EmbeddingTable& table,
                                     const EncoderModel& model, const SubstitutionPolicy& policy,
                                     const PropagationOptions& options = {});

// ---------------------------------------------------------------------------
// Identifiability

struct PositionProbe {
  TokenId input = 0;
  std::vector<Neighbor> top;  // empty when the hidden vector is all zeros
  bool zero_norm = false;
};

struct LayerProbe {
  std::string label;
  std::vector<PositionProbe> positions;
  double identifiability_rate = 0.0;
};

struct IdentifiabilityReport {
  std::vector<LayerProbe> layers;
};

/// Top-m vocabulary tokens (special tokens included) by cosine against every
/// h_{i,j} of the trace; rate = share of positions whose rank-1 token is the
/// input token.
IdentifiabilityReport identifiability_probe(std::span<const TokenId> tokens,
                                            const EmbeddingTable& table, const EncoderModel& model,
                                            std::size_t m, const ForwardOptions& options = {},
                                            unsigned threads = 1);

}  // namespace epa

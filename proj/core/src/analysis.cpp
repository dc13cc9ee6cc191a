#include "epa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epa/error.hpp"
#include "epa/parallel.hpp"
#include "epa/random.hpp"

namespace epa {
namespace {

std::vector<TokenId> all_tokens(const Corpus& corpus) {
  std::vector<TokenId> tokens;
  for (const auto& seq : corpus) tokens.insert(tokens.end(), seq.token_ids.begin(), seq.token_ids.end());
  return tokens;
}

[[noreturn]] void rethrow_for_sequence(const Error& e, std::int64_t id) {
  throw Error(e.code(), "sequence " + std::to_string(id) + ": " + e.what());
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t FrequencyProfile::count(TokenId id) const {
  auto it = counts.find(id);
  return it == counts.end() ? 0 : it->second;
}

std::uint64_t FrequencyProfile::total() const {
  std::uint64_t t = 0;
  for (const auto& [id, c] : counts) t += c;
  return t;
}

std::vector<FrequencyProfile> frequency_analysis(const Corpus& sample, const EmbeddingTable& table,
                                                 const SubstitutionPolicy& policy,
                                                 const FrequencyOptions& options) {
  if (sample.empty()) fail(ErrorCode::InvalidArgument, "frequency analysis of an empty sample");
  if (options.k == 0) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  if (options.norms.empty()) fail(ErrorCode::InvalidArgument, "no norms requested");

  const auto tokens = all_tokens(sample);
  const NeighborCache cache(table, policy.candidates, tokens, options.threads);

  // slots[s][n] holds the original tokens chosen for sequence s under norm n.
  std::vector<std::vector<std::vector<TokenId>>> slots(sample.size());
  parallel_for(sample.size(), options.threads, [&](std::size_t s) {
    const auto& seq = sample[s];
    auto& out = slots[s];
    out.resize(options.norms.size());
    try {
      for (std::size_t n = 0; n < options.norms.size(); ++n) {
        for (const auto& sub : minimal_substitutions(seq.token_ids, table, options.k,
                                                     options.norms[n], policy, &cache))
          out[n].push_back(sub.original);
      }
    } catch (const Error& e) {
      rethrow_for_sequence(e, seq.id);
    }
  });

  std::vector<FrequencyProfile> profiles(options.norms.size());
  for (std::size_t n = 0; n < options.norms.size(); ++n) profiles[n].norm = options.norms[n];
  for (const auto& per_seq : slots)
    for (std::size_t n = 0; n < per_seq.size(); ++n)
      for (TokenId t : per_seq[n]) ++profiles[n].counts[t];
  return profiles;
}

std::vector<TokenId> rank_by_total(const std::vector<FrequencyProfile>& profiles) {
  std::map<TokenId, std::uint64_t> totals;
  for (const auto& p : profiles)
    for (const auto& [id, c] : p.counts)
      if (c > 0) totals[id] += c;
  std::vector<std::pair<TokenId, std::uint64_t>> items(totals.begin(), totals.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<TokenId> ids;
  ids.reserve(items.size());
  for (const auto& [id, c] : items) ids.push_back(id);
  return ids;
}

AgreementMatrix norm_agreement(const std::vector<FrequencyProfile>& profiles,
                               std::optional<std::size_t> top_n) {
  if (profiles.size() < 2) fail(ErrorCode::InvalidArgument, "norm agreement needs >= 2 profiles");
  if (top_n && *top_n < 2) fail(ErrorCode::InvalidArgument, "top_n must be at least 2");

  std::vector<TokenId> aligned = rank_by_total(profiles);
  std::vector<TokenId> top = aligned;
  if (top_n && top.size() > *top_n) top.resize(*top_n);
  std::sort(aligned.begin(), aligned.end());

  auto vectorize = [](const FrequencyProfile& p, const std::vector<TokenId>& ids) {
    std::vector<double> v;
    v.reserve(ids.size());
    for (TokenId id : ids) v.push_back(static_cast<double>(p.count(id)));
    return v;
  };

  AgreementMatrix out;
  const std::size_t n = profiles.size();
  out.aligned_tokens = aligned.size();
  out.spearman_tokens = top.size();
  out.pearson.assign(n, std::vector<double>(n, 1.0));
  out.spearman.assign(n, std::vector<double>(n, 1.0));
  std::vector<std::vector<double>> full, restricted;
  for (const auto& p : profiles) {
    out.norms.push_back(p.norm);
    full.push_back(vectorize(p, aligned));
    restricted.push_back(vectorize(p, top));
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      out.pearson[a][b] = pearson(full[a], full[b]);
      out.spearman[a][b] = spearman(restricted[a], restricted[b]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> commonness(const FrequencyTable& freq) {
  if (freq.counts.empty()) fail(ErrorCode::InvalidArgument, "commonness of an empty table");
  std::vector<double> logs(freq.counts.size());
  for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = std::log1p(static_cast<double>(freq.counts[i]));
  const auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
  const double min = *lo, range = *hi - *lo;
  if (range == 0.0) fail(ErrorCode::Degenerate, "all tokens are equally frequent");
  for (double& v : logs) v = (v - min) / range;
  return logs;
}

std::size_t commonness_bin(double score, std::size_t bins) {
  if (bins == 0) fail(ErrorCode::InvalidArgument, "bins must be positive");
  if (!(score >= 0.0 && score <= 1.0))
    fail(ErrorCode::OutOfRange, "commonness score outside [0, 1]");
  const auto b = static_cast<std::size_t>(std::floor(score * static_cast<double>(bins)));
  return std::min(b, bins - 1);
}

CommonnessResult commonness_analysis(const Corpus& corpus, const EmbeddingTable& table,
                                     const FrequencyTable& freq, const SubstitutionPolicy& policy,
                                     const CommonnessOptions& options) {
  if (options.bins == 0 || options.per_bin == 0)
    fail(ErrorCode::InvalidArgument, "bins and per_bin must be positive");
  if (freq.counts.size() != table.size()) {
    fail(ErrorCode::ShapeMismatch, "frequency table covers " + std::to_string(freq.counts.size()) +
                                       " tokens but the embedding table has " +
                                       std::to_string(table.size()));
  }
  const auto scores = commonness(freq);

  // carriers[t]: (sequence index, first perturbable position of t)
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> carriers(table.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& ids = corpus[s].token_ids;
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
      const TokenId t = ids[pos];
      if (t >= table.size()) fail(ErrorCode::OutOfRange, "corpus token outside embedding table");
      if (policy.perturbable && !policy.perturbable(pos, t)) continue;
      auto& list = carriers[t];
      if (list.empty() || list.back().first != s) list.emplace_back(s, pos);
    }
  }

  CommonnessResult result;
  std::vector<std::vector<TokenId>> by_bin(options.bins);
  for (TokenId t = 0; t < table.size(); ++t)
    if (!carriers[t].empty()) by_bin[commonness_bin(scores[t], options.bins)].push_back(t);

  Rng rng(options.seed);
  for (std::size_t b = 0; b < options.bins; ++b) {
    auto& tokens = by_bin[b];
    if (tokens.empty()) {
      result.skipped_bins.push_back(b);
      result.warnings.push_back("bin " + std::to_string(b) + " has no candidate tokens; skipped");
      continue;
    }
    rng.shuffle(std::span<TokenId>(tokens));
    std::vector<std::uint8_t> used(corpus.size(), 0);
    std::size_t taken = 0;
    for (TokenId t : tokens) {
      if (taken == options.per_bin) break;
      std::vector<std::pair<std::size_t, std::size_t>> free;
      for (const auto& c : carriers[t])
        if (!used[c.first]) free.push_back(c);
      if (free.empty()) continue;
      const auto [s, pos] = free[rng.below(free.size())];
      used[s] = 1;
      const Neighbor nn = nearest_token(t, table, policy.candidates);
      Substitution sub{pos, t, nn.id, nn.similarity, {}};
      const double shift = sequence_shift(corpus[s].token_ids, sub, table, Norm::l2);
      result.samples.push_back({t, scores[t], shift, b, corpus[s].id, pos, nn.id});
      ++taken;
    }
    if (taken < options.per_bin) {
      result.warnings.push_back("bin " + std::to_string(b) + " yielded " + std::to_string(taken) +
                                " of " + std::to_string(options.per_bin) + " samples");
    }
  }
  if (result.samples.size() < 3) {
    fail(ErrorCode::InvalidArgument, "commonness analysis produced " +
                                         std::to_string(result.samples.size()) +
                                         " samples; a regression needs at least 3");
  }
  std::vector<double> xs, ys;
  for (const auto& smp : result.samples) {
    xs.push_back(smp.commonness);
    ys.push_back(smp.shift);
  }
  result.fit = ols_fit(xs, ys);
  return result;
}

// ---------------------------------------------------------------------------

LayerStat summarize(std::span<const double> values) {
  LayerStat st;
  st.n = values.size();
  if (values.empty()) return st;
  if (values.size() == 1) {
    st.mean = st.lower = st.upper = values.front();
    return st;
  }
  const auto ci = mean_ci(values);
  st.mean = ci.mean;
  st.lower = ci.lower;
  st.upper = ci.upper;
  return st;
}

PropagationSummary layer_propagation(const Corpus& sample, const EmbeddingTable& table,
                                     const EncoderModel& model, const SubstitutionPolicy& policy,
                                     const PropagationOptions& options) {
  if (sample.empty()) fail(ErrorCode::InvalidArgument, "layer propagation of an empty sample");
  if (options.k == 0) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  if (table.width() != model.dims.width || table.size() != model.dims.vocab_size) {
    fail(ErrorCode::ShapeMismatch, "embedding table " + std::to_string(table.size()) + "x" +
                                       std::to_string(table.width()) + " does not match model " +
                                       std::to_string(model.dims.vocab_size) + "x" +
                                       std::to_string(model.dims.width));
  }
  const auto tokens = all_tokens(sample);
  const NeighborCache cache(table, policy.candidates, tokens, options.threads);
  const std::size_t depth = model.layers.size() + 2;

  std::vector<std::vector<PropagationRecord>> slots(sample.size());
  parallel_for(sample.size(), options.threads, [&](std::size_t s) {
    const auto& seq = sample[s];
    try {
      const auto subs =
          minimal_substitutions(seq.token_ids, table, options.k, options.norm, policy, &cache);
      const LayerTrace base = forward(seq.token_ids, model, options.forward);
      for (std::size_t r = 0; r < subs.size(); ++r) {
        std::vector<TokenId> perturbed = seq.token_ids;
        perturbed[subs[r].position] = subs[r].replacement;
        const LayerTrace other = forward(perturbed, model, options.forward);
        auto where = options.per_position ? std::optional<std::size_t>(subs[r].position) : std::nullopt;
        slots[s].push_back({seq.id, r + 1, subs[r], trace_distances(base, other, options.norm, where)});
      }
    } catch (const Error& e) {
      rethrow_for_sequence(e, seq.id);
    }
  });

  PropagationSummary out;
  for (std::size_t i = 0; i < depth; ++i) out.layer_labels.push_back(trace_label(i));
  for (auto& per_seq : slots)
    for (auto& rec : per_seq) out.records.push_back(std::move(rec));

  std::vector<std::vector<double>> column(depth);
  std::vector<std::vector<std::vector<double>>> rank_column(options.k, std::vector<std::vector<double>>(depth));
  for (const auto& rec : out.records) {
    for (std::size_t i = 0; i < depth; ++i) {
      column[i].push_back(rec.distances[i]);
      rank_column[rec.rank - 1][i].push_back(rec.distances[i]);
    }
  }
  for (std::size_t i = 0; i < depth; ++i) out.overall.push_back(summarize(column[i]));
  out.by_rank.resize(options.k);
  for (std::size_t r = 0; r < options.k; ++r)
    for (std::size_t i = 0; i < depth; ++i) out.by_rank[r].push_back(summarize(rank_column[r][i]));
  return out;
}

// ---------------------------------------------------------------------------

IdentifiabilityReport identifiability_probe(std::span<const TokenId> tokens,
                                            const EmbeddingTable& table, const EncoderModel& model,
                                            std::size_t m, const ForwardOptions& options,
                                            unsigned threads) {
  if (m == 0) fail(ErrorCode::InvalidArgument, "probe depth must be at least 1");
  if (table.width() != model.dims.width)
    fail(ErrorCode::ShapeMismatch, "embedding table width does not match model width");
  const LayerTrace trace = forward(tokens, model, options);
  const TokenMask everything = TokenMask::all(table.size());

  IdentifiabilityReport report;
  report.layers.resize(trace.size());
  parallel_for(trace.size(), threads, [&](std::size_t i) {
    auto& layer = report.layers[i];
    layer.label = trace_label(i);
    std::size_t hits = 0;
    const Matrix& states = trace.states[i];
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      PositionProbe probe;
      probe.input = tokens[j];
      if (vector_norm(states.row(j), Norm::l2) == 0.0) {
        probe.zero_norm = true;
      } else {
        probe.top = top_k_by_cosine(states.row(j), table, m, everything);
        if (!probe.top.empty() && probe.top.front().id == tokens[j]) ++hits;
      }
      layer.positions.push_back(std::move(probe));
    }
    layer.identifiability_rate = static_cast<double>(hits) / static_cast<double>(tokens.size());
  });
  return report;
}

}  // namespace epa

#include "epa/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epa/analysis.hpp"
#include "epa/corpus.hpp"
#include "epa/error.hpp"
#include "epa/format.hpp"
#include "epa/io.hpp"
#include "epa/parallel.hpp"
#include "epa/svg_chart.hpp"
#include "epa/synth.hpp"
#include "epa/tensor_bundle.hpp"

namespace epa {
namespace {

struct Inputs {
  Vocab vocab;
  TensorBundle bundle;
  Corpus corpus;
};

void require_path(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) fail(ErrorCode::InvalidArgument, std::string("missing required ") + flag);
}

Inputs load_inputs(const RunConfig& c) {
  c.validate();
  require_path(c.model, "--model");
  require_path(c.vocab, "--vocab");
  require_path(c.corpus, "--corpus");
  Inputs in;
  in.vocab = load_vocab(c.vocab, c.special_tokens);
  in.bundle = load_bundle(c.model);
  in.corpus = load_corpus(c.corpus, in.vocab.size());
  return in;
}

EmbeddingTable embedding_table(const Inputs& in) {
  Matrix e = embedding_from_bundle(in.bundle);
  if (e.rows() != in.vocab.size()) {
    fail(ErrorCode::ShapeMismatch, "tok_emb has " + std::to_string(e.rows()) +
                                       " rows but the vocabulary has " +
                                       std::to_string(in.vocab.size()) + " tokens");
  }
  return EmbeddingTable(std::move(e));
}

Corpus analysis_sample(const RunConfig& c, const Corpus& corpus) {
  if (corpus.empty()) fail(ErrorCode::InvalidArgument, "empty corpus sample");
  return sample_corpus(corpus, c.sample, c.shuffle_sample, c.seed);
}

std::string joined_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

std::string probe_token(const Vocab& vocab, const PositionProbe& p, std::size_t rank = 0) {
  if (p.zero_norm || rank >= p.top.size()) return "<zero>";
  return vocab.token(p.top[rank].id);
}

}  // namespace

const std::string& CommandOutput::file(const std::string& name) const {
  for (const auto& [n, contents] : files)
    if (n == name) return contents;
  fail(ErrorCode::InvalidArgument, "command produced no file '" + name + "'");
}

void write_outputs(const CommandOutput& output, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + dir.string() + "': " + ec.message());
  for (const auto& [name, contents] : output.files) write_file(dir / name, contents);
}

// ---------------------------------------------------------------------------

CommandOutput run_synth(const SynthOptions& options) {
  Vocab vocab;
  EncoderModel model;
  Corpus corpus;
  if (options.geometry == SynthGeometry::clustered) {
    ClusteredGeometry geometry;
    if (options.sequences) geometry.sequences = options.sequences;
    geometry.max_words = std::min<std::size_t>(geometry.max_words, options.dims.max_position - 2);
    geometry.min_words = std::min(geometry.min_words, geometry.max_words);
    auto fx = synthesize_clustered_fixture(options.seed, options.dims, geometry);
    vocab = std::move(fx.vocab);
    model = std::move(fx.model);
    corpus = std::move(fx.corpus);
  } else {
    auto sm = synthesize_model(options.seed, options.dims);
    vocab = std::move(sm.vocab);
    model = std::move(sm.model);
    if (options.dims.max_position < 3)
      fail(ErrorCode::InvalidArgument, "max_position must be at least 3 to hold [CLS] w [SEP]");
    const std::size_t max_words = std::min<std::size_t>(14, options.dims.max_position - 2);
    corpus = synthesize_uniform_corpus(options.seed, vocab, options.sequences ? options.sequences : 200,
                                       std::min<std::size_t>(4, max_words), max_words);
  }
  const TensorBundle bundle = model_to_bundle(model);
  const auto bytes = bundle.serialize();

  CommandOutput out;
  out.files.emplace_back("vocab.txt", vocab.serialize());
  out.files.emplace_back("model.epa", std::string(bytes.begin(), bytes.end()));
  out.files.emplace_back("corpus.jsonl", serialize_corpus(corpus));

  std::ostringstream s;
  const auto& d = options.dims;
  s << "seed " << options.seed << ", geometry "
    << (options.geometry == SynthGeometry::clustered ? "clustered" : "uniform") << "\n";
  s << "vocab " << d.vocab_size << ", width " << d.width << ", layers " << d.layers << ", heads "
    << d.heads << ", ffn " << d.ffn_width << ", max_position " << d.max_position << "\n";
  s << "corpus " << corpus.size() << " sequences\n";
  s << "tensors " << bundle.manifest().size() << "\n";
  for (const auto& e : bundle.manifest()) {
    s << "  " << e.name << " [";
    for (std::size_t i = 0; i < e.shape.size(); ++i) s << (i ? "," : "") << e.shape[i];
    s << "] @" << e.offset << "\n";
  }
  out.summary = s.str();
  return out;
}

// ---------------------------------------------------------------------------

CommandOutput run_frequency(const RunConfig& config) {
  const Inputs in = load_inputs(config);
  const EmbeddingTable table = embedding_table(in);
  const Corpus sample = analysis_sample(config, in.corpus);
  const auto policy = default_policy(in.vocab);
  FrequencyOptions opts;
  opts.k = config.k;
  opts.norms = config.norms;
  opts.threads = resolve_threads(config.threads);
  const auto profiles = frequency_analysis(sample, table, policy, opts);
  const auto ranked = rank_by_total(profiles);

  CommandOutput out;
  std::vector<std::string> header{"token_id", "token"};
  for (const auto& p : profiles) header.emplace_back(norm_name(p.norm));
  header.emplace_back("total");
  std::string csv = joined_row(header);
  for (TokenId id : ranked) {
    std::vector<std::string> row{std::to_string(id), csv_field(in.vocab.token(id))};
    std::uint64_t total = 0;
    for (const auto& p : profiles) {
      row.push_back(std::to_string(p.count(id)));
      total += p.count(id);
    }
    row.push_back(std::to_string(total));
    csv += joined_row(row);
  }
  out.files.emplace_back("frequency.csv", csv);

  ChartSpec chart;
  chart.kind = ChartKind::bar;
  chart.title = "Tokens most often among the top-" + std::to_string(config.k) +
                " minimal-shift substitutions";
  chart.x_label = "original token";
  chart.y_label = "count";
  const std::size_t shown = std::min<std::size_t>(20, ranked.size());
  for (std::size_t i = 0; i < shown; ++i) chart.categories.push_back(in.vocab.token(ranked[i]));
  for (const auto& p : profiles) {
    ChartSeries s;
    s.name = std::string(norm_name(p.norm));
    for (std::size_t i = 0; i < shown; ++i) s.y.push_back(static_cast<double>(p.count(ranked[i])));
    chart.series.push_back(std::move(s));
  }
  out.files.emplace_back("frequency.svg", emit_svg_chart(chart));

  std::vector<std::string> agree_header{"statistic", "norm"};
  for (const auto& p : profiles) agree_header.emplace_back(norm_name(p.norm));
  std::string agree = joined_row(agree_header);
  const std::string spearman_label = "spearman_top" + std::to_string(config.spearman_top);
  std::ostringstream summary;
  summary << "sequences " << sample.size() << ", k " << config.k << ", distinct tokens "
          << ranked.size() << "\n";
  if (profiles.size() >= 2) {
    std::optional<AgreementMatrix> m;
    try {
      m = norm_agreement(profiles, config.spearman_top);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Degenerate) throw;
      out.warnings.push_back(std::string("norm agreement undefined: ") + e.what());
    }
    for (int stat = 0; stat < 2; ++stat) {
      for (std::size_t a = 0; a < profiles.size(); ++a) {
        std::vector<std::string> row{stat == 0 ? "pearson" : spearman_label,
                                     std::string(norm_name(profiles[a].norm))};
        for (std::size_t b = 0; b < profiles.size(); ++b)
          row.push_back(m ? csv_number(stat == 0 ? m->pearson[a][b] : m->spearman[a][b]) : "nan");
        agree += joined_row(row);
      }
    }
    if (m) {
      for (std::size_t a = 0; a < profiles.size(); ++a)
        for (std::size_t b = a + 1; b < profiles.size(); ++b)
          summary << "pearson(" << norm_name(profiles[a].norm) << "," << norm_name(profiles[b].norm)
                  << ") " << csv_number(m->pearson[a][b]) << "  spearman "
                  << csv_number(m->spearman[a][b]) << "\n";
    }
  } else {
    out.warnings.push_back("norm agreement needs at least two norms; agreement.csv has no rows");
  }
  out.files.emplace_back("agreement.csv", agree);
  out.summary = summary.str();
  return out;
}

// ---------------------------------------------------------------------------

CommandOutput run_commonness(const RunConfig& config) {
  const Inputs in = load_inputs(config);
  const EmbeddingTable table = embedding_table(in);
  const FrequencyTable freq = config.freq ? load_frequency_json(*config.freq, in.vocab.size())
                                          : compute_frequency_table(in.corpus, in.vocab.size());
  CommonnessOptions opts;
  opts.bins = config.bins;
  opts.per_bin = config.per_bin;
  opts.seed = config.seed;
  const auto result = commonness_analysis(in.corpus, table, freq, default_policy(in.vocab), opts);
  const auto& fit = result.fit;

  double xmin = result.samples.front().commonness, xmax = xmin;
  for (const auto& s : result.samples) {
    xmin = std::min(xmin, s.commonness);
    xmax = std::max(xmax, s.commonness);
  }
  const double band_width = std::max(fit.band(xmin).width(), fit.band(xmax).width());

  CommandOutput out;
  std::string csv = "token_id,token,commonness,shift,bin,sequence_id,position,replacement\n";
  for (const auto& s : result.samples) {
    csv += joined_row({std::to_string(s.token), csv_field(in.vocab.token(s.token)),
                       csv_number(s.commonness), csv_number(s.shift), std::to_string(s.bin),
                       std::to_string(s.sequence_id), std::to_string(s.position),
                       csv_field(in.vocab.token(s.replacement))});
  }
  for (const auto& w : result.warnings) csv += "# warning: " + w + "\n";
  csv += "# fit: n=" + std::to_string(fit.n) + " slope=" + csv_number(fit.slope) +
         " intercept=" + csv_number(fit.intercept) + " slope_se=" + csv_number(fit.slope_se) +
         " slope_ci_lo=" + csv_number(fit.slope_ci.lower) + " slope_ci_hi=" +
         csv_number(fit.slope_ci.upper) + " residual_se=" + csv_number(fit.residual_se) +
         " band_width=" + csv_number(band_width) + "\n";
  out.files.emplace_back("commonness.csv", csv);

  ChartSpec chart;
  chart.kind = ChartKind::scatter;
  chart.title = "Embedding shift against token commonness";
  chart.x_label = "commonness";
  chart.y_label = "l2 shift";
  ChartSeries points;
  points.name = "samples";
  for (const auto& s : result.samples) {
    points.x.push_back(s.commonness);
    points.y.push_back(s.shift);
  }
  ChartSeries line;
  line.name = "OLS fit, 95% CI";
  line.mark = ChartSeries::Mark::line;
  constexpr int kSteps = 50;
  for (int i = 0; i <= kSteps; ++i) {
    const double x = xmin + (xmax - xmin) * i / kSteps;
    const auto b = fit.band(x);
    line.x.push_back(x);
    line.y.push_back(fit.predict(x));
    line.lower.push_back(b.lower);
    line.upper.push_back(b.upper);
  }
  chart.series.push_back(std::move(points));
  chart.series.push_back(std::move(line));
  out.files.emplace_back("commonness.svg", emit_svg_chart(chart));

  out.warnings = result.warnings;
  out.summary = "samples " + std::to_string(fit.n) + ", slope " + csv_number(fit.slope) +
                " [" + csv_number(fit.slope_ci.lower) + ", " + csv_number(fit.slope_ci.upper) +
                "], intercept " + csv_number(fit.intercept) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

CommandOutput run_layers(const RunConfig& config) {
  const Inputs in = load_inputs(config);
  const EncoderModel model = model_from_bundle(in.bundle, config.heads);
  if (model.dims.vocab_size != in.vocab.size())
    fail(ErrorCode::ShapeMismatch, "model vocabulary size does not match vocab file");
  const EmbeddingTable table(model.tok_emb);
  const Corpus sample = analysis_sample(config, in.corpus);
  PropagationOptions opts;
  opts.k = config.k;
  opts.norm = config.layer_norm;
  opts.per_position = config.per_position;
  opts.forward.disable_layernorm = config.disable_layernorm;
  opts.threads = resolve_threads(config.threads);
  const auto summary = layer_propagation(sample, table, model, default_policy(in.vocab), opts);

  CommandOutput out;
  std::string csv = "layer,rank,mean,ci_lo,ci_hi,n\n";
  auto emit = [&](const std::string& rank, const std::vector<LayerStat>& stats) {
    for (std::size_t i = 0; i < stats.size(); ++i) {
      if (stats[i].n == 0) continue;
      csv += joined_row({summary.layer_labels[i], rank, csv_number(stats[i].mean),
                         csv_number(stats[i].lower), csv_number(stats[i].upper),
                         std::to_string(stats[i].n)});
    }
  };
  emit("all", summary.overall);
  for (std::size_t r = 0; r < summary.by_rank.size(); ++r) emit(std::to_string(r + 1), summary.by_rank[r]);
  out.files.emplace_back("layers.csv", csv);

  ChartSpec chart;
  chart.kind = ChartKind::line;
  chart.title = "Propagation of the top-" + std::to_string(config.k) +
                " minimal substitutions across layers";
  chart.x_label = "hidden state (-1 = raw embedding lookup, 0 = embedding layer output)";
  chart.y_label = std::string(norm_name(config.layer_norm)) + " distance";
  for (std::size_t r = 0; r < summary.by_rank.size(); ++r) {
    ChartSeries s;
    s.name = "rank " + std::to_string(r + 1);
    for (std::size_t i = 0; i < summary.by_rank[r].size(); ++i) {
      const auto& st = summary.by_rank[r][i];
      if (st.n == 0) continue;
      s.x.push_back(static_cast<double>(i) - 1.0);
      s.y.push_back(st.mean);
      s.lower.push_back(st.lower);
      s.upper.push_back(st.upper);
    }
    if (!s.y.empty()) chart.series.push_back(std::move(s));
  }
  out.files.emplace_back("layers.svg", emit_svg_chart(chart));

  std::ostringstream s;
  s << "sequences " << sample.size() << ", records " << summary.records.size() << "\n";
  for (std::size_t i = 0; i < summary.overall.size(); ++i)
    s << summary.layer_labels[i] << " " << csv_number(summary.overall[i].mean) << "\n";
  out.summary = s.str();
  return out;
}

// ---------------------------------------------------------------------------

CommandOutput run_probe(const RunConfig& config, std::int64_t sequence_id,
                        std::optional<std::size_t> position) {
  const Inputs in = load_inputs(config);
  const EncoderModel model = model_from_bundle(in.bundle, config.heads);
  if (model.dims.vocab_size != in.vocab.size())
    fail(ErrorCode::ShapeMismatch, "model vocabulary size does not match vocab file");
  const EmbeddingTable table(model.tok_emb);
  const CorpusSequence& seq = find_sequence(in.corpus, sequence_id);
  if (position && *position >= seq.length()) {
    fail(ErrorCode::OutOfRange, "position " + std::to_string(*position) +
                                    " outside sequence of length " + std::to_string(seq.length()));
  }
  ForwardOptions fwd;
  fwd.disable_layernorm = config.disable_layernorm;
  const auto report = identifiability_probe(seq.token_ids, table, model, config.probe_depth, fwd,
                                            resolve_threads(config.threads));

  std::string txt = "sequence " + std::to_string(seq.id) + " (" + std::to_string(seq.length()) +
                    " tokens)\n";
  txt += "input:";
  for (TokenId t : seq.token_ids) txt += " " + in.vocab.token(t);
  txt += "\n\nclosest token per position\n";
  for (const auto& layer : report.layers) {
    txt += layer.label + ":";
    for (const auto& p : layer.positions) txt += " " + probe_token(in.vocab, p);
    txt += "\n";
  }
  if (position) {
    txt += "\ntop-" + std::to_string(config.probe_depth) + " closest tokens at position " +
           std::to_string(*position) + " (" + in.vocab.token(seq.token_ids[*position]) + ")\n";
    for (const auto& layer : report.layers) {
      const auto& p = layer.positions[*position];
      txt += "'";
      for (std::size_t r = 0; r < p.top.size(); ++r) txt += (r ? " " : "") + in.vocab.token(p.top[r].id);
      if (p.zero_norm) txt += "<zero>";
      txt += "', " + layer.label + "\n";
    }
  }
  txt += "\nidentifiability rate\n";
  for (const auto& layer : report.layers)
    txt += layer.label + " " + csv_number(layer.identifiability_rate) + "\n";

  std::string csv = "layer,position,rank,token_id,token,similarity\n";
  for (const auto& layer : report.layers) {
    for (std::size_t j = 0; j < layer.positions.size(); ++j) {
      const auto& p = layer.positions[j];
      for (std::size_t r = 0; r < p.top.size(); ++r) {
        csv += joined_row({layer.label, std::to_string(j), std::to_string(r + 1),
                           std::to_string(p.top[r].id), csv_field(in.vocab.token(p.top[r].id)),
                           csv_number(p.top[r].similarity)});
      }
    }
  }
  for (const auto& layer : report.layers)
    csv += "# identifiability," + layer.label + "," + csv_number(layer.identifiability_rate) + "\n";

  CommandOutput out;
  out.files.emplace_back("probe.txt", txt);
  out.files.emplace_back("probe.csv", csv);
  out.summary = txt;
  return out;
}

}  // namespace epa

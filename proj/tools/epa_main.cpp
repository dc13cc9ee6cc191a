// epa: minimal token perturbation analysis over an embedding table and a
// post-LN encoder.
//
//   epa synth      --seed 7 --out toy/
//   epa frequency  --model toy/model.epa --vocab toy/vocab.txt --corpus toy/corpus.jsonl --out r/
//   epa commonness ...
//   epa layers     ...
//   epa probe      ... --sequence 0 [--position 3]

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "epa/commands.hpp"
#include "epa/error.hpp"

namespace {

struct Flags {
  std::string model, vocab, corpus, freq, out = ".", norms, layer_norm, config;
  std::size_t sample = 0, k = 0, bins = 0, per_bin = 0, probe_depth = 0, spearman_top = 0;
  std::uint64_t seed = 0;
  std::size_t heads = 0;
  bool shuffle_sample = false;
  bool disable_layernorm = false;
  bool per_position = false;
};

epa::RunConfig build_config(CLI::App& app, const Flags& f) {
  epa::RunConfig c;
  if (!f.config.empty()) epa::apply_config_file(c, f.config);
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--model")) c.model = f.model;
  if (given("--vocab")) c.vocab = f.vocab;
  if (given("--corpus")) c.corpus = f.corpus;
  if (given("--freq")) c.freq = f.freq;
  if (given("--out")) c.out = f.out;
  if (given("--sample")) c.sample = f.sample;
  if (given("--shuffle-sample")) c.shuffle_sample = f.shuffle_sample;
  if (given("--k")) c.k = f.k;
  if (given("--norms")) c.norms = epa::parse_norm_list(f.norms);
  if (given("--spearman-top")) c.spearman_top = f.spearman_top;
  if (given("--bins")) c.bins = f.bins;
  if (given("--per-bin")) c.per_bin = f.per_bin;
  if (given("--seed")) c.seed = f.seed;
  if (given("--layer-norm")) c.layer_norm = epa::parse_norm(f.layer_norm);
  if (given("--disable-layernorm")) c.disable_layernorm = f.disable_layernorm;
  if (given("--per-position")) c.per_position = f.per_position;
  if (given("--probe-depth")) c.probe_depth = f.probe_depth;
  if (given("--heads")) c.heads = f.heads;
  c.validate();
  return c;
}

void finish(const epa::CommandOutput& out, const std::filesystem::path& dir) {
  epa::write_outputs(out, dir);
  for (const auto& w : out.warnings) std::cerr << "epa: warning: " << w << "\n";
  std::cout << out.summary;
  for (const auto& [name, contents] : out.files) std::cout << "wrote " << (dir / name).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal token perturbation analysis for transformer encoders"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--model", f.model, "EPA1 tensor bundle");
  app.add_option("--vocab", f.vocab, "vocabulary, one token per line");
  app.add_option("--corpus", f.corpus, "pre-tokenized corpus (JSON lines)");
  app.add_option("--freq", f.freq, "token frequency override (JSON object)");
  app.add_option("--sample", f.sample, "number of sequences analysed (default 500)");
  app.add_flag("--shuffle-sample", f.shuffle_sample, "seeded random sample instead of the first N");
  app.add_option("--k", f.k, "minimal substitutions kept per sequence (default 5)");
  app.add_option("--norms", f.norms, "comma-separated norms (default l1,l2,linf)");
  app.add_option("--spearman-top", f.spearman_top, "tokens kept for Spearman agreement (default 20)");
  app.add_option("--bins", f.bins, "commonness bins (default 10)");
  app.add_option("--per-bin", f.per_bin, "sentences per commonness bin (default 50)");
  app.add_option("--seed", f.seed, "random seed (default 0)");
  app.add_option("--out", f.out, "output directory (default .)");
  app.add_option("--layer-norm", f.layer_norm, "norm for layer ranking and distance (default l2)");
  app.add_flag("--disable-layernorm", f.disable_layernorm, "replace every LayerNorm by the identity");
  app.add_flag("--per-position", f.per_position, "layer distance at the perturbed position only");
  app.add_option("--probe-depth", f.probe_depth, "closest tokens listed per position (default 5)");
  app.add_option("--heads", f.heads, "attention heads (synth size, or override for bundles)");
  app.add_option("--config", f.config, "JSON config file; flags take precedence");

  auto* synth = app.add_subcommand("synth", "write a deterministic toy model, vocabulary and corpus");
  epa::ModelDims dims;
  std::string geometry = "uniform";
  std::size_t sequences = 0;
  synth->add_option("--vocab-size", dims.vocab_size, "vocabulary size incl. 5 special tokens (default 100)");
  synth->add_option("--dim", dims.width, "model width d (default 16)");
  synth->add_option("--layers", dims.layers, "encoder layers (default 4)");
  synth->add_option("--ffn", dims.ffn_width, "FFN width (default 32)");
  synth->add_option("--max-position", dims.max_position, "positional table size (default 64)");
  synth->add_option("--geometry", geometry, "uniform | clustered")->check(CLI::IsMember({"uniform", "clustered"}));
  synth->add_option("--sequences", sequences, "corpus sequences to write");

  auto* frequency = app.add_subcommand("frequency", "minimal-shift token counts per norm and their agreement");
  auto* commonness = app.add_subcommand("commonness", "shift against token commonness with OLS fit");
  auto* layers = app.add_subcommand("layers", "propagation of minimal substitutions across layers");
  auto* probe = app.add_subcommand("probe", "closest vocabulary token for every hidden state");
  std::int64_t sequence_id = 0;
  std::size_t position = 0;
  probe->add_option("--sequence", sequence_id, "corpus sequence id")->required();
  auto* position_opt = probe->add_option("--position", position, "also list top tokens for this position");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      epa::SynthOptions opts;
      opts.seed = f.seed;
      opts.dims = dims;
      if (app.count("--heads")) opts.dims.heads = f.heads;
      opts.geometry = geometry == "clustered" ? epa::SynthGeometry::clustered : epa::SynthGeometry::uniform;
      opts.sequences = sequences;
      finish(epa::run_synth(opts), f.out);
      return 0;
    }
    const epa::RunConfig config = build_config(app, f);
    if (*frequency) finish(epa::run_frequency(config), config.out);
    else if (*commonness) finish(epa::run_commonness(config), config.out);
    else if (*layers) finish(epa::run_layers(config), config.out);
    else if (*probe)
      finish(epa::run_probe(config, sequence_id,
                            position_opt->count() ? std::optional<std::size_t>(position) : std::nullopt),
             config.out);
  } catch (const epa::Error& e) {
    std::cerr << "epa: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "epa: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

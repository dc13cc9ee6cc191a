#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epa/embedding_space.hpp"
#include "epa/encoder_model.hpp"
#include "epa/random.hpp"
#include "epa/synth.hpp"
#include "oracles.hpp"

namespace fixture {

inline oracle::Rows to_rows(const epa::Matrix& m) {
  oracle::Rows out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

inline oracle::Model to_oracle(const epa::EncoderModel& m) {
  oracle::Model o;
  o.tok = to_rows(m.tok_emb);
  o.pos = to_rows(m.pos_emb);
  o.g0 = m.emb_ln.gamma;
  o.be0 = m.emb_ln.beta;
  o.heads = m.dims.heads;
  o.eps = m.ln_eps;
  for (const auto& L : m.layers) {
    oracle::Layer l;
    l.wq = to_rows(L.wq);
    l.wk = to_rows(L.wk);
    l.wv = to_rows(L.wv);
    l.wo = to_rows(L.wo);
    l.w1 = to_rows(L.w1);
    l.w2 = to_rows(L.w2);
    l.bq = L.bq;
    l.bk = L.bk;
    l.bv = L.bv;
    l.bo = L.bo;
    l.b1 = L.b1;
    l.b2 = L.b2;
    l.g1 = L.ln1.gamma;
    l.be1 = L.ln1.beta;
    l.g2 = L.ln2.gamma;
    l.be2 = L.ln2.beta;
    o.layers.push_back(l);
  }
  return o;
}

inline epa::Matrix gaussian_matrix(epa::Rng& rng, std::size_t rows, std::size_t cols,
                                   double scale = 1.0) {
  epa::Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

/// Random draw with the same sampling rules as the synthesizer, plus random
/// LayerNorm gains so that the affine terms are exercised.
inline epa::EncoderModel random_model(std::uint64_t seed, const epa::ModelDims& dims) {
  auto synth = epa::synthesize_model(seed, dims);
  epa::Rng rng(seed + 991);
  auto jitter = [&](epa::LayerNormParams& p) {
    for (double& g : p.gamma) g = 0.5 + rng.unit();
    for (double& b : p.beta) b = rng.uniform(-0.2, 0.2);
  };
  jitter(synth.model.emb_ln);
  for (auto& L : synth.model.layers) {
    jitter(L.ln1);
    jitter(L.ln2);
  }
  return synth.model;
}

/// Tokens drawn from the whole vocabulary, optionally wrapped in [CLS]/[SEP]
/// (ids 2 and 3 under the default special list).
inline std::vector<epa::TokenId> random_sequence(epa::Rng& rng, std::size_t vocab,
                                                 std::size_t length, bool wrap) {
  std::vector<epa::TokenId> out;
  if (wrap) out.push_back(2);
  while (out.size() < length - (wrap ? 1 : 0))
    out.push_back(static_cast<epa::TokenId>(rng.below(vocab)));
  if (wrap) out.push_back(3);
  return out;
}

inline epa::Vocab numbered_vocab(std::size_t n) {
  std::vector<std::string> tokens(epa::default_special_tokens());
  while (tokens.size() < n) tokens.push_back("w" + std::to_string(tokens.size()));
  return epa::Vocab(tokens);
}

}  // namespace fixture

#include "epa/encoder.hpp"

#include <cmath>

#include "epa/error.hpp"

namespace epa {
namespace {

void apply_layer_norm(Matrix& m, const LayerNormParams& ln, double eps, bool disabled) {
  if (disabled) return;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Vector out = layer_norm(m.row(r), ln.gamma, ln.beta, eps);
    std::copy(out.begin(), out.end(), m.row(r).begin());
  }
}

Matrix affine(const Matrix& x, const Matrix& w, const Vector& b) {
  Matrix y = matmul(x, w);
  add_bias(y, b);
  return y;
}

Matrix head_slice(const Matrix& m, std::size_t head, std::size_t head_dim) {
  Matrix out(m.rows(), head_dim);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < head_dim; ++c) out(r, c) = m(r, head * head_dim + c);
  return out;
}

/// Multi-head attention output before the residual add. When `scores` is
/// non-null it receives the per-head softmax matrices.
Matrix self_attention(const Matrix& h, const EncoderLayer& layer, std::size_t heads,
                      std::vector<Matrix>* scores) {
  const std::size_t d = h.cols();
  const std::size_t head_dim = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const Matrix q = affine(h, layer.wq, layer.bq);
  const Matrix k = affine(h, layer.wk, layer.bk);
  const Matrix v = affine(h, layer.wv, layer.bv);

  Matrix context(h.rows(), d);
  for (std::size_t hd = 0; hd < heads; ++hd) {
    Matrix s = matmul_transposed(head_slice(q, hd, head_dim), head_slice(k, hd, head_dim));
    for (double& x : s.values()) x *= scale;
    softmax_rows_inplace(s);
    const Matrix ctx = matmul(s, head_slice(v, hd, head_dim));
    for (std::size_t r = 0; r < ctx.rows(); ++r)
      for (std::size_t c = 0; c < head_dim; ++c) context(r, hd * head_dim + c) = ctx(r, c);
    if (scores) scores->push_back(std::move(s));
  }
  return affine(context, layer.wo, layer.bo);
}

Matrix embed_input(std::span<const TokenId> tokens, const EncoderModel& model,
                   const ForwardOptions& options, Matrix* raw) {
  if (tokens.empty()) fail(ErrorCode::InvalidArgument, "cannot encode an empty sequence");
  if (tokens.size() > model.dims.max_position) {
    fail(ErrorCode::OutOfRange, "sequence length " + std::to_string(tokens.size()) +
                                    " exceeds max_position " +
                                    std::to_string(model.dims.max_position));
  }
  const std::size_t d = model.dims.width;
  Matrix lookup(tokens.size(), d);
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    if (tokens[j] >= model.dims.vocab_size)
      fail(ErrorCode::OutOfRange, "token id " + std::to_string(tokens[j]) + " outside vocabulary");
    const auto src = model.tok_emb.row(tokens[j]);
    std::copy(src.begin(), src.end(), lookup.row(j).begin());
  }
  Matrix h = lookup;
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    auto row = h.row(j);
    const auto pos = model.pos_emb.row(j);
    for (std::size_t c = 0; c < d; ++c) row[c] += pos[c];
  }
  apply_layer_norm(h, model.emb_ln, model.ln_eps, options.disable_layernorm);
  if (raw) *raw = std::move(lookup);
  return h;
}

Matrix encode_layer(const Matrix& h, const EncoderLayer& layer, const EncoderModel& model,
                    const ForwardOptions& options, std::vector<Matrix>* scores) {
  Matrix a = h;
  add_inplace(a, self_attention(h, layer, model.dims.heads, scores));
  apply_layer_norm(a, layer.ln1, model.ln_eps, options.disable_layernorm);

  Matrix inner = affine(a, layer.w1, layer.b1);
  gelu_inplace(inner);
  Matrix out = a;
  add_inplace(out, affine(inner, layer.w2, layer.b2));
  apply_layer_norm(out, layer.ln2, model.ln_eps, options.disable_layernorm);
  return out;
}

}  // namespace

std::string trace_label(std::size_t index) {
  return index == 0 ? std::string("raw") : "h" + std::to_string(index - 1);
}

LayerTrace forward(std::span<const TokenId> tokens, const EncoderModel& model,
                   const ForwardOptions& options) {
  LayerTrace trace;
  trace.states.reserve(model.layers.size() + 2);
  Matrix raw;
  Matrix h = embed_input(tokens, model, options, &raw);
  trace.states.push_back(std::move(raw));
  trace.states.push_back(h);
  for (const auto& layer : model.layers) {
    h = encode_layer(h, layer, model, options, nullptr);
    trace.states.push_back(h);
  }
  return trace;
}

std::vector<Matrix> attention_weights(std::span<const TokenId> tokens, const EncoderModel& model,
                                      std::size_t layer, const ForwardOptions& options) {
  if (layer >= model.layers.size()) {
    fail(ErrorCode::OutOfRange, "layer " + std::to_string(layer) + " outside model with " +
                                    std::to_string(model.layers.size()) + " layers");
  }
  Matrix h = embed_input(tokens, model, options, nullptr);
  for (std::size_t i = 0; i < layer; ++i) h = encode_layer(h, model.layers[i], model, options, nullptr);
  std::vector<Matrix> scores;
  encode_layer(h, model.layers[layer], model, options, &scores);
  return scores;
}

std::vector<double> trace_distances(const LayerTrace& a, const LayerTrace& b, Norm norm,
                                    std::optional<std::size_t> position) {
  if (a.size() != b.size()) fail(ErrorCode::ShapeMismatch, "traces of different depth");
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Matrix diff = subtract(a.states[i], b.states[i]);
    if (position) {
      if (*position >= diff.rows())
        fail(ErrorCode::OutOfRange, "position outside traced sequence");
      out.push_back(vector_norm(diff.row(*position), norm));
    } else {
      out.push_back(vector_norm(diff.values(), norm));
    }
  }
  return out;
}

}  // namespace epa

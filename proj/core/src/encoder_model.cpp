#include "epa/encoder_model.hpp"

#include <cmath>

#include "epa/error.hpp"

namespace epa {
namespace {

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    fail(ErrorCode::ShapeMismatch, name + " is " + std::to_string(m.rows()) + "x" +
                                       std::to_string(m.cols()) + ", expected " +
                                       std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void expect_len(const Vector& v, std::size_t n, const std::string& name) {
  if (v.size() != n) {
    fail(ErrorCode::ShapeMismatch, name + " has length " + std::to_string(v.size()) +
                                       ", expected " + std::to_string(n));
  }
}

Matrix read_matrix(const TensorBundle& b, const std::string& name, std::size_t rows,
                   std::size_t cols) {
  const std::vector<std::uint64_t> shape{rows, cols};
  return Matrix(rows, cols, b.read_f64(name, shape));
}

Vector read_vector(const TensorBundle& b, const std::string& name, std::size_t n) {
  const std::vector<std::uint64_t> shape{n};
  return b.read_f64(name, shape);
}

void put(TensorBundle& b, const std::string& name, const Matrix& m) {
  b.add(name, {m.rows(), m.cols()}, m.values());
}

void put(TensorBundle& b, const std::string& name, const Vector& v) {
  b.add(name, {v.size()}, std::span<const double>(v));
}

}  // namespace

void ModelDims::validate() const {
  if (vocab_size < 2) fail(ErrorCode::InvalidArgument, "vocab_size must be at least 2");
  if (width == 0) fail(ErrorCode::InvalidArgument, "width d must be positive");
  if (layers == 0) fail(ErrorCode::InvalidArgument, "n_layers must be at least 1");
  if (heads == 0) fail(ErrorCode::InvalidArgument, "n_heads must be positive");
  if (width % heads != 0) {
    fail(ErrorCode::InvalidArgument, "width d=" + std::to_string(width) +
                                         " is not divisible by n_heads=" + std::to_string(heads));
  }
  if (ffn_width == 0) fail(ErrorCode::InvalidArgument, "d_ff must be positive");
  if (max_position == 0) fail(ErrorCode::InvalidArgument, "max_position must be positive");
}

std::string layer_tensor_name(std::size_t layer, const std::string& suffix) {
  return "L" + std::to_string(layer) + "." + suffix;
}

void EncoderModel::validate() const {
  dims.validate();
  const auto d = dims.width;
  if (layers.size() != dims.layers) fail(ErrorCode::ShapeMismatch, "layer count mismatch");
  expect_shape(tok_emb, dims.vocab_size, d, "tok_emb");
  expect_shape(pos_emb, dims.max_position, d, "pos_emb");
  expect_len(emb_ln.gamma, d, "emb_ln.gamma");
  expect_len(emb_ln.beta, d, "emb_ln.beta");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    auto n = [&](const char* s) { return layer_tensor_name(i, s); };
    expect_shape(l.wq, d, d, n("Wq"));
    expect_shape(l.wk, d, d, n("Wk"));
    expect_shape(l.wv, d, d, n("Wv"));
    expect_shape(l.wo, d, d, n("Wo"));
    expect_len(l.bq, d, n("bq"));
    expect_len(l.bk, d, n("bk"));
    expect_len(l.bv, d, n("bv"));
    expect_len(l.bo, d, n("bo"));
    expect_shape(l.w1, d, dims.ffn_width, n("W1"));
    expect_len(l.b1, dims.ffn_width, n("b1"));
    expect_shape(l.w2, dims.ffn_width, d, n("W2"));
    expect_len(l.b2, d, n("b2"));
    expect_len(l.ln1.gamma, d, n("ln1.gamma"));
    expect_len(l.ln1.beta, d, n("ln1.beta"));
    expect_len(l.ln2.gamma, d, n("ln2.gamma"));
    expect_len(l.ln2.beta, d, n("ln2.beta"));
  }
  if (!(ln_eps >= 0.0) || !std::isfinite(ln_eps))
    fail(ErrorCode::InvalidArgument, "layer norm eps must be finite and non-negative");
}

Matrix embedding_from_bundle(const TensorBundle& bundle) {
  const auto& e = bundle.entry("tok_emb");
  if (e.shape.size() != 2) fail(ErrorCode::ShapeMismatch, "tok_emb must be two-dimensional");
  return read_matrix(bundle, "tok_emb", e.shape[0], e.shape[1]);
}

EncoderModel model_from_bundle(const TensorBundle& bundle, std::optional<std::size_t> heads) {
  EncoderModel m;
  m.tok_emb = embedding_from_bundle(bundle);
  m.dims.vocab_size = m.tok_emb.rows();
  m.dims.width = m.tok_emb.cols();
  const auto d = m.dims.width;

  const auto& pos = bundle.entry("pos_emb");
  if (pos.shape.size() != 2) fail(ErrorCode::ShapeMismatch, "pos_emb must be two-dimensional");
  m.dims.max_position = pos.shape[0];
  m.pos_emb = read_matrix(bundle, "pos_emb", pos.shape[0], d);
  m.emb_ln.gamma = read_vector(bundle, "emb_ln.gamma", d);
  m.emb_ln.beta = read_vector(bundle, "emb_ln.beta", d);

  if (heads) {
    m.dims.heads = *heads;
  } else if (bundle.contains(kHeadsTensor)) {
    const auto v = bundle.read_f32(kHeadsTensor);
    if (v.size() != 1 || !(v[0] >= 1.0f) || v[0] != std::floor(v[0]))
      fail(ErrorCode::Format, "config.heads must hold one positive integer");
    m.dims.heads = static_cast<std::size_t>(v[0]);
  } else {
    fail(ErrorCode::InvalidArgument,
         "bundle has no config.heads tensor; pass the head count explicitly");
  }

  std::size_t n_layers = 0;
  while (bundle.contains(layer_tensor_name(n_layers, "Wq"))) ++n_layers;
  m.dims.layers = n_layers;
  if (n_layers == 0) fail(ErrorCode::Format, "bundle has no encoder layers (missing L0.Wq)");
  const auto& w1 = bundle.entry(layer_tensor_name(0, "W1"));
  if (w1.shape.size() != 2) fail(ErrorCode::ShapeMismatch, "L0.W1 must be two-dimensional");
  m.dims.ffn_width = w1.shape[1];
  const auto dff = m.dims.ffn_width;

  for (std::size_t i = 0; i < n_layers; ++i) {
    auto n = [&](const char* s) { return layer_tensor_name(i, s); };
    EncoderLayer l;
    l.wq = read_matrix(bundle, n("Wq"), d, d);
    l.wk = read_matrix(bundle, n("Wk"), d, d);
    l.wv = read_matrix(bundle, n("Wv"), d, d);
    l.wo = read_matrix(bundle, n("Wo"), d, d);
    l.bq = read_vector(bundle, n("bq"), d);
    l.bk = read_vector(bundle, n("bk"), d);
    l.bv = read_vector(bundle, n("bv"), d);
    l.bo = read_vector(bundle, n("bo"), d);
    l.w1 = read_matrix(bundle, n("W1"), d, dff);
    l.b1 = read_vector(bundle, n("b1"), dff);
    l.w2 = read_matrix(bundle, n("W2"), dff, d);
    l.b2 = read_vector(bundle, n("b2"), d);
    l.ln1.gamma = read_vector(bundle, n("ln1.gamma"), d);
    l.ln1.beta = read_vector(bundle, n("ln1.beta"), d);
    l.ln2.gamma = read_vector(bundle, n("ln2.gamma"), d);
    l.ln2.beta = read_vector(bundle, n("ln2.beta"), d);
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

TensorBundle model_to_bundle(const EncoderModel& model) {
  model.validate();
  TensorBundle b;
  put(b, "tok_emb", model.tok_emb);
  put(b, "pos_emb", model.pos_emb);
  put(b, "emb_ln.gamma", model.emb_ln.gamma);
  put(b, "emb_ln.beta", model.emb_ln.beta);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    auto n = [&](const char* s) { return layer_tensor_name(i, s); };
    put(b, n("Wq"), l.wq);
    put(b, n("Wk"), l.wk);
    put(b, n("Wv"), l.wv);
    put(b, n("Wo"), l.wo);
    put(b, n("bq"), l.bq);
    put(b, n("bk"), l.bk);
    put(b, n("bv"), l.bv);
    put(b, n("bo"), l.bo);
    put(b, n("W1"), l.w1);
    put(b, n("b1"), l.b1);
    put(b, n("W2"), l.w2);
    put(b, n("b2"), l.b2);
    put(b, n("ln1.gamma"), l.ln1.gamma);
    put(b, n("ln1.beta"), l.ln1.beta);
    put(b, n("ln2.gamma"), l.ln2.gamma);
    put(b, n("ln2.beta"), l.ln2.beta);
  }
  const float heads = static_cast<float>(model.dims.heads);
  b.add(kHeadsTensor, {1}, std::span<const float>(&heads, 1));
  return b;
}

}  // namespace epa

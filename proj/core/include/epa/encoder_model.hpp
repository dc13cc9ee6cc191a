#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "epa/linalg.hpp"
#include "epa/tensor_bundle.hpp"

namespace epa {

struct ModelDims {
  std::size_t vocab_size = 100;
  std::size_t width = 16;
  std::size_t layers = 4;
  std::size_t heads = 2;
  std::size_t ffn_width = 32;
  std::size_t max_position = 64;

  /// Throws InvalidArgument naming the violated constraint.
  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct LayerNormParams {
  Vector gamma;
  Vector beta;
};

/// Weights use the row-vector convention y = x * W + b, so W has shape
/// [in, out]. Exporters of framework checkpoints that store Linear weights as
/// [out, in] must transpose.
struct EncoderLayer {
  Matrix wq, wk, wv, wo;  // [d, d]
  Vector bq, bk, bv, bo;  // [d]
  Matrix w1;              // [d, d_ff]
  Vector b1;              // [d_ff]
  Matrix w2;              // [d_ff, d]
  Vector b2;              // [d]
  LayerNormParams ln1;    // after attention residual
  LayerNormParams ln2;    // after FFN residual
};

/// Post-LN BERT-style encoder without segment embeddings (exporters fold the
/// constant segment-0 row into pos_emb).
struct EncoderModel {
  ModelDims dims;
  Matrix tok_emb;  // [|V|, d]
  Matrix pos_emb;  // [max_position, d]
  LayerNormParams emb_ln;
  std::vector<EncoderLayer> layers;
  double ln_eps = 1e-12;

  /// Checks every tensor against `dims`.
  void validate() const;
};

std::string layer_tensor_name(std::size_t layer, const std::string& suffix);

/// Name of the optional [1] tensor carrying the head count, which tensor
/// shapes alone do not determine.
inline constexpr const char* kHeadsTensor = "config.heads";

/// Infers dims from tensor shapes. `heads` overrides the bundle's
/// config.heads entry; one of the two must be present.
EncoderModel model_from_bundle(const TensorBundle& bundle,
                               std::optional<std::size_t> heads = std::nullopt);
/// Writes every required tensor plus config.heads.
TensorBundle model_to_bundle(const EncoderModel& model);
/// Just the token embedding table, for commands that never run the encoder.
Matrix embedding_from_bundle(const TensorBundle& bundle);

}  // namespace epa

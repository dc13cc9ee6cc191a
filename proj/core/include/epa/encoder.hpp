#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epa/encoder_model.hpp"
#include "epa/linalg.hpp"
#include "epa/vocab.hpp"

namespace epa {

struct ForwardOptions {
  /// Replace every LayerNorm with the identity.
  bool disable_layernorm = false;
};

/// Hidden states for one sequence: index 0 is the raw lookup E(x), index 1 is
/// h_0 (embedding sum after LayerNorm), index i + 1 is h_i for i = 1..L.
struct LayerTrace {
  std::vector<Matrix> states;

  std::size_t size() const noexcept { return states.size(); }
  const Matrix& raw() const { return states.front(); }
  /// h_i for i in [0, L].
  const Matrix& hidden(std::size_t i) const { return states.at(i + 1); }
};

/// "raw", "h0", "h1", ... for trace index `index`.
std::string trace_label(std::size_t index);

/// Post-LN encoder:
///   h_0 = LN(tok_emb[x] + pos_emb[0..n))
///   a   = LN1(h + MHA(h)),  h' = LN2(a + W2 gelu(W1 a + b1) + b2)
/// with H-head scaled dot-product attention (scale 1/sqrt(d/H)), no mask.
LayerTrace forward(std::span<const TokenId> tokens, const EncoderModel& model,
                   const ForwardOptions& options = {});

/// The H softmaxed score matrices (n x n) used by `forward` at `layer`.
std::vector<Matrix> attention_weights(std::span<const TokenId> tokens, const EncoderModel& model,
                                      std::size_t layer, const ForwardOptions& options = {});

/// Per trace index, the `norm` of the flattened difference a - b, or of the
/// single row `position` when given.
std::vector<double> trace_distances(const LayerTrace& a, const LayerTrace& b, Norm norm,
                                    std::optional<std::size_t> position = std::nullopt);

}  // namespace epa

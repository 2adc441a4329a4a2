#pragma once

// Model backend boundary.  The engine talks to any model through this
// interface: a vocabulary, next-token logits, and text-to-visual attention
// for a prompt.  compute_cross_attention is provided for backends that
// expose hidden states rather than attention directly.

#include "mrfd/common.hpp"
#include "mrfd/saliency.hpp"

namespace mrfd {

/// Per-token hidden vectors, one row per token.
struct HiddenStates {
  Matrix values;

  std::size_t count() const { return values.rows; }
  std::size_t dim() const { return values.cols; }

  void validate() const {
    if (values.rows == 0 || values.cols == 0)
      throw ShapeError("hidden states must be nonempty");
    values.require_finite("hidden states");
  }
};

/// Query/key projections sharing an input dim and a common head dim.
struct ProjectionPair {
  Matrix wq;
  Matrix wk;

  std::size_t head_dim() const { return wq.cols; }

  void validate() const {
    if (wq.rows == 0 || wq.cols == 0 || wk.rows == 0 || wk.cols == 0)
      throw ShapeError("projections must be nonempty");
    if (wq.cols != wk.cols)
      throw ShapeError("projections must share a head dimension");
    wq.require_finite("wq");
    wk.require_finite("wk");
  }
};

namespace detail {

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      for (std::size_t j = 0; j < b.cols; ++j)
        out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

}  // namespace detail

/// Scaled dot-product attention of text states over visual states:
/// softmax((Ht Wq)(Hv Wk)^T / sqrt(head_dim)), rows normalized per text
/// token.
inline AttnMatrix compute_cross_attention(const HiddenStates& text,
                                          const HiddenStates& visual,
                                          const ProjectionPair& proj) {
  text.validate();
  visual.validate();
  proj.validate();
  if (text.dim() != proj.wq.rows)
    throw ShapeError("text hidden dim does not match wq");
  if (visual.dim() != proj.wk.rows)
    throw ShapeError("visual hidden dim does not match wk");

  const Matrix q = detail::matmul(text.values, proj.wq);
  const Matrix k = detail::matmul(visual.values, proj.wk);
  const double scale = 1.0 / std::sqrt(static_cast<double>(proj.head_dim()));

  AttnMatrix attn;
  attn.text_len = q.rows;
  attn.visual_len = k.rows;
  attn.values.resize(q.rows * k.rows);
  std::vector<double> row(k.rows);
  for (std::size_t t = 0; t < q.rows; ++t) {
    for (std::size_t v = 0; v < k.rows; ++v) {
      double dot = 0.0;
      for (std::size_t d = 0; d < proj.head_dim(); ++d)
        dot += q.at(t, d) * k.at(v, d);
      row[v] = dot * scale;
    }
    const std::vector<double> p = stable_softmax(row);
    for (std::size_t v = 0; v < k.rows; ++v) attn.at(t, v) = p[v];
  }
  attn.validate();
  return attn;
}

/// Abstract model backend.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const VocabSpec& vocab() const = 0;

  /// Next-token logits for a visual input, prompt, and generated prefix.
  /// All tokens must lie in [0, vocab size); unknown sources raise
  /// LookupError; out-of-grid crops raise ContractViolation.
  virtual LogitVector next_token_logits(const VisualInput& v,
                                        const TokenSeq& prompt,
                                        const TokenSeq& prefix) = 0;

  /// Text-to-visual attention for a prompt over the full input's patch
  /// grid.  The input must be uncropped.
  virtual AttnMatrix attention_for_query(const VisualInput& v,
                                         const TokenSeq& prompt) = 0;
};

}  // namespace mrfd

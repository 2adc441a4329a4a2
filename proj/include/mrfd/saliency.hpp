#pragma once

// Saliency extraction: collapse a text-to-visual attention matrix into a
// per-patch relevance vector and reshape it onto the square patch grid.

#include <ostream>

#include "mrfd/common.hpp"

namespace mrfd {

/// Row-stochastic attention weights: one row per text token, one column per
/// visual patch.
struct AttnMatrix {
  std::size_t text_len = 0;
  std::size_t visual_len = 0;
  std::vector<double> values;  // row-major, text_len x visual_len

  double at(std::size_t t, std::size_t v) const {
    return values[t * visual_len + v];
  }
  double& at(std::size_t t, std::size_t v) {
    return values[t * visual_len + v];
  }

  void validate(double row_sum_tol = 1e-9) const {
    if (text_len == 0 || visual_len == 0)
      throw ShapeError("attention matrix must be nonempty");
    if (values.size() != text_len * visual_len)
      throw ShapeError("attention matrix storage does not match dimensions");
    for (std::size_t t = 0; t < text_len; ++t) {
      double sum = 0.0;
      for (std::size_t v = 0; v < visual_len; ++v) {
        const double a = at(t, v);
        if (!std::isfinite(a) || a < 0.0)
          throw DegenerateInput("attention entries must be finite and >= 0");
        sum += a;
      }
      if (std::abs(sum - 1.0) > row_sum_tol)
        throw DegenerateInput("attention row does not sum to 1");
    }
  }
};

/// Nonnegative saliency values on a side x side patch grid.
struct SpatialAttentionMap {
  std::size_t side = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t r, std::size_t c) const { return values[r * side + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * side + c]; }

  void validate() const {
    if (side == 0) throw ShapeError("attention map side must be positive");
    if (values.size() != side * side)
      throw ShapeError("attention map storage does not match side");
    for (double v : values)
      if (!std::isfinite(v) || v < 0.0)
        throw DegenerateInput("attention map entries must be finite and >= 0");
  }
};

/// Mean attention each visual patch receives across text positions.
inline std::vector<double> aggregate_attention(const AttnMatrix& attn) {
  attn.validate();
  std::vector<double> out(attn.visual_len, 0.0);
  for (std::size_t t = 0; t < attn.text_len; ++t)
    for (std::size_t v = 0; v < attn.visual_len; ++v) out[v] += attn.at(t, v);
  const double inv = 1.0 / static_cast<double>(attn.text_len);
  for (double& v : out) v *= inv;
  return out;
}

/// Row-major reshape of a patch vector onto its square grid.  The vector
/// length must be a perfect square; no padding is applied.
inline SpatialAttentionMap reshape_to_grid(const std::vector<double>& patch) {
  if (patch.empty()) throw ShapeError("patch vector must be nonempty");
  SpatialAttentionMap map;
  map.side = exact_sqrt(patch.size(), "patch vector");
  map.values = patch;
  map.validate();
  return map;
}

/// Debug dump: one CSV row per grid row.
inline void dump_csv(const SpatialAttentionMap& map, std::ostream& os) {
  for (std::size_t r = 0; r < map.side; ++r) {
    for (std::size_t c = 0; c < map.side; ++c) {
      if (c) os << ',';
      os << map.at(r, c);
    }
    os << '\n';
  }
}

}  // namespace mrfd

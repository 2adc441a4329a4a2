#pragma once

// Salient-region selection: integral image over a saliency map and greedy
// top-k search over all admissible boxes with an overlap cap.

#include "mrfd/common.hpp"
#include "mrfd/saliency.hpp"

namespace mrfd {

/// Summed-area table.  sums has (side+1)^2 entries; sums[r][c] is the total
/// of all map entries strictly above row r and left of column c.
struct IntegralImage {
  std::size_t side = 0;
  std::vector<double> sums;

  double at(std::size_t r, std::size_t c) const {
    return sums[r * (side + 1) + c];
  }
};

inline IntegralImage build_integral(const SpatialAttentionMap& map) {
  map.validate();
  IntegralImage ii;
  ii.side = map.side;
  const std::size_t n = map.side + 1;
  ii.sums.assign(n * n, 0.0);
  for (std::size_t r = 0; r < map.side; ++r)
    for (std::size_t c = 0; c < map.side; ++c)
      ii.sums[(r + 1) * n + (c + 1)] = map.at(r, c) + ii.sums[r * n + (c + 1)] +
                                       ii.sums[(r + 1) * n + c] -
                                       ii.sums[r * n + c];
  return ii;
}

/// Sum of map entries inside a box, in O(1) from the integral image.
inline double box_sum(const IntegralImage& ii, const RegionBox& box) {
  box.validate(static_cast<int>(ii.side));
  const std::size_t t = static_cast<std::size_t>(box.top);
  const std::size_t l = static_cast<std::size_t>(box.left);
  const std::size_t b = t + static_cast<std::size_t>(box.height);
  const std::size_t r = l + static_cast<std::size_t>(box.width);
  return ii.at(b, r) - ii.at(t, r) - ii.at(b, l) + ii.at(t, l);
}

struct RegionSelectConfig {
  int k = 3;
  double iou_max = 0.40;
  double area_min_frac = 0.10;
  double area_max_frac = 0.50;

  void validate() const {
    if (k < 0) throw ContractViolation("region count k must be >= 0");
    if (!(iou_max >= 0.0 && iou_max <= 1.0))
      throw ContractViolation("iou_max must lie in [0, 1]");
    if (!(area_min_frac > 0.0 && area_max_frac <= 1.0 &&
          area_min_frac <= area_max_frac))
      throw ContractViolation("area fractions must satisfy 0 < min <= max <= 1");
  }
};

namespace detail {

/// Strict ordering used by the greedy picker: larger sum first, then smaller
/// area, then top, left, height, width ascending.
inline bool region_better(double sum_a, const RegionBox& a, double sum_b,
                          const RegionBox& b) {
  if (sum_a != sum_b) return sum_a > sum_b;
  if (a.area() != b.area()) return a.area() < b.area();
  if (a.top != b.top) return a.top < b.top;
  if (a.left != b.left) return a.left < b.left;
  if (a.height != b.height) return a.height < b.height;
  return a.width < b.width;
}

}  // namespace detail

/// Greedy top-k boxes by saliency mass.  Each round scans every box whose
/// area lies within the configured fraction of the grid and keeps the best
/// one whose IoU with every previous pick stays at or below iou_max.
/// Returns fewer than k boxes when the grid admits no further candidate.
inline std::vector<RegionBox> select_topk_regions(
    const SpatialAttentionMap& map, const RegionSelectConfig& cfg) {
  cfg.validate();
  const IntegralImage ii = build_integral(map);
  const int side = static_cast<int>(map.side);
  const double grid_area = static_cast<double>(side) * side;
  const int area_lo = std::max(
      1, static_cast<int>(std::ceil(cfg.area_min_frac * grid_area - 1e-9)));
  const int area_hi = static_cast<int>(
      std::floor(cfg.area_max_frac * grid_area + 1e-9));

  std::vector<RegionBox> picked;
  picked.reserve(static_cast<std::size_t>(cfg.k));
  for (int round = 0; round < cfg.k; ++round) {
    bool found = false;
    RegionBox best{};
    double best_sum = 0.0;
    for (int h = 1; h <= side; ++h) {
      for (int w = 1; w <= side; ++w) {
        const int area = h * w;
        if (area < area_lo || area > area_hi) continue;
        for (int t = 0; t + h <= side; ++t) {
          for (int l = 0; l + w <= side; ++l) {
            const RegionBox box{t, l, h, w};
            bool admissible = true;
            for (const RegionBox& p : picked)
              if (iou(box, p) > cfg.iou_max) {
                admissible = false;
                break;
              }
            if (!admissible) continue;
            const double s = box_sum(ii, box);
            if (!found || detail::region_better(s, box, best_sum, best)) {
              best = box;
              best_sum = s;
              found = true;
            }
          }
        }
      }
    }
    if (!found) break;
    picked.push_back(best);
  }
  return picked;
}

/// Crop the full input to each selected box, preserving selection order.
inline std::vector<VisualInput> to_visual_inputs(
    const VisualInput& full, const std::vector<RegionBox>& boxes) {
  if (!full.is_full())
    throw ContractViolation("region crops require the full input");
  std::vector<VisualInput> out;
  out.reserve(boxes.size());
  for (const RegionBox& b : boxes) out.push_back(full.crop_to(b));
  return out;
}

}  // namespace mrfd

#pragma once

// Core types shared across the fusion-decoding engine: error hierarchy,
// token and matrix primitives, region geometry, and deterministic RNG
// helpers.  Everything downstream includes this header.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrfd {

// ---------------------------------------------------------------- errors

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
struct ContractViolation : Error {
  using Error::Error;
};

/// A dimension or layout did not match what the operation requires.
struct ShapeError : Error {
  using Error::Error;
};

/// A key (source id, token name) was not found.
struct LookupError : Error {
  using Error::Error;
};

/// Input is structurally valid but numerically unusable (NaN, empty, zero mass).
struct DegenerateInput : Error {
  using Error::Error;
};

/// A multi-stage run could not produce a usable result.
struct PipelineError : Error {
  using Error::Error;
};

/// Bad configuration: file contents, CLI arguments, schema mismatches.
struct ConfigError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------- tokens

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;
using LogitVector = std::vector<double>;
using TokenDistribution = std::vector<double>;

/// Vocabulary descriptor for a backend: size, the end-of-sequence token,
/// and the separator token used when a prompt embeds a prior response.
struct VocabSpec {
  std::int32_t size = 0;
  Token eos_token = 0;
  Token sep_token = 1;
  std::vector<std::string> token_names;  // empty means unnamed

  void validate() const {
    if (size < 2) throw ContractViolation("vocab size must be at least 2");
    if (eos_token < 0 || eos_token >= size)
      throw ContractViolation("eos token out of range");
    if (sep_token < 0 || sep_token >= size)
      throw ContractViolation("sep token out of range");
    if (sep_token == eos_token)
      throw ContractViolation("sep token must differ from eos token");
    if (!token_names.empty() &&
        token_names.size() != static_cast<std::size_t>(size))
      throw ContractViolation("token_names length must equal vocab size");
  }

  void check_tokens(std::span<const Token> toks, const char* what) const {
    for (Token t : toks)
      if (t < 0 || t >= size)
        throw ContractViolation(std::string(what) + ": token out of range");
  }
};

// ---------------------------------------------------------------- matrix

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  void require_finite(const char* what) const {
    for (double v : data)
      if (!std::isfinite(v))
        throw DegenerateInput(std::string(what) + ": non-finite entry");
  }
};

// ---------------------------------------------------------------- geometry

/// Axis-aligned box on a square patch grid, in patch units.
struct RegionBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  int area() const { return height * width; }

  bool operator==(const RegionBox&) const = default;

  void validate(int side) const {
    if (height <= 0 || width <= 0)
      throw ContractViolation("region box must have positive extent");
    if (top < 0 || left < 0 || top + height > side || left + width > side)
      throw ContractViolation("region box exceeds grid bounds");
  }
};

/// Intersection-over-union of two boxes; 0 when either has zero area.
inline double iou(const RegionBox& a, const RegionBox& b) {
  const double area_a = static_cast<double>(a.area());
  const double area_b = static_cast<double>(b.area());
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const int t = std::max(a.top, b.top);
  const int l = std::max(a.left, b.left);
  const int bo = std::min(a.top + a.height, b.top + b.height);
  const int r = std::min(a.left + a.width, b.left + b.width);
  const double inter =
      static_cast<double>(std::max(0, bo - t)) * std::max(0, r - l);
  return inter / (area_a + area_b - inter);
}

/// An image handle: the full source or a rectangular crop of it.
struct VisualInput {
  std::string source_id;
  std::optional<RegionBox> crop;
  std::shared_ptr<const VisualInput> parent;

  bool is_full() const { return !crop.has_value(); }

  static VisualInput full(std::string id) {
    VisualInput v;
    v.source_id = std::move(id);
    return v;
  }

  VisualInput crop_to(const RegionBox& box) const {
    if (!is_full())
      throw ContractViolation("cannot crop an already cropped input");
    VisualInput v;
    v.source_id = source_id;
    v.crop = box;
    v.parent = std::make_shared<VisualInput>(*this);
    return v;
  }
};

// ------------------------------------------------------------------- rng

/// SplitMix64 step; used both as a stream generator and a mixing hash.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Deterministically derive a child seed from a base seed and a stream tag.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t s = base ^ (0x9E3779B97F4A7C15ull * (tag + 1));
  splitmix64(s);
  return splitmix64(s);
}

/// Hash accumulator for content-addressed noise.
inline std::uint64_t hash_u64(std::uint64_t h, std::uint64_t x) {
  std::uint64_t s = h ^ x;
  return splitmix64(s);
}

inline std::uint64_t hash_str(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) h = hash_u64(h, c);
  return hash_u64(h, 0x5FULL ^ s.size());
}

/// Deterministic RNG.  Extraction of doubles is hand-rolled so results do
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 eng_;
};

/// Map a hash value to a uniform double in [-0.5, 0.5).
inline double unit_jitter(std::uint64_t h) {
  std::uint64_t s = h;
  return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53 - 0.5;
}

// -------------------------------------------------------------- numerics

/// Max-shifted softmax with optional temperature; safe for extreme logits.
inline std::vector<double> stable_softmax(std::span<const double> logits,
                                          double temperature = 1.0) {
  if (logits.empty()) throw DegenerateInput("softmax of empty vector");
  if (!(temperature > 0.0))
    throw ContractViolation("softmax temperature must be positive");
  for (double v : logits)
    if (!std::isfinite(v)) throw DegenerateInput("softmax: non-finite logit");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - mx) / temperature);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

/// Shannon entropy in nats; 0 ln 0 taken as 0.
inline double entropy_nats(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

/// Inverse-CDF draw from an unnormalized nonnegative mass vector.
inline std::size_t sample_index(std::span<const double> mass, double u01) {
  double total = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0)) throw DegenerateInput("sample_index: negative mass");
    total += m;
  }
  if (!(total > 0.0)) throw DegenerateInput("sample_index: zero total mass");
  double r = u01 * total;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    r -= mass[i];
    if (r < 0.0) return i;
  }
  return mass.size() - 1;
}

/// Exact integer square root check: returns side when n == side*side.
inline std::size_t exact_sqrt(std::size_t n, const char* what) {
  const auto side =
      static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  for (std::size_t s : {side, side > 0 ? side - 1 : side, side + 1})
    if (s * s == n) return s;
  throw ShapeError(std::string(what) + ": length is not a perfect square");
}

}  // namespace mrfd

#pragma once

// Deterministic synthetic backend.  A scenario script fixes, per visual
// input, which answer the model "believes": logits are built from scripted
// answer sequences, an optional deviance channel that pulls crops toward a
// different answer, an ambient distractor token, and seeded hash noise.
// Identical calls always produce bitwise-identical logits, and crops with
// zero deviance are indistinguishable from the full image.

#include "mrfd/backend.hpp"

namespace mrfd {

/// Gaussian saliency bump on the patch grid.
struct SaliencyBlob {
  double row = 0.0;
  double col = 0.0;
  double spread = 1.0;
  double amplitude = 1.0;
};

/// Scripted answer for one visual input (absent box means the full image).
struct AnswerEntry {
  std::optional<RegionBox> box;
  TokenSeq tokens;
  double gain = 1.0;
};

/// How strongly a crop is pulled toward its own scripted answer.
struct DevianceEntry {
  std::optional<RegionBox> box;
  double strength = 0.0;
};

/// Ambient token that competes with scripted answers at a fixed score.
struct DistractorSpec {
  Token token = 0;
  double score = 0.0;
};

struct ScenarioSpec {
  std::string source_id;
  VocabSpec vocab;
  int grid_side = 8;
  std::vector<SaliencyBlob> blobs;
  std::vector<AnswerEntry> answers;
  std::vector<DevianceEntry> deviance;
  std::optional<DistractorSpec> distractor;
  double fp_boost = 1.0;
  std::uint64_t noise_seed = 0;
  double noise_amplitude = 0.0;
  double attention_jitter = 0.0;
  TokenSeq query;

  void validate() const {
    if (source_id.empty()) throw ContractViolation("scenario: empty source_id");
    vocab.validate();
    if (grid_side < 1) throw ContractViolation("scenario: grid_side must be >= 1");
    for (const SaliencyBlob& b : blobs) {
      if (!(b.spread > 0.0)) throw ContractViolation("blob spread must be > 0");
      if (!(b.amplitude >= 0.0) || !std::isfinite(b.amplitude))
        throw ContractViolation("blob amplitude must be finite and >= 0");
      if (!std::isfinite(b.row) || !std::isfinite(b.col))
        throw ContractViolation("blob center must be finite");
    }
    int full_entries = 0;
    for (const AnswerEntry& a : answers) {
      if (a.box) a.box->validate(grid_side);
      else ++full_entries;
      if (a.tokens.empty()) throw ContractViolation("answer tokens empty");
      vocab.check_tokens(a.tokens, "answer tokens");
      if (!(a.gain > 0.0)) throw ContractViolation("answer gain must be > 0");
    }
    if (full_entries != 1)
      throw ContractViolation("scenario needs exactly one full-image answer");
    for (const DevianceEntry& d : deviance) {
      if (d.box) d.box->validate(grid_side);
      if (!(d.strength >= 0.0) || !std::isfinite(d.strength))
        throw ContractViolation("deviance strength must be finite and >= 0");
    }
    if (distractor) {
      vocab.check_tokens(std::span(&distractor->token, 1), "distractor");
      if (!std::isfinite(distractor->score))
        throw ContractViolation("distractor score must be finite");
    }
    if (!(fp_boost > 0.0)) throw ContractViolation("fp_boost must be > 0");
    if (!(noise_amplitude >= 0.0))
      throw ContractViolation("noise_amplitude must be >= 0");
    if (!(attention_jitter >= 0.0))
      throw ContractViolation("attention_jitter must be >= 0");
    vocab.check_tokens(query, "query");
  }
};

class SyntheticBackend final : public Backend {
 public:
  /// Score applied to the scripted answer token at each step.
  static constexpr double kBaseGain = 6.0;
  /// Score applied to a deviant crop's own answer, scaled by strength.
  static constexpr double kPerturbGain = 60.0;
  /// Score pinning eos once the prefix already contains eos.
  static constexpr double kEosGain = 30.0;
  /// Saliency floor keeping every patch strictly positive.
  static constexpr double kAttnFloor = 1e-3;

  explicit SyntheticBackend(ScenarioSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (const AnswerEntry& a : spec_.answers)
      if (!a.box) full_answer_ = &a;
  }

  const ScenarioSpec& scenario() const { return spec_; }

  const VocabSpec& vocab() const override { return spec_.vocab; }

  LogitVector next_token_logits(const VisualInput& v, const TokenSeq& prompt,
                                const TokenSeq& prefix) override {
    check_source(v);
    spec_.vocab.check_tokens(prompt, "prompt");
    spec_.vocab.check_tokens(prefix, "prefix");
    if (v.crop) v.crop->validate(spec_.grid_side);

    const std::size_t vsize = static_cast<std::size_t>(spec_.vocab.size);
    LogitVector logits(vsize, 0.0);
    const Token eos = spec_.vocab.eos_token;

    const bool absorbed =
        std::find(prefix.begin(), prefix.end(), eos) != prefix.end();
    if (absorbed) {
      logits[static_cast<std::size_t>(eos)] += kEosGain;
    } else {
      const bool boosted =
          std::find(prompt.begin(), prompt.end(), spec_.vocab.sep_token) !=
          prompt.end();
      const double boost = boosted ? spec_.fp_boost : 1.0;
      const std::size_t step = prefix.size();

      // Shared base signal: every input follows the full-image answer.
      logits[next_of(*full_answer_, step)] += kBaseGain * full_answer_->gain * boost;

      // Deviance channel: pull this input toward its own scripted answer.
      const double dev = deviance_for(v.crop);
      if (dev > 0.0) {
        const AnswerEntry& own = answer_for(v.crop);
        logits[next_of(own, step)] += kPerturbGain * dev * own.gain * boost;
      }
    }

    if (spec_.distractor)
      logits[static_cast<std::size_t>(spec_.distractor->token)] +=
          spec_.distractor->score;

    if (spec_.noise_amplitude > 0.0) {
      // Noise depends on prompt and prefix but never on the crop, so
      // zero-deviance crops stay identical to the full image.
      std::uint64_t h = hash_str(spec_.noise_seed, spec_.source_id);
      for (Token t : prompt) h = hash_u64(h, 0x700 + static_cast<std::uint64_t>(t));
      for (Token t : prefix) h = hash_u64(h, 0x900 + static_cast<std::uint64_t>(t));
      for (std::size_t i = 0; i < vsize; ++i)
        logits[i] += spec_.noise_amplitude * unit_jitter(hash_u64(h, 0x1000 + i));
    }
    return logits;
  }

  AttnMatrix attention_for_query(const VisualInput& v,
                                 const TokenSeq& prompt) override {
    check_source(v);
    if (!v.is_full())
      throw ContractViolation("attention is defined over the full input");
    spec_.vocab.check_tokens(prompt, "prompt");

    const std::size_t side = static_cast<std::size_t>(spec_.grid_side);
    const std::size_t n = std::max<std::size_t>(1, prompt.size());
    AttnMatrix attn;
    attn.text_len = n;
    attn.visual_len = side * side;
    attn.values.resize(n * side * side);

    std::vector<double> field(side * side);
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) {
        double f = kAttnFloor;
        for (const SaliencyBlob& b : spec_.blobs) {
          const double dr = static_cast<double>(r) - b.row;
          const double dc = static_cast<double>(c) - b.col;
          f += b.amplitude *
               std::exp(-(dr * dr + dc * dc) / (2.0 * b.spread * b.spread));
        }
        field[r * side + c] = f;
      }

    const std::uint64_t hbase = hash_str(spec_.noise_seed ^ 0xA77Full, spec_.source_id);
    for (std::size_t t = 0; t < n; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < side * side; ++i) {
        double f = field[i];
        if (spec_.attention_jitter > 0.0) {
          const double u =
              unit_jitter(hash_u64(hash_u64(hbase, t), i)) + 0.5;  // [0, 1)
          f *= 1.0 + spec_.attention_jitter * u;
        }
        attn.values[t * side * side + i] = f;
        sum += f;
      }
      for (std::size_t i = 0; i < side * side; ++i)
        attn.values[t * side * side + i] /= sum;
    }
    attn.validate();
    return attn;
  }

 private:
  ScenarioSpec spec_;
  const AnswerEntry* full_answer_ = nullptr;

  void check_source(const VisualInput& v) const {
    const std::string& id = v.parent ? v.parent->source_id : v.source_id;
    if (id != spec_.source_id || v.source_id != spec_.source_id)
      throw LookupError("unknown source id: " + v.source_id);
  }

  std::size_t next_of(const AnswerEntry& a, std::size_t step) const {
    // Past the end of the scripted answer the script asks for eos.
    return step < a.tokens.size()
               ? static_cast<std::size_t>(a.tokens[step])
               : static_cast<std::size_t>(spec_.vocab.eos_token);
  }

  const AnswerEntry& answer_for(const std::optional<RegionBox>& box) const {
    if (box)
      for (const AnswerEntry& a : spec_.answers)
        if (a.box && *a.box == *box) return a;
    return *full_answer_;
  }

  double deviance_for(const std::optional<RegionBox>& box) const {
    for (const DevianceEntry& d : spec_.deviance) {
      if (!d.box && !box) return d.strength;
      if (d.box && box && *d.box == *box) return d.strength;
    }
    return 0.0;
  }
};

}  // namespace mrfd

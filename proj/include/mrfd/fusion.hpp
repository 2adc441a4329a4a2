#pragma once

// Two-stage fusion decoding.  Stage 1 decodes the full image and each
// salient region independently and scores branch agreement by JSD against
// the branch mean.  Stage 2 decodes once more, mixing per-branch logits
// under consistency weights that stay fixed across steps.

#include <future>

#include "mrfd/backend.hpp"
#include "mrfd/consistency.hpp"
#include "mrfd/regions.hpp"

namespace mrfd {

struct DecodeConfig {
  int k_regions = 3;
  double gamma = 0.02;
  double stage1_temperature = 0.7;
  double stage2_temperature = 0.1;
  int max_new_tokens_stage1 = 64;
  int max_new_tokens_stage2 = 64;
  std::uint64_t rng_seed = 42;
  RegionSelectConfig region_cfg;
  bool disable_region_selection = false;
  bool disable_consistency_weighting = false;
  bool disable_fusion_prompt = false;
  RepresentativeMode representative_mode = RepresentativeMode::mean_of_logits;
  double top_p = 1.0;
  bool parallel = false;

  void validate() const {
    if (k_regions < 0) throw ContractViolation("k_regions must be >= 0");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw ContractViolation("gamma must be a positive finite real");
    if (!(stage1_temperature > 0.0) || !(stage2_temperature > 0.0))
      throw ContractViolation("temperatures must be positive");
    if (max_new_tokens_stage1 < 1 || max_new_tokens_stage2 < 1)
      throw ContractViolation("max_new_tokens must be >= 1");
    if (!(top_p > 0.0 && top_p <= 1.0))
      throw ContractViolation("top_p must lie in (0, 1]");
    region_cfg.validate();
  }
};

/// One decoding branch: a visual input plus everything stage 1 learned
/// about it.  weight is the share this branch contributes in stage 2.
struct RegionContext {
  VisualInput input;
  std::optional<RegionBox> box;  // absent for the full-image branch
  TokenSeq fusion_prompt;
  TokenSeq initial_response;
  std::vector<LogitVector> initial_step_logits;
  double jsd_score = 0.0;
  double weight = 0.0;
};

struct StepRecord {
  int step = 0;
  Token token = 0;
  std::vector<Token> branch_argmax;
  std::vector<double> weights;
  double entropy = 0.0;
};

struct GenerationTrace {
  DecodeConfig config;
  std::vector<RegionBox> regions;
  std::vector<double> region_scores;
  std::vector<std::size_t> dropped_branches;
  std::vector<TokenSeq> branch_responses;  // stage-1, surviving branch order
  std::vector<double> jsd_scores;          // aligned with branch_responses
  std::vector<double> weights;
  std::vector<StepRecord> steps;
};

struct DecodeResult {
  TokenSeq output;
  GenerationTrace trace;
};

struct InitialGeneration {
  TokenSeq response;
  std::vector<LogitVector> step_logits;  // raw logits per emitted token
};

namespace detail {

/// Nucleus filter: keep the smallest probability mass >= top_p, renormalize.
inline std::vector<double> apply_top_p(const std::vector<double>& probs,
                                       double top_p) {
  if (top_p >= 1.0) return probs;
  std::vector<std::size_t> order(probs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  std::vector<double> out(probs.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i : order) {
    out[i] = probs[i];
    mass += probs[i];
    if (mass >= top_p) break;
  }
  for (double& p : out) p /= mass;
  return out;
}

inline Token draw_token(const LogitVector& logits, double temperature,
                        double top_p, Rng& rng) {
  const std::vector<double> probs =
      apply_top_p(stable_softmax(logits, temperature), top_p);
  return static_cast<Token>(sample_index(probs, rng.next_unit()));
}

struct FusedStep {
  LogitVector fused;
  std::vector<Token> branch_argmax;
};

inline FusedStep fused_step_detail(Backend& backend,
                                   const std::vector<RegionContext>& contexts,
                                   const TokenSeq& prefix, bool parallel) {
  if (contexts.empty()) throw DegenerateInput("fused_step: no contexts");
  double wsum = 0.0;
  for (const RegionContext& c : contexts) wsum += c.weight;
  if (std::abs(wsum - 1.0) > 1e-9)
    throw ContractViolation("fused_step: weights must sum to 1");

  std::vector<LogitVector> branch(contexts.size());
  if (parallel) {
    std::vector<std::future<LogitVector>> futs;
    futs.reserve(contexts.size());
    for (const RegionContext& c : contexts)
      futs.push_back(std::async(std::launch::async, [&backend, &c, &prefix] {
        return backend.next_token_logits(c.input, c.fusion_prompt, prefix);
      }));
    for (std::size_t k = 0; k < futs.size(); ++k) branch[k] = futs[k].get();
  } else {
    for (std::size_t k = 0; k < contexts.size(); ++k)
      branch[k] = backend.next_token_logits(contexts[k].input,
                                            contexts[k].fusion_prompt, prefix);
  }

  const std::size_t vsize = branch.front().size();
  FusedStep out;
  out.fused.assign(vsize, 0.0);
  out.branch_argmax.reserve(contexts.size());
  // Fixed accumulation order keeps parallel and sequential runs bitwise equal.
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    if (branch[k].size() != vsize)
      throw ShapeError("fused_step: branch logit sizes differ");
    for (std::size_t i = 0; i < vsize; ++i)
      out.fused[i] += contexts[k].weight * branch[k][i];
    out.branch_argmax.push_back(static_cast<Token>(
        std::max_element(branch[k].begin(), branch[k].end()) -
        branch[k].begin()));
  }
  return out;
}

}  // namespace detail

/// Sample the full stage-1 continuation for one branch.  Raw logits are
/// recorded per step before sampling; generation stops at eos or the cap.
inline InitialGeneration generate_initial(Backend& backend,
                                          const VisualInput& input,
                                          const TokenSeq& prompt,
                                          double temperature, int max_new_tokens,
                                          Rng& rng, double top_p = 1.0) {
  if (max_new_tokens < 1)
    throw ContractViolation("generate_initial: max_new_tokens must be >= 1");
  const Token eos = backend.vocab().eos_token;
  InitialGeneration gen;
  for (int step = 0; step < max_new_tokens; ++step) {
    LogitVector logits = backend.next_token_logits(input, prompt, gen.response);
    const Token tok = detail::draw_token(logits, temperature, top_p, rng);
    gen.step_logits.push_back(std::move(logits));
    gen.response.push_back(tok);
    if (tok == eos) break;
  }
  return gen;
}

/// Stage-2 prompt for a branch: the query, then the separator, then the
/// branch's own stage-1 response.  With the fusion prompt disabled the
/// query is used unchanged.
inline TokenSeq build_fusion_prompt(const TokenSeq& query, Token sep_token,
                                    const TokenSeq& initial_response,
                                    bool fusion_prompt_enabled) {
  if (!fusion_prompt_enabled) return query;
  TokenSeq out = query;
  out.push_back(sep_token);
  out.insert(out.end(), initial_response.begin(), initial_response.end());
  return out;
}

/// Consistency-weighted mix of per-branch next-token logits.
inline LogitVector fused_step(Backend& backend,
                              const std::vector<RegionContext>& contexts,
                              const TokenSeq& prefix, bool parallel = false) {
  return detail::fused_step_detail(backend, contexts, prefix, parallel).fused;
}

/// Draw the next token from fused logits under temperature and nucleus cap.
inline Token sample_fused(const LogitVector& fused, double temperature,
                          Rng& rng, double top_p = 1.0) {
  return detail::draw_token(fused, temperature, top_p, rng);
}

/// Full two-stage decode of one query against one image.
inline DecodeResult run_mrfd(Backend& backend, const VisualInput& image,
                             const TokenSeq& query, const DecodeConfig& cfg) {
  cfg.validate();
  if (!image.is_full())
    throw ContractViolation("run_mrfd expects the full image");
  const VocabSpec& vocab = backend.vocab();
  vocab.validate();
  vocab.check_tokens(query, "query");

  GenerationTrace trace;
  trace.config = cfg;

  // Salient regions from attention over the query.
  std::vector<RegionBox> boxes;
  if (!cfg.disable_region_selection && cfg.k_regions > 0) {
    const AttnMatrix attn = backend.attention_for_query(image, query);
    const SpatialAttentionMap map =
        reshape_to_grid(aggregate_attention(attn));
    RegionSelectConfig rc = cfg.region_cfg;
    rc.k = cfg.k_regions;
    boxes = select_topk_regions(map, rc);
    const IntegralImage ii = build_integral(map);
    for (const RegionBox& b : boxes)
      trace.region_scores.push_back(box_sum(ii, b));
    trace.regions = boxes;
  }

  // Branch inputs: the full image first, then each region crop.
  std::vector<VisualInput> inputs;
  inputs.push_back(image);
  for (const VisualInput& v : to_visual_inputs(image, boxes))
    inputs.push_back(v);

  // Stage 1: independent continuations, one seeded stream per branch so
  // concurrent and sequential schedules draw identical samples.
  std::vector<std::optional<InitialGeneration>> initial(inputs.size());
  auto run_branch = [&](std::size_t b) -> std::optional<InitialGeneration> {
    Rng rng(mix_seed(cfg.rng_seed, 0x5100000000ull + b));
    try {
      InitialGeneration g =
          generate_initial(backend, inputs[b], query, cfg.stage1_temperature,
                           cfg.max_new_tokens_stage1, rng, cfg.top_p);
      if (g.response.empty()) return std::nullopt;
      return g;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  if (cfg.parallel) {
    std::vector<std::future<std::optional<InitialGeneration>>> futs;
    futs.reserve(inputs.size());
    for (std::size_t b = 0; b < inputs.size(); ++b)
      futs.push_back(std::async(std::launch::async, run_branch, b));
    for (std::size_t b = 0; b < inputs.size(); ++b) initial[b] = futs[b].get();
  } else {
    for (std::size_t b = 0; b < inputs.size(); ++b) initial[b] = run_branch(b);
  }

  std::vector<RegionContext> contexts;
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    if (!initial[b]) {
      trace.dropped_branches.push_back(b);
      continue;
    }
    RegionContext ctx;
    ctx.input = inputs[b];
    if (b > 0) ctx.box = boxes[b - 1];
    ctx.initial_response = initial[b]->response;
    ctx.initial_step_logits = std::move(initial[b]->step_logits);
    ctx.fusion_prompt =
        build_fusion_prompt(query, vocab.sep_token, ctx.initial_response,
                            !cfg.disable_fusion_prompt);
    contexts.push_back(std::move(ctx));
  }
  if (contexts.empty())
    throw PipelineError("all decoding branches failed in stage 1");

  // Consistency scores over surviving branches.
  std::vector<TokenDistribution> dists;
  dists.reserve(contexts.size());
  for (const RegionContext& c : contexts)
    dists.push_back(representative_distribution(c.initial_step_logits,
                                                cfg.representative_mode));
  const std::vector<double> scores = consistency_scores(dists);
  std::vector<double> weights;
  if (cfg.disable_consistency_weighting) {
    weights.assign(contexts.size(), 1.0 / static_cast<double>(contexts.size()));
  } else {
    weights = weights_from_scores(scores, cfg.gamma);
  }
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    contexts[k].jsd_score = scores[k];
    contexts[k].weight = weights[k];
    trace.branch_responses.push_back(contexts[k].initial_response);
  }
  trace.jsd_scores = scores;
  trace.weights = weights;

  // Stage 2: fused decoding under static weights.
  Rng rng2(mix_seed(cfg.rng_seed, 0x5200000000ull));
  DecodeResult result;
  for (int step = 0; step < cfg.max_new_tokens_stage2; ++step) {
    const detail::FusedStep fs = detail::fused_step_detail(
        backend, contexts, result.output, cfg.parallel);
    const std::vector<double> probs =
        stable_softmax(fs.fused, cfg.stage2_temperature);
    const Token tok = sample_fused(fs.fused, cfg.stage2_temperature, rng2,
                                   cfg.top_p);
    StepRecord rec;
    rec.step = step;
    rec.token = tok;
    rec.branch_argmax = fs.branch_argmax;
    rec.weights = weights;
    rec.entropy = entropy_nats(probs);
    trace.steps.push_back(std::move(rec));
    result.output.push_back(tok);
    if (tok == vocab.eos_token) break;
  }
  result.trace = std::move(trace);
  return result;
}

}  // namespace mrfd

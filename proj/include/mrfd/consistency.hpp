#pragma once

// Consistency weighting: representative distributions per branch, pairwise
// Jensen-Shannon divergence against the branch mean, and the softmax that
// turns divergences into fusion weights.

#include "mrfd/common.hpp"

namespace mrfd {

inline void validate_distribution(std::span<const double> p,
                                  const char* what,
                                  double sum_tol = 1e-9) {
  if (p.empty()) throw DegenerateInput(std::string(what) + ": empty");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0)
      throw DegenerateInput(std::string(what) +
                            ": entries must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > sum_tol)
    throw DegenerateInput(std::string(what) + ": does not sum to 1");
}

/// How a branch's per-step logits collapse into one distribution.
enum class RepresentativeMode {
  mean_of_logits,  // softmax of the stepwise mean logit vector
  mean_of_probs,   // mean of the stepwise softmax distributions
};

/// Collapse one branch's stepwise logits into a single token distribution.
/// All steps must share the same vocabulary size.
inline TokenDistribution representative_distribution(
    const std::vector<LogitVector>& step_logits,
    RepresentativeMode mode = RepresentativeMode::mean_of_logits) {
  if (step_logits.empty())
    throw DegenerateInput("representative_distribution: no steps");
  const std::size_t v = step_logits.front().size();
  if (v == 0) throw DegenerateInput("representative_distribution: empty step");
  for (const LogitVector& s : step_logits)
    if (s.size() != v)
      throw ShapeError("representative_distribution: ragged step logits");

  if (mode == RepresentativeMode::mean_of_logits) {
    LogitVector mean(v, 0.0);
    for (const LogitVector& s : step_logits)
      for (std::size_t i = 0; i < v; ++i) mean[i] += s[i];
    const double inv = 1.0 / static_cast<double>(step_logits.size());
    for (double& x : mean) x *= inv;
    return stable_softmax(mean);
  }

  TokenDistribution out(v, 0.0);
  for (const LogitVector& s : step_logits) {
    const TokenDistribution p = stable_softmax(s);
    for (std::size_t i = 0; i < v; ++i) out[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(step_logits.size());
  for (double& x : out) x *= inv;
  return out;
}

/// Elementwise mean of same-length distributions.
inline TokenDistribution mean_distribution(
    const std::vector<TokenDistribution>& dists) {
  if (dists.empty()) throw DegenerateInput("mean_distribution: no inputs");
  const std::size_t v = dists.front().size();
  TokenDistribution out(v, 0.0);
  for (const TokenDistribution& p : dists) {
    if (p.size() != v) throw ShapeError("mean_distribution: ragged inputs");
    validate_distribution(p, "mean_distribution input");
    for (std::size_t i = 0; i < v; ++i) out[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(dists.size());
  for (double& x : out) x *= inv;
  return out;
}

/// KL(p || q) in nats.  Terms with p_i = 0 contribute 0; a positive p_i
/// over q_i = 0 makes the divergence infinite, which jsd() never feeds it.
inline double kl_divergence(std::span<const double> p,
                            std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

/// Jensen-Shannon divergence in nats: JSD(p, q) = KL(p||m)/2 + KL(q||m)/2
/// with m the elementwise mean.  Symmetric, finite, bounded by ln 2.
inline double jsd(std::span<const double> p, std::span<const double> q) {
  validate_distribution(p, "jsd p");
  validate_distribution(q, "jsd q");
  if (p.size() != q.size()) throw ShapeError("jsd: size mismatch");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double d = 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
  // Guard against rounding pushing the value a hair outside [0, ln 2].
  return std::clamp(d, 0.0, std::log(2.0));
}

/// JSD of each branch distribution against the mean of all of them.
inline std::vector<double> consistency_scores(
    const std::vector<TokenDistribution>& dists) {
  const TokenDistribution mean = mean_distribution(dists);
  std::vector<double> scores;
  scores.reserve(dists.size());
  for (const TokenDistribution& p : dists) scores.push_back(jsd(p, mean));
  return scores;
}

/// Fusion weights: softmax of -score/gamma.  Lower divergence gives a
/// strictly larger weight; weights are positive and sum to 1.
inline std::vector<double> weights_from_scores(std::span<const double> scores,
                                               double gamma) {
  if (scores.empty()) throw DegenerateInput("weights_from_scores: no scores");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ContractViolation("gamma must be a positive finite real");
  for (double s : scores)
    if (!std::isfinite(s) || s < 0.0)
      throw DegenerateInput("scores must be finite and >= 0");
  std::vector<double> neg(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) neg[i] = -scores[i] / gamma;
  return stable_softmax(neg);
}

}  // namespace mrfd

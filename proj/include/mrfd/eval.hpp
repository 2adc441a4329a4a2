#pragma once

// Evaluation metrics: confusion-matrix scores for yes/no probes, caption
// hallucination rates, and per-class density summaries of branch JSD.

#include <string>

#include "mrfd/common.hpp"

namespace mrfd {

enum class Answer { yes, no };

struct PopeRecord {
  Answer predicted = Answer::no;
  Answer label = Answer::no;
};

struct PopeMetrics {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

/// Confusion-matrix metrics with "yes" as the positive class.  Ratios whose
/// denominator is zero are reported absent rather than as 0 or NaN.
inline PopeMetrics pope_metrics(std::span<const PopeRecord> records) {
  if (records.empty()) throw DegenerateInput("pope_metrics: no records");
  PopeMetrics m;
  for (const PopeRecord& r : records) {
    const bool pred_yes = r.predicted == Answer::yes;
    const bool label_yes = r.label == Answer::yes;
    if (pred_yes && label_yes) ++m.tp;
    else if (pred_yes && !label_yes) ++m.fp;
    else if (!pred_yes && label_yes) ++m.fn;
    else ++m.tn;
  }
  const double n = static_cast<double>(records.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / n;
  if (m.tp + m.fp > 0)
    m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0)
    m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

/// Map a generated sequence to a yes/no answer by its first token.
/// Returns nothing when the first token is in neither set.
inline std::optional<Answer> extract_prediction(
    const TokenSeq& tokens, std::span<const Token> yes_tokens,
    std::span<const Token> no_tokens) {
  if (tokens.empty()) return std::nullopt;
  const Token t = tokens.front();
  if (std::find(yes_tokens.begin(), yes_tokens.end(), t) != yes_tokens.end())
    return Answer::yes;
  if (std::find(no_tokens.begin(), no_tokens.end(), t) != no_tokens.end())
    return Answer::no;
  return std::nullopt;
}

/// One caption: the object names it mentions and the ground-truth objects.
/// Names are expected pre-normalized (lowercase, trimmed, nonempty).
struct ChairRecord {
  std::vector<std::string> mentioned;
  std::vector<std::string> ground_truth;
};

struct ChairScores {
  double chair_s = 0.0;              // captions with any hallucinated mention
  std::optional<double> chair_i;     // hallucinated mentions over all mentions
  long long captions = 0;
  long long hallucinated_captions = 0;
  long long total_mentions = 0;
  long long hallucinated_mentions = 0;
};

/// Caption-level and mention-level hallucination rates.  A mention counts
/// as hallucinated when it is absent from its record's ground truth; each
/// listed mention counts once.  chair_i is absent when nothing is mentioned.
inline ChairScores chair_scores(std::span<const ChairRecord> records) {
  if (records.empty()) throw DegenerateInput("chair_scores: no records");
  ChairScores s;
  s.captions = static_cast<long long>(records.size());
  for (const ChairRecord& r : records) {
    bool any = false;
    for (const std::string& m : r.mentioned) {
      if (m.empty())
        throw ContractViolation("chair_scores: empty mention name");
      ++s.total_mentions;
      const bool real = std::find(r.ground_truth.begin(), r.ground_truth.end(),
                                  m) != r.ground_truth.end();
      if (!real) {
        ++s.hallucinated_mentions;
        any = true;
      }
    }
    if (any) ++s.hallucinated_captions;
  }
  s.chair_s = static_cast<double>(s.hallucinated_captions) /
              static_cast<double>(s.captions);
  if (s.total_mentions > 0)
    s.chair_i = static_cast<double>(s.hallucinated_mentions) /
                static_cast<double>(s.total_mentions);
  return s;
}

/// One stage-1 branch outcome: its divergence and whether its answer
/// agreed with the consensus answer.
struct JsdSample {
  double jsd = 0.0;
  bool correct = false;
};

struct ClassDensity {
  std::size_t count = 0;
  std::optional<double> mean;
  std::optional<double> median;
  std::optional<double> stddev;     // population standard deviation
  std::vector<double> masses;       // per-bin mass, sums to 1 when count > 0
};

struct JsdDensityReport {
  double bin_width = 0.0;
  std::size_t nbins = 0;
  ClassDensity correct;
  ClassDensity hallucinated;
};

namespace detail {

inline ClassDensity class_density(std::vector<double> values,
                                  double bin_width, std::size_t nbins) {
  ClassDensity d;
  d.count = values.size();
  d.masses.assign(nbins, 0.0);
  if (values.empty()) return d;
  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
    std::size_t bin = static_cast<std::size_t>(v / bin_width);
    if (bin >= nbins) bin = nbins - 1;  // ln 2 lands in the last bin
    d.masses[bin] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  for (double& m : d.masses) m /= n;
  d.mean = sum / n;
  const double var = std::max(0.0, sq / n - (sum / n) * (sum / n));
  d.stddev = std::sqrt(var);
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  d.median = values.size() % 2 ? values[mid]
                               : 0.5 * (values[mid - 1] + values[mid]);
  return d;
}

}  // namespace detail

/// Histogram of branch JSD over [0, ln 2], split by agreement class.
inline JsdDensityReport jsd_density_report(std::span<const JsdSample> samples,
                                           double bin_width) {
  if (samples.empty()) throw DegenerateInput("jsd_density_report: no samples");
  const double ln2 = std::log(2.0);
  if (!(bin_width > 0.0 && bin_width <= ln2))
    throw ContractViolation("bin_width must lie in (0, ln 2]");
  std::vector<double> correct, wrong;
  for (const JsdSample& s : samples) {
    if (!std::isfinite(s.jsd) || s.jsd < 0.0 || s.jsd > ln2 + 1e-12)
      throw ContractViolation("jsd sample outside [0, ln 2]");
    (s.correct ? correct : wrong).push_back(std::min(s.jsd, ln2));
  }
  JsdDensityReport rep;
  rep.bin_width = bin_width;
  rep.nbins = static_cast<std::size_t>(std::ceil(ln2 / bin_width - 1e-12));
  rep.correct = detail::class_density(std::move(correct), bin_width, rep.nbins);
  rep.hallucinated = detail::class_density(std::move(wrong), bin_width, rep.nbins);
  return rep;
}

}  // namespace mrfd

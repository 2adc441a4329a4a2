// Acceptance gate: ten checks covering region search, integral sums,
// divergence math, weighting, fusion reductions, the bundled suite's
// divergence separation, ablation and sweep orderings, metric oracles, and
// end-to-end determinism.  Each check prints one [PASS]/[FAIL] line; the
// process exits nonzero if any check fails.
//
// Usage: acceptance --cli <mrfd binary> --data <data dir> --work <scratch dir>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "mrfd/io.hpp"
#include "mrfd/suite.hpp"

namespace fs = std::filesystem;
using namespace mrfd;

namespace {

struct Args {
  std::string cli;
  std::string data;
  std::string work;
};

Args parse_args(int argc, char** argv) {
  Args a;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    if (key == "--cli")
      a.cli = argv[i + 1];
    else if (key == "--data")
      a.data = argv[i + 1];
    else if (key == "--work")
      a.work = argv[i + 1];
  }
  return a;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------ C1, C2

// Quantized random map: every cell is k/64 with k in [0, 64), so every
// rectangle sum is exact in double and the oracle comparison has no
// floating-point slack at all.
SpatialAttentionMap random_quantized_map(Rng& rng, std::size_t side) {
  SpatialAttentionMap m;
  m.side = side;
  m.values.resize(side * side);
  for (double& v : m.values)
    v = static_cast<double>(rng.next_u64() & 63u) / 64.0;
  return m;
}

double naive_box_sum(const SpatialAttentionMap& m, const RegionBox& b) {
  double s = 0.0;
  for (int r = b.top; r < b.top + b.height; ++r)
    for (int c = b.left; c < b.left + b.width; ++c)
      s += m.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  return s;
}

double oracle_iou(const RegionBox& a, const RegionBox& b) {
  const int r0 = std::max(a.top, b.top);
  const int r1 = std::min(a.top + a.height, b.top + b.height);
  const int c0 = std::max(a.left, b.left);
  const int c1 = std::min(a.left + a.width, b.left + b.width);
  const int inter = std::max(0, r1 - r0) * std::max(0, c1 - c0);
  const int uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Literal restatement of the documented search: greedy rounds, each keeping
// the admissible box with the largest mass, ties broken by smaller area then
// top/left/height/width ascending.
std::vector<RegionBox> oracle_topk(const SpatialAttentionMap& m,
                                   const RegionSelectConfig& cfg) {
  const int side = static_cast<int>(m.side);
  const double grid = static_cast<double>(side) * side;
  const int lo =
      std::max(1, static_cast<int>(std::ceil(cfg.area_min_frac * grid - 1e-9)));
  const int hi = static_cast<int>(std::floor(cfg.area_max_frac * grid + 1e-9));
  const auto better = [](double sa, const RegionBox& a, double sb,
                         const RegionBox& b) {
    if (sa != sb) return sa > sb;
    if (a.area() != b.area()) return a.area() < b.area();
    if (a.top != b.top) return a.top < b.top;
    if (a.left != b.left) return a.left < b.left;
    if (a.height != b.height) return a.height < b.height;
    return a.width < b.width;
  };
  std::vector<RegionBox> picked;
  for (int round = 0; round < cfg.k; ++round) {
    bool found = false;
    RegionBox best{};
    double best_sum = 0.0;
    for (int t = 0; t < side; ++t)
      for (int l = 0; l < side; ++l)
        for (int h = 1; t + h <= side; ++h)
          for (int w = 1; l + w <= side; ++w) {
            const RegionBox box{t, l, h, w};
            if (box.area() < lo || box.area() > hi) continue;
            bool ok = true;
            for (const RegionBox& p : picked)
              if (oracle_iou(box, p) > cfg.iou_max) {
                ok = false;
                break;
              }
            if (!ok) continue;
            const double s = naive_box_sum(m, box);
            if (!found || better(s, box, best_sum, best)) {
              best = box;
              best_sum = s;
              found = true;
            }
          }
    if (!found) break;
    picked.push_back(best);
  }
  return picked;
}

bool c1_region_oracle(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(0xC1);
  for (int i = 0; i < 200; ++i) {
    const std::size_t side = 4 + i % 5;
    const SpatialAttentionMap map = random_quantized_map(rng, side);
    RegionSelectConfig cfg;
    cfg.k = 1 + i % 3;
    const std::vector<RegionBox> got = select_topk_regions(map, cfg);
    const std::vector<RegionBox> want = oracle_topk(map, cfg);
    if (got != want) {
      detail = "mismatch on map " + std::to_string(i);
      return false;
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 10.0) {
    detail = "took " + std::to_string(dt) + " s (limit 10)";
    return false;
  }
  detail = "200 maps, K<=3, " + std::to_string(dt).substr(0, 5) + " s";
  return true;
}

bool c2_integral_sums(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(0xC2);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t side = 3 + rng.next_u64() % 10;
    SpatialAttentionMap m;
    m.side = side;
    m.values.resize(side * side);
    for (double& v : m.values) v = rng.next_unit();
    const IntegralImage ii = build_integral(m);
    const int s = static_cast<int>(side);
    const int h = 1 + static_cast<int>(rng.next_u64() % side);
    const int w = 1 + static_cast<int>(rng.next_u64() % side);
    const int t = static_cast<int>(rng.next_u64() % (side - h + 1));
    const int l = static_cast<int>(rng.next_u64() % (side - w + 1));
    (void)s;
    const RegionBox box{t, l, h, w};
    const double err = std::abs(box_sum(ii, box) - naive_box_sum(m, box));
    if (err > 1e-12) {
      detail = "pair " + std::to_string(i) + " err " + std::to_string(err);
      return false;
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 1.0) {
    detail = "took " + std::to_string(dt) + " s (limit 1)";
    return false;
  }
  detail = "1000 pairs within 1e-12";
  return true;
}

// ------------------------------------------------------------ C3, C4

TokenDistribution random_distribution(Rng& rng, std::size_t n) {
  TokenDistribution p(n);
  double sum = 0.0;
  for (double& v : p) {
    v = rng.next_unit() + 1e-4;
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

bool c3_jsd_math(std::string& detail) {
  const double ln2 = std::log(2.0);
  Rng rng(0xC3);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.next_u64() % 7;
    const TokenDistribution p = random_distribution(rng, n);
    const TokenDistribution q = random_distribution(rng, n);
    const double pq = jsd(p, q);
    if (std::abs(pq - jsd(q, p)) > 1e-12) {
      detail = "asymmetry at trial " + std::to_string(i);
      return false;
    }
    if (pq < 0.0 || pq > ln2 + 1e-12) {
      detail = "out of bounds at trial " + std::to_string(i);
      return false;
    }
    if (jsd(p, p) > 1e-12) {
      detail = "self-divergence nonzero at trial " + std::to_string(i);
      return false;
    }
  }
  const TokenDistribution a{1.0, 0.0, 0.0};
  const TokenDistribution b{0.0, 0.5, 0.5};
  if (std::abs(jsd(a, b) - ln2) > 1e-12) {
    detail = "disjoint supports did not reach ln 2";
    return false;
  }
  // Direct evaluation of the half-KL sum for ([0.5, 0.5], [1, 0]).
  const double m0 = 0.75, m1 = 0.25;
  const double direct = 0.5 * (0.5 * std::log(0.5 / m0) +
                               0.5 * std::log(0.5 / m1)) +
                        0.5 * (1.0 * std::log(1.0 / m0));
  const TokenDistribution p{0.5, 0.5}, q{1.0, 0.0};
  if (std::abs(jsd(p, q) - direct) > 1e-9) {
    detail = "closed-form pair disagrees with direct evaluation";
    return false;
  }
  if (std::abs(jsd(p, q) - 0.21576155433883565) > 1e-9) {
    detail = "closed-form pair disagrees with frozen value";
    return false;
  }
  detail = "symmetry, bounds, identity, ln 2, closed form";
  return true;
}

bool c4_weight_contract(std::string& detail) {
  Rng rng(0xC4);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.next_u64() % 5;
    std::vector<double> scores(n);
    for (double& s : scores) s = 0.69 * rng.next_unit();
    const std::vector<double> w = weights_from_scores(scores, 0.02);
    double sum = 0.0;
    for (double v : w) sum += v;
    if (std::abs(sum - 1.0) > 1e-9) {
      detail = "weights do not normalize at trial " + std::to_string(i);
      return false;
    }
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (scores[a] < scores[b] && !(w[a] > w[b])) {
          detail = "order violated at trial " + std::to_string(i);
          return false;
        }
    std::vector<double> shifted = scores;
    for (double& s : shifted) s += 0.1;
    const std::vector<double> ws = weights_from_scores(shifted, 0.02);
    for (std::size_t a = 0; a < n; ++a)
      if (std::abs(w[a] - ws[a]) > 1e-12) {
        detail = "shift variance at trial " + std::to_string(i);
        return false;
      }
    const std::vector<double> wu = weights_from_scores(scores, 1e9);
    for (double v : wu)
      if (std::abs(v - 1.0 / static_cast<double>(n)) > 1e-6) {
        detail = "uniform limit missed at trial " + std::to_string(i);
        return false;
      }
  }
  const std::vector<double> scores{0.02, 0.06};
  const std::vector<double> w = weights_from_scores(scores, 0.02);
  const double direct0 = 1.0 / (1.0 + std::exp((0.02 - 0.06) / 0.02));
  if (std::abs(w[0] - direct0) > 1e-12 ||
      std::abs(w[0] - 0.8808) > 1e-4 || std::abs(w[1] - 0.1192) > 1e-4) {
    detail = "two-branch case missed the frozen weights";
    return false;
  }
  detail = "normalization, order, shift invariance, uniform limit";
  return true;
}

// ------------------------------------------------------------ C5

ScenarioSpec fusion_demo_spec() {
  ScenarioSpec s;
  s.source_id = "acceptance-fusion";
  s.vocab = gen_detail::bundled_vocab();
  s.grid_side = 8;
  s.blobs = {{2.0, 2.0, 1.4, 1.0}, {5.0, 6.0, 1.2, 0.8}};
  s.answers = {{std::nullopt, TokenSeq{2, 4}, 1.0}};
  s.noise_seed = 321;
  s.noise_amplitude = 0.05;
  s.query = TokenSeq{4, 5};
  return s;
}

std::vector<RegionContext> build_contexts(SyntheticBackend& backend,
                                          const ScenarioSpec& spec) {
  const VisualInput full = VisualInput::full(spec.source_id);
  const SpatialAttentionMap map = reshape_to_grid(
      aggregate_attention(backend.attention_for_query(full, spec.query)));
  const std::vector<RegionBox> boxes =
      select_topk_regions(map, RegionSelectConfig{});
  std::vector<RegionContext> ctxs;
  RegionContext base;
  base.input = full;
  ctxs.push_back(base);
  for (const RegionBox& b : boxes) {
    RegionContext c;
    c.input = full.crop_to(b);
    c.box = b;
    ctxs.push_back(c);
  }
  Rng rng(7);
  for (RegionContext& c : ctxs) {
    const InitialGeneration gen =
        generate_initial(backend, c.input, spec.query, 0.7, 16, rng);
    c.initial_response = gen.response;
    c.fusion_prompt = build_fusion_prompt(spec.query, spec.vocab.sep_token,
                                          gen.response, true);
  }
  return ctxs;
}

bool c5_fusion_reductions(std::string& detail) {
  const ScenarioSpec spec = fusion_demo_spec();
  SyntheticBackend backend(spec);
  std::vector<RegionContext> ctxs = build_contexts(backend, spec);
  if (ctxs.size() < 2) {
    detail = "demo scenario produced no region branches";
    return false;
  }
  const std::vector<TokenSeq> prefixes{{}, {2}, {2, 4}};
  for (std::size_t hot = 0; hot < ctxs.size(); ++hot) {
    for (std::size_t b = 0; b < ctxs.size(); ++b)
      ctxs[b].weight = (b == hot) ? 1.0 : 0.0;
    for (const TokenSeq& prefix : prefixes) {
      const LogitVector fused = fused_step(backend, ctxs, prefix);
      const LogitVector solo = backend.next_token_logits(
          ctxs[hot].input, ctxs[hot].fusion_prompt, prefix);
      for (std::size_t i = 0; i < fused.size(); ++i)
        if (std::abs(fused[i] - solo[i]) > 1e-9) {
          detail = "one-hot branch " + std::to_string(hot) +
                   " diverged from solo logits";
          return false;
        }
    }
  }

  // K = 0 must sample from the same distribution as a plain single-branch
  // two-stage decoder, rebuilt here from scratch.
  ScenarioSpec solo_spec;
  solo_spec.source_id = "acceptance-solo";
  solo_spec.vocab = gen_detail::bundled_vocab();
  solo_spec.grid_side = 8;
  solo_spec.blobs = {{3.0, 3.0, 1.5, 1.0}};
  solo_spec.answers = {{std::nullopt, TokenSeq{2, 4}, 0.03}};
  solo_spec.noise_seed = 77;
  solo_spec.noise_amplitude = 0.12;
  solo_spec.query = TokenSeq{5, 6};
  SyntheticBackend solo_backend(solo_spec);
  const VisualInput image = VisualInput::full(solo_spec.source_id);

  const auto solo_first_token = [&](std::uint64_t seed) {
    Rng r1(mix_seed(seed, 0x5100000000ull));
    TokenSeq resp;
    for (int step = 0; step < 64; ++step) {
      const LogitVector lg =
          solo_backend.next_token_logits(image, solo_spec.query, resp);
      const Token t = static_cast<Token>(
          sample_index(stable_softmax(lg, 0.7), r1.next_unit()));
      resp.push_back(t);
      if (t == solo_spec.vocab.eos_token) break;
    }
    TokenSeq prompt = solo_spec.query;
    prompt.push_back(solo_spec.vocab.sep_token);
    prompt.insert(prompt.end(), resp.begin(), resp.end());
    Rng r2(mix_seed(seed, 0x5200000000ull));
    const LogitVector lg =
        solo_backend.next_token_logits(image, prompt, TokenSeq{});
    return static_cast<Token>(
        sample_index(stable_softmax(lg, 0.1), r2.next_unit()));
  };

  const std::size_t v = static_cast<std::size_t>(solo_spec.vocab.size);
  std::vector<double> engine_freq(v, 0.0), oracle_freq(v, 0.0);
  const int runs = 1000;
  DecodeConfig cfg;
  cfg.k_regions = 0;
  for (int i = 0; i < runs; ++i) {
    cfg.rng_seed = 1 + static_cast<std::uint64_t>(i);
    const DecodeResult res = run_mrfd(solo_backend, image, solo_spec.query, cfg);
    engine_freq[static_cast<std::size_t>(res.output.front())] += 1.0;
    oracle_freq[static_cast<std::size_t>(
        solo_first_token(100001 + static_cast<std::uint64_t>(i)))] += 1.0;
  }
  for (std::size_t t = 0; t < v; ++t) {
    const double pa = engine_freq[t] / runs;
    const double pb = oracle_freq[t] / runs;
    const double pooled = (engine_freq[t] + oracle_freq[t]) / (2.0 * runs);
    const double se = std::sqrt(pooled * (1.0 - pooled) * 2.0 / runs);
    if (se == 0.0) {
      if (pa != pb) {
        detail = "token " + std::to_string(t) + " frequency mismatch";
        return false;
      }
      continue;
    }
    if (std::abs(pa - pb) > 3.0 * se) {
      detail = "token " + std::to_string(t) + " freq " + std::to_string(pa) +
               " vs " + std::to_string(pb) + " beyond 3 sigma";
      return false;
    }
  }
  detail = "one-hot solo match, K=0 frequencies within 3 sigma over 1000 runs";
  return true;
}

// ------------------------------------------------------------ C6, C7, C8

bool c6_suite_separation(const Args& args, std::string& detail) {
  const ScenarioSuite suite =
      load_suite_file(args.data + "/bundled_suite.json");
  if (suite.items.size() < 500) {
    detail = "bundled suite has only " + std::to_string(suite.items.size()) +
             " items";
    return false;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<JsdSample> samples =
      collect_jsd_samples(suite, DecodeConfig{}, true);
  const JsdDensityReport rep = jsd_density_report(samples, 0.01);
  const double dt = seconds_since(t0);
  if (rep.correct.count == 0 || rep.hallucinated.count == 0 ||
      !rep.correct.mean || !rep.hallucinated.mean) {
    detail = "a divergence class is empty";
    return false;
  }
  const double mc = *rep.correct.mean;
  const double mh = *rep.hallucinated.mean;
  const double nc = static_cast<double>(rep.correct.count);
  const double nh = static_cast<double>(rep.hallucinated.count);
  const double se = std::sqrt(*rep.correct.stddev * *rep.correct.stddev / nc +
                              *rep.hallucinated.stddev *
                                  *rep.hallucinated.stddev / nh);
  if (!(mc < mh)) {
    detail = "agreeing-branch mean is not below deviant mean";
    return false;
  }
  if (!(mh - mc >= 3.0 * se)) {
    detail = "class means separated by only " +
             std::to_string((mh - mc) / se) + " pooled SE";
    return false;
  }
  if (dt >= 60.0) {
    detail = "took " + std::to_string(dt) + " s (limit 60)";
    return false;
  }
  std::ostringstream os;
  os << "means " << mc << " vs " << mh << ", gap "
     << ((mh - mc) / se) << " SE, " << suite.items.size() << " items";
  detail = os.str();
  return true;
}

bool c7_ablation_ordering(const Args& args, std::string& detail) {
  const ScenarioSuite suite =
      load_suite_file(args.data + "/bundled_suite.json");
  const std::vector<AblationRow> rows =
      run_ablation_grid(suite, DecodeConfig{}, true);
  if (rows.size() != 4 || rows[0].variant != "full") {
    detail = "unexpected ablation grid shape";
    return false;
  }
  const double full = rows[0].metrics.accuracy;
  std::ostringstream os;
  os << "accuracy full " << full;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    os << ", " << rows[i].variant << " " << rows[i].metrics.accuracy;
    if (!(full > rows[i].metrics.accuracy)) {
      detail = rows[i].variant + " is not strictly below the full system";
      return false;
    }
  }
  detail = os.str();
  return true;
}

bool c8_sweep_shape(const Args& args, std::string& detail) {
  const ScenarioSuite suite =
      load_suite_file(args.data + "/bundled_suite.json");
  SweepSpec sweep;
  sweep.gamma = {0.02, 0.08};
  sweep.k = {3};
  const std::vector<SweepCell> cells =
      run_sweep(suite, DecodeConfig{}, sweep, true);
  if (cells.size() != 2 || !cells[0].metrics.precision ||
      !cells[1].metrics.precision) {
    detail = "sweep precision unavailable";
    return false;
  }
  const double lo = *cells[0].metrics.precision;
  const double hi = *cells[1].metrics.precision;
  if (!(lo >= hi)) {
    detail = "precision at gamma 0.02 (" + std::to_string(lo) +
             ") below gamma 0.08 (" + std::to_string(hi) + ")";
    return false;
  }
  std::ostringstream os;
  os << "precision " << lo << " at gamma 0.02 vs " << hi << " at 0.08";
  detail = os.str();
  return true;
}

// ------------------------------------------------------------ C9

bool c9_metric_oracles(std::string& detail) {
  Rng rng(0xC9);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.next_u64() % 40;
    std::vector<PopeRecord> recs(n);
    long long tp = 0, fp = 0, fn = 0, tn = 0;
    for (PopeRecord& r : recs) {
      r.predicted = rng.next_unit() < 0.5 ? Answer::yes : Answer::no;
      r.label = rng.next_unit() < 0.5 ? Answer::yes : Answer::no;
      if (r.predicted == Answer::yes)
        (r.label == Answer::yes ? tp : fp) += 1;
      else
        (r.label == Answer::yes ? fn : tn) += 1;
    }
    const PopeMetrics m = pope_metrics(recs);
    if (m.tp != tp || m.fp != fp || m.fn != fn || m.tn != tn) {
      detail = "confusion counts diverged at trial " + std::to_string(trial);
      return false;
    }
    const double acc =
        static_cast<double>(tp + tn) / static_cast<double>(n);
    if (std::abs(m.accuracy - acc) > 1e-12) {
      detail = "accuracy diverged at trial " + std::to_string(trial);
      return false;
    }
    const bool has_p = tp + fp > 0, has_r = tp + fn > 0;
    if (m.precision.has_value() != has_p || m.recall.has_value() != has_r) {
      detail = "optional presence diverged at trial " + std::to_string(trial);
      return false;
    }
    if (has_p &&
        std::abs(*m.precision - static_cast<double>(tp) /
                                    static_cast<double>(tp + fp)) > 1e-12) {
      detail = "precision diverged at trial " + std::to_string(trial);
      return false;
    }
    if (has_r &&
        std::abs(*m.recall - static_cast<double>(tp) /
                                 static_cast<double>(tp + fn)) > 1e-12) {
      detail = "recall diverged at trial " + std::to_string(trial);
      return false;
    }
    const bool has_f1 =
        has_p && has_r && (*m.precision + *m.recall > 0.0);
    if (m.f1.has_value() != has_f1) {
      detail = "f1 presence diverged at trial " + std::to_string(trial);
      return false;
    }
    if (has_f1) {
      const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
      const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
      if (std::abs(*m.f1 - 2.0 * p * r / (p + r)) > 1e-12) {
        detail = "f1 diverged at trial " + std::to_string(trial);
        return false;
      }
    }
  }
  const std::vector<ChairRecord> chair_recs{
      {{"cat", "dog"}, {"cat"}},
      {{"table"}, {"table", "chair"}},
  };
  const ChairScores s = chair_scores(chair_recs);
  if (s.chair_s != 0.5 || s.chair_i != 1.0 / 3.0) {
    detail = "hand-computed caption case missed";
    return false;
  }
  detail = "1000 random confusion lists, caption case exact";
  return true;
}

// ------------------------------------------------------------ C10

bool c10_determinism(const Args& args, std::string& detail) {
  fs::create_directories(args.work);
  const fs::path scen = fs::path(args.work) / "determinism_scenario.json";
  {
    std::ofstream out(scen, std::ios::binary);
    out << scenario_to_json(fusion_demo_spec()).dump() << "\n";
  }
  const fs::path d1 = fs::path(args.work) / "run1";
  const fs::path d2 = fs::path(args.work) / "run2";
  for (const fs::path& d : {d1, d2}) {
    const std::string cmd = "\"" + args.cli + "\" decode --scenario \"" +
                            scen.string() + "\" --out \"" + d.string() +
                            "\" >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      detail = "decode run failed";
      return false;
    }
  }
  const std::string t1 = read_bytes(d1 / "trace.jsonl");
  const std::string t2 = read_bytes(d2 / "trace.jsonl");
  if (t1.empty() || t1 != t2) {
    detail = "trace files differ between identical runs";
    return false;
  }

  const ScenarioSpec spec = fusion_demo_spec();
  SyntheticBackend backend(spec);
  std::vector<RegionContext> ctxs = build_contexts(backend, spec);
  const double w = 1.0 / static_cast<double>(ctxs.size());
  for (RegionContext& c : ctxs) c.weight = w;
  const std::vector<TokenSeq> prefixes{{}, {2}, {2, 4, 5}};
  for (const TokenSeq& prefix : prefixes) {
    const LogitVector seq = fused_step(backend, ctxs, prefix, false);
    const LogitVector par = fused_step(backend, ctxs, prefix, true);
    for (std::size_t i = 0; i < seq.size(); ++i)
      if (std::abs(seq[i] - par[i]) > 1e-9) {
        detail = "concurrent fusion diverged from sequential";
        return false;
      }
  }
  detail = "byte-identical traces, concurrent == sequential fusion";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const Args args = parse_args(argc, argv);
  if (args.cli.empty() || args.data.empty() || args.work.empty()) {
    std::fprintf(stderr, "usage: acceptance --cli BIN --data DIR --work DIR\n");
    return 2;
  }
  int failures = 0;
  const auto run = [&](const char* name,
                       const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name,
                detail.empty() ? "" : " - ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  };

  run("C1 region search matches naive enumeration", c1_region_oracle);
  run("C2 integral sums match direct summation", c2_integral_sums);
  run("C3 divergence symmetry, bounds, closed form", c3_jsd_math);
  run("C4 weight normalization, order, invariances", c4_weight_contract);
  run("C5 fusion one-hot and single-branch reductions", c5_fusion_reductions);
  run("C6 suite divergence class separation",
      [&](std::string& d) { return c6_suite_separation(args, d); });
  run("C7 ablation accuracy ordering",
      [&](std::string& d) { return c7_ablation_ordering(args, d); });
  run("C8 sweep precision shape",
      [&](std::string& d) { return c8_sweep_shape(args, d); });
  run("C9 metric oracles", c9_metric_oracles);
  run("C10 trace determinism and fusion scheduling",
      [&](std::string& d) { return c10_determinism(args, d); });

  if (failures) {
    std::printf("%d of 10 criteria failed\n", failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}

#pragma once

// Serialization: scenario and suite JSON, decode traces as JSONL, metric
// record files (newline-delimited JSON), and versioned CSV reports.  Every
// reader checks schema versions and rejects unknown fields; every writer
// produces byte-stable output for fixed inputs.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "mrfd/suite.hpp"

namespace mrfd {

using nlohmann::json;

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kSuiteSchemaVersion = 1;
inline constexpr const char* kTraceSchema = "mrfd.trace.v1";
inline constexpr const char* kPopeCsvSchema = "mrfd.pope.v1";
inline constexpr const char* kChairCsvSchema = "mrfd.chair.v1";
inline constexpr const char* kSweepCsvSchema = "mrfd.sweep.v1";
inline constexpr const char* kAblateCsvSchema = "mrfd.ablate.v1";
inline constexpr const char* kJsdCsvSchema = "mrfd.jsd_density.v1";

namespace io_detail {

[[noreturn]] inline void fail(const std::string& what, const std::string& msg) {
  throw ConfigError(what + ": " + msg);
}

inline void expect_object(const json& j, const std::string& what) {
  if (!j.is_object()) fail(what, "expected a JSON object");
}

inline void check_keys(const json& j, const std::string& what,
                       const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) fail(what, "unknown key '" + key + "'");
}

inline const json& require(const json& j, const char* key,
                           const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end()) fail(what, std::string("missing key '") + key + "'");
  return *it;
}

template <typename T>
T as(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(what, "wrong value type");
  }
}

inline void check_schema_version(const json& j, int expected,
                                 const std::string& what) {
  const int v = as<int>(require(j, "schema_version", what), what);
  if (v != expected)
    fail(what, "unsupported schema_version " + std::to_string(v));
}

/// Fixed-format double for CSV cells; parses back to the same value for
/// every quantity reports carry.
inline std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string csv_opt(const std::optional<double>& v) {
  return v ? csv_double(*v) : "NA";
}

}  // namespace io_detail

// ------------------------------------------------------------- scenarios

inline json box_to_json(const RegionBox& b) {
  return json{{"top", b.top}, {"left", b.left}, {"height", b.height},
              {"width", b.width}};
}

inline RegionBox box_from_json(const json& j, const std::string& what) {
  io_detail::expect_object(j, what);
  io_detail::check_keys(j, what, {"top", "left", "height", "width"});
  RegionBox b;
  b.top = io_detail::as<int>(io_detail::require(j, "top", what), what);
  b.left = io_detail::as<int>(io_detail::require(j, "left", what), what);
  b.height = io_detail::as<int>(io_detail::require(j, "height", what), what);
  b.width = io_detail::as<int>(io_detail::require(j, "width", what), what);
  return b;
}

inline json scenario_to_json(const ScenarioSpec& s) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["source_id"] = s.source_id;
  json vocab{{"size", s.vocab.size},
             {"eos_token", s.vocab.eos_token},
             {"sep_token", s.vocab.sep_token}};
  if (!s.vocab.token_names.empty()) vocab["token_names"] = s.vocab.token_names;
  j["vocab"] = std::move(vocab);
  j["grid_side"] = s.grid_side;
  j["blobs"] = json::array();
  for (const SaliencyBlob& b : s.blobs)
    j["blobs"].push_back(json{{"row", b.row},
                              {"col", b.col},
                              {"spread", b.spread},
                              {"amplitude", b.amplitude}});
  j["answers"] = json::array();
  for (const AnswerEntry& a : s.answers) {
    json e{{"box", a.box ? box_to_json(*a.box) : json(nullptr)},
           {"tokens", a.tokens},
           {"gain", a.gain}};
    j["answers"].push_back(std::move(e));
  }
  j["deviance"] = json::array();
  for (const DevianceEntry& d : s.deviance)
    j["deviance"].push_back(
        json{{"box", d.box ? box_to_json(*d.box) : json(nullptr)},
             {"strength", d.strength}});
  if (s.distractor)
    j["distractor"] =
        json{{"token", s.distractor->token}, {"score", s.distractor->score}};
  j["fp_boost"] = s.fp_boost;
  j["noise_seed"] = s.noise_seed;
  j["noise_amplitude"] = s.noise_amplitude;
  j["attention_jitter"] = s.attention_jitter;
  j["query"] = s.query;
  return j;
}

inline ScenarioSpec scenario_from_json(const json& j) {
  const std::string what = "scenario";
  io_detail::expect_object(j, what);
  io_detail::check_keys(
      j, what,
      {"schema_version", "source_id", "vocab", "grid_side", "blobs", "answers",
       "deviance", "distractor", "fp_boost", "noise_seed", "noise_amplitude",
       "attention_jitter", "query"});
  io_detail::check_schema_version(j, kScenarioSchemaVersion, what);

  ScenarioSpec s;
  s.source_id =
      io_detail::as<std::string>(io_detail::require(j, "source_id", what), what);
  const json& jv = io_detail::require(j, "vocab", what);
  io_detail::expect_object(jv, "scenario.vocab");
  io_detail::check_keys(jv, "scenario.vocab",
                        {"size", "eos_token", "sep_token", "token_names"});
  s.vocab.size = io_detail::as<std::int32_t>(
      io_detail::require(jv, "size", "vocab.size"), "vocab.size");
  s.vocab.eos_token = io_detail::as<Token>(
      io_detail::require(jv, "eos_token", "vocab.eos_token"), "vocab.eos_token");
  s.vocab.sep_token = io_detail::as<Token>(
      io_detail::require(jv, "sep_token", "vocab.sep_token"), "vocab.sep_token");
  if (jv.contains("token_names"))
    s.vocab.token_names = io_detail::as<std::vector<std::string>>(
        jv.at("token_names"), "vocab.token_names");
  s.grid_side =
      io_detail::as<int>(io_detail::require(j, "grid_side", what), what);
  if (j.contains("blobs"))
    for (const json& jb : j.at("blobs")) {
      io_detail::expect_object(jb, "blob");
      io_detail::check_keys(jb, "blob", {"row", "col", "spread", "amplitude"});
      SaliencyBlob b;
      b.row = io_detail::as<double>(io_detail::require(jb, "row", "blob"), "blob");
      b.col = io_detail::as<double>(io_detail::require(jb, "col", "blob"), "blob");
      b.spread = io_detail::as<double>(
          io_detail::require(jb, "spread", "blob"), "blob");
      b.amplitude = io_detail::as<double>(
          io_detail::require(jb, "amplitude", "blob"), "blob");
      s.blobs.push_back(b);
    }
  for (const json& ja : io_detail::require(j, "answers", what)) {
    io_detail::expect_object(ja, "answer");
    io_detail::check_keys(ja, "answer", {"box", "tokens", "gain"});
    AnswerEntry a;
    const json& jbox = io_detail::require(ja, "box", "answer");
    if (!jbox.is_null()) a.box = box_from_json(jbox, "answer.box");
    a.tokens = io_detail::as<TokenSeq>(
        io_detail::require(ja, "tokens", "answer"), "answer.tokens");
    if (ja.contains("gain"))
      a.gain = io_detail::as<double>(ja.at("gain"), "answer.gain");
    s.answers.push_back(std::move(a));
  }
  if (j.contains("deviance"))
    for (const json& jd : j.at("deviance")) {
      io_detail::expect_object(jd, "deviance");
      io_detail::check_keys(jd, "deviance", {"box", "strength"});
      DevianceEntry d;
      const json& jbox = io_detail::require(jd, "box", "deviance");
      if (!jbox.is_null()) d.box = box_from_json(jbox, "deviance.box");
      d.strength = io_detail::as<double>(
          io_detail::require(jd, "strength", "deviance"), "deviance.strength");
      s.deviance.push_back(d);
    }
  if (j.contains("distractor")) {
    const json& jd = j.at("distractor");
    io_detail::expect_object(jd, "distractor");
    io_detail::check_keys(jd, "distractor", {"token", "score"});
    DistractorSpec d;
    d.token = io_detail::as<Token>(
        io_detail::require(jd, "token", "distractor"), "distractor.token");
    d.score = io_detail::as<double>(
        io_detail::require(jd, "score", "distractor"), "distractor.score");
    s.distractor = d;
  }
  if (j.contains("fp_boost"))
    s.fp_boost = io_detail::as<double>(j.at("fp_boost"), "fp_boost");
  if (j.contains("noise_seed"))
    s.noise_seed = io_detail::as<std::uint64_t>(j.at("noise_seed"), "noise_seed");
  if (j.contains("noise_amplitude"))
    s.noise_amplitude =
        io_detail::as<double>(j.at("noise_amplitude"), "noise_amplitude");
  if (j.contains("attention_jitter"))
    s.attention_jitter =
        io_detail::as<double>(j.at("attention_jitter"), "attention_jitter");
  s.query = io_detail::as<TokenSeq>(io_detail::require(j, "query", what), what);

  try {
    s.validate();
  } catch (const Error& e) {
    io_detail::fail(what, e.what());
  }
  return s;
}

inline json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline ScenarioSpec load_scenario_file(const std::string& path) {
  try {
    return scenario_from_json(parse_json_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ----------------------------------------------------------------- suite

inline json suite_to_json(const ScenarioSuite& suite) {
  json j;
  j["schema_version"] = kSuiteSchemaVersion;
  j["kind"] = "mrfd_suite";
  j["yes_tokens"] = suite.yes_tokens;
  j["no_tokens"] = suite.no_tokens;
  j["items"] = json::array();
  for (const LabeledScenario& it : suite.items)
    j["items"].push_back(
        json{{"label", it.label == Answer::yes ? "yes" : "no"},
             {"scenario", scenario_to_json(it.scenario)}});
  return j;
}

inline ScenarioSuite suite_from_json(const json& j) {
  const std::string what = "suite";
  io_detail::expect_object(j, what);
  io_detail::check_keys(
      j, what, {"schema_version", "kind", "yes_tokens", "no_tokens", "items"});
  io_detail::check_schema_version(j, kSuiteSchemaVersion, what);
  if (io_detail::as<std::string>(io_detail::require(j, "kind", what), what) !=
      "mrfd_suite")
    io_detail::fail(what, "kind must be 'mrfd_suite'");
  ScenarioSuite suite;
  suite.yes_tokens = io_detail::as<std::vector<Token>>(
      io_detail::require(j, "yes_tokens", what), what);
  suite.no_tokens = io_detail::as<std::vector<Token>>(
      io_detail::require(j, "no_tokens", what), what);
  for (const json& ji : io_detail::require(j, "items", what)) {
    io_detail::expect_object(ji, "suite item");
    io_detail::check_keys(ji, "suite item", {"label", "scenario"});
    const std::string label = io_detail::as<std::string>(
        io_detail::require(ji, "label", "suite item"), "suite item label");
    if (label != "yes" && label != "no")
      io_detail::fail("suite item", "label must be 'yes' or 'no'");
    LabeledScenario it;
    it.label = label == "yes" ? Answer::yes : Answer::no;
    it.scenario =
        scenario_from_json(io_detail::require(ji, "scenario", "suite item"));
    suite.items.push_back(std::move(it));
  }
  try {
    suite.validate();
  } catch (const Error& e) {
    io_detail::fail(what, e.what());
  }
  return suite;
}

inline ScenarioSuite load_suite_file(const std::string& path) {
  try {
    return suite_from_json(parse_json_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ----------------------------------------------------------------- trace

inline json decode_config_to_json(const DecodeConfig& c) {
  json j;
  j["k_regions"] = c.k_regions;
  j["gamma"] = c.gamma;
  j["stage1_temperature"] = c.stage1_temperature;
  j["stage2_temperature"] = c.stage2_temperature;
  j["max_new_tokens_stage1"] = c.max_new_tokens_stage1;
  j["max_new_tokens_stage2"] = c.max_new_tokens_stage2;
  j["rng_seed"] = c.rng_seed;
  j["regions"] = json{{"iou_max", c.region_cfg.iou_max},
                      {"area_min_frac", c.region_cfg.area_min_frac},
                      {"area_max_frac", c.region_cfg.area_max_frac}};
  json ablation = json::array();
  if (c.disable_region_selection) ablation.push_back("region_selection");
  if (c.disable_consistency_weighting)
    ablation.push_back("consistency_weighting");
  if (c.disable_fusion_prompt) ablation.push_back("fusion_prompt");
  j["ablation"] = std::move(ablation);
  j["representative"] = c.representative_mode == RepresentativeMode::mean_of_logits
                            ? "mean_of_logits"
                            : "mean_of_probs";
  j["top_p"] = c.top_p;
  j["parallel"] = c.parallel;
  return j;
}

/// Trace JSONL: one header object, then one object per fused step.
inline void write_trace(std::ostream& os, const DecodeResult& result) {
  const GenerationTrace& tr = result.trace;
  json header;
  header["type"] = "header";
  header["schema"] = kTraceSchema;
  header["config"] = decode_config_to_json(tr.config);
  header["regions"] = json::array();
  for (std::size_t i = 0; i < tr.regions.size(); ++i) {
    json r = box_to_json(tr.regions[i]);
    r["score"] = tr.region_scores[i];
    header["regions"].push_back(std::move(r));
  }
  header["dropped_branches"] = tr.dropped_branches;
  header["branch_responses"] = tr.branch_responses;
  header["jsd_scores"] = tr.jsd_scores;
  header["weights"] = tr.weights;
  header["output"] = result.output;
  os << header.dump() << '\n';
  for (const StepRecord& s : tr.steps) {
    json js;
    js["type"] = "step";
    js["step"] = s.step;
    js["token"] = s.token;
    js["branch_argmax"] = s.branch_argmax;
    js["weights"] = s.weights;
    js["entropy"] = s.entropy;
    os << js.dump() << '\n';
  }
}

// --------------------------------------------------------------- records

inline std::vector<PopeRecord> load_pope_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open records file: " + path);
  std::vector<PopeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string what = path + " line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      io_detail::fail(what, e.what());
    }
    io_detail::expect_object(j, what);
    io_detail::check_keys(j, what, {"predicted", "label"});
    const auto answer = [&](const char* key) {
      const std::string v = io_detail::as<std::string>(
          io_detail::require(j, key, what), what);
      if (v == "yes") return Answer::yes;
      if (v == "no") return Answer::no;
      io_detail::fail(what, std::string(key) + " must be 'yes' or 'no'");
    };
    out.push_back(PopeRecord{answer("predicted"), answer("label")});
  }
  return out;
}

inline void write_pope_records(std::ostream& os,
                               std::span<const PopeRecord> records) {
  for (const PopeRecord& r : records) {
    json j{{"predicted", r.predicted == Answer::yes ? "yes" : "no"},
           {"label", r.label == Answer::yes ? "yes" : "no"}};
    os << j.dump() << '\n';
  }
}

namespace io_detail {

inline std::string normalize_name(std::string s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  s = s.substr(a, b - a);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace io_detail

inline std::vector<ChairRecord> load_chair_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open records file: " + path);
  std::vector<ChairRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string what = path + " line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      io_detail::fail(what, e.what());
    }
    io_detail::expect_object(j, what);
    io_detail::check_keys(j, what, {"mentioned", "ground_truth"});
    ChairRecord r;
    for (const std::string& m : io_detail::as<std::vector<std::string>>(
             io_detail::require(j, "mentioned", what), what)) {
      const std::string n = io_detail::normalize_name(m);
      if (n.empty()) io_detail::fail(what, "empty object name after trimming");
      r.mentioned.push_back(n);
    }
    for (const std::string& g : io_detail::as<std::vector<std::string>>(
             io_detail::require(j, "ground_truth", what), what)) {
      const std::string n = io_detail::normalize_name(g);
      if (n.empty()) io_detail::fail(what, "empty object name after trimming");
      r.ground_truth.push_back(n);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<JsdSample> load_jsd_samples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open records file: " + path);
  std::vector<JsdSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string what = path + " line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      io_detail::fail(what, e.what());
    }
    io_detail::expect_object(j, what);
    io_detail::check_keys(j, what, {"jsd", "correct"});
    JsdSample s;
    s.jsd = io_detail::as<double>(io_detail::require(j, "jsd", what), what);
    s.correct =
        io_detail::as<bool>(io_detail::require(j, "correct", what), what);
    out.push_back(s);
  }
  return out;
}

inline void write_jsd_samples(std::ostream& os,
                              std::span<const JsdSample> samples) {
  for (const JsdSample& s : samples) {
    json j{{"jsd", s.jsd}, {"correct", s.correct}};
    os << j.dump() << '\n';
  }
}

// ------------------------------------------------------------------- csv

inline void write_pope_csv(std::ostream& os, const PopeMetrics& m) {
  os << "#schema=" << kPopeCsvSchema << '\n';
  os << "accuracy,precision,recall,f1,tp,fp,fn,tn\n";
  os << io_detail::csv_double(m.accuracy) << ',' << io_detail::csv_opt(m.precision)
     << ',' << io_detail::csv_opt(m.recall) << ',' << io_detail::csv_opt(m.f1)
     << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << m.tn << '\n';
}

inline void write_chair_csv(std::ostream& os, const ChairScores& s) {
  os << "#schema=" << kChairCsvSchema << '\n';
  os << "chair_s,chair_i,captions,hallucinated_captions,total_mentions,"
        "hallucinated_mentions\n";
  os << io_detail::csv_double(s.chair_s) << ',' << io_detail::csv_opt(s.chair_i)
     << ',' << s.captions << ',' << s.hallucinated_captions << ','
     << s.total_mentions << ',' << s.hallucinated_mentions << '\n';
}

inline void write_sweep_csv(std::ostream& os,
                            std::span<const SweepCell> cells) {
  os << "#schema=" << kSweepCsvSchema << '\n';
  os << "k,gamma,accuracy,precision,recall,f1\n";
  for (const SweepCell& c : cells)
    os << c.k << ',' << io_detail::csv_double(c.gamma) << ','
       << io_detail::csv_double(c.metrics.accuracy) << ','
       << io_detail::csv_opt(c.metrics.precision) << ','
       << io_detail::csv_opt(c.metrics.recall) << ','
       << io_detail::csv_opt(c.metrics.f1) << '\n';
}

inline void write_ablate_csv(std::ostream& os,
                             std::span<const AblationRow> rows) {
  os << "#schema=" << kAblateCsvSchema << '\n';
  os << "variant,accuracy,precision,recall,f1\n";
  for (const AblationRow& r : rows)
    os << r.variant << ',' << io_detail::csv_double(r.metrics.accuracy) << ','
       << io_detail::csv_opt(r.metrics.precision) << ','
       << io_detail::csv_opt(r.metrics.recall) << ','
       << io_detail::csv_opt(r.metrics.f1) << '\n';
}

inline void write_jsd_density_csv(std::ostream& os,
                                  const JsdDensityReport& rep) {
  os << "#schema=" << kJsdCsvSchema << '\n';
  os << "class,stat,bin_lo,bin_hi,value\n";
  const auto emit_class = [&](const char* name, const ClassDensity& d) {
    for (std::size_t b = 0; b < d.masses.size(); ++b)
      os << name << ",mass," << io_detail::csv_double(b * rep.bin_width) << ','
         << io_detail::csv_double((b + 1) * rep.bin_width) << ','
         << io_detail::csv_double(d.masses[b]) << '\n';
    os << name << ",count,NA,NA," << d.count << '\n';
    os << name << ",mean,NA,NA," << io_detail::csv_opt(d.mean) << '\n';
    os << name << ",median,NA,NA," << io_detail::csv_opt(d.median) << '\n';
    os << name << ",stddev,NA,NA," << io_detail::csv_opt(d.stddev) << '\n';
  };
  emit_class("correct", rep.correct);
  emit_class("hallucinated", rep.hallucinated);
}

}  // namespace mrfd

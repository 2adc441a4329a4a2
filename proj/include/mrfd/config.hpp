#pragma once

// Engine configuration: decode parameters, sweep grids, and the token sets
// used to read yes/no answers, loaded from a config file with strict key
// checking so typos fail loudly.

#include <set>

#include "mrfd/fusion.hpp"
#include "mrfd/toml.hpp"

namespace mrfd {

struct SweepSpec {
  std::vector<double> gamma{0.01, 0.02, 0.04, 0.08};
  std::vector<int> k{2, 3, 4};

  void validate() const {
    if (gamma.empty() || k.empty())
      throw ConfigError("sweep grids must be nonempty");
    for (double g : gamma)
      if (!(g > 0.0) || !std::isfinite(g))
        throw ConfigError("sweep gamma values must be positive");
    for (int kk : k)
      if (kk < 0) throw ConfigError("sweep k values must be >= 0");
  }
};

struct EvalTokens {
  std::vector<Token> yes_tokens{2};
  std::vector<Token> no_tokens{3};

  void validate() const {
    if (yes_tokens.empty() || no_tokens.empty())
      throw ConfigError("eval token sets must be nonempty");
    for (Token y : yes_tokens)
      for (Token n : no_tokens)
        if (y == n) throw ConfigError("eval token sets must be disjoint");
  }
};

struct EngineConfig {
  DecodeConfig decode;
  SweepSpec sweep;
  EvalTokens eval;
};

namespace detail {

inline void check_keys(const std::map<std::string, toml::Value>& section,
                       const std::string& name,
                       const std::set<std::string>& allowed) {
  for (const auto& [key, value] : section)
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in [" +
                        (name.empty() ? "top level" : name) + "]");
}

inline const toml::Value* find(const toml::Table& t, const std::string& section,
                               const std::string& key) {
  const auto sit = t.find(section);
  if (sit == t.end()) return nullptr;
  const auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

inline void read_int(const toml::Table& t, const std::string& s,
                     const std::string& k, int& out) {
  if (const toml::Value* v = find(t, s, k))
    out = static_cast<int>(v->as_int(s + "." + k));
}

inline void read_double(const toml::Table& t, const std::string& s,
                        const std::string& k, double& out) {
  if (const toml::Value* v = find(t, s, k)) out = v->as_double(s + "." + k);
}

inline void read_bool(const toml::Table& t, const std::string& s,
                      const std::string& k, bool& out) {
  if (const toml::Value* v = find(t, s, k)) out = v->as_bool(s + "." + k);
}

inline void apply_ablations(const toml::Value& v, DecodeConfig& cfg) {
  for (const toml::Value& item : v.as_array("decode.ablation")) {
    const std::string& name = item.as_string("decode.ablation entry");
    if (name == "region_selection") cfg.disable_region_selection = true;
    else if (name == "consistency_weighting")
      cfg.disable_consistency_weighting = true;
    else if (name == "fusion_prompt") cfg.disable_fusion_prompt = true;
    else throw ConfigError("unknown ablation name '" + name + "'");
  }
}

}  // namespace detail

inline EngineConfig engine_config_from_table(const toml::Table& t) {
  for (const auto& [section, entries] : t) {
    static const std::set<std::string> sections{"", "decode", "regions",
                                                "sweep", "eval"};
    if (!sections.count(section))
      throw ConfigError("unknown section [" + section + "]");
  }
  if (t.count(""))
    detail::check_keys(t.at(""), "", {"schema_version"});
  if (const toml::Value* v = detail::find(t, "", "schema_version"))
    if (v->as_int("schema_version") != 1)
      throw ConfigError("unsupported config schema_version");

  EngineConfig cfg;
  if (t.count("decode")) {
    detail::check_keys(
        t.at("decode"), "decode",
        {"k_regions", "gamma", "stage1_temperature", "stage2_temperature",
         "max_new_tokens_stage1", "max_new_tokens_stage2", "rng_seed",
         "ablation", "representative", "top_p", "parallel"});
    DecodeConfig& d = cfg.decode;
    detail::read_int(t, "decode", "k_regions", d.k_regions);
    detail::read_double(t, "decode", "gamma", d.gamma);
    detail::read_double(t, "decode", "stage1_temperature", d.stage1_temperature);
    detail::read_double(t, "decode", "stage2_temperature", d.stage2_temperature);
    detail::read_int(t, "decode", "max_new_tokens_stage1",
                     d.max_new_tokens_stage1);
    detail::read_int(t, "decode", "max_new_tokens_stage2",
                     d.max_new_tokens_stage2);
    if (const toml::Value* v = detail::find(t, "decode", "rng_seed")) {
      const std::int64_t s = v->as_int("decode.rng_seed");
      if (s < 0) throw ConfigError("decode.rng_seed must be >= 0");
      d.rng_seed = static_cast<std::uint64_t>(s);
    }
    if (const toml::Value* v = detail::find(t, "decode", "ablation"))
      detail::apply_ablations(*v, d);
    if (const toml::Value* v = detail::find(t, "decode", "representative")) {
      const std::string& mode = v->as_string("decode.representative");
      if (mode == "mean_of_logits")
        d.representative_mode = RepresentativeMode::mean_of_logits;
      else if (mode == "mean_of_probs")
        d.representative_mode = RepresentativeMode::mean_of_probs;
      else throw ConfigError("unknown representative mode '" + mode + "'");
    }
    detail::read_double(t, "decode", "top_p", d.top_p);
    detail::read_bool(t, "decode", "parallel", d.parallel);
  }
  if (t.count("regions")) {
    detail::check_keys(t.at("regions"), "regions",
                       {"iou_max", "area_min_frac", "area_max_frac"});
    detail::read_double(t, "regions", "iou_max", cfg.decode.region_cfg.iou_max);
    detail::read_double(t, "regions", "area_min_frac",
                        cfg.decode.region_cfg.area_min_frac);
    detail::read_double(t, "regions", "area_max_frac",
                        cfg.decode.region_cfg.area_max_frac);
  }
  if (t.count("sweep")) {
    detail::check_keys(t.at("sweep"), "sweep", {"gamma", "k"});
    if (const toml::Value* v = detail::find(t, "sweep", "gamma")) {
      cfg.sweep.gamma.clear();
      for (const toml::Value& g : v->as_array("sweep.gamma"))
        cfg.sweep.gamma.push_back(g.as_double("sweep.gamma entry"));
    }
    if (const toml::Value* v = detail::find(t, "sweep", "k")) {
      cfg.sweep.k.clear();
      for (const toml::Value& kk : v->as_array("sweep.k"))
        cfg.sweep.k.push_back(static_cast<int>(kk.as_int("sweep.k entry")));
    }
  }
  if (t.count("eval")) {
    detail::check_keys(t.at("eval"), "eval", {"yes_tokens", "no_tokens"});
    if (const toml::Value* v = detail::find(t, "eval", "yes_tokens")) {
      cfg.eval.yes_tokens.clear();
      for (const toml::Value& y : v->as_array("eval.yes_tokens"))
        cfg.eval.yes_tokens.push_back(
            static_cast<Token>(y.as_int("eval.yes_tokens entry")));
    }
    if (const toml::Value* v = detail::find(t, "eval", "no_tokens")) {
      cfg.eval.no_tokens.clear();
      for (const toml::Value& n : v->as_array("eval.no_tokens"))
        cfg.eval.no_tokens.push_back(
            static_cast<Token>(n.as_int("eval.no_tokens entry")));
    }
  }

  try {
    cfg.decode.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("invalid decode config: ") + e.what());
  }
  cfg.sweep.validate();
  cfg.eval.validate();
  return cfg;
}

inline EngineConfig load_engine_config(const std::string& path) {
  return engine_config_from_table(toml::parse_file(path));
}

}  // namespace mrfd

// Command-line front end: single decodes, batch experiments over labeled
// suites (ablation grid, gamma/K sweep, JSD density), and record-file
// evaluators.  Exit codes: 0 success, 2 configuration or validation
// failure, 3 pipeline or degenerate-input failure.  Errors are emitted to
// stderr as one machine-readable JSON record.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mrfd/io.hpp"

namespace fs = std::filesystem;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("MRFD_LOG");
  if (!env) return LogLevel::quiet;
  const std::string v(env);
  if (v == "debug") return LogLevel::debug;
  if (v == "info") return LogLevel::info;
  return LogLevel::quiet;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::cerr << "[mrfd] " << msg << '\n';
}

/// Configuration error tied to a specific file path.
struct FileError : mrfd::ConfigError {
  std::string path;
  FileError(std::string p, const std::string& msg)
      : mrfd::ConfigError(msg), path(std::move(p)) {}
};

void require_file(const std::string& path, const char* what) {
  if (path.empty())
    throw mrfd::ConfigError(std::string(what) + " path is required");
  if (!fs::exists(path))
    throw FileError(path, std::string(what) + " file does not exist: " + path);
}

struct RunManifest {
  enum class Kind { single, batch, ablation_grid, gamma_sweep };
  Kind kind = Kind::single;
  std::string config_path;
  std::string scenario_path;
  std::string records_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  double bin_width = 0.01;
  std::size_t count = 600;
};

mrfd::EngineConfig load_config(const RunManifest& m) {
  mrfd::EngineConfig cfg;
  if (!m.config_path.empty()) {
    require_file(m.config_path, "config");
    try {
      cfg = mrfd::load_engine_config(m.config_path);
    } catch (const FileError&) {
      throw;
    } catch (const mrfd::ConfigError& e) {
      throw FileError(m.config_path, e.what());
    }
  }
  if (m.seed) cfg.decode.rng_seed = *m.seed;
  return cfg;
}

mrfd::ScenarioSuite load_suite(const RunManifest& m) {
  require_file(m.scenario_path, "scenario");
  try {
    return mrfd::load_suite_file(m.scenario_path);
  } catch (const mrfd::ConfigError& e) {
    throw FileError(m.scenario_path, e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError(path.string(), "cannot write file: " + path.string());
  return out;
}

fs::path prepare_out_dir(const RunManifest& m) {
  fs::path dir(m.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw FileError(m.out_dir, "cannot create output directory: " + m.out_dir);
  return dir;
}

int cmd_decode(const RunManifest& m) {
  const mrfd::EngineConfig cfg = load_config(m);
  require_file(m.scenario_path, "scenario");
  mrfd::ScenarioSpec scenario;
  try {
    scenario = mrfd::load_scenario_file(m.scenario_path);
  } catch (const mrfd::ConfigError& e) {
    throw FileError(m.scenario_path, e.what());
  }

  mrfd::SyntheticBackend backend(scenario);
  const mrfd::VisualInput image = mrfd::VisualInput::full(scenario.source_id);
  const mrfd::DecodeResult result =
      mrfd::run_mrfd(backend, image, scenario.query, cfg.decode);

  const fs::path dir = prepare_out_dir(m);
  {
    std::ofstream out = open_out(dir / "trace.jsonl");
    mrfd::write_trace(out, result);
  }
  if (log_level() >= LogLevel::debug) {
    const mrfd::SpatialAttentionMap map = mrfd::reshape_to_grid(
        mrfd::aggregate_attention(backend.attention_for_query(image,
                                                              scenario.query)));
    std::ofstream out = open_out(dir / "attention.csv");
    mrfd::dump_csv(map, out);
  }
  for (std::size_t i = 0; i < result.output.size(); ++i)
    std::cout << (i ? " " : "") << result.output[i];
  std::cout << '\n';
  log_info("decoded " + std::to_string(result.output.size()) + " tokens");
  return 0;
}

int cmd_sweep(const RunManifest& m) {
  const mrfd::EngineConfig cfg = load_config(m);
  const mrfd::ScenarioSuite suite = load_suite(m);
  const std::vector<mrfd::SweepCell> cells =
      mrfd::run_sweep(suite, cfg.decode, cfg.sweep, true);
  const fs::path dir = prepare_out_dir(m);
  std::ofstream out = open_out(dir / "sweep.csv");
  mrfd::write_sweep_csv(out, cells);
  log_info("sweep wrote " + std::to_string(cells.size()) + " cells");
  return 0;
}

int cmd_ablate(const RunManifest& m) {
  const mrfd::EngineConfig cfg = load_config(m);
  const mrfd::ScenarioSuite suite = load_suite(m);
  const std::vector<mrfd::AblationRow> rows =
      mrfd::run_ablation_grid(suite, cfg.decode, true);
  const fs::path dir = prepare_out_dir(m);
  std::ofstream out = open_out(dir / "ablate.csv");
  mrfd::write_ablate_csv(out, rows);
  log_info("ablation grid complete");
  return 0;
}

int cmd_eval_pope(const RunManifest& m) {
  require_file(m.records_path, "records");
  std::vector<mrfd::PopeRecord> records;
  try {
    records = mrfd::load_pope_records(m.records_path);
  } catch (const mrfd::ConfigError& e) {
    throw FileError(m.records_path, e.what());
  }
  const mrfd::PopeMetrics metrics = mrfd::pope_metrics(records);
  const fs::path dir = prepare_out_dir(m);
  std::ofstream out = open_out(dir / "pope.csv");
  mrfd::write_pope_csv(out, metrics);
  return 0;
}

int cmd_eval_chair(const RunManifest& m) {
  require_file(m.records_path, "records");
  std::vector<mrfd::ChairRecord> records;
  try {
    records = mrfd::load_chair_records(m.records_path);
  } catch (const mrfd::ConfigError& e) {
    throw FileError(m.records_path, e.what());
  }
  const mrfd::ChairScores scores = mrfd::chair_scores(records);
  const fs::path dir = prepare_out_dir(m);
  std::ofstream out = open_out(dir / "chair.csv");
  mrfd::write_chair_csv(out, scores);
  return 0;
}

int cmd_jsd_report(const RunManifest& m) {
  std::vector<mrfd::JsdSample> samples;
  const fs::path dir = prepare_out_dir(m);
  if (!m.records_path.empty()) {
    require_file(m.records_path, "records");
    try {
      samples = mrfd::load_jsd_samples(m.records_path);
    } catch (const mrfd::ConfigError& e) {
      throw FileError(m.records_path, e.what());
    }
  } else {
    const mrfd::EngineConfig cfg = load_config(m);
    const mrfd::ScenarioSuite suite = load_suite(m);
    samples = mrfd::collect_jsd_samples(suite, cfg.decode, true);
    std::ofstream out = open_out(dir / "jsd_samples.jsonl");
    mrfd::write_jsd_samples(out, samples);
  }
  const mrfd::JsdDensityReport report =
      mrfd::jsd_density_report(samples, m.bin_width);
  std::ofstream out = open_out(dir / "jsd_density.csv");
  mrfd::write_jsd_density_csv(out, report);
  log_info("jsd report over " + std::to_string(samples.size()) + " samples");
  return 0;
}

int cmd_gen_suite(const RunManifest& m, const std::string& out_file) {
  mrfd::SuiteGenConfig gen;
  gen.count = m.count;
  if (m.seed) gen.seed = *m.seed;
  const mrfd::ScenarioSuite suite = mrfd::make_bundled_suite(gen);
  std::ofstream out = open_out(out_file);
  out << mrfd::suite_to_json(suite).dump() << '\n';
  log_info("generated " + std::to_string(suite.items.size()) + " scenarios");
  return 0;
}

void emit_error(const std::string& kind, const std::string& message,
                const std::string& path = {}) {
  mrfd::json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  if (!path.empty()) j["error"]["path"] = path;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-region fusion decoding engine"};
  app.require_subcommand(1);

  RunManifest m;
  std::string gen_out = "bundled_suite.json";

  const auto add_common = [&](CLI::App* sub, bool scenario, bool records) {
    sub->add_option("--config", m.config_path, "Engine config file (TOML)");
    if (scenario)
      sub->add_option("--scenario", m.scenario_path,
                      "Scenario or suite JSON file");
    if (records)
      sub->add_option("--records", m.records_path,
                      "Newline-delimited JSON records file");
    sub->add_option("--out", m.out_dir, "Output directory");
    sub->add_option("--seed", m.seed, "Override the decode seed");
  };

  CLI::App* decode = app.add_subcommand("decode", "Run one fusion decode");
  add_common(decode, true, false);
  CLI::App* sweep =
      app.add_subcommand("sweep", "Metric grid over gamma and K");
  add_common(sweep, true, false);
  CLI::App* ablate =
      app.add_subcommand("ablate", "Run the four-variant ablation grid");
  add_common(ablate, true, false);
  CLI::App* eval_pope =
      app.add_subcommand("eval-pope", "Score yes/no prediction records");
  add_common(eval_pope, false, true);
  CLI::App* eval_chair =
      app.add_subcommand("eval-chair", "Score caption hallucination records");
  add_common(eval_chair, false, true);
  CLI::App* jsd_report = app.add_subcommand(
      "jsd-report", "Branch JSD density report from records or a suite");
  add_common(jsd_report, true, true);
  jsd_report->add_option("--bin-width", m.bin_width, "Histogram bin width");
  CLI::App* gen_suite =
      app.add_subcommand("gen-suite", "Generate a labeled scenario suite");
  gen_suite->add_option("--out", gen_out, "Output suite JSON file");
  gen_suite->add_option("--count", m.count, "Number of scenarios");
  gen_suite->add_option("--seed", m.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return 2;
  }

  try {
    if (decode->parsed()) {
      m.kind = RunManifest::Kind::single;
      return cmd_decode(m);
    }
    if (sweep->parsed()) {
      m.kind = RunManifest::Kind::gamma_sweep;
      return cmd_sweep(m);
    }
    if (ablate->parsed()) {
      m.kind = RunManifest::Kind::ablation_grid;
      return cmd_ablate(m);
    }
    if (eval_pope->parsed()) return cmd_eval_pope(m);
    if (eval_chair->parsed()) return cmd_eval_chair(m);
    if (jsd_report->parsed()) {
      m.kind = RunManifest::Kind::batch;
      return cmd_jsd_report(m);
    }
    if (gen_suite->parsed()) return cmd_gen_suite(m, gen_out);
    emit_error("usage", "no subcommand given");
    return 2;
  } catch (const FileError& e) {
    emit_error("config", e.what(), e.path);
    return 2;
  } catch (const mrfd::ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const mrfd::ContractViolation& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const mrfd::Error& e) {
    emit_error("pipeline", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
}

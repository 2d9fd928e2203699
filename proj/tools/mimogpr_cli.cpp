// mimogpr command-line front end: synth, describe, fit, evaluate.

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "mimogpr/error.hpp"
#include "mimogpr/harness.hpp"
#include "mimogpr/model_io.hpp"
#include "mimogpr/report.hpp"

#ifndef MIMOGPR_VERSION
#define MIMOGPR_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mimogpr;

namespace {

constexpr int kUsageError = 2;

struct UsageError : Error {
  using Error::Error;
};

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// 64-bit FNV-1a over the file bytes, as 16 hex digits.
std::string fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

/// Files staged under temporary names and renamed into place together.
/// Anything not committed is removed on destruction.
class OutputSet {
 public:
  ~OutputSet() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f.temp, ec);
    if (!committed_) {
      for (const auto& f : renamed_) fs::remove(f, ec);
    }
  }

  void add(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path temp = path;
    temp += ".tmp";
    std::ofstream out(temp, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    out.close();
    if (!out) throw Error("write failed for '" + path.string() + "'");
    files_.push_back({path, temp});
  }

  json digests() const {
    json out = json::object();
    for (const auto& f : files_) out[f.path.filename().string()] = fnv1a_file(f.temp.string());
    return out;
  }

  void commit() {
    for (const auto& f : files_) {
      fs::rename(f.temp, f.path);
      renamed_.push_back(f.path);
    }
    files_.clear();
    committed_ = true;
  }

 private:
  struct Staged {
    fs::path path;
    fs::path temp;
  };
  std::vector<Staged> files_;
  std::vector<fs::path> renamed_;
  bool committed_ = false;
};

template <typename F>
std::string render(F&& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

json make_manifest(const std::string& command, const json& config, std::uint64_t seed, const std::string& started) {
  return {{"tool", "mimogpr"},
          {"version", MIMOGPR_VERSION},
          {"command", command},
          {"config", config},
          {"seed", seed},
          {"started_at", started}};
}

void finish(OutputSet& outputs, json manifest, const fs::path& manifest_path) {
  manifest["outputs"] = outputs.digests();
  manifest["finished_at"] = utc_now();
  outputs.add(manifest_path, manifest.dump(2) + "\n");
  outputs.commit();
}

json input_record(const std::string& path) { return {{"path", path}, {"fnv1a64", fnv1a_file(path)}}; }

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(std::string("invalid ") + what + " '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what);
  return out;
}

YearMonth parse_month(const std::string& text) {
  try {
    return YearMonth::parse(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

RowRange month_window(const TimeSeriesPanel& panel, const std::string& from, const std::string& to) {
  const YearMonth a = from.empty() ? panel.start() : parse_month(from);
  const YearMonth b = to.empty() ? panel.month(panel.rows() - 1) : parse_month(to);
  if (b.ordinal() < a.ordinal()) throw Error("empty window " + a.to_string() + ".." + b.to_string());
  const YearMonth last = panel.month(panel.rows() - 1);
  if (a.ordinal() < panel.start().ordinal() || b.ordinal() > last.ordinal()) {
    throw Error("window " + a.to_string() + ".." + b.to_string() + " lies outside the panel (" +
                panel.start().to_string() + ".." + last.to_string() + ")");
  }
  return {panel.row_of(a), panel.row_of(b) + 1};
}

// Turns a JSON config (flat flag-name keys, or a run manifest carrying them
// under "config") into command-line tokens.
std::vector<std::string> config_tokens(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("malformed config '" + path + "': " + e.what());
  }
  if (doc.contains("config") && doc["config"].is_object()) {
    if (doc.contains("command") && doc["command"] != command) {
      throw UsageError("manifest '" + path + "' is for '" + doc["command"].get<std::string>() + "', not '" + command +
                       "'");
    }
    doc = doc["config"];
  }
  if (!doc.is_object()) throw UsageError("config '" + path + "' must be an object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : doc.items()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      tokens.push_back(flag + "=" + (value.get<bool>() ? "true" : "false"));
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      tokens.push_back(flag);
      tokens.push_back(joined);
    } else if (value.is_string()) {
      tokens.push_back(flag);
      tokens.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      tokens.push_back(flag);
      tokens.push_back(value.dump());
    } else if (!value.is_null()) {
      throw UsageError("unsupported value for config key '" + key + "'");
    }
  }
  return tokens;
}

void apply_thread_limit() {
  const char* env = std::getenv("MIMOGPR_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw UsageError(std::string("MIMOGPR_THREADS must be a positive integer, got '") + env + "'");
  omp_set_num_threads(static_cast<int>(n));
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::size_t series = 4;
  std::size_t months = 183;
  double rho = 0.7;
  double level = 100.0;
  double amplitude = 20.0;
  double trend = 0.1;
  double noise_std = 3.0;
  std::string start = "1999-01";
  std::uint64_t seed = 42;
  std::string out;
  std::string manifest;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  app.add_option("--series", a.series, "Number of series")->capture_default_str();
  app.add_option("--months", a.months, "Number of months (>= 48)")->capture_default_str();
  app.add_option("--rho", a.rho, "Innovation cross-correlation in [0, 1)")->capture_default_str();
  app.add_option("--level", a.level, "Base level")->capture_default_str();
  app.add_option("--amplitude", a.amplitude, "Seasonal amplitude")->capture_default_str();
  app.add_option("--trend", a.trend, "Trend slope per month")->capture_default_str();
  app.add_option("--noise-std", a.noise_std, "Innovation standard deviation")->capture_default_str();
  app.add_option("--start", a.start, "First month (YYYY-MM)")->capture_default_str();
  app.add_option("--seed", a.seed, "Random seed")->capture_default_str();
  app.add_option("--out", a.out, "Output panel CSV")->required();
  app.add_option("--manifest", a.manifest, "Manifest path (default: <out>.manifest.json)");
}

void run_synth(const SynthArgs& a) {
  const std::string started = utc_now();
  if (!(a.rho >= 0.0 && a.rho < 1.0)) throw UsageError("--rho must lie in [0, 1)");
  SyntheticSpec spec;
  spec.series = a.series;
  spec.months = a.months;
  spec.rho = a.rho;
  spec.level = a.level;
  spec.amplitude = a.amplitude;
  spec.trend = a.trend;
  spec.noise_std = a.noise_std;
  spec.seed = a.seed;
  spec.start = parse_month(a.start);
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto panel = generate_synthetic_panel(spec);

  OutputSet outputs;
  outputs.add(a.out, render([&](std::ostream& o) { write_panel(o, panel); }));
  const json config = {{"series", a.series},       {"months", a.months}, {"rho", a.rho},
                       {"level", a.level},         {"amplitude", a.amplitude}, {"trend", a.trend},
                       {"noise-std", a.noise_std}, {"start", a.start},   {"seed", a.seed},
                       {"out", a.out}};
  finish(outputs, make_manifest("synth", config, a.seed, started),
         a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);
}

// ---------------------------------------------------------------- describe

struct DescribeArgs {
  std::string data;
  std::string from;
  std::string to;
  std::string out_dir;
};

void add_describe(CLI::App& app, DescribeArgs& a) {
  app.add_option("--data", a.data, "Panel CSV")->required();
  app.add_option("--from", a.from, "First month of the window (YYYY-MM, default: panel start)");
  app.add_option("--to", a.to, "Last month of the window (YYYY-MM, default: panel end)");
  app.add_option("--out-dir", a.out_dir, "Write describe.csv, describe.md and manifest.json here (default: stdout)");
}

void run_describe(const DescribeArgs& a) {
  const std::string started = utc_now();
  const auto panel = load_panel(a.data);
  const auto table = describe_with_total(panel, month_window(panel, a.from, a.to));
  if (a.out_dir.empty()) {
    write_describe_markdown(std::cout, table);
    return;
  }
  const fs::path dir(a.out_dir);
  OutputSet outputs;
  outputs.add(dir / "describe.csv", render([&](std::ostream& o) { write_describe_csv(o, table); }));
  outputs.add(dir / "describe.md", render([&](std::ostream& o) { write_describe_markdown(o, table); }));
  json manifest = make_manifest("describe", {{"data", a.data}, {"from", a.from}, {"to", a.to}, {"out-dir", a.out_dir}},
                                0, started);
  manifest["input"] = input_record(a.data);
  finish(outputs, manifest, dir / "manifest.json");
}

// ---------------------------------------------------------------- fit / evaluate

struct ModelArgs {
  std::string data;
  int lags = 12;
  std::size_t train_len = 96;
  std::size_t valid_len = 60;
  std::string horizons = "1,2,3,6";
  int restarts = 5;
  int max_iters = 200;
  int mlp_restarts = 10;
  int max_epochs = 500;
  int patience = 25;
  bool per_horizon_combiner = false;
  std::string penalty_grid = "0,1e-4,1e-3,1e-2,1e-1,1";
  std::uint64_t seed = 0;
};

void add_model_options(CLI::App& app, ModelArgs& a) {
  app.add_option("--data", a.data, "Panel CSV")->required();
  app.add_option("--lags", a.lags, "Lag order p")->capture_default_str();
  app.add_option("--train-len", a.train_len, "Training months")->capture_default_str();
  app.add_option("--valid-len", a.valid_len, "Validation months (test is the remainder)")->capture_default_str();
  app.add_option("--horizons", a.horizons, "Comma-separated forecast horizons")->capture_default_str();
  app.add_option("--restarts", a.restarts, "GPR hyperparameter restarts")->capture_default_str();
  app.add_option("--max-iters", a.max_iters, "GPR optimizer iterations per restart")->capture_default_str();
  app.add_option("--mlp-restarts", a.mlp_restarts, "MLP random restarts")->capture_default_str();
  app.add_option("--max-epochs", a.max_epochs, "MLP epoch cap")->capture_default_str();
  app.add_option("--patience", a.patience, "MLP validation-stall epochs before stopping")->capture_default_str();
  app.add_flag("--per-horizon-combiner", a.per_horizon_combiner, "Fit one combiner per recursive step")
      ->capture_default_str();
  app.add_option("--penalty-grid", a.penalty_grid, "Comma-separated ridge penalties")->capture_default_str();
  app.add_option("--seed", a.seed, "Random seed")->capture_default_str();
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("invalid penalty grid '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty penalty grid");
  return out;
}

ExperimentConfig experiment_config(const ModelArgs& a) {
  ExperimentConfig c;
  c.lags = a.lags;
  c.split = {a.train_len, a.valid_len};
  c.horizons = parse_int_list(a.horizons, "horizon list");
  c.seed = a.seed;
  c.gpr.restarts = a.restarts;
  c.gpr.max_iters = a.max_iters;
  c.mlp.restarts = a.mlp_restarts;
  c.mlp.max_epochs = a.max_epochs;
  c.mlp.patience = a.patience;
  c.per_horizon_combiner = a.per_horizon_combiner;
  c.penalty_grid = parse_double_list(a.penalty_grid);
  return c;
}

json model_config_echo(const ModelArgs& a) {
  return {{"data", a.data},
          {"lags", a.lags},
          {"train-len", a.train_len},
          {"valid-len", a.valid_len},
          {"horizons", a.horizons},
          {"restarts", a.restarts},
          {"max-iters", a.max_iters},
          {"mlp-restarts", a.mlp_restarts},
          {"max-epochs", a.max_epochs},
          {"patience", a.patience},
          {"per-horizon-combiner", a.per_horizon_combiner},
          {"penalty-grid", a.penalty_grid},
          {"seed", a.seed}};
}

json ranges_json(const SplitRanges& s, const TimeSeriesPanel& panel) {
  auto range = [&](RowRange r) {
    return json{{"from", panel.month(r.begin).to_string()}, {"to", panel.month(r.end - 1).to_string()},
                {"months", r.size()}};
  };
  return {{"train", range(s.train)}, {"valid", range(s.valid)}, {"test", range(s.test)}};
}

struct FitArgs {
  ModelArgs model;
  std::string out;
  bool with_mlp = false;
  std::string manifest;
};

void run_fit(const FitArgs& a) {
  const std::string started = utc_now();
  const auto panel = load_panel(a.model.data);
  ExperimentConfig config = experiment_config(a.model);
  config.models = a.with_mlp ? std::vector{ModelKind::MimoGpr, ModelKind::MimoMlp} : std::vector{ModelKind::MimoGpr};
  config.validate(panel.rows());
  ModelDocument doc{panel.names(), config.seed, fit_models(panel, config, true, a.with_mlp)};

  OutputSet outputs;
  outputs.add(a.out, to_json(doc).dump(1) + "\n");
  json echo = model_config_echo(a.model);
  echo["model"] = a.out;
  echo["with-mlp"] = a.with_mlp;
  json manifest = make_manifest("fit", echo, a.model.seed, started);
  manifest["input"] = input_record(a.model.data);
  manifest["split"] = ranges_json(doc.fitted.split, panel);
  finish(outputs, manifest, a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);
}

struct EvaluateArgs {
  ModelArgs model;
  std::string candidate = "mimo-gpr";
  std::string benchmark = "mimo-mlp";
  bool refit_each_origin = false;
  std::string eval_window;
  std::string loss = "absolute";
  std::string fitted;
  std::string out_dir;
};

void check_fitted(const ModelDocument& doc, const TimeSeriesPanel& panel, const ExperimentConfig& config,
                  bool need_gpr, bool need_mlp) {
  if (doc.series != panel.names()) throw Error("fitted model series do not match the panel columns");
  if (doc.fitted.lags != config.lags) throw Error("fitted model lag order differs from --lags");
  const auto ranges = split(panel, config.split, config.lags);
  if (!(doc.fitted.split.train == ranges.train && doc.fitted.split.valid == ranges.valid)) {
    throw Error("fitted model split differs from --train-len/--valid-len");
  }
  if (need_gpr && doc.fitted.gpr.empty()) throw Error("fitted model has no GPR models");
  if (need_mlp) {
    for (int h : config.horizons) doc.fitted.mlp_forecaster(h);
  }
}

void run_evaluate(const EvaluateArgs& a) {
  const std::string started = utc_now();
  const auto panel = load_panel(a.model.data);
  ExperimentConfig config = experiment_config(a.model);
  ModelKind candidate, benchmark;
  try {
    candidate = parse_model_kind(a.candidate);
    benchmark = parse_model_kind(a.benchmark);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  DmLoss loss;
  if (a.loss == "absolute") {
    loss = DmLoss::Absolute;
  } else if (a.loss == "squared") {
    loss = DmLoss::Squared;
  } else {
    throw UsageError("--loss must be 'absolute' or 'squared'");
  }
  config.models = candidate == benchmark ? std::vector{candidate} : std::vector{candidate, benchmark};
  config.refit = a.refit_each_origin ? RefitPolicy::RefitEachOrigin : RefitPolicy::FitOnce;
  if (!a.eval_window.empty()) {
    const auto colon = a.eval_window.find(':');
    if (colon == std::string::npos) throw UsageError("--eval-window must be FROM:TO (YYYY-MM:YYYY-MM)");
    config.eval_window = month_window(panel, a.eval_window.substr(0, colon), a.eval_window.substr(colon + 1));
  }
  config.validate(panel.rows());

  const bool need_gpr = candidate != ModelKind::MimoMlp || benchmark != ModelKind::MimoMlp;
  const bool need_mlp = candidate == ModelKind::MimoMlp || benchmark == ModelKind::MimoMlp;
  std::vector<ForecastRecord> records;
  if (a.fitted.empty()) {
    records = rolling_evaluate(panel, config);
  } else {
    const ModelDocument doc = load_model_document(a.fitted);
    check_fitted(doc, panel, config, need_gpr, need_mlp);
    records = rolling_evaluate(panel, config, doc.fitted);
  }
  const auto table = build_comparison(records, candidate, benchmark, panel, config.horizons, loss);

  const fs::path dir(a.out_dir);
  OutputSet outputs;
  outputs.add(dir / "records.csv", render([&](std::ostream& o) { write_records_csv(o, records, panel); }));
  outputs.add(dir / "accuracy.csv", render([&](std::ostream& o) { write_accuracy_csv(o, table); }));
  outputs.add(dir / "accuracy.md", render([&](std::ostream& o) { write_accuracy_markdown(o, table); }));
  outputs.add(dir / "plae.csv", render([&](std::ostream& o) { write_plae_csv(o, table); }));
  outputs.add(dir / "plae.md", render([&](std::ostream& o) { write_plae_markdown(o, table); }));

  json echo = model_config_echo(a.model);
  echo["candidate"] = a.candidate;
  echo["benchmark"] = a.benchmark;
  echo["refit-each-origin"] = a.refit_each_origin;
  echo["eval-window"] = a.eval_window;
  echo["loss"] = a.loss;
  echo["fitted"] = a.fitted;
  echo["out-dir"] = a.out_dir;
  json manifest = make_manifest("evaluate", echo, a.model.seed, started);
  manifest["input"] = input_record(a.model.data);
  if (!a.fitted.empty()) manifest["fitted_model"] = input_record(a.fitted);
  const RowRange window = config.resolved_window(panel.rows());
  manifest["split"] = ranges_json(split(panel, config.split, config.lags), panel);
  manifest["origins"] = {{"from", panel.month(window.begin).to_string()},
                         {"to", panel.month(window.end - 1).to_string()},
                         {"count", window.size()}};
  finish(outputs, manifest, dir / "manifest.json");
}

// Inserts the tokens of every `--config FILE` right after the subcommand name
// so that explicit flags, which come later, take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) return args;
  const std::string command = args.front();
  std::vector<std::string> rest;
  std::vector<std::string> from_files;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& arg = args[i];
    std::string path;
    if (arg == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      path = args[++i];
    } else if (arg.rfind("--config=", 0) == 0) {
      path = arg.substr(9);
    } else {
      rest.push_back(arg);
      continue;
    }
    const auto tokens = config_tokens(path, command);
    from_files.insert(from_files.end(), tokens.begin(), tokens.end());
  }
  std::vector<std::string> out{command};
  out.insert(out.end(), from_files.begin(), from_files.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step multi-output Gaussian process forecasting of monthly panels", "mimogpr"};
  app.set_version_flag("--version", MIMOGPR_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file (or run manifest) whose keys mirror flag names");
  };

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic seasonal panel");
  add_synth(*synth_cmd, synth);
  add_config(synth_cmd);

  DescribeArgs describe;
  auto* describe_cmd = app.add_subcommand("describe", "Descriptive statistics per series plus the total");
  add_describe(*describe_cmd, describe);
  add_config(describe_cmd);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit per-series GPRs and the combiner; write a model document");
  add_model_options(*fit_cmd, fit_args.model);
  fit_cmd->add_option("--model", fit_args.out, "Output model document")->required();
  fit_cmd->add_flag("--with-mlp", fit_args.with_mlp, "Also fit the MLP benchmark")->capture_default_str();
  fit_cmd->add_option("--manifest", fit_args.manifest, "Manifest path (default: <model>.manifest.json)");
  add_config(fit_cmd);

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Rolling-origin evaluation and comparison tables");
  add_model_options(*eval_cmd, eval.model);
  eval_cmd->add_option("--candidate", eval.candidate, "mimo-gpr | mimo-mlp | independent-gpr")->capture_default_str();
  eval_cmd->add_option("--benchmark", eval.benchmark, "mimo-gpr | mimo-mlp | independent-gpr")->capture_default_str();
  eval_cmd->add_flag("--refit-each-origin", eval.refit_each_origin, "Recondition models as the origin advances")
      ->capture_default_str();
  eval_cmd->add_option("--eval-window", eval.eval_window, "Forecast origins FROM:TO (YYYY-MM:YYYY-MM)");
  eval_cmd->add_option("--loss", eval.loss, "DM loss: absolute | squared")->capture_default_str();
  eval_cmd->add_option("--fitted", eval.fitted, "Model document from 'fit' (default: fit in place)");
  eval_cmd->add_option("--out-dir", eval.out_dir, "Output directory")->required();
  add_config(eval_cmd);

  try {
    apply_thread_limit();
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (*synth_cmd) run_synth(synth);
    if (*describe_cmd) run_describe(describe);
    if (*fit_cmd) run_fit(fit_args);
    if (*eval_cmd) run_evaluate(eval);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

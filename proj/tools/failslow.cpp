// failslow: generate traces, label them, train and apply detectors, and
// benchmark the predictions.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "failslow/benchmark.hpp"
#include "failslow/ingest.hpp"
#include "failslow/labeling.hpp"
#include "failslow/pipeline.hpp"

namespace fs = std::filesystem;
using namespace failslow;

namespace {

constexpr const char* kVersion = FAILSLOW_VERSION;

// ---------------------------------------------------------------------------
// Options

struct GenOptions {
  int hosts = 10;
  int days = 10;
  std::string cluster = "A";
  std::uint64_t seed = 0;
  double fault_fraction = 0.05;
  double sustained_share = 0.5;
  std::int64_t cadence = 15;
  std::string start_date = "2024-01-01";
  double sustained_severity = 3.0;
  double spiky_severity = 10.0;
  double spike_rate = 20.0;
};

struct TrainOptions {
  std::string split_day = "5";
  std::uint64_t seed = 0;
  double k = 3.0;
  bool per_cluster_threshold = true;
  std::size_t window = 32;
  std::string features = "latency";
  std::size_t train_stride = 1;
  std::size_t test_stride = 1;
  int epochs = 30;
  std::size_t batch_size = 64;
  std::size_t max_train_windows = 2048;
  double learning_rate = 0.0;  // 0: optimizer default
  std::size_t lstm_hidden = 100;
  int lstm_layers = 2;
  std::size_t patch_size = 2;
  std::size_t patch_hidden = 64;
  int patch_layers = 2;
  std::size_t patch_heads = 4;
  std::size_t ae_latent = 2;
  int ae_epochs = 200;
  int trees = 100;
  int max_depth = 8;
  int gbdt_rounds = 50;
  std::string svm_kernel = "linear";
  double svm_c = 1.0;
  double svm_gamma = 0.1;
  int svm_epochs = 200;
  int iforest_trees = 100;
  std::size_t iforest_subsample = 256;
  std::size_t llm_hosts_per_patch = 50;
  std::size_t llm_samples = 20;
  std::size_t llm_budget = 128000;
  std::string llm_transport = "mock";
};

struct BenchOptions {
  std::string eval_date;
  std::vector<int> lookbacks = bench::default_lookbacks();
  std::vector<double> thresholds = bench::default_thresholds();
  std::string aggregation = "max";
  double rate_threshold = 0.5;
};

std::int64_t utc_offset_hours = 0;
unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

void add_gen_options(CLI::App* app, GenOptions& o) {
  app->add_option("--hosts", o.hosts, "Hosts in the cluster (12 disks each)")->check(CLI::PositiveNumber);
  app->add_option("--days", o.days, "Days of telemetry")->check(CLI::PositiveNumber);
  app->add_option("--cluster", o.cluster, "Cluster letter A..Y");
  app->add_option("--seed", o.seed, "Run seed");
  app->add_option("--fault-fraction", o.fault_fraction, "Fraction of disks with an injected fault");
  app->add_option("--sustained-share", o.sustained_share, "Share of faults that are sustained (rest spiky)");
  app->add_option("--cadence", o.cadence, "Seconds between samples");
  app->add_option("--start-date", o.start_date, "First day, YYYY-MM-DD");
  app->add_option("--sustained-severity", o.sustained_severity, "Latency multiplier of sustained faults");
  app->add_option("--spiky-severity", o.spiky_severity, "Spike height in host medians");
  app->add_option("--spike-rate", o.spike_rate, "Mean spikes per faulty day");
}

void add_split_options(CLI::App* app, TrainOptions& o) {
  app->add_option("--split-day", o.split_day, "Last training day: YYYY-MM-DD or a count of training days");
}

void add_train_options(CLI::App* app, TrainOptions& o, bool with_seed) {
  if (with_seed) app->add_option("--seed", o.seed, "Run seed");
  app->add_option("--k", o.k, "Sigma multiplier for labels and MSE thresholds");
  app->add_option("--per-cluster-threshold", o.per_cluster_threshold, "MSE sigma rule per cluster (true) or fleet-wide");
  app->add_option("--window", o.window, "Forecaster input length in samples");
  app->add_option("--features", o.features, "Forecaster inputs")->check(CLI::IsMember({"latency", "latency_throughput"}));
  app->add_option("--train-stride", o.train_stride, "Stride between training windows");
  app->add_option("--test-stride", o.test_stride, "Stride between scored windows");
  app->add_option("--epochs", o.epochs, "Forecaster epochs");
  app->add_option("--batch-size", o.batch_size, "Forecaster mini-batch size (0: full batch)");
  app->add_option("--max-train-windows", o.max_train_windows, "Seeded subset of training windows (0: all)");
  app->add_option("--learning-rate", o.learning_rate, "Neural learning rate (0: optimizer default)");
  app->add_option("--lstm-hidden", o.lstm_hidden, "LSTM hidden units");
  app->add_option("--lstm-layers", o.lstm_layers, "LSTM layers");
  app->add_option("--patch-size", o.patch_size, "PatchTST patch length");
  app->add_option("--patch-hidden", o.patch_hidden, "PatchTST model width");
  app->add_option("--patch-layers", o.patch_layers, "PatchTST encoder layers");
  app->add_option("--patch-heads", o.patch_heads, "PatchTST attention heads");
  app->add_option("--ae-latent", o.ae_latent, "Autoencoder latent width");
  app->add_option("--ae-epochs", o.ae_epochs, "Autoencoder epochs");
  app->add_option("--trees", o.trees, "Random forest trees");
  app->add_option("--max-depth", o.max_depth, "Random forest depth limit");
  app->add_option("--gbdt-rounds", o.gbdt_rounds, "Boosting rounds of the CSR ranker");
  app->add_option("--svm-kernel", o.svm_kernel, "SVM kernel")->check(CLI::IsMember({"linear", "rbf"}));
  app->add_option("--svm-c", o.svm_c, "SVM regularization C");
  app->add_option("--svm-gamma", o.svm_gamma, "RBF kernel width");
  app->add_option("--svm-epochs", o.svm_epochs, "SVM subgradient iterations");
  app->add_option("--iforest-trees", o.iforest_trees, "Isolation trees");
  app->add_option("--iforest-subsample", o.iforest_subsample, "Isolation tree subsample size");
  app->add_option("--llm-hosts-per-patch", o.llm_hosts_per_patch, "Hosts per LLM request");
  app->add_option("--llm-samples", o.llm_samples, "Sampled points per disk");
  app->add_option("--llm-budget", o.llm_budget, "Prompt budget in estimated tokens");
  app->add_option("--llm-transport", o.llm_transport, "mock or http")->check(CLI::IsMember({"mock", "http"}));
}

void add_bench_options(CLI::App* app, BenchOptions& o) {
  app->add_option("--eval-date", o.eval_date, "Evaluation date (default: last prediction date)");
  app->add_option("--lookbacks", o.lookbacks, "Lookback days")->delimiter(',');
  app->add_option("--thresholds", o.thresholds, "Score thresholds")->delimiter(',');
  app->add_option("--aggregation", o.aggregation, "Lookback aggregation")->check(CLI::IsMember({"max", "mean"}));
  app->add_option("--rate-threshold", o.rate_threshold, "Score threshold for the failure-rate table");
}

void add_common_options(CLI::App* app) {
  app->add_option("--utc-offset", utc_offset_hours, "Hours added to timestamps before taking the 9 PM to midnight slice");
}

// ---------------------------------------------------------------------------
// Helpers

CollectionHours hours() {
  CollectionHours h;
  h.utc_offset_s = utc_offset_hours * 3600;
  return h;
}

Date parse_date(const std::string& text, const char* what) {
  const auto d = Date::parse(text);
  if (!d) throw Error(ErrorKind::Config, std::string(what) + " must be YYYY-MM-DD, got '" + text + "'");
  return *d;
}

Date first_date(const std::vector<DiskTrace>& traces) {
  std::optional<Date> first;
  const auto h = hours();
  for (const auto& t : traces) {
    for (const auto& s : t.samples) {
      if (!h.contains(s.timestamp)) continue;
      const Date d = h.local_date(s.timestamp);
      if (!first || d < *first) first = d;
    }
  }
  if (!first) throw Error(ErrorKind::EmptyInput, "no samples inside the collection hours");
  return *first;
}

Date resolve_split_day(const std::string& text, const std::vector<DiskTrace>& traces) {
  if (const auto d = Date::parse(text)) return *d;
  int n = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc() || ptr != text.data() + text.size() || n < 1) {
    throw Error(ErrorKind::Config, "split-day must be a date or a positive day count, got '" + text + "'");
  }
  return first_date(traces) + (n - 1);
}

ClusterSpec spec_of(const GenOptions& o) {
  if (o.cluster.size() != 1) throw Error(ErrorKind::Config, "cluster must be one letter");
  ClusterSpec spec;
  spec.cluster_id = o.cluster[0];
  spec.n_hosts = o.hosts;
  spec.n_days = o.days;
  spec.cadence_s = o.cadence;
  spec.seed = derive_seed(o.seed, "gen");
  spec.fault_fraction = o.fault_fraction;
  spec.fault_mix = {o.sustained_share, 1.0 - o.sustained_share};
  spec.start_date = parse_date(o.start_date, "start-date");
  spec.hours = hours();
  spec.sustained_severity = o.sustained_severity;
  spec.spiky_severity = o.spiky_severity;
  spec.spike_rate = o.spike_rate;
  return spec;
}

pipeline::DetectorSettings settings_of(const TrainOptions& o) {
  pipeline::DetectorSettings s;
  s.k = o.k;
  s.per_cluster_threshold = o.per_cluster_threshold;
  s.sequence.window = o.window;
  s.sequence.features = o.features == "latency" ? neural::FeatureSet::Latency : neural::FeatureSet::LatencyThroughput;
  s.sequence.train_stride = o.train_stride;
  s.sequence.test_stride = o.test_stride;
  for (neural::TrainOptions* t : {&s.lstm.train, &s.patchtst.train}) {
    t->max_epochs = o.epochs;
    t->batch_size = o.batch_size;
    t->max_train_windows = o.max_train_windows;
  }
  s.autoencoder.train.max_epochs = o.ae_epochs;
  if (o.learning_rate > 0.0) {
    s.lstm.optimizer.learning_rate = o.learning_rate;
    s.patchtst.optimizer.learning_rate = o.learning_rate;
    s.autoencoder.optimizer.learning_rate = o.learning_rate;
  }
  s.lstm.hidden = o.lstm_hidden;
  s.lstm.n_layers = o.lstm_layers;
  s.patchtst.patch_size = o.patch_size;
  s.patchtst.hidden = o.patch_hidden;
  s.patchtst.n_layers = o.patch_layers;
  s.patchtst.n_heads = o.patch_heads;
  s.autoencoder.latent = o.ae_latent;
  s.forest.n_trees = o.trees;
  s.forest.max_depth = o.max_depth;
  s.gbdt.n_rounds = o.gbdt_rounds;
  s.svm.kernel = o.svm_kernel == "rbf" ? classical::SvmKernel::Rbf : classical::SvmKernel::Linear;
  s.svm.c = o.svm_c;
  s.svm.gamma = o.svm_gamma;
  s.svm.epochs = o.svm_epochs;
  s.iforest.n_trees = o.iforest_trees;
  s.iforest.subsample = o.iforest_subsample;
  s.llm.hosts_per_patch = o.llm_hosts_per_patch;
  s.llm.samples_per_disk = o.llm_samples;
  s.llm.context_budget_tokens = o.llm_budget;
  s.llm_transport = o.llm_transport;
  return s;
}

std::vector<pipeline::ModelKind> parse_models(const std::vector<std::string>& names) {
  std::vector<pipeline::ModelKind> out;
  for (const auto& n : names) {
    const auto k = pipeline::parse_model_kind(n);
    if (!k) throw Error(ErrorKind::Config, "unknown model kind '" + n + "'");
    out.push_back(*k);
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  auto out = open_out(path);
  fn(out);
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

// Every option of the command except help, config, the output location and
// the worker count, as `key = value` lines.
void write_run_record(const fs::path& dir, const CLI::App& cmd) {
  auto out = open_out(dir / "run_config.txt");
  out << "# failslow " << kVersion << " " << cmd.get_name() << "\n";
  std::vector<std::pair<std::string, std::string>> lines;
  for (const CLI::Option* opt : cmd.get_options()) {
    const std::string key = opt->get_single_name();
    if (key.empty() || key == "help" || key == "config" || key == "out" || key == "jobs") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
      value.erase(std::remove_if(value.begin(), value.end(), [](char c) { return c == '[' || c == ']'; }), value.end());
    }
    lines.emplace_back(key, value);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [k, v] : lines) out << k << " = " << v << "\n";
  open_out(dir / "VERSION") << "failslow " << kVersion << "\n";
}

bench::Aggregation aggregation_of(const std::string& s) {
  return s == "mean" ? bench::Aggregation::Mean : bench::Aggregation::Max;
}

struct BenchInputs {
  std::vector<bench::PredictionSet> predictions;
  std::vector<FaultLabel> truth;
};

void run_bench(const BenchInputs& in, const BenchOptions& o, const fs::path& out) {
  if (in.predictions.empty()) throw Error(ErrorKind::EmptyInput, "no predictions to benchmark");
  Date eval_date;
  if (!o.eval_date.empty()) {
    eval_date = parse_date(o.eval_date, "eval-date");
  } else {
    std::optional<Date> last;
    for (const auto& p : in.predictions) {
      for (const auto& [key, score] : p.scores) {
        if (!last || key.second > *last) last = key.second;
      }
    }
    if (!last) throw Error(ErrorKind::EmptyInput, "prediction files hold no rows");
    eval_date = *last;
  }
  make_dir(out);
  std::vector<std::pair<std::string, bench::FailureRate>> rates;
  for (const auto& preds : in.predictions) {
    const auto grid = bench::sweep_grid(preds, in.truth, eval_date, o.lookbacks, o.thresholds, aggregation_of(o.aggregation));
    for (auto metric : {bench::Metric::Precision, bench::Metric::Recall}) {
      const std::string stem = "grid_" + preds.model + "_" + bench::to_string(metric);
      write_file(out / (stem + ".csv"), [&](std::ostream& o) { bench::write_heatmap_csv(o, grid, metric); });
      auto svg = open_out(out / (stem + ".svg"));
      bench::write_heatmap_svg(svg, grid, metric);
    }
    auto counts = open_out(out / ("counts_" + preds.model + ".csv"));
    counts << "lookback,threshold,tp,fp,fn,tn\n";
    for (std::size_t i = 0; i < grid.lookbacks.size(); ++i) {
      for (std::size_t j = 0; j < grid.thresholds.size(); ++j) {
        const auto& c = grid.cells[i][j];
        char t[32];
        std::snprintf(t, sizeof t, "%.1f", grid.thresholds[j]);
        counts << grid.lookbacks[i] << ',' << t << ',' << c.tp << ',' << c.fp << ',' << c.fn << ',' << c.tn << '\n';
      }
    }
    rates.emplace_back(preds.model, preds.empty() ? bench::FailureRate{} : bench::failure_rate(preds, o.rate_threshold));
  }
  auto table = open_out(out / "failure_rates.csv");
  bench::write_failure_table(table, rates);
}

// Library errors map to exit codes; the message stays on one line.
int report_error(const std::string& kind, const std::string& message, int code) {
  std::string m = message;
  if (m.rfind(kind + ": ", 0) == 0) m.erase(0, kind.size() + 2);
  std::replace(m.begin(), m.end(), '\n', ' ');
  std::replace(m.begin(), m.end(), '"', '\'');
  std::cerr << "failslow: error kind=" << kind << " code=" << code << " message=\"" << m << "\"\n";
  return code;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Unsupported:
    case ErrorKind::InvalidFolds:
      return 1;
    case ErrorKind::NumericFailure:
      return 3;
    default:
      return 2;
  }
}

// ---------------------------------------------------------------------------
// Flat `key = value` config files; keys are long option names.

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, path.string() + " line " + std::to_string(n) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// Config entries become leading arguments so command-line flags win.
std::vector<std::string> merge_config(const CLI::App& cmd, std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  }
  std::vector<std::string> merged;
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (given.contains(key) || !cmd.get_option_no_throw("--" + key)) continue;
    merged.push_back("--" + key + "=" + value);
  }
  merged.insert(merged.end(), args.begin(), args.end());
  return merged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fail-slow disk detection benchmark", "failslow"};
  app.set_version_flag("--version", std::string("failslow ") + kVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenOptions gen_o;
  TrainOptions train_o;
  BenchOptions bench_o;
  std::string out_dir, trace_path, model_name, model_file, truth_path, config_path;
  std::vector<std::string> prediction_paths, bench_dirs;
  std::vector<std::string> model_names;
  for (auto k : pipeline::all_model_kinds()) model_names.push_back(pipeline::to_string(k));

  auto setup = [&](CLI::App* cmd) {
    cmd->option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--config", config_path, "Flat key = value file of option defaults");
    add_common_options(cmd);
    return cmd;
  };

  auto* gen = setup(app.add_subcommand("gen", "Generate a synthetic cluster with injected faults"));
  gen->add_option("--out", out_dir, "Output directory")->required();
  add_gen_options(gen, gen_o);

  auto* label = setup(app.add_subcommand("label", "Label every disk-day with the peer 3-sigma rule"));
  label->add_option("--trace", trace_path, "Trace CSV")->required();
  label->add_option("--out", out_dir, "Output directory")->required();
  label->add_option("--k", train_o.k, "Sigma multiplier");

  auto* train = setup(app.add_subcommand("train", "Train one detector"));
  train->add_option("--trace", trace_path, "Trace CSV")->required();
  train->add_option("--model", model_name, "Detector kind")->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  add_split_options(train, train_o);
  add_train_options(train, train_o, true);

  auto* detect = setup(app.add_subcommand("detect", "Score the test days of a trace with a trained detector"));
  detect->add_option("--trace", trace_path, "Trace CSV")->required();
  detect->add_option("--model-file", model_file, "Detector file written by train")->required();
  detect->add_option("--model", model_name, "Expected detector kind, checked against the file");
  detect->add_option("--out", out_dir, "Output directory")->required();
  detect->add_option("--split-day", train_o.split_day, "Override the split day stored in the model file");

  auto* benchc = setup(app.add_subcommand("bench", "Precision/recall grids and failure rates"));
  benchc->add_option("--predictions", prediction_paths, "Prediction CSVs")->required()->delimiter(',');
  benchc->add_option("--truth", truth_path, "Ground-truth label CSV")->required();
  benchc->add_option("--out", out_dir, "Output directory")->required();
  add_bench_options(benchc, bench_o);

  auto* report = setup(app.add_subcommand("report", "Summarize bench directories"));
  report->add_option("--bench", bench_dirs, "Bench output directories")->required()->delimiter(',');
  report->add_option("--out", out_dir, "Output directory")->required();

  auto* run = setup(app.add_subcommand("run", "gen, label, train, detect and bench in one go"));
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--models", model_names, "Detector kinds")->delimiter(',');
  run->add_option("--jobs", jobs, "Worker threads");
  add_gen_options(run, gen_o);
  add_split_options(run, train_o);
  add_train_options(run, train_o, false);
  add_bench_options(run, bench_o);

  // Config files are merged per command before parsing.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty()) {
      if (auto* cmd = app.get_subcommand_no_throw(args[0])) {
        std::vector<std::string> rest(args.begin() + 1, args.end());
        rest = merge_config(*cmd, rest);
        rest.insert(rest.begin(), args[0]);
        args = rest;
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), 1);
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
  }

  try {
    const fs::path out(out_dir);
    if (*gen) {
      const auto cluster = generate_cluster(spec_of(gen_o));
      make_dir(out);
      write_file(out / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, cluster.traces); });
      write_file(out / "truth.csv", [&](std::ostream& o) { write_labels_csv(o, cluster.truth); });
      auto faults = open_out(out / "faults.csv");
      faults << "cluster,host,disk,style,onset_day,severity,spike_rate\n";
      for (const auto& f : cluster.faults) {
        faults << f.id.cluster << ',' << f.id.host << ',' << f.id.disk << ',' << to_string(f.style) << ','
               << f.onset_day.iso() << ',' << format_real(f.severity) << ',' << format_real(f.spike_rate) << '\n';
      }
      write_run_record(out, *gen);
    } else if (*label) {
      const auto traces = parse_trace_csv(fs::path(trace_path));
      std::vector<DailyWindow> windows;
      for (const auto& t : traces) {
        auto w = window_split(t, hours());
        windows.insert(windows.end(), w.begin(), w.end());
      }
      make_dir(out);
      write_file(out / "labels.csv", [&](std::ostream& o) { write_labels_csv(o, label_fleet(windows, train_o.k)); });
      write_run_record(out, *label);
    } else if (*train) {
      const auto kind = parse_models({model_name}).front();
      const auto traces = parse_trace_csv(fs::path(trace_path));
      const Date split_day = resolve_split_day(train_o.split_day, traces);
      const auto data = pipeline::split_traces(traces, split_day, hours());
      const auto detector = pipeline::train_detector(kind, data, settings_of(train_o),
                                                     derive_seed(train_o.seed, "detector/" + model_name));
      make_dir(out);
      auto j = pipeline::to_json(*detector);
      j["split_day"] = split_day.iso();
      j["utc_offset_hours"] = utc_offset_hours;
      open_out(out / "model.json") << j.dump() << '\n';
      const auto log = detector->training_log_csv();
      open_out(out / "train_log.csv") << (log.empty() ? std::string("epoch,train_loss,val_loss\n") : log);
      write_run_record(out, *train);
    } else if (*detect) {
      std::ifstream in(model_file);
      if (!in) throw Error(ErrorKind::Io, "cannot open " + model_file);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, model_file + ": " + e.what());
      }
      const auto detector = pipeline::detector_from_json(j);
      if (detect->get_option("--model")->count() > 0) {
        const auto expected = pipeline::parse_model_kind(model_name);
        if (!expected) throw Error(ErrorKind::Config, "unknown model kind '" + model_name + "'");
        if (*expected != detector->kind()) {
          throw Error(ErrorKind::Config, model_file + " holds a " + pipeline::to_string(detector->kind()) + " detector, not " +
                                             model_name);
        }
      }
      const auto traces = parse_trace_csv(fs::path(trace_path));
      const bool override_split = detect->get_option("--split-day")->count() > 0;
      const Date split_day = override_split ? resolve_split_day(train_o.split_day, traces)
                                            : parse_date(j.value("split_day", ""), "model split_day");
      if (detect->get_option("--utc-offset")->count() == 0) utc_offset_hours = j.value("utc_offset_hours", 0);
      const auto data = pipeline::split_traces(traces, split_day, hours());
      make_dir(out);
      write_file(out / "predictions.csv", [&](std::ostream& o) { bench::write_predictions_csv(o, {detector->predict(data)}); });
      write_run_record(out, *detect);
    } else if (*benchc) {
      BenchInputs in;
      for (const auto& p : prediction_paths) {
        auto sets = bench::parse_predictions_csv(fs::path(p));
        in.predictions.insert(in.predictions.end(), sets.begin(), sets.end());
      }
      in.truth = parse_labels_csv(fs::path(truth_path));
      run_bench(in, bench_o, out);
      write_run_record(out, *benchc);
    } else if (*report) {
      make_dir(out);
      auto summary = open_out(out / "summary.csv");
      summary << "bench,model,rate_percent,total,failures,best_lookback,best_threshold,precision,recall\n";
      for (const auto& dir : bench_dirs) {
        std::ifstream rates_in(fs::path(dir) / "failure_rates.csv");
        if (!rates_in) throw Error(ErrorKind::Io, "no failure_rates.csv in " + dir);
        std::string line;
        std::getline(rates_in, line);
        while (std::getline(rates_in, line)) {
          if (line.empty()) continue;
          const auto model = line.substr(0, line.find(','));
          const std::string rest = line.substr(model.size() + 1);
          auto load = [&](const char* metric) {
            std::ifstream h(fs::path(dir) / ("grid_" + model + "_" + metric + ".csv"));
            if (!h) throw Error(ErrorKind::Io, "missing " + std::string(metric) + " grid for " + model + " in " + dir);
            return bench::parse_heatmap_csv(h);
          };
          const auto p = load("precision");
          const auto r = load("recall");
          // Best cell: highest F1, first in row-major order on ties.
          double best_f1 = -1.0;
          std::string cell = ",,,";
          for (std::size_t i = 0; i < p.lookbacks.size(); ++i) {
            for (std::size_t c = 0; c < p.thresholds.size(); ++c) {
              const double pv = p.values[i][c].value_or(0.0), rv = r.values[i][c].value_or(0.0);
              const double f1 = pv + rv > 0.0 ? 2 * pv * rv / (pv + rv) : 0.0;
              if (f1 > best_f1) {
                best_f1 = f1;
                cell = std::to_string(p.lookbacks[i]) + "," + p.thresholds[c] + "," + bench::format_cell(pv) + "," +
                       bench::format_cell(rv);
              }
            }
          }
          summary << fs::path(dir).filename().string() << ',' << model << ',' << rest << ',' << cell << '\n';
        }
      }
      write_run_record(out, *report);
    } else if (*run) {
      const auto kinds = parse_models(model_names);
      // gen
      const auto cluster = generate_cluster(spec_of(gen_o));
      make_dir(out);
      write_file(out / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, cluster.traces); });
      write_file(out / "truth.csv", [&](std::ostream& o) { write_labels_csv(o, cluster.truth); });

      // label
      std::vector<DailyWindow> windows;
      for (const auto& t : cluster.traces) {
        auto w = window_split(t, hours());
        windows.insert(windows.end(), w.begin(), w.end());
      }
      write_file(out / "labels.csv", [&](std::ostream& o) { write_labels_csv(o, label_fleet(windows, train_o.k)); });

      // train + detect, one worker per model
      const Date split_day = resolve_split_day(train_o.split_day, cluster.traces);
      const auto data = pipeline::split_traces(cluster.traces, split_day, hours());
      const auto settings = settings_of(train_o);
      std::vector<bench::PredictionSet> predictions(kinds.size());
      std::vector<std::string> logs(kinds.size());
      std::vector<std::exception_ptr> failures(kinds.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < kinds.size();) {
          try {
            const auto name = pipeline::to_string(kinds[i]);
            const auto detector = pipeline::train_detector(kinds[i], data, settings, derive_seed(gen_o.seed, "detector/" + name));
            predictions[i] = detector->predict(data);
            logs[i] = detector->training_log_csv();
          } catch (...) {
            failures[i] = std::current_exception();
          }
        }
      };
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < std::min<std::size_t>(jobs, kinds.size()); ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }
      write_file(out / "predictions.csv", [&](std::ostream& o) { bench::write_predictions_csv(o, predictions); });
      for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (!logs[i].empty()) open_out(out / ("train_log_" + pipeline::to_string(kinds[i]) + ".csv")) << logs[i];
      }

      // bench
      run_bench(BenchInputs{predictions, cluster.truth}, bench_o, out / "bench");
      write_run_record(out, *run);
    }
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 2);
  }
  return 0;
}

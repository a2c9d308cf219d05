// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "failslow/benchmark.hpp"
#include "failslow/classical/forest.hpp"
#include "failslow/classical/iforest.hpp"
#include "failslow/ingest.hpp"
#include "failslow/labeling.hpp"
#include "failslow/llm.hpp"
#include "failslow/neural/layers.hpp"
#include "failslow/neural/models.hpp"
#include "failslow/pipeline.hpp"
#include "failslow/rng.hpp"
#include "gradcheck.hpp"

using namespace failslow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %d: %s %s (%s; %.2fs)\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- 1 -------------------------------------------------------------------------

Outcome table_rates() {
  struct Row {
    const char* model;
    std::size_t failures, total;
    const char* expected;
  };
  const Row rows[] = {{"CSR", 15, 100, "15.00"},        {"Multi-Pred", 19, 100, "19.00"}, {"LSTM", 28, 100, "28.00"},
                      {"PatchTST", 17, 100, "17.00"},   {"Autoencoder", 1, 30, "3.33"},  {"SVM", 29, 30, "96.67"},
                      {"IForest", 5, 94, "5.32"}};
  std::string bad;
  for (const auto& r : rows) {
    const auto got = bench::failure_rate(r.failures, r.total).percent();
    if (got != r.expected) bad += std::string(" ") + r.model + "=" + got;
  }
  return {bad.empty(), bad.empty() ? "7/7 rows exact" : "mismatch:" + bad};
}

// --- 2 -------------------------------------------------------------------------

Outcome grid_shape() {
  Rng rng(2);
  bench::PredictionSet preds;
  preds.model = "m";
  std::vector<FaultLabel> truth;
  const Date eval = Date::from_ymd(2024, 1, 20);
  for (int i = 0; i < 60; ++i) {
    const auto id = DiskId::make('A', "h" + std::to_string(i / 12), i % 12);
    const bool faulty = i % 7 == 0;
    for (int d = 0; d < 20; ++d) {
      preds.add(id, eval - d, std::round(rng.uniform() * 1000) / 1000);
      const bool t = faulty && rng.uniform() < 0.5;
      truth.push_back(FaultLabel{id, eval - d, t ? Verdict::T : Verdict::F, t ? 1.0 : 0.0});
    }
  }
  const auto grid = bench::sweep_grid(preds, truth, eval, bench::default_lookbacks(), bench::default_thresholds());
  std::size_t cells = 0;
  for (const auto& row : grid.cells) cells += row.size();
  if (grid.lookbacks != std::vector<int>{1, 3, 7, 15} || cells != 40) return {false, "grid is not 4x10"};

  for (auto metric : {bench::Metric::Precision, bench::Metric::Recall}) {
    std::stringstream csv;
    bench::write_heatmap_csv(csv, grid, metric);
    std::ostringstream svg;
    bench::write_heatmap_svg(svg, grid, metric);
    if (svg.str().find("</svg>") == std::string::npos) return {false, "SVG not emitted"};
    const auto back = bench::parse_heatmap_csv(csv);
    const auto expected = bench::heatmap_of(grid, metric);
    if (back.lookbacks != expected.lookbacks || back.thresholds != expected.thresholds ||
        back.values != expected.values) {
      return {false, "CSV re-parse differs for " + bench::to_string(metric)};
    }
    if (back.thresholds.front() != "0.1" || back.thresholds.back() != "1.0") return {false, "threshold headers"};
  }
  return {true, "4x10 = 40 cells; precision and recall CSV round-trip exact; SVG emitted"};
}

// --- 3 -------------------------------------------------------------------------

Outcome labeler_oracle() {
  Rng rng(3);
  const Date day = Date::from_ymd(2024, 2, 1);
  int agree = 0, positives = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_peers = 2 + static_cast<int>(rng.index(11));
    std::vector<DailyWindow> peers;
    for (int p = 0; p < n_peers; ++p) {
      DailyWindow w{DiskId::make('A', "h000", p), day, {}};
      const double base = rng.uniform(0.2, 2.0) * (rng.uniform() < 0.1 ? rng.uniform(3.0, 30.0) : 1.0);
      const int n = 1 + static_cast<int>(rng.index(60));
      for (int s = 0; s < n; ++s) w.samples.push_back({day.epoch_seconds() + 75600 + 15 * s, base * rng.uniform(0.5, 1.5), 100.0});
      peers.push_back(std::move(w));
    }
    const double k = rng.uniform() < 0.5 ? 3.0 : rng.uniform(0.5, 4.0);
    const auto& target = peers[rng.index(peers.size())];

    // Naive recomputation.
    std::vector<double> means;
    for (const auto& p : peers) {
      double s = 0.0;
      for (const auto& x : p.samples) s += x.latency;
      means.push_back(s / static_cast<double>(p.samples.size()));
    }
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= static_cast<double>(means.size());
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    const double threshold = mu + k * std::sqrt(var / static_cast<double>(means.size()));
    double target_mean = 0.0;
    for (const auto& x : target.samples) target_mean += x.latency;
    target_mean /= static_cast<double>(target.samples.size());
    const Verdict expected = target_mean > threshold ? Verdict::T : Verdict::F;

    const auto label = label_window(target, peers, k);
    const auto thr = compute_sigma_threshold(means, k);
    worst = std::max(worst, std::abs(thr.threshold - threshold));
    if (label.verdict == expected && label.id == target.id && label.date == day) ++agree;
    positives += expected == Verdict::T;
  }
  const bool ok = agree == 1000 && worst <= 1e-9;
  return {ok, std::to_string(agree) + "/1000 verdicts agree (" + std::to_string(positives) +
                  " positive); max threshold diff " + fmt("%.2e", worst)};
}

// --- 4 -------------------------------------------------------------------------

Outcome gradchecks() {
  using testing::gradcheck;
  using testing::project;
  using testing::random_tensor;
  double lstm = 0.0, attention = 0.0, ae = 0.0;
  const int seeds = 10;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto s = static_cast<std::uint64_t>(seed);
    {
      Rng rng(s);
      ad::ParameterSet params;
      neural::LstmCell cell(params, "cell", 3, 5, rng);
      const auto x = random_tensor(3, 3, rng), h = random_tensor(3, 5, rng), c = random_tensor(3, 5, rng);
      const auto wh = random_tensor(3, 5, rng, false), wc = random_tensor(3, 5, rng, false);
      auto inputs = params.tensors();
      inputs.insert(inputs.end(), {x, h, c});
      lstm = std::max(lstm, gradcheck(inputs, [&] {
                              const auto st = cell(x, neural::LstmState{h, c});
                              return project(st.h, wh) + project(st.c, wc);
                            }).max_rel_error);
    }
    {
      Rng rng(s + 1000);
      ad::ParameterSet params;
      neural::MultiHeadAttention mha(params, "mha", 8, 2, rng);
      const auto x = random_tensor(8, 8, rng), w = random_tensor(8, 8, rng, false);
      auto inputs = params.tensors();
      inputs.push_back(x);
      attention = std::max(attention, gradcheck(inputs, [&] { return project(mha(x, 4), w); }).max_rel_error);
    }
    {
      Rng rng(s + 2000);
      neural::AeConfig cfg;
      cfg.latent = 2;
      neural::Autoencoder model(cfg, 6, s);
      const auto x = random_tensor(4, 6, rng), target = random_tensor(4, 6, rng, false);
      auto inputs = model.params().tensors();
      inputs.push_back(x);
      ae = std::max(ae, gradcheck(inputs, [&] { return ad::mse_loss(model.reconstruct(x), target); }).max_rel_error);
    }
  }
  const bool ok = lstm < 1e-4 && attention < 1e-4 && ae < 1e-4;
  return {ok, std::to_string(seeds) + " seeds each; max rel err lstm " + fmt("%.2e", lstm) + ", attention " +
                  fmt("%.2e", attention) + ", autoencoder " + fmt("%.2e", ae)};
}

// --- 5 -------------------------------------------------------------------------

struct CellPick {
  int lookback = 0;
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

Outcome injection_recovery() {
  ClusterSpec spec;
  spec.n_hosts = 10;
  spec.n_days = 10;
  spec.fault_fraction = 0.05;
  spec.seed = derive_seed(1, "gen");
  const auto g = generate_cluster(spec);
  const Date split = spec.start_date + 4;
  const Date eval = spec.start_date + (spec.n_days - 1);
  const auto data = pipeline::split_traces(g.traces, split);

  // Forecaster scaled down to desk size; the other detectors use defaults.
  pipeline::DetectorSettings s;
  s.sequence.window = 16;
  s.sequence.train_stride = 8;
  s.sequence.test_stride = 4;
  s.lstm.hidden = 32;
  s.lstm.n_layers = 1;
  s.lstm.train.max_train_windows = 1024;
  s.lstm.train.max_epochs = 10;
  s.lstm.optimizer.learning_rate = 3e-3;

  std::string detail = std::to_string(g.faults.size()) + " faults;";
  bool ok = true;
  for (auto kind : {pipeline::ModelKind::Iforest, pipeline::ModelKind::Autoencoder, pipeline::ModelKind::Lstm}) {
    const auto name = pipeline::to_string(kind);
    const auto det = pipeline::train_detector(kind, data, s, derive_seed(1, "detector/" + name));
    const auto grid = bench::sweep_grid(det->predict(data), g.truth, eval, bench::default_lookbacks(),
                                        bench::default_thresholds());
    CellPick best;
    bool found = false;
    for (std::size_t i = 0; i < grid.lookbacks.size(); ++i) {
      for (std::size_t j = 0; j < grid.thresholds.size(); ++j) {
        const auto& c = grid.cells[i][j];
        const CellPick cell{grid.lookbacks[i], grid.thresholds[j], c.precision().value_or(0.0), c.recall().value_or(0.0)};
        if (kind == pipeline::ModelKind::Lstm) {
          // Highest-precision cell with recall >= 0.8 at a short lookback.
          if (cell.lookback <= 3 && cell.recall >= 0.8 && (!found || cell.precision > best.precision)) {
            best = cell;
            found = true;
          }
        } else if (!found || std::min(cell.precision, cell.recall) > std::min(best.precision, best.recall)) {
          best = cell;
          found = true;
        }
      }
    }
    const bool pass = kind == pipeline::ModelKind::Lstm ? found : best.precision >= 0.8 && best.recall >= 0.8;
    ok = ok && pass;
    detail += " " + name + (found ? fmt(" L=%.0f t=%.1f P=%.2f R=%.2f", best.lookback, best.threshold, best.precision,
                                        best.recall)
                                  : std::string(" no qualifying cell"));
  }
  return {ok, detail};
}

// --- 6 -------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FAILSLOW_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / ("failslow_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "run.cfg");
    cfg << "# every detector at a small size\n"
        << "hosts = 4\ndays = 5\nseed = 17\ncadence = 60\nsplit-day = 3\nfault-fraction = 0.1\n"
        << "window = 8\ntrain-stride = 4\ntest-stride = 4\nepochs = 2\n"
        << "lstm-hidden = 8\nlstm-layers = 1\npatch-hidden = 8\npatch-heads = 2\npatch-layers = 1\n"
        << "ae-epochs = 30\ntrees = 10\ngbdt-rounds = 10\nsvm-epochs = 50\niforest-trees = 50\n";
  }
  for (const char* out : {"a", "b"}) {
    const int code = run_cli("run --config " + (root / "run.cfg").string() + " --out " + (root / out).string());
    if (code != 0) return {false, std::string("run ") + out + " exited " + std::to_string(code)};
  }
  std::vector<std::string> files = {"trace.csv", "truth.csv", "labels.csv", "predictions.csv"};
  for (const auto& e : fs::directory_iterator(root / "a" / "bench")) {
    if (e.path().extension() == ".csv") files.push_back("bench/" + e.path().filename().string());
  }
  std::size_t grids = 0;
  for (const auto& f : files) {
    if (!fs::exists(root / "a" / f) || !fs::exists(root / "b" / f)) return {false, "missing " + f};
    if (slurp(root / "a" / f) != slurp(root / "b" / f)) return {false, f + " differs"};
    grids += f.rfind("bench/grid_", 0) == 0;
  }
  fs::remove_all(root);
  return {grids == 16, std::to_string(files.size()) + " CSVs byte-identical across two runs, " + std::to_string(grids) +
                           " grid CSVs for 8 models"};
}

// --- 7 -------------------------------------------------------------------------

Outcome iforest_law() {
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(static_cast<std::uint64_t>(trial), "iforest-law"));
    classical::FeatureRows x;
    for (int i = 0; i < 256; ++i) x.push_back({rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1)});
    const std::vector<double> outlier{6.0 + rng.uniform(0, 2), -6.0 - rng.uniform(0, 2), 6.0};
    x.push_back(outlier);
    const auto model = classical::train_isolation_forest(x, {.n_trees = 100, .subsample = 256,
                                                             .seed = static_cast<std::uint64_t>(trial)});
    std::vector<double> inliers;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) inliers.push_back(classical::iforest_score(model, x[i]));
    std::sort(inliers.begin(), inliers.end());
    const double p90 = inliers[static_cast<std::size_t>(std::ceil(0.9 * inliers.size())) - 1];
    wins += classical::iforest_score(model, outlier) > p90;
  }
  double fixed = 0.0;
  for (std::size_t n : {2u, 10u, 64u, 256u, 1000u}) {
    fixed = std::max(fixed, std::abs(classical::iforest_score_from_path(classical::path_length_normalizer(n), n) - 0.5));
  }
  return {wins >= 95 && fixed <= 1e-9,
          std::to_string(wins) + "/100 outliers above inlier p90; |s(c(n)) - 0.5| <= " + fmt("%.1e", fixed)};
}

// --- 8 -------------------------------------------------------------------------

Outcome llm_round_trip() {
  Rng rng(8);
  const Date day = Date::from_ymd(2024, 3, 3);
  std::vector<DailyWindow> windows;
  std::map<DiskId, Verdict> plan;
  for (int h = 0; h < 50; ++h) {
    char host[8];
    std::snprintf(host, sizeof host, "h%03d", h);
    for (int d = 0; d < 12; ++d) {
      DailyWindow w{DiskId::make('A', host, d), day, {}};
      for (int s = 0; s < 720; ++s) {
        w.samples.push_back({day.epoch_seconds() + 75600 + 15 * s, std::round(rng.uniform(0.2, 9.99) * 1000) / 1000,
                             std::round(rng.uniform(10, 999.9) * 100) / 100});
      }
      plan[w.id] = rng.uniform() < 0.15 ? Verdict::T : Verdict::F;
      windows.push_back(std::move(w));
    }
  }
  llm::LlmConfig cfg;
  cfg.seed = 8;
  llm::Patch patch;
  for (const auto& w : windows) patch.push_back({w.id, llm::sample_points(w, cfg.samples_per_disk, cfg.seed)});
  const auto prompt = llm::build_prompt(patch, cfg.context_budget_tokens);

  llm::MockTransport mock(plan);
  const auto det = llm::detect_day(windows, cfg, mock);
  std::size_t exact = 0;
  for (const auto& l : det.labels) exact += plan.at(l.id) == l.verdict;
  const bool ok = prompt.token_estimate <= 128000 && det.requests == 1 && exact == plan.size() &&
                  det.labels.size() == plan.size() && det.warnings.empty();
  return {ok, "600 disks, prompt estimate " + std::to_string(prompt.token_estimate) + " tokens, " +
                  std::to_string(exact) + "/600 verdicts recovered"};
}

// --- 9 -------------------------------------------------------------------------

Outcome invariances() {
  Rng rng(9);
  classical::FeatureRows x;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    const bool pos = i % 5 == 0;
    x.push_back({rng.normal(pos ? 2.0 : 0.0, 1.0), rng.normal(0, 1), rng.uniform(0, 1)});
    y.push_back(pos ? 1.0 : 0.0);
  }
  const auto model = classical::train_gbdt_ranker(x, y, {.n_rounds = 30, .seed = 9});
  std::vector<std::pair<DiskId, std::vector<double>>> per_disk;
  for (int i = 0; i < 96; ++i) {
    per_disk.push_back({DiskId::make('A', "h" + std::to_string(i / 12), i % 12), x[static_cast<std::size_t>(i)]});
  }
  const auto ranked = classical::rank_disks(model, per_disk);
  int unchanged = 0;
  for (int t = 0; t < 100; ++t) {
    const double a = rng.uniform(0.01, 100.0), b = rng.uniform(-50, 50), p = rng.uniform(0.2, 5.0);
    const int form = t % 4;
    auto mapped = ranked;
    for (auto& [id, s] : mapped) {
      switch (form) {
        case 0: s = a * s + b; break;
        case 1: s = std::pow(s, p) + b; break;
        case 2: s = std::log(s) * a; break;
        default: s = std::exp(a * s) - std::atan(-s); break;
      }
    }
    rng.shuffle(mapped);
    const auto again = classical::rank_by_score(mapped);
    bool same = again.size() == ranked.size();
    for (std::size_t i = 0; same && i < again.size(); ++i) same = again[i].first == ranked[i].first;
    unchanged += same;
  }

  std::vector<std::pair<DiskId, double>> mses;
  for (int i = 0; i < 60; ++i) {
    mses.push_back({DiskId::make('B', "h" + std::to_string(i / 12), i % 12), std::exp(rng.normal(0, 0.3))});
  }
  mses[13].second *= 20;
  mses[40].second *= 15;
  const Date day = Date::from_ymd(2024, 4, 4);
  const auto base = neural::classify_by_mse(mses, day);
  int scale_ok = 0;
  for (double c : {1e-9, 1e-3, 0.5, 2.0, 7.3, 1e4, 1e9}) {
    auto scaled = mses;
    for (auto& [id, m] : scaled) m *= c;
    const auto labels = neural::classify_by_mse(scaled, day);
    bool same = true;
    for (std::size_t i = 0; i < labels.size(); ++i) same = same && labels[i].verdict == base[i].verdict;
    scale_ok += same;
  }
  std::size_t flagged = 0;
  for (const auto& l : base) flagged += l.verdict == Verdict::T;
  return {unchanged == 100 && scale_ok == 7 && flagged > 0,
          std::to_string(unchanged) + "/100 monotone transforms keep the ranking; " + std::to_string(scale_ok) +
              "/7 rescalings keep " + std::to_string(flagged) + " MSE verdicts"};
}

}  // namespace

int main() {
  report(1, "failure-rate table", table_rates);
  report(2, "grid shape and heatmap round-trip", grid_shape);
  report(3, "3-sigma labeler oracle", labeler_oracle);
  report(4, "gradient checks", gradchecks);
  report(5, "synthetic injection recovery", injection_recovery);
  report(6, "pipeline determinism", determinism);
  report(7, "isolation-forest score law", iforest_law);
  report(8, "LLM protocol round-trip", llm_round_trip);
  report(9, "ranker and MSE-verdict invariance", invariances);
  std::printf("%d/9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}

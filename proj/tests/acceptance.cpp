// Acceptance suite: end-to-end checks of the shipped behavior, one verdict
// line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ftacl/accounting.hpp"
#include "ftacl/audio.hpp"
#include "ftacl/encoder.hpp"
#include "ftacl/gradcheck.hpp"
#include "ftacl/io.hpp"
#include "ftacl/ticl.hpp"

using namespace ftacl;

namespace {

int g_failures = 0;

void verdict(const char* name, bool ok, const std::string& detail = "") {
  if (!ok) ++g_failures;
  std::printf("%s: %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.empty() ? "" : " -- ",
              detail.c_str());
  std::fflush(stdout);
}

TensorPtr random_param(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 0.5);
  auto t = make_tensor(std::move(shape), true);
  for (double& v : t->data) v = dist(rng);
  return t;
}

// ---------------------------------------------------------------- criterion 1

void check_complexity_table() {
  struct Row {
    std::size_t m, t;
    std::uint64_t gsa, fta;
    const char* k;
  };
  const Row rows[] = {{12, 9, 11881, 2377, "0.2"},
                      {12, 49, 346921, 36457, "0.105"},
                      {12, 100, 1442401, 135601, "0.094"}};
  bool ok = true;
  std::ostringstream detail;
  for (const auto& row : rows) {
    auto r = complexity_report(TokenGrid{row.m, row.t}, 768);
    if (r.o_gsa_over_d != row.gsa || r.o_fta_over_d != row.fta || r.k_display() != row.k ||
        r.o_gsa != row.gsa * 768 || r.o_fta != row.fta * 768) {
      ok = false;
      detail << " grid " << row.m << "x" << row.t << " got " << r.o_gsa_over_d << "/"
             << r.o_fta_over_d << "/" << r.k_display();
    }
  }
  verdict("attention pair counts match the published table exactly", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 2

void check_mask_formula() {
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t M = 1; M <= 16 && ok; ++M) {
    for (std::size_t T = 1; T <= 16 && ok; ++T) {
      TokenGrid grid{M, T};
      auto mask = build_fta_mask(grid);
      std::size_t brute = 0;
      for (std::size_t i = 0; i < mask.n && ok; ++i) {
        for (std::size_t j = 0; j < mask.n; ++j) {
          bool want = i == 0 || j == 0;
          if (!want) {
            const std::size_t mi = (i - 1) / T, ti = (i - 1) % T;
            const std::size_t mj = (j - 1) / T, tj = (j - 1) % T;
            want = mi == mj || ti == tj;
          }
          if (mask.at(i, j) != want) {
            ok = false;
            detail << "connectivity mismatch at M=" << M << " T=" << T;
            break;
          }
          if (want) ++brute;
        }
      }
      if (ok && (mask.nnz() != brute || brute != M * T * (M + T + 1) + 1)) {
        ok = false;
        detail << "count mismatch at M=" << M << " T=" << T;
      }
    }
  }
  verdict("factorized mask equals its connectivity rule and closed form for all grids up to 16x16",
          ok, detail.str());
}

// ---------------------------------------------------------------- criterion 3

void check_degenerate_equivalence() {
  bool ok = true;
  std::ostringstream detail;
  std::mt19937_64 rng(3);
  for (std::size_t T : {1u, 2u, 7u, 16u, 32u}) {
    TokenGrid grid{1, T};
    if (build_fta_mask(grid).allow != build_gsa_mask(grid.seq_len()).allow) {
      ok = false;
      detail << " mask differs at T=" << T;
    }
  }
  // end-to-end on a single-row grid: logits agree within 1e-6
  TokenizerConfig tcfg{8, 8, 16, 1};
  EncoderConfig ecfg;
  ecfg.layers = 2;
  ecfg.embed_dim = 16;
  ecfg.heads = 2;
  ecfg.mlp_ratio = 2;
  ecfg.attention_mode = AttentionMode::FTA;
  TokenGrid grid = token_grid(8, 64, tcfg);  // 1 x 8
  auto model = init_model(tcfg, ecfg, grid, rng);
  auto head = init_head(16, 4, rng);
  Spectrogram spec;
  spec.n_mels = 8;
  spec.frames = 64;
  spec.values = make_tensor({8, 64});
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : spec.values->data) v = dist(rng);
  auto fta = forward(model, spec, head, nullptr);
  model.enc_cfg.attention_mode = AttentionMode::GSA;
  auto gsa = forward(model, spec, head, nullptr);
  for (std::size_t i = 0; i < fta->size(); ++i) {
    if (std::abs(fta->data[i] - gsa->data[i]) > 1e-6) {
      ok = false;
      detail << " logit gap " << std::abs(fta->data[i] - gsa->data[i]);
      break;
    }
  }
  verdict("single-row grids make factorized and dense attention equivalent", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 4

void check_gradient_suite() {
  bool ok = true;
  double worst = 0.0;
  auto run = [&](const std::function<TensorPtr()>& fn, const std::vector<TensorPtr>& params) {
    const double err = check_gradients(fn, params);
    worst = std::max(worst, err);
    if (err > 1e-4) ok = false;
  };

  for (std::uint64_t seed = 0; seed < 20 && ok; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> ext(2, 5);
    const std::size_t n = ext(rng), d = ext(rng), k = ext(rng);
    std::uniform_int_distribution<int> lab(0, static_cast<int>(d) - 1);
    std::vector<int> labels(n);
    for (auto& y : labels) y = lab(rng);

    {
      auto a = random_param({n, k}, rng);
      auto b = random_param({k, d}, rng);
      run([&]() { return cross_entropy(matmul(a, b), labels); }, {a, b});
    }
    {
      auto a = random_param({n, k}, rng);
      auto b = random_param({n, k}, rng);
      run([&]() { return cross_entropy(matmul_nt(a, b), std::vector<int>(n, 0)); }, {a, b});
    }
    {
      // width-2 rows normalize to +-1 with eps-scale gradients; keep width >= 3
      const std::size_t dn = std::max<std::size_t>(d, 3);
      std::vector<int> ln_labels(n);
      for (auto& y : ln_labels) y = lab(rng) % static_cast<int>(dn);
      auto x = random_param({n, dn}, rng);
      auto gamma = random_param({dn}, rng);
      auto beta = random_param({dn}, rng);
      run([&]() { return cross_entropy(gelu(layer_norm(x, gamma, beta, 1e-6)), ln_labels); },
          {x, gamma, beta});
    }
    {
      auto x = random_param({n, n}, rng);
      auto mask = build_gsa_mask(n);
      std::bernoulli_distribution keep(0.7);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) mask.set(i, j, keep(rng));
      std::vector<int> ml(n);
      for (auto& y : ml) y = lab(rng) % static_cast<int>(n);
      run([&]() { return cross_entropy(masked_softmax(x, mask), ml); }, {x});
    }
    {
      auto x = random_param({2, 5, 5}, rng);
      auto kern = random_param({2, 2, 3, 3}, rng);
      auto bias = random_param({2}, rng);
      std::vector<int> cl(25);
      for (auto& y : cl) y = lab(rng) % 2;
      run([&]() { return cross_entropy(chw_to_tokens(conv2d(x, kern, bias, 1, 1)), cl); },
          {x, kern, bias});
    }
    {
      auto x = random_param({n, d}, rng);
      auto bias = random_param({d}, rng);
      run([&]() { return cross_entropy(add_rowvec(scale(x, 1.3), bias), labels); }, {x, bias});
    }
  }

  // full adapted model, frozen backbone, several seeds
  for (std::uint64_t seed = 0; seed < 3 && ok; ++seed) {
    std::mt19937_64 rng(100 + seed);
    TokenizerConfig tcfg{16, 10, 16, 1};
    EncoderConfig ecfg;
    ecfg.layers = 2;
    ecfg.embed_dim = 16;
    ecfg.heads = 2;
    ecfg.mlp_ratio = 2;
    ecfg.attention_mode = AttentionMode::FTA;
    TokenGrid grid = token_grid(26, 26, tcfg);
    auto model = init_model(tcfg, ecfg, grid, rng);
    model.set_requires_grad(false);
    AdapterConfig acfg;
    acfg.d = 16;
    acfg.d_bottleneck = 4;
    auto adapters = init_adapter_set(acfg, 2, rng);
    std::normal_distribution<double> dist(0.0, 0.1);
    for (auto& pair : adapters.layers) {
      for (double& v : pair.ca1.w_up->data) v = dist(rng);
      for (double& v : pair.ca2.w_up->data) v = dist(rng);
    }
    auto head = init_head(16, 3, rng);
    Spectrogram spec;
    spec.n_mels = 26;
    spec.frames = 26;
    spec.values = make_tensor({26, 26});
    for (double& v : spec.values->data) v = dist(rng);
    std::vector<TensorPtr> params = adapters.params();
    for (const auto& p : head.params()) params.push_back(p);
    run([&]() { return cross_entropy(forward(model, spec, head, &adapters), {2}); }, params);
  }

  std::ostringstream detail;
  detail << "max relative error " << worst;
  verdict("analytic gradients match central differences for all ops and the adapted model", ok,
          detail.str());
}

// ------------------------------------------------------- criteria 5, 6, 7, 10

struct ReferenceRuns {
  std::string ai_report_first;
  bool ai_backbone_frozen = false;
  bool ai_retention_bitwise = false;
  double ai_forgetting = -1.0;
  double mi_forgetting = -1.0;
  double ms_forgetting = -1.0;
  std::vector<double> ai_train_acc;
  std::vector<double> ai_final_test_acc;
  bool ai_repeat_identical = false;
  bool ai_roundtrip_bitwise = false;
};

ReferenceRuns run_reference_protocol() {
  ReferenceRuns out;
  SyntheticTaskConfig data_cfg;  // 4 classes, 50/12 per class, 32x32, noise 0.25, seed 7
  auto tasks = make_synthetic_tasks(data_cfg, 3);

  auto run_mode = [&](TrainMode mode, std::vector<double>* train_acc,
                      std::vector<double>* final_test,
                      bool* frozen, bool* retention) {
    TiclConfig cfg;  // desk-scale reference configuration, seed 7
    cfg.mode = mode;
    TiclRun run(cfg);
    for (const auto& t : tasks) run.register_task(t);
    const std::uint32_t before = run.backbone_checksum();

    std::vector<std::vector<double>> snapshots;  // task-0 logits after task 0
    for (int t = 0; t < 3; ++t) {
      auto log = run.train_task(t, tasks[static_cast<std::size_t>(t)].train);
      if (train_acc) train_acc->push_back(log.train_accuracy);
      if (t == 0 && retention) {
        for (const auto& x : tasks[0].test.x) {
          snapshots.push_back(run.route_and_predict(x, 0)->data);
        }
      }
    }
    if (frozen) *frozen = run.backbone_checksum() == before;
    if (retention) {
      *retention = true;
      for (std::size_t i = 0; i < snapshots.size(); ++i) {
        auto now = run.route_and_predict(tasks[0].test.x[i], 0);
        if (std::memcmp(now->data.data(), snapshots[i].data(),
                        snapshots[i].size() * sizeof(double)) != 0) {
          *retention = false;
          break;
        }
      }
    }
    if (final_test) *final_test = run.accuracy_matrix().back();
    return run;
  };

  {
    auto ai = run_mode(TrainMode::AdapterIncremental, &out.ai_train_acc, &out.ai_final_test_acc,
                       &out.ai_backbone_frozen, &out.ai_retention_bitwise);
    out.ai_forgetting = ai.forgetting_summary();
    out.ai_report_first = ai.matrix_report();

    // round-trip: saved state reloads to bitwise-identical predictions
    const std::string dir = "acceptance_ai_run";
    std::filesystem::remove_all(dir);
    ai.save(dir);
    auto loaded = TiclRun::load(dir);
    out.ai_roundtrip_bitwise = loaded.matrix_report() == ai.matrix_report();
    for (int t = 0; t < 3 && out.ai_roundtrip_bitwise; ++t) {
      for (const auto& x : tasks[static_cast<std::size_t>(t)].test.x) {
        auto a = ai.route_and_predict(x, t);
        auto b = loaded.route_and_predict(x, t);
        if (std::memcmp(a->data.data(), b->data.data(), a->size() * sizeof(double)) != 0) {
          out.ai_roundtrip_bitwise = false;
          break;
        }
      }
    }
    std::filesystem::remove_all(dir);
  }
  {
    auto repeat = run_mode(TrainMode::AdapterIncremental, nullptr, nullptr, nullptr, nullptr);
    out.ai_repeat_identical = repeat.matrix_report() == out.ai_report_first;
  }
  out.mi_forgetting =
      run_mode(TrainMode::ModelIncremental, nullptr, nullptr, nullptr, nullptr)
          .forgetting_summary();
  out.ms_forgetting =
      run_mode(TrainMode::ModelSequential, nullptr, nullptr, nullptr, nullptr)
          .forgetting_summary();
  return out;
}

// ---------------------------------------------------------------- criterion 8

void check_param_accounting() {
  const auto start = std::chrono::steady_clock::now();
  auto dims = paper_full_dims();
  auto classes = paper_task_classes();
  bool ok = true;
  std::ostringstream detail;

  auto single = param_report(dims, CountMode::FullFinetune, 1, {classes[0]});
  const double single_err = std::abs(static_cast<double>(single.total) - 86.33e6) / 86.33e6;
  if (single_err > 0.02) {
    ok = false;
    detail << " single-model total off by " << single_err;
  }

  auto ai = param_report(dims, CountMode::AdapterIncremental, 3, classes);
  const double ai_err = std::abs(static_cast<double>(ai.total) - 96.6e6) / 96.6e6;
  if (ai_err > 0.05) {
    ok = false;
    detail << " adapter-suite total off by " << ai_err;
  }
  const double trainable_frac =
      static_cast<double>(ai.trainable) / static_cast<double>(ai.total);
  if (trainable_frac >= 0.05) {
    ok = false;
    detail << " trainable fraction " << trainable_frac;
  }

  auto mi = param_report(dims, CountMode::ModelIncremental, 3, classes);
  const double storage_ratio = static_cast<double>(ai.storage_per_task_bytes) /
                               static_cast<double>(mi.storage_per_task_bytes);
  if (storage_ratio >= 0.15) {
    ok = false;
    detail << " per-task storage ratio " << storage_ratio;
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (elapsed >= 1.0) {
    ok = false;
    detail << " closed-form accounting took " << elapsed << "s";
  }
  detail << " (single=" << single.total << ", suite=" << ai.total
         << ", trainable=" << ai.trainable << ")";
  verdict("closed-form parameter accounting reproduces the published totals", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 9

void check_frontend() {
  bool ok = true;
  std::ostringstream detail;
  auto sine = [](double hz, double seconds, double amp) {
    WavClip clip;
    clip.sample_rate = 16000;
    const auto n = static_cast<std::size_t>(seconds * 16000.0);
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      clip.samples[i] = amp * std::sin(2.0 * 3.14159265358979323846 * hz * i / 16000.0);
    }
    return clip;
  };

  FrontendConfig cfg;
  auto one_second = log_mel(sine(440.0, 1.0, 0.5), cfg);
  auto five_seconds = log_mel(sine(440.0, 5.0, 0.5), cfg);
  if (one_second.n_mels != 128 || one_second.frames != 101) {
    ok = false;
    detail << " 1s clip gave " << one_second.n_mels << "x" << one_second.frames;
  }
  if (five_seconds.n_mels != 128 || five_seconds.frames != 501) {
    ok = false;
    detail << " 5s clip gave " << five_seconds.n_mels << "x" << five_seconds.frames;
  }

  WavClip silence;
  silence.sample_rate = 16000;
  silence.samples.assign(16000, 0.0);
  auto quiet = log_mel(silence, cfg);
  for (double v : quiet.values->data) {
    if (v != std::log(1e-10)) {
      ok = false;
      detail << " silence did not floor at log(1e-10)";
      break;
    }
  }

  // 1 kHz tone: the energy peak must sit in the filter that owns 1 kHz
  auto tone = log_mel(sine(1000.0, 1.0, 0.8), cfg);
  const std::size_t n_fft = frontend_fft_size(400);
  auto fb = mel_filterbank(128, n_fft, 16000.0, 0.0, 8000.0);
  const auto bin = static_cast<std::size_t>(std::lround(1000.0 * n_fft / 16000.0));
  std::size_t oracle = 0;
  double best = -1.0;
  for (std::size_t m = 0; m < 128; ++m) {
    if (fb[m][bin] > best) {
      best = fb[m][bin];
      oracle = m;
    }
  }
  std::size_t peak = 0;
  double peak_val = -1e300;
  for (std::size_t m = 0; m < 128; ++m) {
    double mean = 0.0;
    for (std::size_t f = 10; f + 10 < tone.frames; ++f) mean += tone.values->data[m * tone.frames + f];
    if (mean > peak_val) {
      peak_val = mean;
      peak = m;
    }
  }
  if (std::llabs(static_cast<long long>(peak) - static_cast<long long>(oracle)) > 1) {
    ok = false;
    detail << " tone peak row " << peak << " vs filterbank row " << oracle;
  }
  verdict("audio frontend reproduces the reference geometry, silence floor and tone placement",
          ok, detail.str());
}

}  // namespace

int main() {
  check_complexity_table();
  check_mask_formula();
  check_degenerate_equivalence();
  check_gradient_suite();

  auto runs = run_reference_protocol();
  {
    std::ostringstream detail;
    detail << "backbone frozen=" << (runs.ai_backbone_frozen ? "yes" : "no");
    verdict("adapter-incremental training never rewrites a backbone byte",
            runs.ai_backbone_frozen, detail.str());
  }
  {
    std::ostringstream detail;
    detail << "forgetting adapter-inc=" << runs.ai_forgetting
           << " model-inc=" << runs.mi_forgetting << " model-seq=" << runs.ms_forgetting;
    const bool ok = runs.ai_retention_bitwise && runs.ai_forgetting == 0.0 &&
                    runs.mi_forgetting == 0.0 && runs.ms_forgetting > 0.2;
    verdict("isolated-task modes forget nothing while sequential fine-tuning forgets badly", ok,
            detail.str());
  }
  {
    bool ok = runs.ai_train_acc.size() == 3 && runs.ai_final_test_acc.size() == 3;
    std::ostringstream detail;
    detail << "train=[";
    for (double a : runs.ai_train_acc) {
      detail << " " << a;
      if (a < 0.9) ok = false;
    }
    detail << " ] test=[";
    for (double a : runs.ai_final_test_acc) {
      detail << " " << a;
      if (a < 0.8) ok = false;
    }
    detail << " ]";
    verdict("adapters learn every task on the reference protocol", ok, detail.str());
  }
  check_param_accounting();
  check_frontend();
  {
    const bool ok = runs.ai_repeat_identical && runs.ai_roundtrip_bitwise;
    std::ostringstream detail;
    detail << "repeat identical=" << (runs.ai_repeat_identical ? "yes" : "no")
           << " checkpoint round-trip bitwise=" << (runs.ai_roundtrip_bitwise ? "yes" : "no");
    verdict("reference runs are reproducible and checkpoints restore bitwise", ok, detail.str());
  }

  if (g_failures > 0) {
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
  }
  std::printf("all 10 acceptance criteria passed\n");
  return 0;
}

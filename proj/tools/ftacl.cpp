#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ftacl/accounting.hpp"
#include "ftacl/audio.hpp"
#include "ftacl/io.hpp"
#include "ftacl/synthetic.hpp"
#include "ftacl/ticl.hpp"

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("FTACL_SEED")) {
    return std::stoull(env);
  }
  return 7;
}

std::string analyze_row(const ftacl::ComplexityReport& r, bool kv) {
  std::ostringstream os;
  if (kv) {
    os << "m=" << r.m << "\n"
       << "t=" << r.t << "\n"
       << "o_gsa_over_d=" << r.o_gsa_over_d << "\n"
       << "o_fta_over_d=" << r.o_fta_over_d << "\n"
       << "k=" << r.k_display() << "\n";
  } else {
    os << r.m << " " << r.t << " " << r.o_gsa_over_d << " " << r.o_fta_over_d << " "
       << r.k_display() << "\n";
  }
  return os.str();
}

int run(int argc, char** argv) {
  CLI::App app{"Factorized-attention audio transformer toolkit"};
  app.require_subcommand(1);

  // ---- analyze ----
  auto* analyze = app.add_subcommand("analyze", "Attention complexity for a spectrogram shape");
  analyze->set_config("--config");
  std::size_t freq_bins = 0, frames = 0, d = 768, kernel = 16, stride = 10;
  double duration_s = 0.0;
  std::size_t sample_rate = 16000;
  bool kv = false;
  analyze->add_option("--freq-bins", freq_bins, "Spectrogram frequency bins");
  analyze->add_option("--frames", frames, "Spectrogram time frames");
  analyze->add_option("--duration-s", duration_s, "Clip duration in seconds");
  analyze->add_option("--sample-rate", sample_rate, "Sample rate for --duration-s");
  analyze->add_option("--d", d, "Embedding dimension");
  analyze->add_option("--kernel", kernel, "Tokenizer kernel size");
  analyze->add_option("--stride", stride, "Tokenizer stride");
  analyze->add_flag("--kv", kv, "Machine-readable key=value output");

  // ---- features ----
  auto* features = app.add_subcommand("features", "WAV to log-mel tensor file");
  features->set_config("--config");
  std::string wav_in, ftt_out;
  ftacl::FrontendConfig fe;
  features->add_option("input", wav_in, "Input .wav (PCM-16)")->required();
  features->add_option("output", ftt_out, "Output tensor file")->required();
  features->add_option("--n-mels", fe.n_mels, "Mel bins");
  features->add_option("--win-ms", fe.win_ms, "Window length (ms)");
  features->add_option("--hop-ms", fe.hop_ms, "Hop length (ms)");
  features->add_option("--fmin", fe.fmin, "Filterbank lower edge (Hz)");
  features->add_option("--fmax", fe.fmax, "Filterbank upper edge (Hz), 0 = Nyquist");

  // ---- params ----
  auto* params = app.add_subcommand("params", "Parameter and storage accounting");
  params->set_config("--config");
  std::string preset, mode_str = "full";
  std::size_t tasks = 1;
  ftacl::ModelDims dims;
  std::vector<std::size_t> classes;
  params->add_option("--preset", preset, "Named preset: paper-full")
      ->check(CLI::IsMember({"paper-full"}));
  params->add_option("--mode", mode_str, "full|model-seq|model-inc|adapter-inc|linear-probe")
      ->check(CLI::IsMember({"full", "model-seq", "model-inc", "adapter-inc", "linear-probe"}));
  params->add_option("--tasks", tasks, "Number of sequential tasks");
  params->add_option("--d", dims.d, "Embedding dimension");
  params->add_option("--layers", dims.layers, "Encoder layers");
  params->add_option("--mlp-ratio", dims.mlp_ratio, "MLP expansion ratio");
  params->add_option("--in-channels", dims.in_channels, "Patch-embed input channels");
  params->add_option("--kernel", dims.kernel, "Patch kernel size");
  params->add_option("--pos-m", dims.pos_grid.m, "Position-embedding grid rows");
  params->add_option("--pos-t", dims.pos_grid.t, "Position-embedding grid cols");
  params->add_option("--d-bottleneck", dims.adapter_bottleneck, "Adapter bottleneck dim");
  params->add_option("--classes", classes, "Per-task head sizes");

  // ---- ticl / train ----
  ftacl::TiclConfig tcfg;
  tcfg.seed = default_seed();
  ftacl::SyntheticTaskConfig scfg;
  std::string run_dir, ticl_mode = "adapter-inc";
  std::size_t n_tasks = 3;

  auto add_ticl_options = [&](CLI::App* cmd) {
    cmd->set_config("--config");
    cmd->add_option("--run-dir", run_dir, "Output run directory")->required();
    cmd->add_option("--seed", tcfg.seed, "RNG seed");
    cmd->add_option("--epochs", tcfg.epochs, "Training epochs per task");
    cmd->add_option("--batch", tcfg.batch, "Batch size");
    cmd->add_option("--lr", tcfg.lr, "Adam learning rate");
    cmd->add_option("--d", tcfg.d, "Embedding dimension");
    cmd->add_option("--layers", tcfg.layers, "Encoder layers");
    cmd->add_option("--heads", tcfg.heads, "Attention heads");
    cmd->add_option("--d-bottleneck", tcfg.d_bottleneck, "Adapter bottleneck dim");
    cmd->add_option("--freq-bins", tcfg.freq_bins, "Synthetic spectrogram rows");
    cmd->add_option("--frames", tcfg.frames, "Synthetic spectrogram cols");
    cmd->add_option("--classes", scfg.classes, "Classes per synthetic task");
    cmd->add_option("--train-per-class", scfg.train_per_class, "Training samples per class");
    cmd->add_option("--test-per-class", scfg.test_per_class, "Test samples per class");
    cmd->add_option("--noise", scfg.noise, "Gaussian noise level");
  };
  auto* ticl = app.add_subcommand("ticl", "Sequential-task training run on synthetic tasks");
  add_ticl_options(ticl);
  ticl->add_option("--mode", ticl_mode, "model-seq|model-inc|adapter-inc")
      ->check(CLI::IsMember({"model-seq", "model-inc", "adapter-inc"}));
  ticl->add_option("--tasks", n_tasks, "Number of sequential tasks");

  auto* train = app.add_subcommand("train", "Single-task adapter training (ticl --tasks 1)");
  add_ticl_options(train);

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "Re-evaluate a saved run on its synthetic tasks");
  std::string eval_dir;
  int eval_task = -1;
  eval->add_option("--run-dir", eval_dir, "Run directory")->required();
  eval->add_option("--task", eval_task, "Task id (-1 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (analyze->parsed()) {
    if (frames == 0 && duration_s > 0) {
      ftacl::WavClip probe;
      probe.sample_rate = sample_rate;
      ftacl::FrontendConfig fcfg;
      const std::size_t hop = static_cast<std::size_t>(
          std::lround(fcfg.hop_ms * static_cast<double>(sample_rate) / 1000.0));
      const auto samples = static_cast<std::size_t>(std::lround(duration_s * sample_rate));
      frames = samples / hop + 1;
      if (freq_bins == 0) freq_bins = fcfg.n_mels;
    }
    if (freq_bins == 0 || frames == 0) {
      throw std::invalid_argument("analyze: need --freq-bins/--frames or --duration-s");
    }
    ftacl::TokenizerConfig tok;
    tok.kernel = kernel;
    tok.stride = stride;
    const auto grid = ftacl::token_grid(freq_bins, frames, tok);
    std::cout << analyze_row(ftacl::complexity_report(grid, d), kv);
    return 0;
  }

  if (features->parsed()) {
    const auto clip = ftacl::decode_wav(ftacl::read_file_bytes(wav_in));
    const auto spec = ftacl::log_mel(clip, fe);
    ftacl::write_ftt(ftt_out, *spec.values);
    std::cout << "wrote " << ftt_out << " shape [" << spec.n_mels << ", " << spec.frames
              << "]\n";
    return 0;
  }

  if (params->parsed()) {
    if (preset == "paper-full") dims = ftacl::paper_full_dims();
    if (classes.empty()) classes = ftacl::paper_task_classes();
    ftacl::CountMode mode = ftacl::CountMode::FullFinetune;
    if (mode_str == "model-seq") mode = ftacl::CountMode::ModelSequential;
    else if (mode_str == "model-inc") mode = ftacl::CountMode::ModelIncremental;
    else if (mode_str == "adapter-inc") mode = ftacl::CountMode::AdapterIncremental;
    else if (mode_str == "linear-probe") mode = ftacl::CountMode::LinearProbe;
    std::cout << ftacl::format_param_report(ftacl::param_report(dims, mode, tasks, classes));
    return 0;
  }

  if (ticl->parsed() || train->parsed()) {
    if (train->parsed()) {
      n_tasks = 1;
      ticl_mode = "adapter-inc";
    }
    tcfg.mode = ftacl::parse_train_mode(ticl_mode);
    scfg.seed = tcfg.seed;
    scfg.freq_bins = tcfg.freq_bins;
    scfg.frames = tcfg.frames;
    auto specs = ftacl::make_synthetic_tasks(scfg, n_tasks);
    ftacl::TiclRun run(tcfg);
    for (const auto& spec : specs) run.register_task(spec);
    for (const auto& spec : specs) {
      auto log = run.train_task(spec.task_id, spec.train);
      std::cout << "task " << spec.task_id << ": final loss " << log.epoch_loss.back()
                << ", train accuracy " << log.train_accuracy << "\n";
    }
    run.save(run_dir);
    // synthetic suite parameters, so `eval` can regenerate the test sets
    std::ofstream syn(run_dir + "/synthetic.txt");
    syn << "classes=" << scfg.classes << "\ntrain_per_class=" << scfg.train_per_class
        << "\ntest_per_class=" << scfg.test_per_class << "\nnoise=" << scfg.noise
        << "\nseed=" << scfg.seed << "\nfreq_bins=" << scfg.freq_bins
        << "\nframes=" << scfg.frames << "\ntasks=" << n_tasks << "\n";
    std::cout << run.matrix_report();
    return 0;
  }

  if (eval->parsed()) {
    auto run = ftacl::TiclRun::load(eval_dir);
    std::ifstream syn(eval_dir + "/synthetic.txt");
    if (!syn) throw ftacl::IoError(eval_dir + "/synthetic.txt not found");
    ftacl::SyntheticTaskConfig sc;
    std::size_t saved_tasks = 0;
    std::string line;
    while (std::getline(syn, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
      if (key == "classes") sc.classes = std::stoul(val);
      else if (key == "train_per_class") sc.train_per_class = std::stoul(val);
      else if (key == "test_per_class") sc.test_per_class = std::stoul(val);
      else if (key == "noise") sc.noise = std::stod(val);
      else if (key == "seed") sc.seed = std::stoull(val);
      else if (key == "freq_bins") sc.freq_bins = std::stoul(val);
      else if (key == "frames") sc.frames = std::stoul(val);
      else if (key == "tasks") saved_tasks = std::stoul(val);
    }
    auto specs = ftacl::make_synthetic_tasks(sc, saved_tasks);
    for (const auto& spec : specs) {
      if (eval_task >= 0 && spec.task_id != eval_task) continue;
      const double acc = run.evaluate_accuracy(spec.task_id, spec.test);
      std::cout << "task " << spec.task_id << " accuracy=" << acc << "\n";
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError&) {
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#include "ftacl/ticl.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ftacl/io.hpp"
#include "ftacl/optim.hpp"

namespace ftacl {
namespace {

constexpr int kCheckpointVersion = 1;

Spectrogram as_spectrogram(const TensorPtr& x) {
  Spectrogram s;
  s.n_mels = x->shape.at(0);
  s.frames = x->shape.at(1);
  s.values = x;
  return s;
}

void set_grad_flag(const std::vector<TensorPtr>& params, bool v) {
  for (const auto& p : params) {
    p->requires_grad = v;
    if (v) {
      p->grad.assign(p->data.size(), 0.0);
    } else {
      p->grad.clear();
    }
  }
}

void put_params(Bundle& b, const std::string& prefix, const std::vector<TensorPtr>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    b.put(prefix + std::to_string(i), params[i]);
  }
}

void take_params(const Bundle& b, const std::string& prefix,
                 const std::vector<TensorPtr>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto t = b.get(prefix + std::to_string(i));
    if (t->shape != params[i]->shape) {
      throw IoError("checkpoint tensor " + prefix + std::to_string(i) + " has shape " +
                    shape_str(t->shape) + ", expected " + shape_str(params[i]->shape));
    }
    params[i]->data = t->data;
  }
}

}  // namespace

std::string train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::ModelSequential: return "model-seq";
    case TrainMode::ModelIncremental: return "model-inc";
    case TrainMode::AdapterIncremental: return "adapter-inc";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "model-seq") return TrainMode::ModelSequential;
  if (s == "model-inc") return TrainMode::ModelIncremental;
  if (s == "adapter-inc") return TrainMode::AdapterIncremental;
  throw std::invalid_argument("unknown training mode '" + s + "'");
}

TiclRun::TiclRun(const TiclConfig& cfg) : cfg_(cfg) {
  backbone_ = make_model(cfg.attention_for(cfg.mode), cfg.seed);
  freeze_everything();
}

AstModel TiclRun::make_model(AttentionMode mode, std::uint64_t seed) const {
  TokenizerConfig tcfg;
  tcfg.kernel = cfg_.kernel;
  tcfg.stride = cfg_.stride;
  tcfg.embed_dim = cfg_.d;
  tcfg.in_channels = 1;
  EncoderConfig ecfg;
  ecfg.layers = cfg_.layers;
  ecfg.embed_dim = cfg_.d;
  ecfg.heads = cfg_.heads;
  ecfg.mlp_ratio = cfg_.mlp_ratio;
  ecfg.attention_mode = mode;
  const TokenGrid grid = token_grid(cfg_.freq_bins, cfg_.frames, tcfg);
  std::mt19937_64 rng(seed);
  return init_model(tcfg, ecfg, grid, rng);
}

void TiclRun::register_task(const TaskSpec& spec) {
  if (spec.task_id != static_cast<int>(task_classes_.size())) {
    throw std::invalid_argument("register_task: task ids must be registered in order; " +
                                std::to_string(spec.task_id) + " is " +
                                (spec.task_id < static_cast<int>(task_classes_.size())
                                     ? "already registered"
                                     : "out of sequence"));
  }
  const std::uint64_t task_seed = cfg_.seed * 0x5851F42D4C957F2Dull + spec.task_id + 1;
  std::mt19937_64 rng(task_seed);
  switch (cfg_.mode) {
    case TrainMode::AdapterIncremental: {
      AdapterConfig acfg;
      acfg.d = cfg_.d;
      acfg.d_bottleneck = cfg_.d_bottleneck;
      adapters_.push_back(init_adapter_set(acfg, cfg_.layers, rng));
      set_grad_flag(adapters_.back().params(), false);
      break;
    }
    case TrainMode::ModelIncremental:
      task_models_.push_back(make_model(AttentionMode::GSA, task_seed));
      task_models_.back().set_requires_grad(false);
      break;
    case TrainMode::ModelSequential:
      break;  // shared trunk, new head only
  }
  heads_.push_back(init_head(cfg_.d, spec.n_classes, rng));
  set_grad_flag(heads_.back().params(), false);
  task_names_.push_back(spec.name);
  task_classes_.push_back(spec.n_classes);
  test_sets_.push_back(spec.test);
}

const AstModel& TiclRun::model_for(int task_id) const {
  if (cfg_.mode == TrainMode::ModelIncremental) return task_models_.at(task_id);
  return backbone_;
}

std::vector<TensorPtr> TiclRun::trainable_params(int task_id) {
  std::vector<TensorPtr> params;
  switch (cfg_.mode) {
    case TrainMode::AdapterIncremental:
      params = adapters_.at(task_id).params();
      break;
    case TrainMode::ModelIncremental:
      params = task_models_.at(task_id).params();
      break;
    case TrainMode::ModelSequential:
      params = backbone_.params();
      break;
  }
  for (const auto& p : heads_.at(task_id).params()) params.push_back(p);
  return params;
}

void TiclRun::freeze_everything() {
  backbone_.set_requires_grad(false);
  for (auto& m : task_models_) m.set_requires_grad(false);
  for (auto& a : adapters_) set_grad_flag(a.params(), false);
  for (auto& h : heads_) set_grad_flag(h.params(), false);
}

TensorPtr TiclRun::route_and_predict(const TensorPtr& x, int task_id) const {
  if (task_id < 0 || task_id >= static_cast<int>(task_classes_.size())) {
    throw std::invalid_argument("route_and_predict: unknown task id " +
                                std::to_string(task_id));
  }
  const AdapterSet* adapters =
      cfg_.mode == TrainMode::AdapterIncremental ? &adapters_.at(task_id) : nullptr;
  return forward(model_for(task_id), as_spectrogram(x), heads_.at(task_id), adapters);
}

double TiclRun::evaluate_accuracy(int task_id, const Dataset& data) const {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto logits = route_and_predict(data.x[i], task_id);
    const auto begin = logits->data.begin();
    const int pred = static_cast<int>(
        std::distance(begin, std::max_element(begin, logits->data.end())));
    if (pred == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainLog TiclRun::train_task(int task_id, const Dataset& train) {
  if (task_id < 0 || task_id >= static_cast<int>(task_classes_.size())) {
    throw std::invalid_argument("train_task: task " + std::to_string(task_id) +
                                " is not registered");
  }
  if (task_id != static_cast<int>(acc_.size())) {
    throw std::invalid_argument("train_task: tasks must be trained in registration order");
  }
  if (train.size() == 0) throw std::invalid_argument("train_task: empty dataset");
  for (int y : train.y) {
    if (y < 0 || static_cast<std::size_t>(y) >= task_classes_[task_id]) {
      throw std::invalid_argument("train_task: label out of range");
    }
  }

  freeze_everything();
  auto params = trainable_params(task_id);
  set_grad_flag(params, true);
  AdamConfig acfg;
  acfg.lr = cfg_.lr;
  Adam opt(params, acfg);  // optimizer state starts fresh for every task

  std::mt19937_64 shuffle_rng(cfg_.seed * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull +
                              static_cast<std::uint64_t>(task_id));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainLog log;
  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch) {
      const std::size_t end = std::min(start + cfg_.batch, order.size());
      opt.zero_grad();
      TensorPtr logits;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        auto row = route_and_predict(train.x[order[i]], task_id);
        logits = logits ? concat_rows(logits, row) : row;
        labels.push_back(train.y[order[i]]);
      }
      auto loss = cross_entropy(logits, labels);
      backward(loss);
      opt.step();
      epoch_loss += loss->data[0];
      ++batches;
    }
    log.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  freeze_everything();
  log.train_accuracy = evaluate_accuracy(task_id, train);

  // evaluation row: test splits of this and all earlier tasks
  std::vector<double> row;
  for (int j = 0; j <= task_id; ++j) row.push_back(evaluate_accuracy(j, test_sets_[j]));
  acc_.push_back(std::move(row));
  return log;
}

double TiclRun::forgetting_summary() const {
  if (acc_.size() < 2) return 0.0;
  const auto& last = acc_.back();
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < acc_.size(); ++j) {
    worst = std::max(worst, acc_[j][j] - last[j]);
  }
  return worst;
}

std::string TiclRun::matrix_report() const {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "mode=" << train_mode_name(cfg_.mode) << "\n";
  os << "seed=" << cfg_.seed << "\n";
  os << "tasks=" << task_classes_.size() << "\n";
  for (std::size_t i = 0; i < acc_.size(); ++i)
    for (std::size_t j = 0; j < acc_[i].size(); ++j)
      os << "A[" << i << "][" << j << "]=" << acc_[i][j] << "\n";
  os << "forgetting=" << forgetting_summary() << "\n";
  return os.str();
}

std::uint32_t TiclRun::backbone_checksum() const {
  if (cfg_.mode == TrainMode::ModelIncremental) {
    std::uint32_t crc = 0;
    for (const auto& m : task_models_) crc = crc ^ model_checksum(m);
    return crc;
  }
  return model_checksum(backbone_);
}

void TiclRun::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::ofstream cfg_out(dir + "/config.txt");
  if (!cfg_out) throw IoError("cannot write " + dir + "/config.txt");
  cfg_out << "mode=" << train_mode_name(cfg_.mode) << "\n"
          << "seed=" << cfg_.seed << "\n"
          << "d=" << cfg_.d << "\n"
          << "layers=" << cfg_.layers << "\n"
          << "heads=" << cfg_.heads << "\n"
          << "mlp_ratio=" << cfg_.mlp_ratio << "\n"
          << "d_bottleneck=" << cfg_.d_bottleneck << "\n"
          << "kernel=" << cfg_.kernel << "\n"
          << "stride=" << cfg_.stride << "\n"
          << "freq_bins=" << cfg_.freq_bins << "\n"
          << "frames=" << cfg_.frames << "\n"
          << "epochs=" << cfg_.epochs << "\n"
          << "batch=" << cfg_.batch << "\n"
          << "lr=" << cfg_.lr << "\n"
          << "tasks=" << task_classes_.size() << "\n";
  for (std::size_t i = 0; i < task_classes_.size(); ++i) {
    cfg_out << "task_" << i << "_name=" << task_names_[i] << "\n";
    cfg_out << "task_" << i << "_classes=" << task_classes_[i] << "\n";
  }
  cfg_out.close();

  if (cfg_.mode != TrainMode::ModelIncremental) {
    Bundle b;
    b.meta["kind"] = "backbone";
    b.meta["version"] = std::to_string(kCheckpointVersion);
    put_params(b, "p", backbone_.params());
    write_bundle(dir + "/backbone.ftb", b);
  }
  for (std::size_t i = 0; i < task_classes_.size(); ++i) {
    Bundle b;
    b.meta["version"] = std::to_string(kCheckpointVersion);
    b.meta["task_id"] = std::to_string(i);
    b.meta["task_name"] = task_names_[i];
    b.meta["classes"] = std::to_string(task_classes_[i]);
    b.meta["d"] = std::to_string(cfg_.d);
    switch (cfg_.mode) {
      case TrainMode::AdapterIncremental:
        b.meta["kind"] = "adapters+head";
        b.meta["d_bottleneck"] = std::to_string(cfg_.d_bottleneck);
        put_params(b, "a", adapters_[i].params());
        break;
      case TrainMode::ModelIncremental:
        b.meta["kind"] = "model+head";
        put_params(b, "p", task_models_[i].params());
        break;
      case TrainMode::ModelSequential:
        b.meta["kind"] = "head";
        break;
    }
    put_params(b, "h", heads_[i].params());
    write_bundle(dir + "/task_" + std::to_string(i) + ".ftb", b);
  }

  std::ofstream matrix_out(dir + "/matrix.txt");
  if (!matrix_out) throw IoError("cannot write " + dir + "/matrix.txt");
  matrix_out << matrix_report();
}

TiclRun TiclRun::load(const std::string& dir) {
  std::ifstream in(dir + "/config.txt");
  if (!in) throw IoError("cannot open " + dir + "/config.txt");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw IoError(dir + "/config.txt: missing key '" + k + "'");
    return it->second;
  };
  TiclConfig cfg;
  cfg.mode = parse_train_mode(need("mode"));
  cfg.seed = std::stoull(need("seed"));
  cfg.d = std::stoul(need("d"));
  cfg.layers = std::stoul(need("layers"));
  cfg.heads = std::stoul(need("heads"));
  cfg.mlp_ratio = std::stoul(need("mlp_ratio"));
  cfg.d_bottleneck = std::stoul(need("d_bottleneck"));
  cfg.kernel = std::stoul(need("kernel"));
  cfg.stride = std::stoul(need("stride"));
  cfg.freq_bins = std::stoul(need("freq_bins"));
  cfg.frames = std::stoul(need("frames"));
  cfg.epochs = std::stoul(need("epochs"));
  cfg.batch = std::stoul(need("batch"));
  cfg.lr = std::stod(need("lr"));

  TiclRun run(cfg);
  const std::size_t n_tasks = std::stoul(need("tasks"));
  for (std::size_t i = 0; i < n_tasks; ++i) {
    TaskSpec spec;
    spec.task_id = static_cast<int>(i);
    spec.name = need("task_" + std::to_string(i) + "_name");
    spec.n_classes = std::stoul(need("task_" + std::to_string(i) + "_classes"));
    run.register_task(spec);
  }

  if (cfg.mode != TrainMode::ModelIncremental) {
    Bundle b = read_bundle(dir + "/backbone.ftb");
    take_params(b, "p", run.backbone_.params());
  }
  for (std::size_t i = 0; i < n_tasks; ++i) {
    Bundle b = read_bundle(dir + "/task_" + std::to_string(i) + ".ftb");
    if (b.meta.count("version") && std::stoi(b.meta.at("version")) != kCheckpointVersion) {
      throw IoError("unsupported checkpoint version in task bundle " + std::to_string(i));
    }
    switch (cfg.mode) {
      case TrainMode::AdapterIncremental:
        take_params(b, "a", run.adapters_[i].params());
        break;
      case TrainMode::ModelIncremental:
        take_params(b, "p", run.task_models_[i].params());
        break;
      case TrainMode::ModelSequential:
        break;
    }
    take_params(b, "h", run.heads_[i].params());
  }

  // restore the accuracy matrix if a report was written
  std::ifstream matrix_in(dir + "/matrix.txt");
  if (matrix_in) {
    while (std::getline(matrix_in, line)) {
      if (line.rfind("A[", 0) != 0) continue;
      std::size_t i, j;
      double v;
      if (std::sscanf(line.c_str(), "A[%zu][%zu]=%lf", &i, &j, &v) == 3) {
        if (run.acc_.size() <= i) run.acc_.resize(i + 1);
        if (run.acc_[i].size() <= j) run.acc_[i].resize(j + 1, 0.0);
        run.acc_[i][j] = v;
      }
    }
  }
  return run;
}

}  // namespace ftacl

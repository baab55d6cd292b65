#pragma once

#include <optional>

#include "ftacl/encoder.hpp"
#include "ftacl/synthetic.hpp"

namespace ftacl {

enum class TrainMode { ModelSequential, ModelIncremental, AdapterIncremental };

std::string train_mode_name(TrainMode m);
TrainMode parse_train_mode(const std::string& s);

struct TiclConfig {
  TrainMode mode = TrainMode::AdapterIncremental;
  std::uint64_t seed = 7;
  // desk-scale model dims
  std::size_t d = 32;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t mlp_ratio = 4;
  std::size_t d_bottleneck = 8;
  std::size_t kernel = 16;
  std::size_t stride = 10;
  std::size_t freq_bins = 32;
  std::size_t frames = 32;
  // training
  std::size_t epochs = 30;
  std::size_t batch = 16;
  double lr = 3e-4;

  /// Adapter-incremental runs use factorized attention; the full-model modes
  /// use global attention.
  AttentionMode attention_for(TrainMode m) const {
    return m == TrainMode::AdapterIncremental ? AttentionMode::FTA : AttentionMode::GSA;
  }
};

struct TrainLog {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
};

/// Sequential-task training state: shared frozen backbone plus per-task
/// adapters/heads (AdapterIncremental), independent models (ModelIncremental)
/// or one evolving trunk with per-task heads (ModelSequential).
class TiclRun {
 public:
  explicit TiclRun(const TiclConfig& cfg);

  /// Registers task metadata and the test split, and allocates the per-task
  /// unit for the configured mode. Training data is NOT retained here.
  void register_task(const TaskSpec& spec);

  /// Trains task `task_id` on `train` only; earlier tasks' training data is
  /// never reachable from this interface.
  TrainLog train_task(int task_id, const Dataset& train);

  TensorPtr route_and_predict(const TensorPtr& x, int task_id) const;

  double evaluate_accuracy(int task_id, const Dataset& data) const;

  /// acc[i][j] = accuracy on task j's test split right after training task i.
  const std::vector<std::vector<double>>& accuracy_matrix() const { return acc_; }
  double forgetting_summary() const;
  std::string matrix_report() const;

  std::uint32_t backbone_checksum() const;

  void save(const std::string& dir) const;
  static TiclRun load(const std::string& dir);

  const TiclConfig& config() const { return cfg_; }
  std::size_t task_count() const { return task_classes_.size(); }
  std::size_t trained_count() const { return acc_.size(); }

 private:
  AstModel make_model(AttentionMode mode, std::uint64_t seed) const;
  const AstModel& model_for(int task_id) const;
  std::vector<TensorPtr> trainable_params(int task_id);
  void freeze_everything();

  TiclConfig cfg_;
  AstModel backbone_;                    // AI and MS
  std::vector<AstModel> task_models_;    // MI
  std::vector<AdapterSet> adapters_;     // AI
  std::vector<Head> heads_;
  std::vector<std::string> task_names_;
  std::vector<std::size_t> task_classes_;
  std::vector<Dataset> test_sets_;
  std::vector<std::vector<double>> acc_;
};

}  // namespace ftacl

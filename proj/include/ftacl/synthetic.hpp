#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftacl/tensor.hpp"

namespace ftacl {

/// Labeled spectrogram samples; x holds [freq_bins, frames] tensors.
struct Dataset {
  std::vector<TensorPtr> x;
  std::vector<int> y;

  std::size_t size() const { return x.size(); }
};

/// One task of a TI-CL suite. Training data is carried here but handed to the
/// harness only at train time.
struct TaskSpec {
  int task_id = 0;
  std::string name;
  std::size_t n_classes = 0;
  Dataset train;
  Dataset test;
};

struct SyntheticTaskConfig {
  std::size_t classes = 4;
  std::size_t train_per_class = 50;
  std::size_t test_per_class = 12;
  std::size_t freq_bins = 32;
  std::size_t frames = 32;
  double noise = 0.25;
  std::uint64_t seed = 7;
};

/// Noiseless class pattern, distinct per global class id. Families cycle
/// through tone rows, chirps, and checkerboards.
TensorPtr render_pattern(std::size_t global_class, std::size_t freq_bins, std::size_t frames);

/// Pairwise class-disjoint tasks; each sample is a class pattern plus
/// Gaussian noise. Deterministic per seed, uniform label histogram.
std::vector<TaskSpec> make_synthetic_tasks(const SyntheticTaskConfig& cfg, std::size_t n_tasks);

}  // namespace ftacl

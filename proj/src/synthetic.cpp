#include "ftacl/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace ftacl {

TensorPtr render_pattern(std::size_t global_class, std::size_t freq_bins, std::size_t frames) {
  auto t = make_tensor({freq_bins, frames});
  const std::size_t family = global_class % 3;
  const std::size_t variant = global_class / 3;
  switch (family) {
    case 0: {  // bright horizontal band
      const std::size_t row = (3 + 5 * variant) % (freq_bins - 1);
      for (std::size_t r = row; r < std::min(row + 2, freq_bins); ++r)
        for (std::size_t c = 0; c < frames; ++c) t->data[r * frames + c] = 2.0;
      break;
    }
    case 1: {  // chirp: diagonal ridge, slope direction alternates per variant
      const std::size_t offset = (2 + 7 * variant) % freq_bins;
      const bool up = (variant % 2) == 0;
      for (std::size_t c = 0; c < frames; ++c) {
        const std::size_t r =
            up ? (offset + c) % freq_bins : (offset + freq_bins - (c % freq_bins)) % freq_bins;
        t->data[r * frames + c] = 2.0;
      }
      break;
    }
    default: {  // checkerboard
      const std::size_t period = 3 + 2 * (variant % 4);
      const std::size_t phase = variant % 2;
      for (std::size_t r = 0; r < freq_bins; ++r)
        for (std::size_t c = 0; c < frames; ++c)
          if ((r / period + c / period + phase) % 2 == 0) t->data[r * frames + c] = 2.0;
      break;
    }
  }
  return t;
}

namespace {

Dataset render_split(const SyntheticTaskConfig& cfg, std::size_t task, std::size_t per_class,
                     std::mt19937_64& rng) {
  Dataset ds;
  std::normal_distribution<double> noise(0.0, cfg.noise);
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    const auto pattern = render_pattern(task * cfg.classes + c, cfg.freq_bins, cfg.frames);
    for (std::size_t s = 0; s < per_class; ++s) {
      auto x = make_tensor({cfg.freq_bins, cfg.frames}, pattern->data);
      if (cfg.noise > 0) {
        for (double& v : x->data) v += noise(rng);
      }
      ds.x.push_back(std::move(x));
      ds.y.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

}  // namespace

std::vector<TaskSpec> make_synthetic_tasks(const SyntheticTaskConfig& cfg, std::size_t n_tasks) {
  if (n_tasks < 1) throw std::invalid_argument("make_synthetic_tasks: n_tasks must be >= 1");
  if (cfg.classes < 2) throw std::invalid_argument("make_synthetic_tasks: need >= 2 classes");
  std::vector<TaskSpec> tasks;
  tasks.reserve(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull + t);
    TaskSpec spec;
    spec.task_id = static_cast<int>(t);
    spec.name = "synthetic-" + std::to_string(t);
    spec.n_classes = cfg.classes;
    spec.train = render_split(cfg, t, cfg.train_per_class, rng);
    spec.test = render_split(cfg, t, cfg.test_per_class, rng);
    tasks.push_back(std::move(spec));
  }
  return tasks;
}

}  // namespace ftacl

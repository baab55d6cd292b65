#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftacl/grid.hpp"

namespace ftacl {

/// Attention-pair accounting for one grid: o_gsa = (MT+1)^2 * d,
/// o_fta = (MT(M+T+1)+1) * d, k = o_fta / o_gsa.
struct ComplexityReport {
  std::size_t m = 0, t = 0, d = 0;
  std::uint64_t o_gsa_over_d = 0;
  std::uint64_t o_fta_over_d = 0;
  std::uint64_t o_gsa = 0;
  std::uint64_t o_fta = 0;
  double k = 0.0;

  /// k rounded to 3 decimals with trailing zeros trimmed ("0.2", "0.105").
  std::string k_display() const;
};

ComplexityReport complexity_report(const TokenGrid& grid, std::size_t d);

/// Model geometry for closed-form parameter counting.
struct ModelDims {
  std::size_t d = 768;
  std::size_t layers = 12;
  std::size_t heads = 12;
  std::size_t mlp_ratio = 4;
  std::size_t in_channels = 3;
  std::size_t kernel = 16;
  TokenGrid pos_grid{24, 24};
  std::size_t adapter_bottleneck = 64;
};

/// ViT-B/16-like dims matching the full-scale backbone.
ModelDims paper_full_dims();

/// Class counts of the three full-scale tasks, in training order.
std::vector<std::size_t> paper_task_classes();

enum class CountMode { FullFinetune, ModelSequential, ModelIncremental, AdapterIncremental,
                       LinearProbe };

std::string count_mode_name(CountMode m);

struct ParamReport {
  CountMode mode;
  std::size_t tasks = 1;
  // components
  std::uint64_t tokenizer = 0;   // patch embed + class token + pos embed
  std::uint64_t encoder = 0;     // layers + final LN
  std::uint64_t heads = 0;       // all task heads
  std::uint64_t adapters = 0;    // all task adapter sets
  // summary
  std::uint64_t backbone = 0;    // tokenizer + encoder, counted once per model copy
  std::uint64_t total = 0;       // everything needed for inference after all tasks
  std::uint64_t trainable = 0;   // trainable while fitting one task
  std::uint64_t storage_total_bytes = 0;     // f32 bytes of everything saved
  std::uint64_t storage_per_task_bytes = 0;  // f32 bytes written when a task finishes
};

std::uint64_t backbone_param_count(const ModelDims& dims);
std::uint64_t head_param_count(const ModelDims& dims, std::size_t classes);
std::uint64_t adapter_set_param_count(const ModelDims& dims);

/// Closed-form counts; task_classes gives the head size per task (cycled if
/// fewer entries than tasks).
ParamReport param_report(const ModelDims& dims, CountMode mode, std::size_t tasks,
                         const std::vector<std::size_t>& task_classes);

std::string format_param_report(const ParamReport& r);

}  // namespace ftacl

#include "ftacl/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ftacl {

std::string ComplexityReport::k_display() const {
  const double rounded = std::round(k * 1000.0) / 1000.0;
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << rounded;
  std::string s = os.str();
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

ComplexityReport complexity_report(const TokenGrid& grid, std::size_t d) {
  if (grid.m < 1 || grid.t < 1 || d < 1) {
    throw std::invalid_argument("complexity_report: M, T, d must all be >= 1");
  }
  ComplexityReport r;
  r.m = grid.m;
  r.t = grid.t;
  r.d = d;
  const std::uint64_t mt = static_cast<std::uint64_t>(grid.m) * grid.t;
  r.o_gsa_over_d = (mt + 1) * (mt + 1);
  r.o_fta_over_d = mt * (grid.m + grid.t + 1) + 1;
  r.o_gsa = r.o_gsa_over_d * d;
  r.o_fta = r.o_fta_over_d * d;
  r.k = static_cast<double>(r.o_fta_over_d) / static_cast<double>(r.o_gsa_over_d);
  return r;
}

ModelDims paper_full_dims() { return ModelDims{}; }

std::vector<std::size_t> paper_task_classes() { return {35, 50, 28}; }

std::string count_mode_name(CountMode m) {
  switch (m) {
    case CountMode::FullFinetune: return "full";
    case CountMode::ModelSequential: return "model-seq";
    case CountMode::ModelIncremental: return "model-inc";
    case CountMode::AdapterIncremental: return "adapter-inc";
    case CountMode::LinearProbe: return "linear-probe";
  }
  return "?";
}

namespace {

std::uint64_t tokenizer_param_count(const ModelDims& dims) {
  const std::uint64_t d = dims.d;
  const std::uint64_t patch = d * dims.in_channels * dims.kernel * dims.kernel + d;
  const std::uint64_t cls = d;
  const std::uint64_t pos = static_cast<std::uint64_t>(dims.pos_grid.seq_len()) * d;
  return patch + cls + pos;
}

std::uint64_t encoder_param_count(const ModelDims& dims) {
  const std::uint64_t d = dims.d;
  const std::uint64_t rd = dims.mlp_ratio * d;
  const std::uint64_t per_layer = 2 * d                 // ln1
                                  + 4 * (d * d + d)     // q, k, v, o
                                  + 2 * d               // ln2
                                  + d * rd + rd         // mlp in
                                  + rd * d + d;         // mlp out
  return dims.layers * per_layer + 2 * d;  // + final LN
}

}  // namespace

std::uint64_t backbone_param_count(const ModelDims& dims) {
  return tokenizer_param_count(dims) + encoder_param_count(dims);
}

std::uint64_t head_param_count(const ModelDims& dims, std::size_t classes) {
  return static_cast<std::uint64_t>(dims.d) * classes + classes;
}

std::uint64_t adapter_set_param_count(const ModelDims& dims) {
  const std::uint64_t d = dims.d, db = dims.adapter_bottleneck;
  const std::uint64_t per_adapter = d * db + db + 9 * db * db + db + db * d + d;
  return 2ull * dims.layers * per_adapter;
}

ParamReport param_report(const ModelDims& dims, CountMode mode, std::size_t tasks,
                         const std::vector<std::size_t>& task_classes) {
  if (tasks < 1) throw std::invalid_argument("param_report: tasks must be >= 1");
  if (task_classes.empty()) throw std::invalid_argument("param_report: no task classes");
  ParamReport r;
  r.mode = mode;
  r.tasks = tasks;
  r.tokenizer = tokenizer_param_count(dims);
  r.encoder = encoder_param_count(dims);
  r.backbone = r.tokenizer + r.encoder;

  std::uint64_t heads_sum = 0, max_head = 0;
  for (std::size_t i = 0; i < tasks; ++i) {
    const std::uint64_t h = head_param_count(dims, task_classes[i % task_classes.size()]);
    heads_sum += h;
    max_head = std::max(max_head, h);
  }
  r.heads = heads_sum;

  const std::uint64_t adapter_set = adapter_set_param_count(dims);
  constexpr std::uint64_t kF32 = 4;
  switch (mode) {
    case CountMode::FullFinetune:
    case CountMode::ModelSequential:
      r.total = r.backbone + heads_sum;
      r.trainable = r.backbone + max_head;
      r.storage_per_task_bytes = (r.backbone + max_head) * kF32;
      break;
    case CountMode::ModelIncremental:
      r.total = tasks * r.backbone + heads_sum;
      r.trainable = r.backbone + max_head;
      r.storage_per_task_bytes = (r.backbone + max_head) * kF32;
      break;
    case CountMode::AdapterIncremental:
      r.adapters = tasks * adapter_set;
      r.total = r.backbone + r.adapters + heads_sum;
      r.trainable = adapter_set + max_head;
      r.storage_per_task_bytes = (adapter_set + max_head) * kF32;
      break;
    case CountMode::LinearProbe:
      r.total = r.backbone + heads_sum;
      r.trainable = max_head;
      r.storage_per_task_bytes = max_head * kF32;
      break;
  }
  r.storage_total_bytes = r.total * kF32;
  return r;
}

std::string format_param_report(const ParamReport& r) {
  auto millions = [](std::uint64_t n) {
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << static_cast<double>(n) / 1e6 << "M";
    return os.str();
  };
  std::ostringstream os;
  os << "mode=" << count_mode_name(r.mode) << " tasks=" << r.tasks << "\n";
  os << "  tokenizer            " << r.tokenizer << " (" << millions(r.tokenizer) << ")\n";
  os << "  encoder              " << r.encoder << " (" << millions(r.encoder) << ")\n";
  os << "  backbone             " << r.backbone << " (" << millions(r.backbone) << ")\n";
  os << "  heads                " << r.heads << " (" << millions(r.heads) << ")\n";
  os << "  adapters             " << r.adapters << " (" << millions(r.adapters) << ")\n";
  os << "  total                " << r.total << " (" << millions(r.total) << ")\n";
  os << "  trainable            " << r.trainable << " (" << millions(r.trainable) << ")\n";
  os << "  storage_total_bytes  " << r.storage_total_bytes << "\n";
  os << "  storage_per_task     " << r.storage_per_task_bytes << "\n";
  return os.str();
}

}  // namespace ftacl

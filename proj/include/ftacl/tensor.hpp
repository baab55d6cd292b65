#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftacl {

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

class TensorError : public std::runtime_error {
 public:
  explicit TensorError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major tensor. Values are held as f64 in memory; `dtype` only
/// controls on-disk width. Ops return new tensors and never mutate inputs,
/// so a TensorPtr is safe to share across threads once construction is done.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized iff requires_grad
  bool requires_grad = false;
  Dtype dtype = Dtype::f64;

  // autograd wiring; empty for leaves
  std::vector<TensorPtr> parents;
  std::function<void()> backward_fn;

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  void zero_grad();
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

TensorPtr make_tensor(std::vector<std::size_t> shape, bool requires_grad = false);
TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr make_scalar(double value, bool requires_grad = false);

/// Throws TensorError if any element is NaN or Inf. Ops call this on their
/// outputs; non-finite values are an error surface, not a silent state.
void ensure_finite(const Tensor& t, const char* op_name);

/// Reverse-mode sweep from `loss` (must be a single-element tensor).
/// Topologically orders the graph, seeds d(loss)/d(loss) = 1 and runs each
/// node's backward exactly once. Leaf tensors with requires_grad end up with
/// populated grad buffers.
void backward(const TensorPtr& loss);

/// Topological order of the subgraph that can influence grad flow (nodes with
/// requires_grad), loss last. Exposed for tests.
std::vector<Tensor*> topo_order(const TensorPtr& loss);

}  // namespace ftacl

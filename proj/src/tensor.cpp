#include "ftacl/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace ftacl {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void Tensor::zero_grad() {
  if (requires_grad) grad.assign(data.size(), 0.0);
}

TensorPtr make_tensor(std::vector<std::size_t> shape, bool requires_grad) {
  for (std::size_t e : shape) {
    if (e == 0) throw TensorError("tensor extents must be positive, got " + shape_str(shape));
  }
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(shape_numel(t->shape), 0.0);
  t->requires_grad = requires_grad;
  if (requires_grad) t->grad.assign(t->data.size(), 0.0);
  return t;
}

TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                      bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw TensorError("value count " + std::to_string(values.size()) +
                      " does not match shape " + shape_str(shape));
  }
  auto t = make_tensor(std::move(shape), requires_grad);
  t->data = std::move(values);
  return t;
}

TensorPtr make_scalar(double value, bool requires_grad) {
  return make_tensor({1}, {value}, requires_grad);
}

void ensure_finite(const Tensor& t, const char* op_name) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw TensorError(std::string(op_name) + ": non-finite value in output");
    }
  }
}

std::vector<Tensor*> topo_order(const TensorPtr& loss) {
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> visited;
  // iterative post-order DFS
  struct Frame {
    Tensor* node;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  if (loss->requires_grad) stack.push_back({loss.get(), 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child == 0) {
      if (visited.count(f.node)) {
        stack.pop_back();
        continue;
      }
      visited.insert(f.node);
    }
    if (f.next_child < f.node->parents.size()) {
      Tensor* child = f.node->parents[f.next_child++].get();
      if (child->requires_grad && !visited.count(child)) {
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const TensorPtr& loss) {
  if (loss->size() != 1) {
    throw TensorError("backward: loss must be a single-element tensor, got " +
                      shape_str(loss->shape));
  }
  if (!loss->requires_grad) {
    throw TensorError("backward: loss does not require grad");
  }
  auto order = topo_order(loss);
  for (Tensor* t : order) {
    if (t->grad.size() != t->data.size()) t->grad.assign(t->data.size(), 0.0);
  }
  loss->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn();
  }
}

}  // namespace ftacl

#pragma once

#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qbm/error.hpp"

namespace qbm {

using Shape = std::vector<int>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

inline size_t shape_numel(const Shape& s) {
  size_t n = 1;
  for (int d : s) n *= size_t(d);
  return n;
}

// Dense row-major tensor with optional gradient storage. Copies are shallow:
// a Tensor is a handle onto shared storage, which is what lets backward
// closures write gradients that the caller observes.
template <class R>
class Tensor {
  struct Storage {
    Shape shape;
    std::vector<R> value;
    std::vector<R> grad;  // sized iff requires_grad
    bool requires_grad = false;
  };

 public:
  using value_type = R;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    Tensor t;
    t.d_ = std::make_shared<Storage>();
    t.d_->shape = std::move(shape);
    t.d_->value.assign(shape_numel(t.d_->shape), R(0));
    t.d_->requires_grad = requires_grad;
    if (requires_grad) t.d_->grad.assign(t.d_->value.size(), R(0));
    return t;
  }

  static Tensor from(Shape shape, std::vector<R> values,
                     bool requires_grad = false) {
    if (shape_numel(shape) != values.size()) {
      throw ShapeError("tensor: " + shape_str(shape) + " does not hold " +
                       std::to_string(values.size()) + " values");
    }
    Tensor t = zeros(std::move(shape), requires_grad);
    t.d_->value = std::move(values);
    return t;
  }

  static Tensor scalar(R v, bool requires_grad = false) {
    return from({1}, {v}, requires_grad);
  }

  bool defined() const { return bool(d_); }
  const Shape& shape() const { return d_->shape; }
  int ndim() const { return int(d_->shape.size()); }
  int dim(int i) const { return d_->shape[size_t(i)]; }
  size_t numel() const { return d_->value.size(); }
  bool requires_grad() const { return d_ && d_->requires_grad; }

  // A Tensor is a handle onto shared storage: accessors hand out mutable
  // views even through const handles, the way shared_ptr does.
  R* data() const { return d_->value.data(); }
  std::vector<R>& values() const { return d_->value; }

  R* grad() const {
    require_grad_storage();
    return d_->grad.data();
  }
  std::vector<R>& grad_values() const {
    require_grad_storage();
    return d_->grad;
  }

  void zero_grad() const {
    if (d_ && d_->requires_grad) d_->grad.assign(d_->value.size(), R(0));
  }

  // Identity of the underlying storage; two handles to one tensor compare equal.
  bool same_storage(const Tensor& other) const { return d_ == other.d_; }

 private:
  void require_grad_storage() const {
    if (!d_ || !d_->requires_grad) {
      throw Error("tensor: gradient requested on a non-differentiable tensor");
    }
  }

  std::shared_ptr<Storage> d_;
};

// Reverse-mode tape: operations are recorded in forward (topological) order,
// and one backward pass replays each rule exactly once in reverse.
template <class R>
class Tape {
 public:
  void record(std::function<void()> backward_rule) {
    rules_.push_back(std::move(backward_rule));
  }

  void backward(const Tensor<R>& loss) {
    if (!loss.defined() || loss.numel() != 1) {
      throw ShapeError("backward: loss must be a scalar tensor");
    }
    if (!loss.requires_grad()) {
      throw Error("backward: loss does not require gradients");
    }
    loss.grad()[0] += R(1);
    for (auto it = rules_.rbegin(); it != rules_.rend(); ++it) (*it)();
  }

  void clear() { rules_.clear(); }
  size_t size() const { return rules_.size(); }

 private:
  std::vector<std::function<void()>> rules_;
};

}  // namespace qbm

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "genet/common.hpp"
#include "genet/tensor.hpp"

namespace genet {

// Reverse-mode record. Ops append in execution order, which is a topological
// order by construction (an op's inputs always carry smaller ids). Backward
// walks the records once, in reverse.
class Tape {
 public:
  // Registers a leaf (parameter or input). Returns a tracked view sharing
  // storage with `t`.
  Tensor leaf(const Tensor& t, bool requires_grad = true) {
    Tensor tracked = t;
    tracked.id = new_id(t, requires_grad, /*is_op_output=*/false);
    tracked.requires_grad = requires_grad;
    return tracked;
  }

  // Marks `out` as produced by an op over `inputs`. `backward` receives the
  // tape plus the output id and must route grad_ptr(out_id) to the inputs via
  // add_grad. If no input is tracked, nothing is recorded (constant subgraph).
  Tensor track_op(const std::string& name, const std::vector<long>& inputs,
                  Tensor out, std::function<void(Tape&, long)> backward) {
    bool needs = false;
    for (long id : inputs)
      if (id >= 0 && entries_[static_cast<size_t>(id)].requires_grad) needs = true;
    if (!needs) return out;
    out.id = new_id(out, /*requires_grad=*/true, /*is_op_output=*/true);
    out.requires_grad = true;
    ops_.push_back(OpRecord{name, inputs, out.id, std::move(backward)});
    return out;
  }

  bool wants_grad(long id) const {
    return id >= 0 && entries_[static_cast<size_t>(id)].requires_grad;
  }

  // Gradient sink used by backward closures.
  void add_grad(long id, const Tensor& g) {
    if (!wants_grad(id)) return;
    Entry& e = entries_[static_cast<size_t>(id)];
    if (!e.grad.defined()) {
      e.grad = g.clone();
      return;
    }
    if (!e.grad.same_shape(g))
      throw ShapeError(cat("gradient shape mismatch for id ", id));
    double* acc = e.grad.mutable_data();
    const double* src = g.data();
    const int64_t n = g.numel();
    for (int64_t i = 0; i < n; ++i) acc[i] += src[i];
  }

  // Gradient of the recorded loss w.r.t. `id`, or nullptr if none reached it.
  const Tensor* grad_ptr(long id) const {
    if (id < 0 || id >= static_cast<long>(entries_.size())) return nullptr;
    const Tensor& g = entries_[static_cast<size_t>(id)].grad;
    return g.defined() ? &g : nullptr;
  }

  // Gradient for a tracked tensor; untouched tensors map to zeros.
  Tensor grad(const Tensor& t) const {
    if (t.id < 0 || t.id >= static_cast<long>(entries_.size()))
      throw ContractError("grad(): tensor is not tracked on this tape");
    const Entry& e = entries_[static_cast<size_t>(t.id)];
    if (e.grad.defined()) return e.grad;
    return Tensor::zeros(t.shape());
  }

  void backward(const Tensor& loss) {
    if (loss.id < 0) throw ContractError("backward: loss is not tracked on this tape");
    if (!loss.is_scalar())
      throw ContractError(cat("backward: loss must be scalar, got ", shape_str(loss)));
    if (ran_backward_) throw ContractError("backward: tape already consumed");
    ran_backward_ = true;
    add_grad(loss.id, Tensor::full(loss.shape(), 1.0));
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      if (grad_ptr(it->output) == nullptr) continue;  // dead branch
      it->backward(*this, it->output);
    }
  }

  size_t num_ops() const { return ops_.size(); }
  size_t num_tracked() const { return entries_.size(); }

 private:
  struct Entry {
    std::vector<int64_t> shape;
    bool requires_grad = false;
    bool is_op_output = false;
    Tensor grad;
  };
  struct OpRecord {
    std::string name;
    std::vector<long> inputs;
    long output;
    std::function<void(Tape&, long)> backward;
  };

  long new_id(const Tensor& t, bool requires_grad, bool is_op_output) {
    entries_.push_back(Entry{t.shape(), requires_grad, is_op_output, Tensor()});
    return static_cast<long>(entries_.size()) - 1;
  }

  std::vector<Entry> entries_;
  std::vector<OpRecord> ops_;
  bool ran_backward_ = false;
};

}  // namespace genet

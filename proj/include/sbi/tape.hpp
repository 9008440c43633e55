#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sbi/param_store.hpp"
#include "sbi/tensor.hpp"

namespace sbi {

struct Var {
  std::int32_t idx = -1;
  bool valid() const { return idx >= 0; }
};

// Dynamic reverse-mode tape over Tensors. Ops append nodes; backward() replays
// the recorded closures in reverse and accumulates gradients into leaf nodes
// and bound ParamStore blocks. A tape is single-threaded and cleared between
// training steps. With recording off, ops only compute values.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Var input(Tensor value);                                   // constant leaf
  Var leaf(Tensor value);                                    // leaf whose gradient is wanted
  Var param(ParamStore& ps, const std::string& name);        // trainable leaf

  const Tensor& val(Var x) const { return nodes_[check(x)].val; }
  const Tensor& grad_of(Var x);
  double scalar(Var x) const;

  // Fills gradients of every leaf/param reachable from `output`.
  // `output` must hold exactly one value.
  void backward(Var output);

  void clear();
  std::size_t node_count() const { return nodes_.size(); }
  bool recording() const { return recording_; }

  // Elementwise; shapes must match exactly.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }

  // x[B,in] * (W masked)^T + bias. W is [out,in]; bias rank-1 [out] or invalid for none.
  Var linear(Var x, Var W, Var bias, std::shared_ptr<const Tensor> mask = nullptr);

  Var leaky_relu(Var a, double slope);
  Var sigmoid(Var a);
  Var tanh_op(Var a);
  Var softplus(Var a);
  Var exp_op(Var a);
  Var log_op(Var a);
  // Smooth symmetric clamp: limit * tanh(a / limit); |out| < limit, slope 1 at 0.
  Var soft_clamp(Var a, double limit);

  Var sum(Var a);       // -> [1]
  Var mean(Var a);      // -> [1]
  Var rowsum(Var a);    // [B,C] -> [B,1]

  Var reshape(Var a, std::vector<std::int64_t> shape);        // same element count/order
  Var slice_cols(Var a, std::int64_t from, std::int64_t to);  // half-open
  Var concat_cols(const std::vector<Var>& parts);
  Var gather_rows(Var a, std::vector<std::int64_t> rows);
  Var permute_cols(Var a, std::vector<std::int64_t> perm);  // out[:,j] = a[:,perm[j]]

  Var logsumexp_rows(Var a);            // [B,C] -> [B,1], stable
  Var softmax_rows(Var a);              // [B,C] -> [B,C]
  Var mul_colvec(Var a, Var v);         // a[B,C] * v[B,1] broadcast
  Var repeat_col(Var v, std::int64_t c);  // [B,1] -> [B,c]

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void(Tape&)> back;  // empty for leaves / non-recording
  };

  std::int32_t push(Tensor value, std::function<void(Tape&)> back = {});
  std::int32_t check(Var x) const;
  Tensor& g(std::int32_t idx);
  const Tensor& v(std::int32_t idx) const { return nodes_[static_cast<std::size_t>(idx)].val; }

  std::vector<Node> nodes_;
  bool recording_;
  bool ran_backward_ = false;
};

// Wx + b for rank-1 x; the building block behind every conditioner. Recorded on the tape.
Var affine(Tape& t, Var W, Var b, Var x);

enum class Activation { LeakyRelu, Sigmoid, Softplus, Tanh };
Var activation(Tape& t, Activation kind, Var x, double slope = 0.01);

}  // namespace sbi

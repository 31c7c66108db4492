#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crfn/errors.hpp"
#include "crfn/rng.hpp"

namespace crfn::ad {

// Dense node shapes: rank-1 vectors (scalars are 1-vectors) and rank-2
// row-major matrices. Nothing here broadcasts except Tape::scale.
struct Shape {
  int nd = 1;
  int d0 = 1;
  int d1 = 1;  // only meaningful when nd == 2

  int size() const { return nd == 2 ? d0 * d1 : d0; }
  bool operator==(const Shape& o) const {
    return nd == o.nd && d0 == o.d0 && (nd == 1 || d1 == o.d1);
  }
  std::string str() const;
};

inline Shape vec(int d) { return Shape{1, d, 1}; }
inline Shape mat(int r, int c) { return Shape{2, r, c}; }
inline Shape scalar() { return Shape{1, 1, 1}; }

// One node of the differentiation graph. data/grad are flat row-major
// arrays of length shape.size(); grad is all-zero at creation. backward_rule
// accumulates into the parents' grad given this node's grad.
struct Value {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  std::vector<Value*> parents;
  std::function<void(Value&)> backward_rule;
  int64_t id = -1;  // construction index on the owning tape; -1 for parameters

  double scalar_value() const { return data[0]; }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

// Dynamic tape: owns every intermediate node of one forward pass, in
// construction order (which is therefore a valid topological order).
// Parameters live outside the tape (see ParamStore) and only receive
// gradient accumulation.
class Tape {
 public:
  Value* constant(Shape s, std::span<const double> v);
  Value* constant(Shape s, double fill = 0.0);
  Value* scalar_const(double v) { return constant(scalar(), v); }

  // elementwise
  Value* add(Value* a, Value* b);
  Value* sub(Value* a, Value* b);
  Value* mul(Value* a, Value* b);
  Value* add_scalar(Value* a, double c);
  Value* mul_scalar(Value* a, double c);
  Value* tanh(Value* x);
  Value* sigmoid(Value* x);
  Value* exp(Value* x);
  Value* clamp(Value* x, double lo, double hi);
  Value* minimum(Value* a, Value* b);
  // Broadcast of a scalar node over a vector; gradient reaches both the
  // scalar and the vector.
  Value* scale(Value* s, Value* x);

  // linear algebra
  Value* matmul(Value* A, Value* B);
  Value* matvec(Value* W, Value* x);
  Value* affine(Value* W, Value* x, Value* b) { return add(matvec(W, x), b); }
  Value* layer_norm(Value* x, Value* gain, Value* bias, double eps = 1e-5);

  // reductions and glue
  Value* mean_pair(Value* u, Value* w);
  Value* concat(Value* a, Value* b);
  Value* softmax_logprobs(Value* logits);
  Value* gather(Value* x, int index);
  Value* entropy(Value* logprobs);
  Value* sum(Value* x);
  Value* mean(Value* x);
  Value* add_n(std::span<Value* const> xs);

  // Seeds root->grad = 1 and sweeps the tape in reverse construction order.
  // Tape-node grads are reset at the start of every call, so each call adds
  // exactly one gradient contribution into parameter nodes; parameter grads
  // accumulate until ParamStore::zero_grad or adam_step.
  void backward(Value* root);

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

 private:
  Value* node(Shape s, std::vector<Value*> parents);
  std::deque<Value> nodes_;
};

// Parameter initializer: constant(c), uniform(lo,hi) or
// scaled_uniform(fan_in) = uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
struct InitSpec {
  enum class Kind { Constant, Uniform, ScaledUniform };
  Kind kind = Kind::Constant;
  double a = 0.0;
  double b = 0.0;
  int fan_in = 1;

  static InitSpec constant(double c) { return {Kind::Constant, c, 0.0, 1}; }
  static InitSpec uniform(double lo, double hi) {
    return {Kind::Uniform, lo, hi, 1};
  }
  static InitSpec scaled_uniform(int fan_in) {
    return {Kind::ScaledUniform, 0.0, 0.0, fan_in};
  }
};

// Named learnable parameters plus their Adam state. Insertion order is
// preserved and is the iteration/serialization order (determinism).
class ParamStore {
 public:
  Value* make_param(const std::string& name, Shape shape, InitSpec init,
                    Rng& rng);
  Value* find(const std::string& name);
  Value* at(const std::string& name);
  const Value* at(const std::string& name) const;
  bool contains(const std::string& name) const;
  size_t size() const { return order_.size(); }
  const std::vector<std::string>& names() const { return order_; }
  int64_t total_scalars() const;

  void zero_grad();
  double grad_norm() const;
  // Scales all gradients so the global L2 norm is at most max_norm.
  void clip_grad_norm(double max_norm);
  // Adam with bias correction; zeroes gradients afterwards.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8);

  // Binary checkpoint: name -> shape -> row-major f64 data. Bit-exact
  // round-trip. Adam state is not part of a checkpoint.
  void save(const std::string& path) const;
  // Fills existing entries by name; names and shapes must match exactly.
  void load(const std::string& path);

 private:
  struct Entry {
    std::unique_ptr<Value> value;
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    int64_t step_count = 0;
  };
  std::vector<std::string> order_;
  std::map<std::string, Entry> entries_;
};

// Central-difference gradient check. f rebuilds the forward graph from the
// store's parameters on the tape it is given and returns a scalar root.
// Returns max over parameter entries of
//   |analytic - central_difference| / max(1, |central_difference|).
double grad_check(ParamStore& store,
                  const std::function<Value*(Tape&)>& f, double eps = 1e-5);

}  // namespace crfn::ad

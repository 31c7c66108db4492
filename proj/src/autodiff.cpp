#include "crfn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace crfn::ad {

std::string Shape::str() const {
  char buf[48];
  if (nd == 1) {
    std::snprintf(buf, sizeof(buf), "[%d]", d0);
  } else {
    std::snprintf(buf, sizeof(buf), "[%dx%d]", d0, d1);
  }
  return buf;
}

namespace {

void require_same_shape(const char* op, const Value* a, const Value* b) {
  if (!(a->shape == b->shape)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a->shape.str() +
                     " vs " + b->shape.str());
  }
}

}  // namespace

Value* Tape::node(Shape s, std::vector<Value*> parents) {
  Value& v = nodes_.emplace_back();
  v.shape = s;
  v.data.assign(static_cast<size_t>(s.size()), 0.0);
  v.grad.assign(static_cast<size_t>(s.size()), 0.0);
  v.parents = std::move(parents);
  v.id = static_cast<int64_t>(nodes_.size()) - 1;
  return &v;
}

Value* Tape::constant(Shape s, std::span<const double> v) {
  if (static_cast<int>(v.size()) != s.size()) {
    throw ShapeError("constant: data length " + std::to_string(v.size()) +
                     " does not match shape " + s.str());
  }
  Value* n = node(s, {});
  std::copy(v.begin(), v.end(), n->data.begin());
  return n;
}

Value* Tape::constant(Shape s, double fill) {
  Value* n = node(s, {});
  std::fill(n->data.begin(), n->data.end(), fill);
  return n;
}

Value* Tape::add(Value* a, Value* b) {
  require_same_shape("add", a, b);
  Value* y = node(a->shape, {a, b});
  for (size_t i = 0; i < y->data.size(); ++i) y->data[i] = a->data[i] + b->data[i];
  y->backward_rule = [a, b](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i) {
      a->grad[i] += self.grad[i];
      b->grad[i] += self.grad[i];
    }
  };
  return y;
}

Value* Tape::sub(Value* a, Value* b) {
  require_same_shape("sub", a, b);
  Value* y = node(a->shape, {a, b});
  for (size_t i = 0; i < y->data.size(); ++i) y->data[i] = a->data[i] - b->data[i];
  y->backward_rule = [a, b](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i) {
      a->grad[i] += self.grad[i];
      b->grad[i] -= self.grad[i];
    }
  };
  return y;
}

Value* Tape::mul(Value* a, Value* b) {
  require_same_shape("mul", a, b);
  Value* y = node(a->shape, {a, b});
  for (size_t i = 0; i < y->data.size(); ++i) y->data[i] = a->data[i] * b->data[i];
  y->backward_rule = [a, b](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i) {
      a->grad[i] += self.grad[i] * b->data[i];
      b->grad[i] += self.grad[i] * a->data[i];
    }
  };
  return y;
}

Value* Tape::add_scalar(Value* a, double c) {
  Value* y = node(a->shape, {a});
  for (size_t i = 0; i < y->data.size(); ++i) y->data[i] = a->data[i] + c;
  y->backward_rule = [a](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
  };
  return y;
}

Value* Tape::mul_scalar(Value* a, double c) {
  Value* y = node(a->shape, {a});
  for (size_t i = 0; i < y->data.size(); ++i) y->data[i] = a->data[i] * c;
  y->backward_rule = [a, c](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * c;
  };
  return y;
}

// tanh/sigmoid saturate to the largest representable value strictly inside
// their open ranges, so downstream code can rely on the bounds exactly.
static const double kBelowOne = std::nextafter(1.0, 0.0);
static const double kAboveZero = std::nextafter(0.0, 1.0);

Value* Tape::tanh(Value* x) {
  Value* y = node(x->shape, {x});
  for (size_t i = 0; i < y->data.size(); ++i)
    y->data[i] = std::min(std::max(std::tanh(x->data[i]), -kBelowOne), kBelowOne);
  y->backward_rule = [x](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i)
      x->grad[i] += self.grad[i] * (1.0 - self.data[i] * self.data[i]);
  };
  return y;
}

Value* Tape::sigmoid(Value* x) {
  Value* y = node(x->shape, {x});
  for (size_t i = 0; i < y->data.size(); ++i)
    y->data[i] = std::min(std::max(1.0 / (1.0 + std::exp(-x->data[i])),
                                   kAboveZero), kBelowOne);
  y->backward_rule = [x](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i)
      x->grad[i] += self.grad[i] * self.data[i] * (1.0 - self.data[i]);
  };
  return y;
}

Value* Tape::exp(Value* x) {
  Value* y = node(x->shape, {x});
  for (size_t i = 0; i < y->data.size(); ++i) y->data[i] = std::exp(x->data[i]);
  y->backward_rule = [x](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i)
      x->grad[i] += self.grad[i] * self.data[i];
  };
  return y;
}

Value* Tape::clamp(Value* x, double lo, double hi) {
  Value* y = node(x->shape, {x});
  for (size_t i = 0; i < y->data.size(); ++i)
    y->data[i] = std::min(std::max(x->data[i], lo), hi);
  y->backward_rule = [x, lo, hi](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (x->data[i] >= lo && x->data[i] <= hi) x->grad[i] += self.grad[i];
  };
  return y;
}

Value* Tape::minimum(Value* a, Value* b) {
  require_same_shape("minimum", a, b);
  Value* y = node(a->shape, {a, b});
  for (size_t i = 0; i < y->data.size(); ++i)
    y->data[i] = std::min(a->data[i], b->data[i]);
  // ties route to a
  y->backward_rule = [a, b](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (a->data[i] <= b->data[i])
        a->grad[i] += self.grad[i];
      else
        b->grad[i] += self.grad[i];
    }
  };
  return y;
}

Value* Tape::scale(Value* s, Value* x) {
  if (s->shape.size() != 1) {
    throw ShapeError("scale: scaling node must be scalar, got " + s->shape.str());
  }
  Value* y = node(x->shape, {s, x});
  const double sv = s->data[0];
  for (size_t i = 0; i < y->data.size(); ++i) y->data[i] = sv * x->data[i];
  y->backward_rule = [s, x](Value& self) {
    double ds = 0.0;
    for (size_t i = 0; i < self.grad.size(); ++i) {
      ds += self.grad[i] * x->data[i];
      x->grad[i] += self.grad[i] * s->data[0];
    }
    s->grad[0] += ds;
  };
  return y;
}

Value* Tape::matmul(Value* A, Value* B) {
  if (A->shape.nd != 2 || B->shape.nd != 2 || A->shape.d1 != B->shape.d0) {
    throw ShapeError("matmul: shape mismatch " + A->shape.str() + " vs " +
                     B->shape.str());
  }
  const int m = A->shape.d0, k = A->shape.d1, n = B->shape.d1;
  Value* y = node(mat(m, n), {A, B});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += A->data[i * k + p] * B->data[p * n + j];
      y->data[i * n + j] = acc;
    }
  y->backward_rule = [A, B, m, k, n](Value& self) {
    // dA = G B^T, dB = A^T G
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          acc += self.grad[i * n + j] * B->data[p * n + j];
        A->grad[i * k + p] += acc;
      }
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i)
          acc += A->data[i * k + p] * self.grad[i * n + j];
        B->grad[p * n + j] += acc;
      }
  };
  return y;
}

Value* Tape::matvec(Value* W, Value* x) {
  if (W->shape.nd != 2 || x->shape.nd != 1 || W->shape.d1 != x->shape.d0) {
    throw ShapeError("matvec: shape mismatch " + W->shape.str() + " vs " +
                     x->shape.str());
  }
  const int m = W->shape.d0, k = W->shape.d1;
  Value* y = node(vec(m), {W, x});
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = &W->data[static_cast<size_t>(i) * k];
    for (int p = 0; p < k; ++p) acc += row[p] * x->data[p];
    y->data[i] = acc;
  }
  y->backward_rule = [W, x, m, k](Value& self) {
    for (int i = 0; i < m; ++i) {
      const double g = self.grad[i];
      if (g == 0.0) continue;
      double* wrow = &W->grad[static_cast<size_t>(i) * k];
      const double* row = &W->data[static_cast<size_t>(i) * k];
      for (int p = 0; p < k; ++p) {
        wrow[p] += g * x->data[p];
        x->grad[p] += g * row[p];
      }
    }
  };
  return y;
}

Value* Tape::layer_norm(Value* x, Value* gain, Value* bias, double eps) {
  require_same_shape("layer_norm", x, gain);
  require_same_shape("layer_norm", x, bias);
  if (x->shape.nd != 1 || x->shape.d0 < 1) {
    throw ShapeError("layer_norm: expected vector, got " + x->shape.str());
  }
  if (eps <= 0.0) throw ContractError("layer_norm: eps must be > 0");
  const int d = x->shape.d0;
  Value* y = node(x->shape, {x, gain, bias});
  double mu = 0.0;
  for (int i = 0; i < d; ++i) mu += x->data[i];
  mu /= d;
  double var = 0.0;
  for (int i = 0; i < d; ++i) {
    const double c = x->data[i] - mu;
    var += c * c;
  }
  var /= d;  // population variance
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> xhat(d);
  for (int i = 0; i < d; ++i) {
    xhat[i] = (x->data[i] - mu) * inv;
    y->data[i] = gain->data[i] * xhat[i] + bias->data[i];
  }
  y->backward_rule = [x, gain, bias, d, inv, xhat = std::move(xhat)](Value& self) {
    double mean_t = 0.0, mean_tx = 0.0;
    for (int i = 0; i < d; ++i) {
      const double t = self.grad[i] * gain->data[i];
      mean_t += t;
      mean_tx += t * xhat[i];
    }
    mean_t /= d;
    mean_tx /= d;
    for (int i = 0; i < d; ++i) {
      const double t = self.grad[i] * gain->data[i];
      x->grad[i] += inv * (t - mean_t - xhat[i] * mean_tx);
      gain->grad[i] += self.grad[i] * xhat[i];
      bias->grad[i] += self.grad[i];
    }
  };
  return y;
}

Value* Tape::mean_pair(Value* u, Value* w) {
  require_same_shape("mean_pair", u, w);
  Value* y = node(u->shape, {u, w});
  for (size_t i = 0; i < y->data.size(); ++i)
    y->data[i] = 0.5 * (u->data[i] + w->data[i]);
  y->backward_rule = [u, w](Value& self) {
    for (size_t i = 0; i < self.grad.size(); ++i) {
      u->grad[i] += 0.5 * self.grad[i];
      w->grad[i] += 0.5 * self.grad[i];
    }
  };
  return y;
}

Value* Tape::concat(Value* a, Value* b) {
  if (a->shape.nd != 1 || b->shape.nd != 1) {
    throw ShapeError("concat: expected vectors, got " + a->shape.str() +
                     " and " + b->shape.str());
  }
  const int na = a->shape.d0, nb = b->shape.d0;
  Value* y = node(vec(na + nb), {a, b});
  std::copy(a->data.begin(), a->data.end(), y->data.begin());
  std::copy(b->data.begin(), b->data.end(), y->data.begin() + na);
  y->backward_rule = [a, b, na, nb](Value& self) {
    for (int i = 0; i < na; ++i) a->grad[i] += self.grad[i];
    for (int i = 0; i < nb; ++i) b->grad[i] += self.grad[na + i];
  };
  return y;
}

Value* Tape::softmax_logprobs(Value* logits) {
  if (logits->shape.nd != 1) {
    throw ShapeError("softmax_logprobs: expected vector, got " +
                     logits->shape.str());
  }
  const int n = logits->shape.d0;
  Value* y = node(logits->shape, {logits});
  double mx = logits->data[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits->data[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(logits->data[i] - mx);
  const double lse = mx + std::log(z);
  for (int i = 0; i < n; ++i) y->data[i] = logits->data[i] - lse;
  y->backward_rule = [logits, n](Value& self) {
    double gsum = 0.0;
    for (int i = 0; i < n; ++i) gsum += self.grad[i];
    for (int i = 0; i < n; ++i)
      logits->grad[i] += self.grad[i] - std::exp(self.data[i]) * gsum;
  };
  return y;
}

Value* Tape::gather(Value* x, int index) {
  if (index < 0 || index >= x->shape.size()) {
    throw ContractError("gather: index " + std::to_string(index) +
                        " out of range for " + x->shape.str());
  }
  Value* y = node(scalar(), {x});
  y->data[0] = x->data[index];
  y->backward_rule = [x, index](Value& self) {
    x->grad[index] += self.grad[0];
  };
  return y;
}

Value* Tape::entropy(Value* logprobs) {
  if (logprobs->shape.nd != 1) {
    throw ShapeError("entropy: expected vector, got " + logprobs->shape.str());
  }
  const int n = logprobs->shape.d0;
  Value* y = node(scalar(), {logprobs});
  double h = 0.0;
  for (int i = 0; i < n; ++i) h -= std::exp(logprobs->data[i]) * logprobs->data[i];
  y->data[0] = h;
  y->backward_rule = [logprobs, n](Value& self) {
    for (int i = 0; i < n; ++i) {
      const double p = std::exp(logprobs->data[i]);
      logprobs->grad[i] -= self.grad[0] * p * (1.0 + logprobs->data[i]);
    }
  };
  return y;
}

Value* Tape::sum(Value* x) {
  Value* y = node(scalar(), {x});
  double acc = 0.0;
  for (double v : x->data) acc += v;
  y->data[0] = acc;
  y->backward_rule = [x](Value& self) {
    for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += self.grad[0];
  };
  return y;
}

Value* Tape::mean(Value* x) {
  const double n = static_cast<double>(x->shape.size());
  Value* y = node(scalar(), {x});
  double acc = 0.0;
  for (double v : x->data) acc += v;
  y->data[0] = acc / n;
  y->backward_rule = [x, n](Value& self) {
    const double g = self.grad[0] / n;
    for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += g;
  };
  return y;
}

Value* Tape::add_n(std::span<Value* const> xs) {
  if (xs.empty()) throw ContractError("add_n: empty operand list");
  for (Value* v : xs) require_same_shape("add_n", xs[0], v);
  Value* y = node(xs[0]->shape, std::vector<Value*>(xs.begin(), xs.end()));
  for (Value* v : xs)
    for (size_t i = 0; i < y->data.size(); ++i) y->data[i] += v->data[i];
  y->backward_rule = [](Value& self) {
    for (Value* p : self.parents)
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
  };
  return y;
}

void Tape::backward(Value* root) {
  if (root == nullptr || root->id < 0 ||
      root->id >= static_cast<int64_t>(nodes_.size()) ||
      &nodes_[static_cast<size_t>(root->id)] != root) {
    throw ContractError("backward: root is not a node of this tape");
  }
  if (root->shape.size() != 1) {
    throw ContractError("backward: root must be scalar, got " +
                        root->shape.str());
  }
  for (auto& n : nodes_) n.zero_grad();
  root->grad[0] = 1.0;
  for (int64_t i = root->id; i >= 0; --i) {
    Value& n = nodes_[static_cast<size_t>(i)];
    if (n.backward_rule) n.backward_rule(n);
  }
}

// ---------------------------------------------------------------------------
// ParamStore

Value* ParamStore::make_param(const std::string& name, Shape shape,
                              InitSpec init, Rng& rng) {
  if (entries_.count(name)) {
    throw ConfigError("make_param: duplicate parameter name '" + name + "'");
  }
  auto v = std::make_unique<Value>();
  v->shape = shape;
  const size_t n = static_cast<size_t>(shape.size());
  v->data.resize(n);
  v->grad.assign(n, 0.0);
  switch (init.kind) {
    case InitSpec::Kind::Constant:
      std::fill(v->data.begin(), v->data.end(), init.a);
      break;
    case InitSpec::Kind::Uniform:
      for (auto& x : v->data) x = rng.uniform(init.a, init.b);
      break;
    case InitSpec::Kind::ScaledUniform: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(init.fan_in));
      for (auto& x : v->data) x = rng.uniform(-bound, bound);
      break;
    }
  }
  Entry e;
  e.value = std::move(v);
  e.adam_m.assign(n, 0.0);
  e.adam_v.assign(n, 0.0);
  Value* out = e.value.get();
  entries_.emplace(name, std::move(e));
  order_.push_back(name);
  return out;
}

Value* ParamStore::find(const std::string& name) {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : it->second.value.get();
}

Value* ParamStore::at(const std::string& name) {
  Value* v = find(name);
  if (!v) throw ConfigError("ParamStore: unknown parameter '" + name + "'");
  return v;
}

const Value* ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw ConfigError("ParamStore: unknown parameter '" + name + "'");
  return it->second.value.get();
}

bool ParamStore::contains(const std::string& name) const {
  return entries_.count(name) != 0;
}

int64_t ParamStore::total_scalars() const {
  int64_t n = 0;
  for (const auto& name : order_) n += entries_.at(name).value->shape.size();
  return n;
}

void ParamStore::zero_grad() {
  for (const auto& name : order_) entries_.at(name).value->zero_grad();
}

double ParamStore::grad_norm() const {
  double acc = 0.0;
  for (const auto& name : order_)
    for (double g : entries_.at(name).value->grad) acc += g * g;
  return std::sqrt(acc);
}

void ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (const auto& name : order_)
    for (double& g : entries_.at(name).value->grad) g *= s;
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  for (const auto& name : order_) {
    Entry& e = entries_.at(name);
    e.step_count += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(e.step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(e.step_count));
    Value& v = *e.value;
    for (size_t i = 0; i < v.data.size(); ++i) {
      const double g = v.grad[i];
      e.adam_m[i] = beta1 * e.adam_m[i] + (1.0 - beta1) * g;
      e.adam_v[i] = beta2 * e.adam_v[i] + (1.0 - beta2) * g * g;
      const double mhat = e.adam_m[i] / bc1;
      const double vhat = e.adam_v[i] / bc2;
      v.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    v.zero_grad();
  }
}

namespace {

constexpr char kMagic[8] = {'C', 'R', 'F', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("checkpoint: truncated file");
  return v;
}

}  // namespace

void ParamStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("checkpoint: cannot open '" + path + "' for write");
  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put(os, static_cast<uint32_t>(order_.size()));
  for (const auto& name : order_) {
    const Entry& e = entries_.at(name);
    put(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Shape& s = e.value->shape;
    put(os, static_cast<uint8_t>(s.nd));
    put(os, static_cast<uint32_t>(s.d0));
    if (s.nd == 2) put(os, static_cast<uint32_t>(s.d1));
    os.write(reinterpret_cast<const char*>(e.value->data.data()),
             static_cast<std::streamsize>(e.value->data.size() * sizeof(double)));
  }
  if (!os) throw ConfigError("checkpoint: write failed for '" + path + "'");
}

void ParamStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("checkpoint: bad magic in '" + path + "'");
  if (get<uint32_t>(is) != kVersion)
    throw DataError("checkpoint: unsupported version in '" + path + "'");
  const uint32_t count = get<uint32_t>(is);
  if (count != order_.size())
    throw DataError("checkpoint: parameter count mismatch (" +
                    std::to_string(count) + " in file, " +
                    std::to_string(order_.size()) + " in store)");
  for (uint32_t k = 0; k < count; ++k) {
    const uint32_t name_len = get<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw DataError("checkpoint: truncated file");
    Shape s;
    s.nd = get<uint8_t>(is);
    s.d0 = static_cast<int>(get<uint32_t>(is));
    if (s.nd == 2) s.d1 = static_cast<int>(get<uint32_t>(is));
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw DataError("checkpoint: unknown parameter '" + name + "'");
    if (!(it->second.value->shape == s))
      throw DataError("checkpoint: shape mismatch for '" + name + "': file " +
                      s.str() + ", store " + it->second.value->shape.str());
    is.read(reinterpret_cast<char*>(it->second.value->data.data()),
            static_cast<std::streamsize>(s.size() * sizeof(double)));
    if (!is) throw DataError("checkpoint: truncated file");
  }
}

double grad_check(ParamStore& store, const std::function<Value*(Tape&)>& f,
                  double eps) {
  if (eps < 1e-7 || eps > 1e-3)
    throw ContractError("grad_check: eps out of [1e-7, 1e-3]");

  store.zero_grad();
  {
    Tape tape;
    Value* root = f(tape);
    tape.backward(root);
  }
  // snapshot analytic grads
  std::vector<std::vector<double>> analytic;
  analytic.reserve(store.size());
  for (const auto& name : store.names()) analytic.push_back(store.at(name)->grad);

  auto eval = [&]() {
    Tape tape;
    return f(tape)->data[0];
  };

  double worst = 0.0;
  size_t pi = 0;
  for (const auto& name : store.names()) {
    Value* p = store.at(name);
    for (size_t i = 0; i < p->data.size(); ++i) {
      const double keep = p->data[i];
      p->data[i] = keep + eps;
      const double fp = eval();
      p->data[i] = keep - eps;
      const double fm = eval();
      p->data[i] = keep;
      const double fd = (fp - fm) / (2.0 * eps);
      const double err =
          std::abs(analytic[pi][i] - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
    ++pi;
  }
  store.zero_grad();
  return worst;
}

}  // namespace crfn::ad

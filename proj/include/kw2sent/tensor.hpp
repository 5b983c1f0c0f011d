#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kw2sent/errors.hpp"
#include "kw2sent/rng.hpp"

namespace kw2sent {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

namespace detail {

template <class Real>
struct TensorStorage {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), Real(0));
  }
};

}  // namespace detail

/// Dense row-major tensor handle with shared storage. Copying a Tensor
/// aliases the same values and gradient, so parameter registries and typed
/// members can refer to one underlying array.
template <class Real>
class Tensor {
 public:
  using Storage = detail::TensorStorage<Real>;

  Tensor() = default;

  static Tensor zeros(Shape shape) {
    return from_vector(std::move(shape), {}, Real(0));
  }

  static Tensor full(Shape shape, Real v) {
    return from_vector(std::move(shape), {}, v);
  }

  static Tensor scalar(Real v) { return full({1}, v); }

  static Tensor from(Shape shape, std::vector<Real> data) {
    if (shape_numel(shape) != data.size()) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->shape = std::move(shape);
    t.s_->value = std::move(data);
    return t;
  }

  static Tensor identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.s_->value[i * n + i] = Real(1);
    return t;
  }

  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng) {
    Tensor t = zeros(std::move(shape));
    for (auto& v : t.s_->value) v = static_cast<Real>(rng.uniform(lo, hi));
    return t;
  }

  bool defined() const { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  std::size_t numel() const { return s_->value.size(); }
  std::size_t dim(std::size_t i) const { return s_->shape.at(i); }
  std::size_t rank() const { return s_->shape.size(); }

  std::vector<Real>& value() { return s_->value; }
  const std::vector<Real>& value() const { return s_->value; }

  Real item() const {
    if (numel() != 1)
      throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
    return s_->value[0];
  }

  bool requires_grad() const { return s_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    s_->requires_grad = b;
    return *this;
  }

  bool has_grad() const { return !s_->grad.empty(); }
  std::vector<Real>& grad() {
    if (s_->grad.empty()) throw StateError("gradient absent; run backward first");
    return s_->grad;
  }
  const std::vector<Real>& grad() const {
    return const_cast<Tensor*>(this)->grad();
  }
  void ensure_grad() { s_->ensure_grad(); }
  void clear_grad() { s_->grad.clear(); }

  std::shared_ptr<Storage> store() const { return s_; }

 private:
  static Tensor from_vector(Shape shape, std::vector<Real> data, Real fill) {
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    std::size_t n = shape_numel(shape);
    t.s_->shape = std::move(shape);
    if (data.empty())
      t.s_->value.assign(n, fill);
    else
      t.s_->value = std::move(data);
    return t;
  }

  std::shared_ptr<Storage> s_;
};

/// Reverse-mode tape. Nodes are recorded in execution order (inputs always
/// precede their consumers) and replayed once, in reverse, by backward().
/// Constructing a Tape makes it the active tape for the current thread;
/// destruction restores the previous one.
template <class Real>
class Tape {
 public:
  Tape() : prev_(active_) { active_ = this; }
  ~Tape() { active_ = prev_; }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() { return active_; }

  void record(std::function<void()> fn) {
    if (consumed_) throw StateError("cannot record on a consumed tape");
    nodes_.push_back(std::move(fn));
  }

  void backward(const Tensor<Real>& loss) {
    if (!loss.defined()) throw StateError("backward on an undefined tensor");
    if (loss.numel() != 1)
      throw ShapeError("backward expects a scalar loss, got " +
                       shape_str(loss.shape()));
    if (consumed_) throw StateError("backward already ran on this tape");
    loss.store()->ensure_grad();
    loss.store()->grad[0] += Real(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    consumed_ = true;
    nodes_.clear();
  }

  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> nodes_;
  Tape* prev_ = nullptr;
  bool consumed_ = false;
  inline static thread_local Tape* active_ = nullptr;
};

/// Backpropagate through the active tape.
template <class Real>
void backward(const Tensor<Real>& loss) {
  auto* tape = Tape<Real>::active();
  if (!tape) throw StateError("backward called with no active tape");
  tape->backward(loss);
}

namespace detail {

template <class Real>
bool taping(std::initializer_list<const Tensor<Real>*> ins) {
  if (!Tape<Real>::active()) return false;
  for (const auto* t : ins)
    if ((*t).requires_grad()) return true;
  return false;
}

template <class Real>
const std::vector<Real>* out_grad(const std::shared_ptr<TensorStorage<Real>>& s) {
  return s->grad.empty() ? nullptr : &s->grad;
}

}  // namespace detail

template <class Real>
inline void check_same_shape(const Tensor<Real>& a, const Tensor<Real>& b,
                             const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// ---------------------------------------------------------------------------
// Elementwise operations. Exact shape match, or one operand may be a scalar.
// ---------------------------------------------------------------------------

namespace detail {

enum class BinOp { Add, Sub, Mul };

template <class Real>
Tensor<Real> binary(const Tensor<Real>& a, const Tensor<Real>& b, BinOp op,
                    const char* name) {
  const bool a_scalar = a.numel() == 1 && b.numel() != 1;
  const bool b_scalar = b.numel() == 1 && a.numel() != 1;
  if (!a_scalar && !b_scalar) check_same_shape(a, b, name);

  const Shape& shape = a_scalar ? b.shape() : a.shape();
  Tensor<Real> out = Tensor<Real>::zeros(shape);
  auto& o = out.value();
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < o.size(); ++i) {
    Real x = av[a_scalar ? 0 : i];
    Real y = bv[b_scalar ? 0 : i];
    o[i] = op == BinOp::Add ? x + y : op == BinOp::Sub ? x - y : x * y;
  }

  if (taping<Real>({&a, &b})) {
    out.set_requires_grad(true);
    auto sa = a.store(), sb = b.store(), so = out.store();
    Tape<Real>::active()->record([sa, sb, so, op, a_scalar, b_scalar] {
      const auto* g = out_grad(so);
      if (!g) return;
      if (sa->requires_grad) {
        sa->ensure_grad();
        for (std::size_t i = 0; i < g->size(); ++i) {
          Real d = (*g)[i];
          if (op == BinOp::Mul) d *= sb->value[b_scalar ? 0 : i];
          sa->grad[a_scalar ? 0 : i] += d;
        }
      }
      if (sb->requires_grad) {
        sb->ensure_grad();
        for (std::size_t i = 0; i < g->size(); ++i) {
          Real d = (*g)[i];
          if (op == BinOp::Sub) d = -d;
          if (op == BinOp::Mul) d *= sa->value[a_scalar ? 0 : i];
          sb->grad[b_scalar ? 0 : i] += d;
        }
      }
    });
  }
  return out;
}

}  // namespace detail

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  return detail::binary(a, b, detail::BinOp::Add, "add");
}

template <class Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  return detail::binary(a, b, detail::BinOp::Sub, "sub");
}

template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  return detail::binary(a, b, detail::BinOp::Mul, "mul");
}

/// Multiply by a compile-time-known constant.
template <class Real>
Tensor<Real> scale(const Tensor<Real>& x, Real c) {
  Tensor<Real> out = Tensor<Real>::zeros(x.shape());
  const auto& xv = x.value();
  auto& o = out.value();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] * c;
  if (detail::taping<Real>({&x})) {
    out.set_requires_grad(true);
    auto sx = x.store(), so = out.store();
    Tape<Real>::active()->record([sx, so, c] {
      const auto* g = detail::out_grad(so);
      if (!g || !sx->requires_grad) return;
      sx->ensure_grad();
      for (std::size_t i = 0; i < g->size(); ++i) sx->grad[i] += (*g)[i] * c;
    });
  }
  return out;
}

/// Multiply by a one-element tensor; gradients flow into both operands.
template <class Real>
Tensor<Real> scale(const Tensor<Real>& x, const Tensor<Real>& s) {
  if (s.numel() != 1)
    throw ShapeError("scale: scaling factor must be scalar, got " +
                     shape_str(s.shape()));
  return mul(x, s);
}

template <class Real>
Tensor<Real> one_minus(const Tensor<Real>& x) {
  Tensor<Real> out = Tensor<Real>::zeros(x.shape());
  const auto& xv = x.value();
  auto& o = out.value();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = Real(1) - xv[i];
  if (detail::taping<Real>({&x})) {
    out.set_requires_grad(true);
    auto sx = x.store(), so = out.store();
    Tape<Real>::active()->record([sx, so] {
      const auto* g = detail::out_grad(so);
      if (!g || !sx->requires_grad) return;
      sx->ensure_grad();
      for (std::size_t i = 0; i < g->size(); ++i) sx->grad[i] -= (*g)[i];
    });
  }
  return out;
}

template <class Real>
Tensor<Real> tanh(const Tensor<Real>& x) {
  Tensor<Real> out = Tensor<Real>::zeros(x.shape());
  const auto& xv = x.value();
  auto& o = out.value();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::tanh(xv[i]);
  if (detail::taping<Real>({&x})) {
    out.set_requires_grad(true);
    auto sx = x.store(), so = out.store();
    Tape<Real>::active()->record([sx, so] {
      const auto* g = detail::out_grad(so);
      if (!g || !sx->requires_grad) return;
      sx->ensure_grad();
      for (std::size_t i = 0; i < g->size(); ++i) {
        Real y = so->value[i];
        sx->grad[i] += (*g)[i] * (Real(1) - y * y);
      }
    });
  }
  return out;
}

template <class Real>
Tensor<Real> sigmoid(const Tensor<Real>& x) {
  Tensor<Real> out = Tensor<Real>::zeros(x.shape());
  const auto& xv = x.value();
  auto& o = out.value();
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = Real(1) / (Real(1) + std::exp(-xv[i]));
  if (detail::taping<Real>({&x})) {
    out.set_requires_grad(true);
    auto sx = x.store(), so = out.store();
    Tape<Real>::active()->record([sx, so] {
      const auto* g = detail::out_grad(so);
      if (!g || !sx->requires_grad) return;
      sx->ensure_grad();
      for (std::size_t i = 0; i < g->size(); ++i) {
        Real y = so->value[i];
        sx->grad[i] += (*g)[i] * y * (Real(1) - y);
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra.
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<Real> out = Tensor<Real>::zeros({m, n});
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& o = out.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      Real aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) o[i * n + j] += aip * bv[p * n + j];
    }
  if (detail::taping<Real>({&a, &b})) {
    out.set_requires_grad(true);
    auto sa = a.store(), sb = b.store(), so = out.store();
    Tape<Real>::active()->record([sa, sb, so, m, k, n] {
      const auto* g = detail::out_grad(so);
      if (!g) return;
      if (sa->requires_grad) {
        sa->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            Real acc = 0;
            for (std::size_t j = 0; j < n; ++j)
              acc += (*g)[i * n + j] * sb->value[p * n + j];
            sa->grad[i * k + p] += acc;
          }
      }
      if (sb->requires_grad) {
        sb->ensure_grad();
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t i = 0; i < m; ++i) {
            Real aip = sa->value[i * k + p];
            for (std::size_t j = 0; j < n; ++j)
              sb->grad[p * n + j] += aip * (*g)[i * n + j];
          }
      }
    });
  }
  return out;
}

/// W [m x n] times x [n] -> [m].
template <class Real>
Tensor<Real> matvec(const Tensor<Real>& w, const Tensor<Real>& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.dim(1) != x.dim(0))
    throw ShapeError("matvec: incompatible shapes " + shape_str(w.shape()) +
                     " vs " + shape_str(x.shape()));
  const std::size_t m = w.dim(0), n = w.dim(1);
  Tensor<Real> out = Tensor<Real>::zeros({m});
  const auto& wv = w.value();
  const auto& xv = x.value();
  auto& o = out.value();
  for (std::size_t i = 0; i < m; ++i) {
    Real acc = 0;
    const Real* wr = wv.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += wr[j] * xv[j];
    o[i] = acc;
  }
  if (detail::taping<Real>({&w, &x})) {
    out.set_requires_grad(true);
    auto sw = w.store(), sx = x.store(), so = out.store();
    Tape<Real>::active()->record([sw, sx, so, m, n] {
      const auto* g = detail::out_grad(so);
      if (!g) return;
      if (sw->requires_grad) {
        sw->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          Real gi = (*g)[i];
          Real* gr = sw->grad.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) gr[j] += gi * sx->value[j];
        }
      }
      if (sx->requires_grad) {
        sx->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          Real gi = (*g)[i];
          const Real* wr = sw->value.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) sx->grad[j] += gi * wr[j];
        }
      }
    });
  }
  return out;
}

/// Row i of a matrix as a vector; gradient scatters back into that row.
template <class Real>
Tensor<Real> row(const Tensor<Real>& m, std::size_t i) {
  if (m.rank() != 2)
    throw ShapeError("row: expected a matrix, got " + shape_str(m.shape()));
  if (i >= m.dim(0))
    throw IndexError("row index " + std::to_string(i) + " out of range for " +
                     shape_str(m.shape()));
  const std::size_t n = m.dim(1);
  Tensor<Real> out = Tensor<Real>::zeros({n});
  const auto& mv = m.value();
  auto& o = out.value();
  for (std::size_t j = 0; j < n; ++j) o[j] = mv[i * n + j];
  if (detail::taping<Real>({&m})) {
    out.set_requires_grad(true);
    auto sm = m.store(), so = out.store();
    Tape<Real>::active()->record([sm, so, i, n] {
      const auto* g = detail::out_grad(so);
      if (!g || !sm->requires_grad) return;
      sm->ensure_grad();
      for (std::size_t j = 0; j < n; ++j) sm->grad[i * n + j] += (*g)[j];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural operations on vectors.
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> concat(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 1)
      throw ShapeError("concat: expected vectors, got " + shape_str(p.shape()));
    total += p.numel();
  }
  Tensor<Real> out = Tensor<Real>::zeros({total});
  auto& o = out.value();
  std::size_t off = 0;
  bool rg = false;
  for (const auto& p : parts) {
    const auto& pv = p.value();
    for (std::size_t j = 0; j < pv.size(); ++j) o[off + j] = pv[j];
    off += pv.size();
    rg = rg || p.requires_grad();
  }
  if (rg && Tape<Real>::active()) {
    out.set_requires_grad(true);
    std::vector<std::shared_ptr<detail::TensorStorage<Real>>> ss;
    ss.reserve(parts.size());
    for (const auto& p : parts) ss.push_back(p.store());
    auto so = out.store();
    Tape<Real>::active()->record([ss, so] {
      const auto* g = detail::out_grad(so);
      if (!g) return;
      std::size_t off = 0;
      for (const auto& s : ss) {
        if (s->requires_grad) {
          s->ensure_grad();
          for (std::size_t j = 0; j < s->value.size(); ++j)
            s->grad[j] += (*g)[off + j];
        }
        off += s->value.size();
      }
    });
  }
  return out;
}

template <class Real>
Tensor<Real> concat(std::initializer_list<Tensor<Real>> parts) {
  return concat(std::vector<Tensor<Real>>(parts));
}

/// Stack k one-element tensors into a [k] vector.
template <class Real>
Tensor<Real> stack_scalars(const std::vector<Tensor<Real>>& xs) {
  if (xs.empty()) throw ShapeError("stack_scalars: no inputs");
  Tensor<Real> out = Tensor<Real>::zeros({xs.size()});
  auto& o = out.value();
  bool rg = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].numel() != 1)
      throw ShapeError("stack_scalars: element " + std::to_string(i) +
                       " has shape " + shape_str(xs[i].shape()));
    o[i] = xs[i].value()[0];
    rg = rg || xs[i].requires_grad();
  }
  if (rg && Tape<Real>::active()) {
    out.set_requires_grad(true);
    std::vector<std::shared_ptr<detail::TensorStorage<Real>>> ss;
    ss.reserve(xs.size());
    for (const auto& x : xs) ss.push_back(x.store());
    auto so = out.store();
    Tape<Real>::active()->record([ss, so] {
      const auto* g = detail::out_grad(so);
      if (!g) return;
      for (std::size_t i = 0; i < ss.size(); ++i) {
        if (!ss[i]->requires_grad) continue;
        ss[i]->ensure_grad();
        ss[i]->grad[0] += (*g)[i];
      }
    });
  }
  return out;
}

template <class Real>
Tensor<Real> sum(const Tensor<Real>& x) {
  Tensor<Real> out = Tensor<Real>::zeros({1});
  Real acc = 0;
  for (Real v : x.value()) acc += v;
  out.value()[0] = acc;
  if (detail::taping<Real>({&x})) {
    out.set_requires_grad(true);
    auto sx = x.store(), so = out.store();
    Tape<Real>::active()->record([sx, so] {
      const auto* g = detail::out_grad(so);
      if (!g || !sx->requires_grad) return;
      sx->ensure_grad();
      for (std::size_t i = 0; i < sx->grad.size(); ++i) sx->grad[i] += (*g)[0];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reductions with an explicit iteration order. A caller may pass a canonical
// index order so the floating-point result is invariant under permutations of
// the inputs; masked positions are skipped entirely.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::size_t> iteration_order(
    std::size_t n, const std::vector<std::uint8_t>* mask,
    const std::vector<std::size_t>* order) {
  std::vector<std::size_t> idx;
  idx.reserve(n);
  if (order) {
    for (std::size_t i : *order)
      if (!mask || (*mask)[i]) idx.push_back(i);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (!mask || (*mask)[i]) idx.push_back(i);
  }
  return idx;
}

}  // namespace detail

/// Numerically stable softmax over the unmasked positions of a vector.
/// Masked positions come out exactly zero.
template <class Real>
Tensor<Real> softmax(const Tensor<Real>& x,
                     const std::vector<std::uint8_t>* mask = nullptr,
                     const std::vector<std::size_t>* order = nullptr) {
  if (x.rank() != 1)
    throw ShapeError("softmax: expected a vector, got " + shape_str(x.shape()));
  const std::size_t n = x.numel();
  if (mask && mask->size() != n)
    throw ShapeError("softmax: mask length " + std::to_string(mask->size()) +
                     " vs input " + shape_str(x.shape()));
  auto idx = detail::iteration_order(n, mask, order);
  if (idx.empty()) throw MaskError("softmax: all positions masked");

  const auto& xv = x.value();
  Real mx = xv[idx[0]];
  for (std::size_t i : idx) mx = std::max(mx, xv[i]);
  Tensor<Real> out = Tensor<Real>::zeros({n});
  auto& o = out.value();
  Real z = 0;
  for (std::size_t i : idx) {
    o[i] = std::exp(xv[i] - mx);
    z += o[i];
  }
  for (std::size_t i : idx) o[i] /= z;

  if (detail::taping<Real>({&x})) {
    out.set_requires_grad(true);
    auto sx = x.store(), so = out.store();
    Tape<Real>::active()->record([sx, so, idx] {
      const auto* g = detail::out_grad(so);
      if (!g || !sx->requires_grad) return;
      sx->ensure_grad();
      Real dot = 0;
      for (std::size_t i : idx) dot += (*g)[i] * so->value[i];
      for (std::size_t i : idx)
        sx->grad[i] += so->value[i] * ((*g)[i] - dot);
    });
  }
  return out;
}

/// -log softmax(logits)[target]; gradient is softmax(logits) - onehot(target).
template <class Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logits, std::size_t target) {
  if (logits.rank() != 1)
    throw ShapeError("cross_entropy: expected a logit vector, got " +
                     shape_str(logits.shape()));
  const std::size_t n = logits.numel();
  if (target >= n)
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " out of range for " + std::to_string(n) + " classes");
  const auto& lv = logits.value();
  Real mx = lv[0];
  for (Real v : lv) mx = std::max(mx, v);
  Real z = 0;
  for (Real v : lv) z += std::exp(v - mx);
  Real lse = mx + std::log(z);
  Tensor<Real> out = Tensor<Real>::scalar(lse - lv[target]);
  if (detail::taping<Real>({&logits})) {
    out.set_requires_grad(true);
    auto sl = logits.store(), so = out.store();
    Tape<Real>::active()->record([sl, so, target, mx, z] {
      const auto* g = detail::out_grad(so);
      if (!g || !sl->requires_grad) return;
      sl->ensure_grad();
      Real gs = (*g)[0];
      for (std::size_t i = 0; i < sl->value.size(); ++i) {
        Real p = std::exp(sl->value[i] - mx) / z;
        sl->grad[i] += gs * (p - (i == target ? Real(1) : Real(0)));
      }
    });
  }
  return out;
}

/// Cosine similarity of two vectors, in [-1, 1]. Zero-norm inputs are an
/// error rather than a silent NaN.
template <class Real>
Tensor<Real> cosine(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() != 1 || b.rank() != 1) {
    throw ShapeError("cosine: expected vectors, got " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  }
  check_same_shape(a, b, "cosine");
  const auto& av = a.value();
  const auto& bv = b.value();
  Real dot = 0, na2 = 0, nb2 = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    na2 += av[i] * av[i];
    nb2 += bv[i] * bv[i];
  }
  Real na = std::sqrt(na2), nb = std::sqrt(nb2);
  if (na == Real(0) || nb == Real(0))
    throw NumericError("cosine: zero-norm input vector");
  Real c = dot / (na * nb);
  Tensor<Real> out = Tensor<Real>::scalar(c);
  if (detail::taping<Real>({&a, &b})) {
    out.set_requires_grad(true);
    auto sa = a.store(), sb = b.store(), so = out.store();
    Tape<Real>::active()->record([sa, sb, so, na, nb, c] {
      const auto* g = detail::out_grad(so);
      if (!g) return;
      Real gs = (*g)[0];
      if (sa->requires_grad) {
        sa->ensure_grad();
        for (std::size_t i = 0; i < sa->value.size(); ++i)
          sa->grad[i] += gs * (sb->value[i] / (na * nb) -
                               c * sa->value[i] / (na * na));
      }
      if (sb->requires_grad) {
        sb->ensure_grad();
        for (std::size_t i = 0; i < sb->value.size(); ++i)
          sb->grad[i] += gs * (sa->value[i] / (na * nb) -
                               c * sb->value[i] / (nb * nb));
      }
    });
  }
  return out;
}

/// Maximum entry of a vector together with its index. The gradient is a
/// subgradient: it flows only into the winning entry; ties pick the lowest
/// index.
template <class Real>
std::pair<Tensor<Real>, std::size_t> max_with_index(const Tensor<Real>& x) {
  if (x.rank() != 1 || x.numel() == 0)
    throw ShapeError("max_with_index: expected a non-empty vector, got " +
                     shape_str(x.shape()));
  const auto& xv = x.value();
  std::size_t arg = 0;
  for (std::size_t i = 1; i < xv.size(); ++i)
    if (xv[i] > xv[arg]) arg = i;
  Tensor<Real> out = Tensor<Real>::scalar(xv[arg]);
  if (detail::taping<Real>({&x})) {
    out.set_requires_grad(true);
    auto sx = x.store(), so = out.store();
    Tape<Real>::active()->record([sx, so, arg] {
      const auto* g = detail::out_grad(so);
      if (!g || !sx->requires_grad) return;
      sx->ensure_grad();
      sx->grad[arg] += (*g)[0];
    });
  }
  return {out, arg};
}

/// Weighted sum of row vectors: sum_j w[j] * rows[j], folded in the given
/// canonical order over unmasked positions.
template <class Real>
Tensor<Real> weighted_sum(const Tensor<Real>& w,
                          const std::vector<Tensor<Real>>& rows,
                          const std::vector<std::uint8_t>* mask = nullptr,
                          const std::vector<std::size_t>* order = nullptr) {
  if (w.rank() != 1 || w.numel() != rows.size())
    throw ShapeError("weighted_sum: weight shape " + shape_str(w.shape()) +
                     " vs " + std::to_string(rows.size()) + " rows");
  if (rows.empty()) throw ShapeError("weighted_sum: no rows");
  auto idx = detail::iteration_order(rows.size(), mask, order);
  if (idx.empty()) throw MaskError("weighted_sum: all positions masked");
  const std::size_t d = rows[idx[0]].numel();
  Tensor<Real> out = Tensor<Real>::zeros({d});
  auto& o = out.value();
  const auto& wv = w.value();
  bool rg = w.requires_grad();
  for (std::size_t j : idx) {
    if (rows[j].numel() != d)
      throw ShapeError("weighted_sum: row " + std::to_string(j) +
                       " has shape " + shape_str(rows[j].shape()));
    const auto& rv = rows[j].value();
    for (std::size_t k = 0; k < d; ++k) o[k] += wv[j] * rv[k];
    rg = rg || rows[j].requires_grad();
  }
  if (rg && Tape<Real>::active()) {
    out.set_requires_grad(true);
    auto sw = w.store(), so = out.store();
    std::vector<std::shared_ptr<detail::TensorStorage<Real>>> srows;
    srows.reserve(rows.size());
    for (const auto& r : rows) srows.push_back(r.store());
    Tape<Real>::active()->record([sw, so, srows, idx, d] {
      const auto* g = detail::out_grad(so);
      if (!g) return;
      for (std::size_t j : idx) {
        if (sw->requires_grad) {
          sw->ensure_grad();
          Real acc = 0;
          for (std::size_t k = 0; k < d; ++k)
            acc += (*g)[k] * srows[j]->value[k];
          sw->grad[j] += acc;
        }
        if (srows[j]->requires_grad) {
          srows[j]->ensure_grad();
          for (std::size_t k = 0; k < d; ++k)
            srows[j]->grad[k] += sw->value[j] * (*g)[k];
        }
      }
    });
  }
  return out;
}

template <class Real>
bool all_finite(const Tensor<Real>& x) {
  for (Real v : x.value())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace kw2sent

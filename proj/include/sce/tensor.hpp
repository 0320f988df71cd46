#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sce/errors.hpp"

namespace sce {

// Reverse-mode tape over exactly the primitives the models need. Values are
// computed eagerly as ops are recorded; backward() replays the tape in reverse
// creation order (creation order is topological by construction). All loops
// have fixed iteration order, so results are run-to-run identical.
//
// Gradient semantics match the usual autograd contract: backward() accumulates
// into leaf gradients (two calls without zero_grad() double them) and
// recomputes interior gradients from scratch each call.
template <typename T>
class Tape {
 public:
  using Id = std::int32_t;

  enum class Op : std::uint8_t {
    leaf,
    conv2d,
    linear,
    relu,
    tanh_fn,
    sigmoid,
    add,
    sub,
    mul,
    scale,
    square,
    sum,
    logsumexp,
    concat,
  };

  struct Node {
    Op op = Op::leaf;
    std::vector<int> shape;
    std::vector<T> val;
    std::vector<T> grad;  // empty unless needs_grad
    std::vector<Id> in;
    T k = T(0);      // scale factor
    int stride = 1;  // conv2d
    int pad = 0;     // conv2d
    bool needs_grad = false;
  };

  Id leaf(std::vector<int> shape, std::span<const T> data, bool needs_grad = false) {
    Node n;
    n.op = Op::leaf;
    n.shape = std::move(shape);
    if (numel(n.shape) != data.size())
      fail(Errc::shape_mismatch, "leaf data length != shape product (op " + std::to_string(nodes_.size()) + ")");
    n.val.assign(data.begin(), data.end());
    n.needs_grad = needs_grad;
    if (needs_grad) n.grad.assign(n.val.size(), T(0));
    return push(std::move(n));
  }

  Id scalar_leaf(T v) {
    const T d[1] = {v};
    return leaf({1}, std::span<const T>(d, 1), false);
  }

  // x:[Cin,H,W] (*) w:[Cout,Cin,kh,kw] + b:[Cout] -> [Cout,Ho,Wo]
  Id conv2d(Id x, Id w, Id b, int stride, int pad) {
    const Node& nx = at(x);
    const Node& nw = at(w);
    const Node& nb = at(b);
    require(nx.shape.size() == 3, x, "conv2d input must be [C,H,W]");
    require(nw.shape.size() == 4, w, "conv2d weight must be [Cout,Cin,kh,kw]");
    const int cin = nx.shape[0], h = nx.shape[1], wd = nx.shape[2];
    const int cout = nw.shape[0], kh = nw.shape[2], kw = nw.shape[3];
    require(nw.shape[1] == cin, w, "conv2d channel mismatch");
    require(nb.shape.size() == 1 && nb.shape[0] == cout, b, "conv2d bias mismatch");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    require(ho > 0 && wo > 0, x, "conv2d output would be empty");

    Node n;
    n.op = Op::conv2d;
    n.shape = {cout, ho, wo};
    n.val.resize(static_cast<size_t>(cout) * ho * wo);
    n.in = {x, w, b};
    n.stride = stride;
    n.pad = pad;
    conv_forward(nx, nw, nb, n);
    return finish(std::move(n));
  }

  // x:[in] -> w:[out,in] * x + b:[out]
  Id linear(Id x, Id w, Id b) {
    const Node& nx = at(x);
    const Node& nw = at(w);
    const Node& nb = at(b);
    require(nw.shape.size() == 2, w, "linear weight must be [out,in]");
    const int out = nw.shape[0], in = nw.shape[1];
    require(static_cast<int>(nx.val.size()) == in, x, "linear input length mismatch");
    require(nb.shape.size() == 1 && nb.shape[0] == out, b, "linear bias mismatch");
    Node n;
    n.op = Op::linear;
    n.shape = {out};
    n.val.resize(static_cast<size_t>(out));
    n.in = {x, w, b};
    for (int o = 0; o < out; ++o) {
      T acc = nb.val[static_cast<size_t>(o)];
      const T* wrow = nw.val.data() + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += wrow[i] * nx.val[static_cast<size_t>(i)];
      n.val[static_cast<size_t>(o)] = acc;
    }
    return finish(std::move(n));
  }

  Id relu(Id x) {
    return unary(Op::relu, x, [](T v) { return v > T(0) ? v : T(0); });
  }
  Id tanh_(Id x) {
    return unary(Op::tanh_fn, x, [](T v) { return std::tanh(v); });
  }
  Id sigmoid(Id x) {
    return unary(Op::sigmoid, x, [](T v) {
      if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
      const T e = std::exp(v);
      return e / (T(1) + e);
    });
  }
  Id square(Id x) {
    return unary(Op::square, x, [](T v) { return v * v; });
  }

  Id add(Id a, Id b) { return binary(Op::add, a, b, [](T x, T y) { return x + y; }); }
  Id sub(Id a, Id b) { return binary(Op::sub, a, b, [](T x, T y) { return x - y; }); }
  Id mul(Id a, Id b) { return binary(Op::mul, a, b, [](T x, T y) { return x * y; }); }

  Id scale(Id x, T k) {
    Node n;
    n.op = Op::scale;
    n.shape = at(x).shape;
    n.val.resize(at(x).val.size());
    n.in = {x};
    n.k = k;
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = k * at(x).val[i];
    return finish(std::move(n));
  }

  Id sum(Id x) {
    Node n;
    n.op = Op::sum;
    n.shape = {1};
    n.in = {x};
    T acc = T(0);
    for (T v : at(x).val) acc += v;
    n.val = {acc};
    return finish(std::move(n));
  }

  // log(sum(exp(x))) over a vector, max-shifted.
  Id logsumexp(Id x) {
    const Node& nx = at(x);
    require(!nx.val.empty(), x, "logsumexp of empty vector");
    Node n;
    n.op = Op::logsumexp;
    n.shape = {1};
    n.in = {x};
    T m = nx.val[0];
    for (T v : nx.val) m = std::max(m, v);
    T s = T(0);
    for (T v : nx.val) s += std::exp(v - m);
    n.val = {m + std::log(s)};
    return finish(std::move(n));
  }

  Id concat(std::span<const Id> parts) {
    require(!parts.empty(), 0, "concat of nothing");
    Node n;
    n.op = Op::concat;
    n.in.assign(parts.begin(), parts.end());
    size_t total = 0;
    for (Id p : parts) total += at(p).val.size();
    n.shape = {static_cast<int>(total)};
    n.val.reserve(total);
    for (Id p : parts) n.val.insert(n.val.end(), at(p).val.begin(), at(p).val.end());
    return finish(std::move(n));
  }

  const std::vector<T>& val(Id id) const { return at(id).val; }
  const std::vector<int>& shape(Id id) const { return at(id).shape; }
  T scalar(Id id) const {
    const Node& n = at(id);
    if (n.val.size() != 1) fail(Errc::not_scalar, "node " + std::to_string(id) + " is not scalar");
    return n.val[0];
  }
  const std::vector<T>& grad(Id id) const { return at(id).grad; }

  void zero_grad() {
    for (Node& n : nodes_) {
      std::fill(n.grad.begin(), n.grad.end(), T(0));
    }
  }

  void backward(Id loss) {
    Node& ln = nodes_.at(static_cast<size_t>(loss));
    if (ln.val.size() != 1) fail(Errc::not_scalar, "backward needs a scalar loss");
    // Fresh interior grads; leaf grads accumulate across calls.
    for (size_t i = 0; i < nodes_.size(); ++i) {
      Node& n = nodes_[i];
      if (!n.needs_grad) continue;
      if (n.op == Op::leaf) continue;
      if (n.grad.empty()) n.grad.assign(n.val.size(), T(0));
      else std::fill(n.grad.begin(), n.grad.end(), T(0));
    }
    if (!ln.needs_grad) return;  // loss does not depend on any parameter
    ln.grad.assign(1, T(1));

    for (Id i = loss; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (!n.needs_grad || n.grad.empty() || n.op == Op::leaf) continue;
      backprop(n);
    }
  }

  size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  // Monotone count of nodes recorded on this thread across all tapes; the
  // difference around a workload is a deterministic work measure.
  static std::uint64_t thread_op_count() { return op_counter(); }

 private:
  std::vector<Node> nodes_;

  static size_t numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
  }

  const Node& at(Id id) const { return nodes_.at(static_cast<size_t>(id)); }
  Node& at(Id id) { return nodes_.at(static_cast<size_t>(id)); }

  void require(bool ok, Id id, const char* msg) const {
    if (!ok)
      fail(Errc::shape_mismatch,
           std::string(msg) + " (op " + std::to_string(nodes_.size()) + ", input " + std::to_string(id) + ")");
  }

  static std::uint64_t& op_counter() {
    thread_local std::uint64_t c = 0;
    return c;
  }

  Id push(Node&& n) {
    ++op_counter();
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  Id finish(Node&& n) {
    for (Id i : n.in) {
      if (at(i).needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    return push(std::move(n));
  }

  template <typename F>
  Id unary(Op op, Id x, F f) {
    Node n;
    n.op = op;
    n.shape = at(x).shape;
    n.val.resize(at(x).val.size());
    n.in = {x};
    const auto& xv = at(x).val;
    for (size_t i = 0; i < xv.size(); ++i) n.val[i] = f(xv[i]);
    return finish(std::move(n));
  }

  template <typename F>
  Id binary(Op op, Id a, Id b, F f) {
    require(at(a).shape == at(b).shape, a, "elementwise shape mismatch");
    Node n;
    n.op = op;
    n.shape = at(a).shape;
    n.val.resize(at(a).val.size());
    n.in = {a, b};
    const auto& av = at(a).val;
    const auto& bv = at(b).val;
    for (size_t i = 0; i < av.size(); ++i) n.val[i] = f(av[i], bv[i]);
    return finish(std::move(n));
  }

  void conv_forward(const Node& nx, const Node& nw, const Node& nb, Node& n) {
    const int cin = nx.shape[0], h = nx.shape[1], w = nx.shape[2];
    const int cout = n.shape[0], ho = n.shape[1], wo = n.shape[2];
    const int kh = nw.shape[2], kw = nw.shape[3];
    const int s = n.stride, p = n.pad;
    const T* X = nx.val.data();
    const T* W = nw.val.data();
    for (int co = 0; co < cout; ++co) {
      const T bias = nb.val[static_cast<size_t>(co)];
      T* out = n.val.data() + static_cast<size_t>(co) * ho * wo;
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          T acc = bias;
          for (int ci = 0; ci < cin; ++ci) {
            const T* xpl = X + static_cast<size_t>(ci) * h * w;
            const T* wpl = W + ((static_cast<size_t>(co) * cin + ci) * kh) * kw;
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * s + ky - p;
              if (iy < 0 || iy >= h) continue;
              const T* xrow = xpl + static_cast<size_t>(iy) * w;
              const T* wrow = wpl + static_cast<size_t>(ky) * kw;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * s + kx - p;
                if (ix < 0 || ix >= w) continue;
                acc += xrow[ix] * wrow[kx];
              }
            }
          }
          out[static_cast<size_t>(oy) * wo + ox] = acc;
        }
      }
    }
  }

  void conv_backward(Node& n) {
    Node& nx = at(n.in[0]);
    Node& nw = at(n.in[1]);
    Node& nb = at(n.in[2]);
    const int cin = nx.shape[0], h = nx.shape[1], w = nx.shape[2];
    const int cout = n.shape[0], ho = n.shape[1], wo = n.shape[2];
    const int kh = nw.shape[2], kw = nw.shape[3];
    const int s = n.stride, p = n.pad;
    const T* X = nx.val.data();
    const T* W = nw.val.data();
    const T* GY = n.grad.data();

    if (grad_ptr(nb)) {
      T* gb = nb.grad.data();
      for (int co = 0; co < cout; ++co) {
        T acc = T(0);
        const T* gyp = GY + static_cast<size_t>(co) * ho * wo;
        for (int i = 0; i < ho * wo; ++i) acc += gyp[i];
        gb[co] += acc;
      }
    }
    if (grad_ptr(nw)) {
      T* gw = nw.grad.data();
      for (int co = 0; co < cout; ++co) {
        const T* gyp = GY + static_cast<size_t>(co) * ho * wo;
        for (int ci = 0; ci < cin; ++ci) {
          const T* xpl = X + static_cast<size_t>(ci) * h * w;
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              T acc = T(0);
              for (int oy = 0; oy < ho; ++oy) {
                const int iy = oy * s + ky - p;
                if (iy < 0 || iy >= h) continue;
                const T* xrow = xpl + static_cast<size_t>(iy) * w;
                const T* gyr = gyp + static_cast<size_t>(oy) * wo;
                for (int ox = 0; ox < wo; ++ox) {
                  const int ix = ox * s + kx - p;
                  if (ix < 0 || ix >= w) continue;
                  acc += gyr[ox] * xrow[ix];
                }
              }
              gw[((static_cast<size_t>(co) * cin + ci) * kh + ky) * kw + kx] += acc;
            }
          }
        }
      }
    }
    if (grad_ptr(nx)) {
      T* gx = nx.grad.data();
      for (int co = 0; co < cout; ++co) {
        const T* gyp = GY + static_cast<size_t>(co) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          for (int ox = 0; ox < wo; ++ox) {
            const T gy = gyp[static_cast<size_t>(oy) * wo + ox];
            if (gy == T(0)) continue;
            for (int ci = 0; ci < cin; ++ci) {
              T* gxp = gx + static_cast<size_t>(ci) * h * w;
              const T* wpl = W + ((static_cast<size_t>(co) * cin + ci) * kh) * kw;
              for (int ky = 0; ky < kh; ++ky) {
                const int iy = oy * s + ky - p;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                  const int ix = ox * s + kx - p;
                  if (ix < 0 || ix >= w) continue;
                  gxp[static_cast<size_t>(iy) * w + ix] += gy * wpl[static_cast<size_t>(ky) * kw + kx];
                }
              }
            }
          }
        }
      }
    }
  }

  // Returns grad storage, allocating for needs_grad interior nodes visited
  // before their consumers in the backward sweep.
  T* grad_ptr(Node& n) {
    if (!n.needs_grad) return nullptr;
    if (n.grad.empty()) n.grad.assign(n.val.size(), T(0));
    return n.grad.data();
  }

  void backprop(Node& n) {
    switch (n.op) {
      case Op::leaf:
        return;
      case Op::conv2d:
        conv_backward(n);
        return;
      case Op::linear: {
        Node& nx = at(n.in[0]);
        Node& nw = at(n.in[1]);
        Node& nb = at(n.in[2]);
        const int out = n.shape[0];
        const int in = nw.shape[1];
        if (T* gb = grad_ptr(nb)) {
          for (int o = 0; o < out; ++o) gb[o] += n.grad[static_cast<size_t>(o)];
        }
        if (T* gw = grad_ptr(nw)) {
          for (int o = 0; o < out; ++o) {
            const T gy = n.grad[static_cast<size_t>(o)];
            if (gy == T(0)) continue;
            T* row = gw + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) row[i] += gy * nx.val[static_cast<size_t>(i)];
          }
        }
        if (T* gx = grad_ptr(nx)) {
          for (int o = 0; o < out; ++o) {
            const T gy = n.grad[static_cast<size_t>(o)];
            if (gy == T(0)) continue;
            const T* row = nw.val.data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) gx[i] += gy * row[i];
          }
        }
        return;
      }
      case Op::relu: {
        Node& nx = at(n.in[0]);
        if (T* gx = grad_ptr(nx)) {
          for (size_t i = 0; i < n.val.size(); ++i) {
            if (nx.val[i] > T(0)) gx[i] += n.grad[i];
          }
        }
        return;
      }
      case Op::tanh_fn: {
        Node& nx = at(n.in[0]);
        if (T* gx = grad_ptr(nx)) {
          for (size_t i = 0; i < n.val.size(); ++i) gx[i] += n.grad[i] * (T(1) - n.val[i] * n.val[i]);
        }
        return;
      }
      case Op::sigmoid: {
        Node& nx = at(n.in[0]);
        if (T* gx = grad_ptr(nx)) {
          for (size_t i = 0; i < n.val.size(); ++i) gx[i] += n.grad[i] * n.val[i] * (T(1) - n.val[i]);
        }
        return;
      }
      case Op::add: {
        for (int side = 0; side < 2; ++side) {
          Node& ni = at(n.in[static_cast<size_t>(side)]);
          if (T* g = grad_ptr(ni)) {
            for (size_t i = 0; i < n.val.size(); ++i) g[i] += n.grad[i];
          }
        }
        return;
      }
      case Op::sub: {
        Node& na = at(n.in[0]);
        Node& nb = at(n.in[1]);
        if (T* g = grad_ptr(na)) {
          for (size_t i = 0; i < n.val.size(); ++i) g[i] += n.grad[i];
        }
        if (T* g = grad_ptr(nb)) {
          for (size_t i = 0; i < n.val.size(); ++i) g[i] -= n.grad[i];
        }
        return;
      }
      case Op::mul: {
        Node& na = at(n.in[0]);
        Node& nb = at(n.in[1]);
        if (T* g = grad_ptr(na)) {
          for (size_t i = 0; i < n.val.size(); ++i) g[i] += n.grad[i] * nb.val[i];
        }
        if (T* g = grad_ptr(nb)) {
          for (size_t i = 0; i < n.val.size(); ++i) g[i] += n.grad[i] * na.val[i];
        }
        return;
      }
      case Op::scale: {
        Node& nx = at(n.in[0]);
        if (T* gx = grad_ptr(nx)) {
          for (size_t i = 0; i < n.val.size(); ++i) gx[i] += n.grad[i] * n.k;
        }
        return;
      }
      case Op::square: {
        Node& nx = at(n.in[0]);
        if (T* gx = grad_ptr(nx)) {
          for (size_t i = 0; i < n.val.size(); ++i) gx[i] += n.grad[i] * T(2) * nx.val[i];
        }
        return;
      }
      case Op::sum: {
        Node& nx = at(n.in[0]);
        if (T* gx = grad_ptr(nx)) {
          const T gy = n.grad[0];
          for (size_t i = 0; i < nx.val.size(); ++i) gx[i] += gy;
        }
        return;
      }
      case Op::logsumexp: {
        Node& nx = at(n.in[0]);
        if (T* gx = grad_ptr(nx)) {
          const T gy = n.grad[0];
          const T y = n.val[0];
          for (size_t i = 0; i < nx.val.size(); ++i) gx[i] += gy * std::exp(nx.val[i] - y);
        }
        return;
      }
      case Op::concat: {
        size_t off = 0;
        for (Id p : n.in) {
          Node& np = at(p);
          const size_t len = np.val.size();
          if (T* g = grad_ptr(np)) {
            for (size_t i = 0; i < len; ++i) g[i] += n.grad[off + i];
          }
          off += len;
        }
        return;
      }
    }
  }
};

}  // namespace sce

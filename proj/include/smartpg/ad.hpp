#pragma once

// Reverse-mode automatic differentiation over dense real tensors, plus
// differentiable power-flow kernels (complex arithmetic expanded into real
// components).  A Tape owns all values and adjoints; ops append nodes whose
// backward functions run in strict reverse order.

#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "smartpg/pf.hpp"

namespace smartpg::ad {

struct AdError : std::runtime_error {
  explicit AdError(const std::string& w) : std::runtime_error(w) {}
};

struct Tensor {
  std::vector<int> shape;  // 1-D {n} or 2-D {rows, cols}
  std::vector<double> data;  // row-major

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel(), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::size_t>(numel()) != data.size())
      throw AdError("tensor data length does not match shape");
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor from_vec(const VectorXd& v) {
    return Tensor({static_cast<int>(v.size())},
                  std::vector<double>(v.data(), v.data() + v.size()));
  }
  VectorXd to_vec() const {
    return Eigen::Map<const VectorXd>(data.data(),
                                      static_cast<long>(data.size()));
  }
  int numel() const {
    return std::accumulate(shape.begin(), shape.end(), 1, std::multiplies<>());
  }
  int rows() const { return shape.size() == 2 ? shape[0] : 1; }
  int cols() const { return shape.size() == 2 ? shape[1] : shape[0]; }
};

using Var = int;

class Tape {
 public:
  Var push(Tensor value, std::function<void(Tape&, Var)> backward = nullptr) {
    for (double v : value.data)
      if (!std::isfinite(v)) throw AdError("non-finite value in forward pass");
    vals_.push_back(std::move(value));
    backs_.push_back(std::move(backward));
    return static_cast<Var>(vals_.size() - 1);
  }
  // A constant participates in the forward pass but receives no gradient.
  Var constant(Tensor value) { return push(std::move(value)); }

  const Tensor& val(Var i) const { return vals_[i]; }
  Tensor& adj(Var i) { return adjs_[i]; }
  const Tensor& adj(Var i) const { return adjs_[i]; }

  void backward(Var root) {
    if (vals_[root].numel() != 1) throw AdError("backward root must be scalar");
    adjs_.clear();
    adjs_.reserve(vals_.size());
    for (const auto& v : vals_) adjs_.emplace_back(v.shape);
    adjs_[root].data[0] = 1.0;
    for (int i = root; i >= 0; --i)
      if (backs_[i]) backs_[i](*this, i);
  }

  std::size_t size() const { return vals_.size(); }

 private:
  std::vector<Tensor> vals_;
  std::vector<Tensor> adjs_;
  std::vector<std::function<void(Tape&, Var)>> backs_;
};

namespace detail {
inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* op) {
  if (a.shape != b.shape)
    throw AdError(std::string(op) + ": shape mismatch");
}
}  // namespace detail

inline Var add(Tape& t, Var a, Var b) {
  const Tensor& va = t.val(a);
  const Tensor& vb = t.val(b);
  // Broadcast a 1-D bias across the rows of a 2-D operand.
  const bool bias = va.shape.size() == 2 && vb.shape.size() == 1 &&
                    va.shape[1] == vb.shape[0];
  if (!bias) detail::require_same_shape(va, vb, "add");
  Tensor out = va;
  if (bias) {
    for (int r = 0; r < va.shape[0]; ++r)
      for (int c = 0; c < va.shape[1]; ++c)
        out.data[r * va.shape[1] + c] += vb.data[c];
  } else {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
  }
  return t.push(std::move(out), [a, b, bias](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    auto& ga = tp.adj(a).data;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gb = tp.adj(b).data;
    if (bias) {
      const int cols = tp.val(a).shape[1];
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += g[i];
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

inline Var mul(Tape& t, Var a, Var b) {
  detail::require_same_shape(t.val(a), t.val(b), "mul");
  Tensor out = t.val(a);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] *= t.val(b).data[i];
  return t.push(std::move(out), [a, b](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    for (std::size_t i = 0; i < g.size(); ++i) {
      tp.adj(a).data[i] += g[i] * tp.val(b).data[i];
      tp.adj(b).data[i] += g[i] * tp.val(a).data[i];
    }
  });
}

inline Var scale(Tape& t, Var a, double c) {
  Tensor out = t.val(a);
  for (double& v : out.data) v *= c;
  return t.push(std::move(out), [a, c](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    for (std::size_t i = 0; i < g.size(); ++i) tp.adj(a).data[i] += c * g[i];
  });
}

inline Var sub(Tape& t, Var a, Var b) { return add(t, a, scale(t, b, -1.0)); }

inline Var matmul(Tape& t, Var a, Var b) {
  const Tensor& va = t.val(a);
  const Tensor& vb = t.val(b);
  if (va.shape.size() != 2 || vb.shape.size() != 2 || va.shape[1] != vb.shape[0])
    throw AdError("matmul: incompatible shapes");
  const int m = va.shape[0], k = va.shape[1], n = vb.shape[1];
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = va.data[i * k + p];
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j)
        out.data[i * n + j] += av * vb.data[p * n + j];
    }
  return t.push(std::move(out), [a, b, m, k, n](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    const auto& va2 = tp.val(a).data;
    const auto& vb2 = tp.val(b).data;
    auto& ga = tp.adj(a).data;
    auto& gb = tp.adj(b).data;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double gij = g[i * n + j];
        if (gij == 0.0) continue;
        for (int p = 0; p < k; ++p) {
          ga[i * k + p] += gij * vb2[p * n + j];
          gb[p * n + j] += gij * va2[i * k + p];
        }
      }
  });
}

namespace detail {
template <class F, class DF>
Var unary(Tape& t, Var a, F f, DF df) {
  Tensor out = t.val(a);
  for (double& v : out.data) v = f(v);
  return t.push(std::move(out), [a, df](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    const auto& x = tp.val(a).data;
    const auto& y = tp.val(o).data;
    for (std::size_t i = 0; i < g.size(); ++i)
      tp.adj(a).data[i] += g[i] * df(x[i], y[i]);
  });
}
}  // namespace detail

inline Var relu(Tape& t, Var a) {
  return detail::unary(
      t, a, [](double v) { return v > 0 ? v : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

inline Var sigmoid(Tape& t, Var a) {
  return detail::unary(
      t, a, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Var smooth_abs(Tape& t, Var a, double eps = 1e-9) {
  return detail::unary(
      t, a, [eps](double v) { return std::sqrt(v * v + eps * eps); },
      [](double x, double y) { return x / y; });
}

// exp with the exponent clipped from above; the clip keeps penalty losses
// finite while leaving a zero derivative beyond the clip point.
inline Var exp_clip(Tape& t, Var a, double clip = 30.0) {
  return detail::unary(
      t, a, [clip](double v) { return std::exp(std::min(v, clip)); },
      [clip](double x, double y) { return x < clip ? y : 0.0; });
}

inline Var cos(Tape& t, Var a) {
  return detail::unary(
      t, a, [](double v) { return std::cos(v); },
      [](double x, double) { return -std::sin(x); });
}

inline Var sin(Tape& t, Var a) {
  return detail::unary(
      t, a, [](double v) { return std::sin(v); },
      [](double x, double) { return std::cos(x); });
}

inline Var sum(Tape& t, Var a) {
  double s = 0;
  for (double v : t.val(a).data) s += v;
  return t.push(Tensor::scalar(s), [a](Tape& tp, Var o) {
    const double g = tp.adj(o).data[0];
    for (double& v : tp.adj(a).data) v += g;
  });
}

inline Var mean(Tape& t, Var a) {
  const int n = t.val(a).numel();
  return scale(t, sum(t, a), 1.0 / n);
}

// Concatenate along the feature axis: 1-D append, or 2-D column-wise with
// matching row counts.
inline Var concat(Tape& t, Var a, Var b) {
  const Tensor& va = t.val(a);
  const Tensor& vb = t.val(b);
  if (va.shape.size() != vb.shape.size())
    throw AdError("concat: rank mismatch");
  if (va.shape.size() == 1) {
    Tensor out({va.shape[0] + vb.shape[0]});
    std::copy(va.data.begin(), va.data.end(), out.data.begin());
    std::copy(vb.data.begin(), vb.data.end(), out.data.begin() + va.shape[0]);
    return t.push(std::move(out), [a, b](Tape& tp, Var o) {
      const auto& g = tp.adj(o).data;
      auto& ga = tp.adj(a).data;
      auto& gb = tp.adj(b).data;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[ga.size() + i];
    });
  }
  if (va.shape[0] != vb.shape[0]) throw AdError("concat: row mismatch");
  const int r = va.shape[0], ca = va.shape[1], cb = vb.shape[1];
  Tensor out({r, ca + cb});
  for (int i = 0; i < r; ++i) {
    std::copy(va.data.begin() + i * ca, va.data.begin() + (i + 1) * ca,
              out.data.begin() + i * (ca + cb));
    std::copy(vb.data.begin() + i * cb, vb.data.begin() + (i + 1) * cb,
              out.data.begin() + i * (ca + cb) + ca);
  }
  return t.push(std::move(out), [a, b, r, ca, cb](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    auto& ga = tp.adj(a).data;
    auto& gb = tp.adj(b).data;
    for (int i = 0; i < r; ++i) {
      for (int c = 0; c < ca; ++c) ga[i * ca + c] += g[i * (ca + cb) + c];
      for (int c = 0; c < cb; ++c) gb[i * cb + c] += g[i * (ca + cb) + ca + c];
    }
  });
}

// Half-open feature range: elements of a 1-D tensor or columns of a 2-D one.
inline Var slice(Tape& t, Var a, int begin, int end) {
  const Tensor& va = t.val(a);
  if (begin < 0 || end > va.cols() || begin >= end)
    throw AdError("slice: bad range");
  if (va.shape.size() == 1) {
    Tensor out({end - begin});
    std::copy(va.data.begin() + begin, va.data.begin() + end,
              out.data.begin());
    return t.push(std::move(out), [a, begin, end](Tape& tp, Var o) {
      const auto& g = tp.adj(o).data;
      for (int i = 0; i < end - begin; ++i) tp.adj(a).data[begin + i] += g[i];
    });
  }
  const int r = va.shape[0], c = va.shape[1], w = end - begin;
  Tensor out({r, w});
  for (int i = 0; i < r; ++i)
    std::copy(va.data.begin() + i * c + begin, va.data.begin() + i * c + end,
              out.data.begin() + i * w);
  return t.push(std::move(out), [a, begin, r, c, w](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j)
        tp.adj(a).data[i * c + begin + j] += g[i * w + j];
  });
}

inline Var detach(Tape& t, Var a) { return t.constant(t.val(a)); }

// Extract one row of a 2-D tensor as a 1-D tensor.
inline Var row(Tape& t, Var a, int i) {
  const Tensor& va = t.val(a);
  if (va.shape.size() != 2 || i < 0 || i >= va.shape[0])
    throw AdError("row: bad index");
  const int c = va.shape[1];
  Tensor out({c});
  std::copy(va.data.begin() + i * c, va.data.begin() + (i + 1) * c,
            out.data.begin());
  return t.push(std::move(out), [a, i, c](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    for (int j = 0; j < c; ++j) tp.adj(a).data[i * c + j] += g[j];
  });
}

inline Var gather(Tape& t, Var a, std::vector<int> idx) {
  const Tensor& va = t.val(a);
  if (va.shape.size() != 1) throw AdError("gather: 1-D only");
  Tensor out({static_cast<int>(idx.size())});
  for (std::size_t i = 0; i < idx.size(); ++i) out.data[i] = va.data[idx[i]];
  return t.push(std::move(out), [a, idx = std::move(idx)](Tape& tp, Var o) {
    const auto& g = tp.adj(o).data;
    for (std::size_t i = 0; i < idx.size(); ++i)
      tp.adj(a).data[idx[i]] += g[i];
  });
}

// y = A·x with A a fixed (non-differentiated) sparse operand.
inline Var spmv(Tape& t, const SparseD& a, Var x) {
  const Tensor& vx = t.val(x);
  if (vx.shape.size() != 1 || vx.shape[0] != a.cols())
    throw AdError("spmv: shape mismatch");
  VectorXd y = a * vx.to_vec();
  return t.push(Tensor::from_vec(y), [&a, x](Tape& tp, Var o) {
    const VectorXd gx = a.transpose() * tp.adj(o).to_vec();
    for (int i = 0; i < gx.size(); ++i) tp.adj(x).data[i] += gx[i];
  });
}

// ---------------------------------------------------------------------------
// Differentiable power-flow kernels (single scenario, per-unit 1-D tensors).

struct RectVoltage {
  Var e, f;  // vm·cos(va), vm·sin(va)
};

inline RectVoltage rect_voltage(Tape& t, Var va, Var vm) {
  return {mul(t, vm, cos(t, va)), mul(t, vm, sin(t, va))};
}

// Real/imaginary bus current from a complex admittance matrix.
inline std::pair<Var, Var> complex_mv(Tape& t, const SparseC& y,
                                      const RectVoltage& v,
                                      std::deque<SparseD>& keep) {
  // Split into real and imaginary parts once; keep them alive for backward.
  SparseD g(y.rows(), y.cols()), b(y.rows(), y.cols());
  std::vector<Eigen::Triplet<double>> tg, tb;
  for (int k = 0; k < y.outerSize(); ++k)
    for (SparseC::InnerIterator it(y, k); it; ++it) {
      tg.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value().real());
      tb.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value().imag());
    }
  g.setFromTriplets(tg.begin(), tg.end());
  b.setFromTriplets(tb.begin(), tb.end());
  keep.push_back(std::move(g));
  keep.push_back(std::move(b));
  const SparseD& gr = keep[keep.size() - 2];
  const SparseD& bi = keep[keep.size() - 1];
  Var ir = sub(t, spmv(t, gr, v.e), spmv(t, bi, v.f));
  Var ii = add(t, spmv(t, gr, v.f), spmv(t, bi, v.e));
  return {ir, ii};
}

// Active/reactive bus balance residuals:
//   resP = Re(V ∘ conj(Y·V)) + pd − Cg·pg,  resQ analogous.
struct AcResidual {
  Var p, q;
};

class PhysicsKernels {
 public:
  explicit PhysicsKernels(const PfModel& model) : model_(&model) {}

  AcResidual ac_residual(Tape& t, Var pd, Var qd, Var va, Var vm, Var pg,
                         Var qg) const {
    auto v = rect_voltage(t, va, vm);
    auto [ir, ii] = complex_mv(t, model_->ybus().ybus, v, keep_);
    Var p = add(t, mul(t, v.e, ir), mul(t, v.f, ii));
    Var q = sub(t, mul(t, v.f, ir), mul(t, v.e, ii));
    Var rp = sub(t, add(t, p, pd), spmv(t, model_->cg(), pg));
    Var rq = sub(t, add(t, q, qd), spmv(t, model_->cg(), qg));
    return {rp, rq};
  }

  // Squared apparent-flow overloads |S|² − rate² at both ends of every
  // rated branch, in the same row order as PfModel::flow_h.
  Var flow_h(Tape& t, Var va, Var vm) const {
    auto v = rect_voltage(t, va, vm);
    std::vector<int> from, to;
    std::vector<double> rate2;
    for (const auto& fb : model_->flow_branches()) {
      from.push_back(fb.f);
      to.push_back(fb.t);
      rate2.push_back(fb.rate * fb.rate);
    }
    const int nf = static_cast<int>(from.size());
    if (nf == 0) return t.constant(Tensor({0}));

    auto [ifr, ifi] = complex_mv(t, model_->ybus().yf, v, keep_);
    auto [itr, iti] = complex_mv(t, model_->ybus().yt, v, keep_);
    Var ef = gather(t, v.e, from), ff = gather(t, v.f, from);
    Var et = gather(t, v.e, to), ft = gather(t, v.f, to);

    auto s2 = [&](Var e, Var f, Var ir, Var ii) {
      Var p = add(t, mul(t, e, ir), mul(t, f, ii));
      Var q = sub(t, mul(t, f, ir), mul(t, e, ii));
      return add(t, mul(t, p, p), mul(t, q, q));
    };
    Var sf = s2(ef, ff, ifr, ifi);
    Var st = s2(et, ft, itr, iti);

    // Interleave from/to rows to match the solver's ordering.
    Tensor lim({2 * nf});
    for (int l = 0; l < nf; ++l) lim.data[2 * l] = lim.data[2 * l + 1] = rate2[l];
    Var limit = t.constant(std::move(lim));
    Var inter = interleave(t, sf, st, nf);
    return sub(t, inter, limit);
  }

  Var cost_poly(Tape& t, Var pg) const {
    const auto& gens = model_->grid().gens;
    std::size_t order = 0;
    std::vector<const std::vector<double>*> costs;
    for (int gi : model_->active()) {
      costs.push_back(&gens[gi].cost);
      order = std::max(order, gens[gi].cost.size());
    }
    const int ng = static_cast<int>(costs.size());
    Var p_mw = scale(t, pg, model_->grid().base_mva);
    // Horner evaluation with per-generator coefficient vectors.
    auto coeff = [&](std::size_t k) {  // k-th from the highest order
      Tensor c({ng});
      for (int g = 0; g < ng; ++g) {
        const auto& cv = *costs[g];
        const std::size_t pad = order - cv.size();
        c.data[g] = k < pad ? 0.0 : cv[k - pad];
      }
      return t.constant(std::move(c));
    };
    Var acc = coeff(0);
    for (std::size_t k = 1; k < order; ++k)
      acc = add(t, mul(t, acc, p_mw), coeff(k));
    return sum(t, acc);
  }

 private:
  static Var interleave(Tape& t, Var a, Var b, int n) {
    Tensor out({2 * n});
    for (int i = 0; i < n; ++i) {
      out.data[2 * i] = t.val(a).data[i];
      out.data[2 * i + 1] = t.val(b).data[i];
    }
    return t.push(std::move(out), [a, b, n](Tape& tp, Var o) {
      const auto& g = tp.adj(o).data;
      for (int i = 0; i < n; ++i) {
        tp.adj(a).data[i] += g[2 * i];
        tp.adj(b).data[i] += g[2 * i + 1];
      }
    });
  }

  const PfModel* model_;
  // Sparse real/imaginary splits must outlive the tape's backward pass.
  mutable std::deque<SparseD> keep_;
};

}  // namespace smartpg::ad

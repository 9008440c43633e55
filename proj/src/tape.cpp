#include "sbi/tape.hpp"

#include <algorithm>
#include <cmath>

namespace sbi {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

std::int32_t Tape::push(Tensor value, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(value), Tensor{}, recording_ ? std::move(back) : std::function<void(Tape&)>{}});
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::int32_t Tape::check(Var x) const {
  if (!x.valid() || static_cast<std::size_t>(x.idx) >= nodes_.size())
    throw ContractViolation("Tape: invalid Var");
  return x.idx;
}

Tensor& Tape::g(std::int32_t idx) {
  Node& n = nodes_[static_cast<std::size_t>(idx)];
  if (n.grad.v.empty()) n.grad = Tensor::zeros(n.val.shape);
  return n.grad;
}

Var Tape::input(Tensor value) { return Var{push(std::move(value))}; }

Var Tape::leaf(Tensor value) { return Var{push(std::move(value))}; }

Var Tape::param(ParamStore& ps, const std::string& name) {
  Tensor value = ps.value(name);
  ParamStore* psp = &ps;
  std::int32_t idx = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(value), [psp, name, idx](Tape& t) {
    Tensor& gsrc = t.g(idx);
    Tensor& gdst = psp->grad(name);
    for (std::size_t i = 0; i < gdst.v.size(); ++i) gdst.v[i] += gsrc.v[i];
  })};
}

const Tensor& Tape::grad_of(Var x) {
  return g(check(x));
}

double Tape::scalar(Var x) const {
  const Tensor& t = val(x);
  if (t.size() != 1) throw ContractViolation("Tape::scalar: tensor has " + t.shape_str());
  return t.v[0];
}

void Tape::backward(Var output) {
  if (!recording_) throw ContractViolation("Tape::backward: tape was not recording");
  const std::int32_t out = check(output);
  if (nodes_[static_cast<std::size_t>(out)].val.size() != 1)
    throw ContractViolation("Tape::backward: output is not a scalar");
  g(out).v[0] = 1.0;
  for (std::int32_t i = out; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.back && !n.grad.v.empty()) n.back(*this);
  }
  ran_backward_ = true;
}

void Tape::clear() {
  nodes_.clear();
  ran_backward_ = false;
}

// ---------------- elementwise ----------------

Var Tape::add(Var a, Var b) {
  const std::int32_t ia = check(a), ib = check(b);
  if (!v(ia).same_shape(v(ib))) throw DimensionError("add: shape mismatch " + v(ia).shape_str() + " vs " + v(ib).shape_str());
  Tensor out = v(ia);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += v(ib).v[i];
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, ib, io](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (std::size_t i = 0; i < go.v.size(); ++i) {
      ga.v[i] += go.v[i];
      gb.v[i] += go.v[i];
    }
  })};
}

Var Tape::sub(Var a, Var b) {
  const std::int32_t ia = check(a), ib = check(b);
  if (!v(ia).same_shape(v(ib))) throw DimensionError("sub: shape mismatch");
  Tensor out = v(ia);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= v(ib).v[i];
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, ib, io](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (std::size_t i = 0; i < go.v.size(); ++i) {
      ga.v[i] += go.v[i];
      gb.v[i] -= go.v[i];
    }
  })};
}

Var Tape::mul(Var a, Var b) {
  const std::int32_t ia = check(a), ib = check(b);
  if (!v(ia).same_shape(v(ib))) throw DimensionError("mul: shape mismatch");
  Tensor out = v(ia);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= v(ib).v[i];
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, ib, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& va = t.v(ia);
    const Tensor& vb = t.v(ib);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (std::size_t i = 0; i < go.v.size(); ++i) {
      ga.v[i] += go.v[i] * vb.v[i];
      gb.v[i] += go.v[i] * va.v[i];
    }
  })};
}

Var Tape::div(Var a, Var b) {
  const std::int32_t ia = check(a), ib = check(b);
  if (!v(ia).same_shape(v(ib))) throw DimensionError("div: shape mismatch");
  Tensor out = v(ia);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] /= v(ib).v[i];
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, ib, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& vo = t.v(io);
    const Tensor& vb = t.v(ib);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (std::size_t i = 0; i < go.v.size(); ++i) {
      ga.v[i] += go.v[i] / vb.v[i];
      gb.v[i] -= go.v[i] * vo.v[i] / vb.v[i];
    }
  })};
}

Var Tape::scale(Var a, double c) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x *= c;
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, c](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += c * go.v[i];
  })};
}

Var Tape::add_const(Var a, double c) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x += c;
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i];
  })};
}

// ---------------- linear ----------------

Var Tape::linear(Var x, Var W, Var bias, std::shared_ptr<const Tensor> mask) {
  const std::int32_t ix = check(x), iw = check(W);
  const std::int32_t ib = bias.valid() ? check(bias) : -1;
  const Tensor& xv = v(ix);
  const Tensor& wv = v(iw);
  const std::int64_t B = xv.rows(), in = xv.cols();
  const std::int64_t out_dim = wv.rows();
  if (wv.cols() != in)
    throw DimensionError("linear: W cols " + std::to_string(wv.cols()) + " != x cols " + std::to_string(in));
  if (ib >= 0 && v(ib).size() != out_dim) throw DimensionError("linear: bias size mismatch");
  if (mask && !mask->same_shape(wv)) throw DimensionError("linear: mask shape mismatch");

  // Effective weights with the mask applied.
  Tensor wm_store;
  const double* wm;
  if (mask) {
    wm_store = wv;
    for (std::size_t i = 0; i < wm_store.v.size(); ++i) wm_store.v[i] *= mask->v[i];
    wm = wm_store.v.data();
  } else {
    wm = wv.v.data();
  }

  Tensor out = Tensor::zeros({B, out_dim});
  {
    const double* xp = xv.v.data();
    const double* bp = ib >= 0 ? v(ib).v.data() : nullptr;
    double* op = out.v.data();
    for (std::int64_t b = 0; b < B; ++b) {
      const double* xr = xp + b * in;
      for (std::int64_t o = 0; o < out_dim; ++o) {
        const double* wr = wm + o * in;
        double s = bp ? bp[o] : 0.0;
        for (std::int64_t i = 0; i < in; ++i) s += xr[i] * wr[i];
        op[b * out_dim + o] = s;
      }
    }
  }

  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ix, iw, ib, io, B, in, out_dim, mask](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& xv2 = t.v(ix);
    const Tensor& wv2 = t.v(iw);
    const double* gp = go.v.data();
    const double* xp = xv2.v.data();

    Tensor wm2 = wv2;
    if (mask)
      for (std::size_t i = 0; i < wm2.v.size(); ++i) wm2.v[i] *= mask->v[i];

    // dx += g * Wm
    {
      Tensor& gx = t.g(ix);
      double* dxp = gx.v.data();
      const double* wp = wm2.v.data();
      for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t o = 0; o < out_dim; ++o) {
          const double gv = gp[b * out_dim + o];
          if (gv == 0.0) continue;
          const double* wr = wp + o * in;
          double* dxr = dxp + b * in;
          for (std::int64_t i = 0; i < in; ++i) dxr[i] += gv * wr[i];
        }
      }
    }
    // dW += (g^T x) masked
    {
      Tensor dw = Tensor::zeros({out_dim, in});
      double* dwp = dw.v.data();
      for (std::int64_t b = 0; b < B; ++b) {
        const double* xr = xp + b * in;
        for (std::int64_t o = 0; o < out_dim; ++o) {
          const double gv = gp[b * out_dim + o];
          if (gv == 0.0) continue;
          double* dwr = dwp + o * in;
          for (std::int64_t i = 0; i < in; ++i) dwr[i] += gv * xr[i];
        }
      }
      Tensor& gw = t.g(iw);
      if (mask) {
        for (std::size_t i = 0; i < gw.v.size(); ++i) gw.v[i] += dwp[i] * mask->v[i];
      } else {
        for (std::size_t i = 0; i < gw.v.size(); ++i) gw.v[i] += dwp[i];
      }
    }
    if (ib >= 0) {
      Tensor& gb = t.g(ib);
      for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t o = 0; o < out_dim; ++o) gb.v[static_cast<std::size_t>(o)] += gp[b * out_dim + o];
    }
  })};
}

// ---------------- nonlinearities ----------------

Var Tape::leaky_relu(Var a, double slope) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x = x >= 0.0 ? x : slope * x;
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, slope](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& va = t.v(ia);
    Tensor& ga = t.g(ia);
    // Subgradient at 0 takes the positive-side slope 1.
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i] * (va.v[i] >= 0.0 ? 1.0 : slope);
  })};
}

Var Tape::sigmoid(Var a) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x = stable_sigmoid(x);
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& vo = t.v(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i] * vo.v[i] * (1.0 - vo.v[i]);
  })};
}

Var Tape::tanh_op(Var a) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x = std::tanh(x);
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& vo = t.v(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i] * (1.0 - vo.v[i] * vo.v[i]);
  })};
}

Var Tape::softplus(Var a) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x = stable_softplus(x);
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& va = t.v(ia);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i] * stable_sigmoid(va.v[i]);
  })};
}

Var Tape::exp_op(Var a) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x = std::exp(x);
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& vo = t.v(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i] * vo.v[i];
  })};
}

Var Tape::log_op(Var a) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x = std::log(x);
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& va = t.v(ia);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i] / va.v[i];
  })};
}

Var Tape::soft_clamp(Var a, double limit) {
  const std::int32_t ia = check(a);
  Tensor out = v(ia);
  for (auto& x : out.v) x = limit * std::tanh(x / limit);
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, limit](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& vo = t.v(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) {
      const double th = vo.v[i] / limit;
      ga.v[i] += go.v[i] * (1.0 - th * th);
    }
  })};
}

// ---------------- reductions ----------------

Var Tape::sum(Var a) {
  const std::int32_t ia = check(a);
  double s = 0.0;
  for (double x : v(ia).v) s += x;
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(Tensor::scalar(s), [ia, io](Tape& t) {
    const double gv = t.g(io).v[0];
    Tensor& ga = t.g(ia);
    for (auto& x : ga.v) x += gv;
  })};
}

Var Tape::mean(Var a) {
  const std::int32_t ia = check(a);
  const double n = static_cast<double>(v(ia).size());
  double s = 0.0;
  for (double x : v(ia).v) s += x;
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(Tensor::scalar(s / n), [ia, io, n](Tape& t) {
    const double gv = t.g(io).v[0] / n;
    Tensor& ga = t.g(ia);
    for (auto& x : ga.v) x += gv;
  })};
}

Var Tape::rowsum(Var a) {
  const std::int32_t ia = check(a);
  const Tensor& av = v(ia);
  const std::int64_t B = av.rows(), C = av.cols();
  Tensor out = Tensor::zeros({B, 1});
  for (std::int64_t b = 0; b < B; ++b) {
    double s = 0.0;
    for (std::int64_t c = 0; c < C; ++c) s += av.v[static_cast<std::size_t>(b * C + c)];
    out.v[static_cast<std::size_t>(b)] = s;
  }
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, B, C](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::int64_t b = 0; b < B; ++b) {
      const double gv = go.v[static_cast<std::size_t>(b)];
      for (std::int64_t c = 0; c < C; ++c) ga.v[static_cast<std::size_t>(b * C + c)] += gv;
    }
  })};
}

// ---------------- structural ----------------

Var Tape::reshape(Var a, std::vector<std::int64_t> shape) {
  const std::int32_t ia = check(a);
  Tensor out = Tensor::from(std::move(shape), v(ia).v);
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.v.size(); ++i) ga.v[i] += go.v[i];
  })};
}

Var Tape::slice_cols(Var a, std::int64_t from, std::int64_t to) {
  const std::int32_t ia = check(a);
  const Tensor& av = v(ia);
  const std::int64_t B = av.rows(), C = av.cols();
  if (from < 0 || to > C || from >= to) throw DimensionError("slice_cols: bad range");
  const std::int64_t W = to - from;
  Tensor out = Tensor::zeros({B, W});
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t c = 0; c < W; ++c)
      out.v[static_cast<std::size_t>(b * W + c)] = av.v[static_cast<std::size_t>(b * C + from + c)];
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, B, C, W, from](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t c = 0; c < W; ++c)
        ga.v[static_cast<std::size_t>(b * C + from + c)] += go.v[static_cast<std::size_t>(b * W + c)];
  })};
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  std::vector<std::int32_t> idx;
  std::int64_t B = v(check(parts[0])).rows();
  std::int64_t C = 0;
  for (Var p : parts) {
    const std::int32_t ip = check(p);
    if (v(ip).rows() != B) throw DimensionError("concat_cols: row mismatch");
    idx.push_back(ip);
    C += v(ip).cols();
  }
  Tensor out = Tensor::zeros({B, C});
  std::int64_t off = 0;
  for (std::int32_t ip : idx) {
    const Tensor& pv = v(ip);
    const std::int64_t W = pv.cols();
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t c = 0; c < W; ++c)
        out.v[static_cast<std::size_t>(b * C + off + c)] = pv.v[static_cast<std::size_t>(b * W + c)];
    off += W;
  }
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [idx, io, B, C](Tape& t) {
    const Tensor& go = t.g(io);
    std::int64_t off2 = 0;
    for (std::int32_t ip : idx) {
      Tensor& gp = t.g(ip);
      const std::int64_t W = gp.cols();
      for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < W; ++c)
          gp.v[static_cast<std::size_t>(b * W + c)] += go.v[static_cast<std::size_t>(b * C + off2 + c)];
      off2 += W;
    }
  })};
}

Var Tape::gather_rows(Var a, std::vector<std::int64_t> rows) {
  const std::int32_t ia = check(a);
  const Tensor& av = v(ia);
  const std::int64_t C = av.cols();
  const std::int64_t R = static_cast<std::int64_t>(rows.size());
  Tensor out = Tensor::zeros({R, C});
  for (std::int64_t r = 0; r < R; ++r) {
    const std::int64_t src = rows[static_cast<std::size_t>(r)];
    if (src < 0 || src >= av.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy_n(av.v.begin() + src * C, C, out.v.begin() + r * C);
  }
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, rows = std::move(rows), C](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::int64_t dst = rows[r];
      for (std::int64_t c = 0; c < C; ++c)
        ga.v[static_cast<std::size_t>(dst * C + c)] += go.v[r * static_cast<std::size_t>(C) + static_cast<std::size_t>(c)];
    }
  })};
}

Var Tape::permute_cols(Var a, std::vector<std::int64_t> perm) {
  const std::int32_t ia = check(a);
  const Tensor& av = v(ia);
  const std::int64_t B = av.rows(), C = av.cols();
  if (static_cast<std::int64_t>(perm.size()) != C) throw DimensionError("permute_cols: size mismatch");
  Tensor out = Tensor::zeros({B, C});
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t c = 0; c < C; ++c)
      out.v[static_cast<std::size_t>(b * C + c)] = av.v[static_cast<std::size_t>(b * C + perm[static_cast<std::size_t>(c)])];
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, perm = std::move(perm), B, C](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t c = 0; c < C; ++c)
        ga.v[static_cast<std::size_t>(b * C + perm[static_cast<std::size_t>(c)])] += go.v[static_cast<std::size_t>(b * C + c)];
  })};
}

// ---------------- softmax family ----------------

Var Tape::logsumexp_rows(Var a) {
  const std::int32_t ia = check(a);
  const Tensor& av = v(ia);
  const std::int64_t B = av.rows(), C = av.cols();
  Tensor out = Tensor::zeros({B, 1});
  for (std::int64_t b = 0; b < B; ++b) {
    double m = -1e308;
    for (std::int64_t c = 0; c < C; ++c) m = std::max(m, av.at(b, c));
    double s = 0.0;
    for (std::int64_t c = 0; c < C; ++c) s += std::exp(av.at(b, c) - m);
    out.v[static_cast<std::size_t>(b)] = m + std::log(s);
  }
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, B, C](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& vo = t.v(io);
    const Tensor& va = t.v(ia);
    Tensor& ga = t.g(ia);
    for (std::int64_t b = 0; b < B; ++b) {
      const double gv = go.v[static_cast<std::size_t>(b)];
      if (gv == 0.0) continue;
      for (std::int64_t c = 0; c < C; ++c)
        ga.v[static_cast<std::size_t>(b * C + c)] += gv * std::exp(va.at(b, c) - vo.v[static_cast<std::size_t>(b)]);
    }
  })};
}

Var Tape::softmax_rows(Var a) {
  const std::int32_t ia = check(a);
  const Tensor& av = v(ia);
  const std::int64_t B = av.rows(), C = av.cols();
  Tensor out = Tensor::zeros({B, C});
  for (std::int64_t b = 0; b < B; ++b) {
    double m = -1e308;
    for (std::int64_t c = 0; c < C; ++c) m = std::max(m, av.at(b, c));
    double s = 0.0;
    for (std::int64_t c = 0; c < C; ++c) {
      const double e = std::exp(av.at(b, c) - m);
      out.at(b, c) = e;
      s += e;
    }
    for (std::int64_t c = 0; c < C; ++c) out.at(b, c) /= s;
  }
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, io, B, C](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& vo = t.v(io);
    Tensor& ga = t.g(ia);
    for (std::int64_t b = 0; b < B; ++b) {
      double dot = 0.0;
      for (std::int64_t c = 0; c < C; ++c) dot += go.at(b, c) * vo.at(b, c);
      for (std::int64_t c = 0; c < C; ++c) ga.at(b, c) += vo.at(b, c) * (go.at(b, c) - dot);
    }
  })};
}

Var Tape::mul_colvec(Var a, Var vcol) {
  const std::int32_t ia = check(a), iv = check(vcol);
  const Tensor& av = v(ia);
  const Tensor& vv = v(iv);
  const std::int64_t B = av.rows(), C = av.cols();
  if (vv.rows() != B || vv.cols() != 1) throw DimensionError("mul_colvec: expected [B,1]");
  Tensor out = av;
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t c = 0; c < C; ++c) out.at(b, c) *= vv.v[static_cast<std::size_t>(b)];
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [ia, iv, io, B, C](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& va = t.v(ia);
    const Tensor& vv2 = t.v(iv);
    Tensor& ga = t.g(ia);
    Tensor& gv = t.g(iv);
    for (std::int64_t b = 0; b < B; ++b) {
      const double s = vv2.v[static_cast<std::size_t>(b)];
      double acc = 0.0;
      for (std::int64_t c = 0; c < C; ++c) {
        ga.at(b, c) += go.at(b, c) * s;
        acc += go.at(b, c) * va.at(b, c);
      }
      gv.v[static_cast<std::size_t>(b)] += acc;
    }
  })};
}

Var Tape::repeat_col(Var vcol, std::int64_t c) {
  const std::int32_t iv = check(vcol);
  const Tensor& vv = v(iv);
  if (vv.cols() != 1) throw DimensionError("repeat_col: expected [B,1]");
  const std::int64_t B = vv.rows();
  Tensor out = Tensor::zeros({B, c});
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t j = 0; j < c; ++j) out.at(b, j) = vv.v[static_cast<std::size_t>(b)];
  std::int32_t io = static_cast<std::int32_t>(nodes_.size());
  return Var{push(std::move(out), [iv, io, B, c](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& gv = t.g(iv);
    for (std::int64_t b = 0; b < B; ++b) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < c; ++j) acc += go.at(b, j);
      gv.v[static_cast<std::size_t>(b)] += acc;
    }
  })};
}

// ---------------- convenience ----------------

Var affine(Tape& t, Var W, Var b, Var x) {
  const Tensor& xv = t.val(x);
  if (xv.shape.size() != 1) throw DimensionError("affine: x must be rank-1");
  const Tensor& wv = t.val(W);
  if (wv.cols() != xv.size()) throw DimensionError("affine: W cols != len(x)");
  if (t.val(b).size() != wv.rows()) throw DimensionError("affine: len(b) != W rows");
  return t.linear(x, W, b);
}

Var activation(Tape& t, Activation kind, Var x, double slope) {
  switch (kind) {
    case Activation::LeakyRelu:
      if (!(slope > 0.0 && slope < 1.0)) throw ContractViolation("leaky_relu slope must be in (0,1)");
      return t.leaky_relu(x, slope);
    case Activation::Sigmoid:
      return t.sigmoid(x);
    case Activation::Softplus:
      return t.softplus(x);
    case Activation::Tanh:
      return t.tanh_op(x);
  }
  throw ContractViolation("unknown activation");
}

}  // namespace sbi

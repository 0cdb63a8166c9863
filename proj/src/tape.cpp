#include "cwa/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

namespace cwa {

namespace kernels {

template <typename S>
S sigmoid_scalar(S v) {
  if (v >= S(0)) {
    const S z = std::exp(-v);
    return S(1) / (S(1) + z);
  }
  const S z = std::exp(v);
  return z / (S(1) + z);
}

template float sigmoid_scalar<float>(float);
template double sigmoid_scalar<double>(double);

template <typename S>
void conv2d_forward(const ConvGeom& g, const S* x, const S* w, const S* b, S* y,
                    int in_h, int in_w) {
  const auto [out_h, out_w] = conv_out_hw(g, in_h, in_w);
  const int k = g.ksize, s = g.stride, p = g.pad;

  for (int oc = 0; oc < g.out_ch; ++oc) {
    S* yplane = y + static_cast<std::size_t>(oc) * out_h * out_w;
    const S bias = b ? b[oc] : S(0);
    std::fill(yplane, yplane + static_cast<std::size_t>(out_h) * out_w, bias);

    for (int ic = 0; ic < g.in_ch; ++ic) {
      const S* xplane = x + static_cast<std::size_t>(ic) * in_h * in_w;
      const S* wk = w + ((static_cast<std::size_t>(oc) * g.in_ch + ic) * k) * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const S wv = wk[ky * k + kx];
          if (wv == S(0)) continue;
          // valid output column range for this kernel column
          int ox_lo = 0;
          while (ox_lo < out_w && ox_lo * s + kx - p < 0) ++ox_lo;
          int ox_hi = out_w - 1;
          while (ox_hi >= 0 && ox_hi * s + kx - p >= in_w) --ox_hi;
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= in_h) continue;
            const S* xrow = xplane + static_cast<std::size_t>(iy) * in_w + (kx - p);
            S* yrow = yplane + static_cast<std::size_t>(oy) * out_w;
            if (s == 1) {
              for (int ox = ox_lo; ox <= ox_hi; ++ox) yrow[ox] += wv * xrow[ox];
            } else {
              for (int ox = ox_lo; ox <= ox_hi; ++ox) yrow[ox] += wv * xrow[ox * s];
            }
          }
        }
      }
    }
  }
}

template <typename S>
void conv2d_backward_input(const ConvGeom& g, const S* w, const S* gy, S* gx,
                           int in_h, int in_w) {
  const auto [out_h, out_w] = conv_out_hw(g, in_h, in_w);
  const int k = g.ksize, s = g.stride, p = g.pad;

  for (int oc = 0; oc < g.out_ch; ++oc) {
    const S* gyplane = gy + static_cast<std::size_t>(oc) * out_h * out_w;
    for (int ic = 0; ic < g.in_ch; ++ic) {
      S* gxplane = gx + static_cast<std::size_t>(ic) * in_h * in_w;
      const S* wk = w + ((static_cast<std::size_t>(oc) * g.in_ch + ic) * k) * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const S wv = wk[ky * k + kx];
          if (wv == S(0)) continue;
          int ox_lo = 0;
          while (ox_lo < out_w && ox_lo * s + kx - p < 0) ++ox_lo;
          int ox_hi = out_w - 1;
          while (ox_hi >= 0 && ox_hi * s + kx - p >= in_w) --ox_hi;
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= in_h) continue;
            S* gxrow = gxplane + static_cast<std::size_t>(iy) * in_w + (kx - p);
            const S* gyrow = gyplane + static_cast<std::size_t>(oy) * out_w;
            if (s == 1) {
              for (int ox = ox_lo; ox <= ox_hi; ++ox) gxrow[ox] += wv * gyrow[ox];
            } else {
              for (int ox = ox_lo; ox <= ox_hi; ++ox) gxrow[ox * s] += wv * gyrow[ox];
            }
          }
        }
      }
    }
  }
}

namespace {

// Fixed-order lane reduction: deterministic and still vectorizable.
template <typename S>
S row_dot(const S* a, const S* b, int n) {
  constexpr int kLanes = 16;
  S acc[kLanes] = {};
  int i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int l = 0; l < kLanes; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (; i < n; ++i) acc[0] += a[i] * b[i];
  S total = S(0);
  for (int l = 0; l < kLanes; ++l) total += acc[l];
  return total;
}

template <typename S>
S row_dot_strided(const S* a, const S* b, int n, int bstride) {
  S total = S(0);
  for (int i = 0; i < n; ++i) total += a[i] * b[i * bstride];
  return total;
}

}  // namespace

template <typename S>
void conv2d_backward_params(const ConvGeom& g, const S* x, const S* gy, S* gw,
                            S* gb, int in_h, int in_w) {
  const auto [out_h, out_w] = conv_out_hw(g, in_h, in_w);
  const int k = g.ksize, s = g.stride, p = g.pad;

  for (int oc = 0; oc < g.out_ch; ++oc) {
    const S* gyplane = gy + static_cast<std::size_t>(oc) * out_h * out_w;
    if (gb) {
      S bacc = S(0);
      for (int i = 0; i < out_h * out_w; ++i) bacc += gyplane[i];
      gb[oc] += bacc;
    }
    for (int ic = 0; ic < g.in_ch; ++ic) {
      const S* xplane = x + static_cast<std::size_t>(ic) * in_h * in_w;
      S* gwk = gw + ((static_cast<std::size_t>(oc) * g.in_ch + ic) * k) * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          int ox_lo = 0;
          while (ox_lo < out_w && ox_lo * s + kx - p < 0) ++ox_lo;
          int ox_hi = out_w - 1;
          while (ox_hi >= 0 && ox_hi * s + kx - p >= in_w) --ox_hi;
          S acc = S(0);
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= in_h) continue;
            const S* gyrow = gyplane + static_cast<std::size_t>(oy) * out_w + ox_lo;
            const S* xrow = xplane + static_cast<std::size_t>(iy) * in_w + (ox_lo * s + kx - p);
            const int n = ox_hi - ox_lo + 1;
            if (n <= 0) continue;
            acc += (s == 1) ? row_dot(gyrow, xrow, n) : row_dot_strided(gyrow, xrow, n, s);
          }
          gwk[ky * k + kx] += acc;
        }
      }
    }
  }
}

template void conv2d_forward<float>(const ConvGeom&, const float*, const float*,
                                    const float*, float*, int, int);
template void conv2d_forward<double>(const ConvGeom&, const double*, const double*,
                                     const double*, double*, int, int);
template void conv2d_backward_input<float>(const ConvGeom&, const float*, const float*,
                                           float*, int, int);
template void conv2d_backward_input<double>(const ConvGeom&, const double*, const double*,
                                            double*, int, int);
template void conv2d_backward_params<float>(const ConvGeom&, const float*, const float*,
                                            float*, float*, int, int);
template void conv2d_backward_params<double>(const ConvGeom&, const double*, const double*,
                                             double*, double*, int, int);

}  // namespace kernels

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw InvalidInputError(std::string(what) + ": shape mismatch " +
                            shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace

NodeId Tape::push(TapeNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
  TapeNode n;
  n.kind = OpKind::kLeaf;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

NodeId Tape::conv2d(NodeId x, NodeId w, NodeId b, int stride, int pad) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0) || wv.dim(2) != wv.dim(3)) {
    throw InvalidInputError("conv2d: expected x[C,H,W], w[O,C,k,k]");
  }
  TapeNode n;
  n.kind = OpKind::kConv2d;
  n.in = {x, w};
  n.conv_bias = b;
  n.conv = ConvGeom{xv.dim(0), wv.dim(0), wv.dim(2), stride, pad};
  n.needs_grad = needs_grad(x) || needs_grad(w) || (b >= 0 && needs_grad(b));
  const auto [oh, ow] = kernels::conv_out_hw(n.conv, xv.dim(1), xv.dim(2));
  n.value = Tensor({wv.dim(0), oh, ow});
  kernels::conv2d_forward(n.conv, xv.data(), wv.data(),
                          b >= 0 ? value(b).data() : nullptr, n.value.data(),
                          xv.dim(1), xv.dim(2));
  return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
  TapeNode n;
  n.kind = OpKind::kRelu;
  n.in = {x};
  n.needs_grad = needs_grad(x);
  const Tensor& xv = value(x);
  n.value = Tensor(xv.shape());
  for (std::int64_t i = 0; i < xv.numel(); ++i) n.value[i] = xv[i] > 0.0f ? xv[i] : 0.0f;
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
  TapeNode n;
  n.kind = OpKind::kSigmoid;
  n.in = {x};
  n.needs_grad = needs_grad(x);
  const Tensor& xv = value(x);
  n.value = Tensor(xv.shape());
  for (std::int64_t i = 0; i < xv.numel(); ++i) n.value[i] = kernels::sigmoid_scalar(xv[i]);
  return push(std::move(n));
}

NodeId Tape::maxpool3x3(NodeId x) {
  const Tensor& xv = value(x);
  if (xv.rank() != 3) throw InvalidInputError("maxpool3x3: expected x[C,H,W]");
  const int C = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
  TapeNode n;
  n.kind = OpKind::kMaxPool3x3;
  n.in = {x};
  n.needs_grad = needs_grad(x);
  n.value = Tensor(xv.shape());
  n.argmax.assign(static_cast<std::size_t>(xv.numel()), 0);
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int xcol = 0; xcol < W; ++xcol) {
        float best = -std::numeric_limits<float>::infinity();
        std::int64_t best_idx = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = xcol + dx;
            if (xx < 0 || xx >= W) continue;
            const std::int64_t idx = (static_cast<std::int64_t>(c) * H + yy) * W + xx;
            if (xv[idx] > best) {  // strict: first maximum in scan order wins
              best = xv[idx];
              best_idx = idx;
            }
          }
        }
        const std::int64_t out_idx = (static_cast<std::int64_t>(c) * H + y) * W + xcol;
        n.value[out_idx] = best;
        n.argmax[static_cast<std::size_t>(out_idx)] = static_cast<std::int32_t>(best_idx);
      }
    }
  }
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  check_same_shape(av, bv, "add");
  TapeNode n;
  n.kind = OpKind::kAdd;
  n.in = {a, b};
  n.needs_grad = needs_grad(a) || needs_grad(b);
  n.value = Tensor(av.shape());
  for (std::int64_t i = 0; i < av.numel(); ++i) n.value[i] = av[i] + bv[i];
  return push(std::move(n));
}

NodeId Tape::scale(NodeId x, float c) {
  TapeNode n;
  n.kind = OpKind::kScale;
  n.in = {x};
  n.scale = c;
  n.needs_grad = needs_grad(x);
  const Tensor& xv = value(x);
  n.value = Tensor(xv.shape());
  for (std::int64_t i = 0; i < xv.numel(); ++i) n.value[i] = c * xv[i];
  return push(std::move(n));
}

NodeId Tape::sum(NodeId x) {
  TapeNode n;
  n.kind = OpKind::kSum;
  n.in = {x};
  n.needs_grad = needs_grad(x);
  const Tensor& xv = value(x);
  double acc = 0.0;
  for (std::int64_t i = 0; i < xv.numel(); ++i) acc += xv[i];
  n.value = Tensor({1});
  n.value[0] = static_cast<float>(acc);
  return push(std::move(n));
}

NodeId Tape::masked_sum(NodeId x, Tensor mask) {
  const Tensor& xv = value(x);
  check_same_shape(xv, mask, "masked_sum");
  TapeNode n;
  n.kind = OpKind::kSum;
  n.in = {x};
  n.mask = std::move(mask);
  n.needs_grad = needs_grad(x);
  double acc = 0.0;
  for (std::int64_t i = 0; i < xv.numel(); ++i) acc += static_cast<double>(xv[i]) * n.mask[i];
  n.value = Tensor({1});
  n.value[0] = static_cast<float>(acc);
  return push(std::move(n));
}

NodeId Tape::softmax_xent_sum(NodeId logits, std::vector<CellTarget> targets) {
  const Tensor& lv = value(logits);
  if (lv.rank() != 3) throw InvalidInputError("softmax_xent_sum: expected logits[K,h,w]");
  const int K = lv.dim(0), h = lv.dim(1), w = lv.dim(2);
  TapeNode n;
  n.kind = OpKind::kSoftmaxXentSum;
  n.in = {logits};
  n.needs_grad = needs_grad(logits);
  n.targets = std::move(targets);
  n.saved = Tensor({std::max<int>(1, static_cast<int>(n.targets.size())), K});
  double acc = 0.0;
  for (std::size_t t = 0; t < n.targets.size(); ++t) {
    const CellTarget& ct = n.targets[t];
    if (ct.category < 0 || ct.category >= K || ct.row < 0 || ct.row >= h || ct.col < 0 ||
        ct.col >= w) {
      throw InvalidInputError("softmax_xent_sum: cell target out of range");
    }
    double m = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) m = std::max(m, static_cast<double>(lv.at(k, ct.row, ct.col)));
    double z = 0.0;
    for (int k = 0; k < K; ++k) z += std::exp(static_cast<double>(lv.at(k, ct.row, ct.col)) - m);
    const double lse = m + std::log(z);
    acc += lse - static_cast<double>(lv.at(ct.category, ct.row, ct.col));
    for (int k = 0; k < K; ++k) {
      n.saved.at(static_cast<int>(t), k) =
          static_cast<float>(std::exp(static_cast<double>(lv.at(k, ct.row, ct.col)) - lse));
    }
  }
  n.value = Tensor({1});
  n.value[0] = static_cast<float>(acc);
  return push(std::move(n));
}

const Tensor& Tape::grad(NodeId id) {
  TapeNode& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::zero_grads() {
  for (TapeNode& n : nodes_) {
    if (!n.grad.empty()) n.grad.fill(0.0f);
  }
}

void Tape::backward_scalar(NodeId loss) {
  if (value(loss).numel() != 1) {
    throw ContractViolationError("backward_scalar: loss must be a scalar");
  }
  Tensor one({1});
  one[0] = 1.0f;
  const Seed s{loss, std::move(one)};
  backward({&s, 1});
}

void Tape::backward(std::span<const Seed> seeds) {
  zero_grads();
  for (const Seed& s : seeds) {
    TapeNode& n = nodes_[static_cast<std::size_t>(s.node)];
    check_same_shape(n.value, s.grad, "backward seed");
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    for (std::int64_t i = 0; i < s.grad.numel(); ++i) n.grad[i] += s.grad[i];
  }

  auto ensure = [&](NodeId id) -> Tensor& {
    TapeNode& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
  };

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    TapeNode& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.empty()) continue;
    const Tensor& gy = n.grad;
    switch (n.kind) {
      case OpKind::kLeaf:
        break;
      case OpKind::kConv2d: {
        const NodeId xid = n.in[0], wid = n.in[1], bid = n.conv_bias;
        const Tensor& xv = value(xid);
        const Tensor& wv = value(wid);
        if (needs_grad(xid)) {
          kernels::conv2d_backward_input(n.conv, wv.data(), gy.data(), ensure(xid).data(),
                                         xv.dim(1), xv.dim(2));
        }
        if (needs_grad(wid) || (bid >= 0 && needs_grad(bid))) {
          float* gw = needs_grad(wid) ? ensure(wid).data() : nullptr;
          float* gb = (bid >= 0 && needs_grad(bid)) ? ensure(bid).data() : nullptr;
          if (gw) {
            kernels::conv2d_backward_params(n.conv, xv.data(), gy.data(), gw, gb, xv.dim(1),
                                            xv.dim(2));
          } else if (gb) {
            const auto [oh, ow] = kernels::conv_out_hw(n.conv, xv.dim(1), xv.dim(2));
            for (int oc = 0; oc < n.conv.out_ch; ++oc) {
              float acc = 0.0f;
              const float* gyp = gy.data() + static_cast<std::size_t>(oc) * oh * ow;
              for (int j = 0; j < oh * ow; ++j) acc += gyp[j];
              gb[oc] += acc;
            }
          }
        }
        break;
      }
      case OpKind::kRelu: {
        if (!needs_grad(n.in[0])) break;
        const Tensor& xv = value(n.in[0]);
        Tensor& gx = ensure(n.in[0]);
        for (std::int64_t j = 0; j < xv.numel(); ++j) {
          if (xv[j] > 0.0f) gx[j] += gy[j];
        }
        break;
      }
      case OpKind::kSigmoid: {
        if (!needs_grad(n.in[0])) break;
        Tensor& gx = ensure(n.in[0]);
        for (std::int64_t j = 0; j < n.value.numel(); ++j) {
          gx[j] += gy[j] * n.value[j] * (1.0f - n.value[j]);
        }
        break;
      }
      case OpKind::kMaxPool3x3: {
        if (!needs_grad(n.in[0])) break;
        Tensor& gx = ensure(n.in[0]);
        for (std::int64_t j = 0; j < n.value.numel(); ++j) {
          gx[n.argmax[static_cast<std::size_t>(j)]] += gy[j];
        }
        break;
      }
      case OpKind::kAdd: {
        for (int slot = 0; slot < 2; ++slot) {
          if (!needs_grad(n.in[slot])) continue;
          Tensor& g = ensure(n.in[slot]);
          for (std::int64_t j = 0; j < gy.numel(); ++j) g[j] += gy[j];
        }
        break;
      }
      case OpKind::kScale: {
        if (!needs_grad(n.in[0])) break;
        Tensor& gx = ensure(n.in[0]);
        for (std::int64_t j = 0; j < gy.numel(); ++j) gx[j] += n.scale * gy[j];
        break;
      }
      case OpKind::kSum: {
        if (!needs_grad(n.in[0])) break;
        Tensor& gx = ensure(n.in[0]);
        const float g0 = gy[0];
        if (n.mask.empty()) {
          for (std::int64_t j = 0; j < gx.numel(); ++j) gx[j] += g0;
        } else {
          for (std::int64_t j = 0; j < gx.numel(); ++j) gx[j] += g0 * n.mask[j];
        }
        break;
      }
      case OpKind::kSoftmaxXentSum: {
        if (!needs_grad(n.in[0])) break;
        Tensor& gx = ensure(n.in[0]);
        const float g0 = gy[0];
        const int K = value(n.in[0]).dim(0);
        for (std::size_t t = 0; t < n.targets.size(); ++t) {
          const CellTarget& ct = n.targets[t];
          for (int k = 0; k < K; ++k) {
            const float p = n.saved.at(static_cast<int>(t), k);
            const float delta = (k == ct.category) ? 1.0f : 0.0f;
            gx.at(k, ct.row, ct.col) += g0 * (p - delta);
          }
        }
        break;
      }
    }
  }
}

void Tape::forward_one(const TapeNode& n, Tensor& out) const {
  switch (n.kind) {
    case OpKind::kLeaf:
      out = n.value;
      break;
    case OpKind::kConv2d: {
      const Tensor& xv = value(n.in[0]);
      const Tensor& wv = value(n.in[1]);
      out = Tensor(n.value.shape());
      kernels::conv2d_forward(n.conv, xv.data(), wv.data(),
                              n.conv_bias >= 0 ? value(n.conv_bias).data() : nullptr,
                              out.data(), xv.dim(1), xv.dim(2));
      break;
    }
    case OpKind::kRelu: {
      const Tensor& xv = value(n.in[0]);
      out = Tensor(xv.shape());
      for (std::int64_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] > 0.0f ? xv[i] : 0.0f;
      break;
    }
    case OpKind::kSigmoid: {
      const Tensor& xv = value(n.in[0]);
      out = Tensor(xv.shape());
      for (std::int64_t i = 0; i < xv.numel(); ++i) out[i] = kernels::sigmoid_scalar(xv[i]);
      break;
    }
    case OpKind::kMaxPool3x3: {
      const Tensor& xv = value(n.in[0]);
      const int C = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
      out = Tensor(xv.shape());
      for (int c = 0; c < C; ++c) {
        for (int y = 0; y < H; ++y) {
          for (int x = 0; x < W; ++x) {
            float best = -std::numeric_limits<float>::infinity();
            for (int dy = -1; dy <= 1; ++dy) {
              const int yy = y + dy;
              if (yy < 0 || yy >= H) continue;
              for (int dx = -1; dx <= 1; ++dx) {
                const int xx = x + dx;
                if (xx < 0 || xx >= W) continue;
                best = std::max(best, xv.at(c, yy, xx));
              }
            }
            out.at(c, y, x) = best;
          }
        }
      }
      break;
    }
    case OpKind::kAdd: {
      const Tensor& av = value(n.in[0]);
      const Tensor& bv = value(n.in[1]);
      out = Tensor(av.shape());
      for (std::int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
      break;
    }
    case OpKind::kScale: {
      const Tensor& xv = value(n.in[0]);
      out = Tensor(xv.shape());
      for (std::int64_t i = 0; i < xv.numel(); ++i) out[i] = n.scale * xv[i];
      break;
    }
    case OpKind::kSum: {
      const Tensor& xv = value(n.in[0]);
      double acc = 0.0;
      if (n.mask.empty()) {
        for (std::int64_t i = 0; i < xv.numel(); ++i) acc += xv[i];
      } else {
        for (std::int64_t i = 0; i < xv.numel(); ++i) {
          acc += static_cast<double>(xv[i]) * n.mask[i];
        }
      }
      out = Tensor({1});
      out[0] = static_cast<float>(acc);
      break;
    }
    case OpKind::kSoftmaxXentSum: {
      const Tensor& lv = value(n.in[0]);
      const int K = lv.dim(0);
      double acc = 0.0;
      for (const CellTarget& ct : n.targets) {
        double m = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) m = std::max(m, static_cast<double>(lv.at(k, ct.row, ct.col)));
        double z = 0.0;
        for (int k = 0; k < K; ++k) {
          z += std::exp(static_cast<double>(lv.at(k, ct.row, ct.col)) - m);
        }
        acc += m + std::log(z) - static_cast<double>(lv.at(ct.category, ct.row, ct.col));
      }
      out = Tensor({1});
      out[0] = static_cast<float>(acc);
      break;
    }
  }
}

std::vector<Tensor> Tape::replay_forward() const {
  std::vector<Tensor> out(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    forward_one(nodes_[i], out[i]);
  }
  return out;
}

}  // namespace cwa

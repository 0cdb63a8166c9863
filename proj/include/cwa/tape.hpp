#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cwa/tensor.hpp"

namespace cwa {

// Convolution geometry. Input [in_ch, H, W], weight [out_ch, in_ch, k, k],
// bias [out_ch], output [out_ch, Ho, Wo] with Ho = (H + 2*pad - k)/stride + 1.
struct ConvGeom {
  int in_ch = 0;
  int out_ch = 0;
  int ksize = 3;
  int stride = 1;
  int pad = 1;
};

// One (category, row, col) cell of a [K, h, w] logit map.
struct CellTarget {
  int category = 0;
  int row = 0;
  int col = 0;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kConv2d,
  kRelu,
  kSigmoid,
  kMaxPool3x3,  // window 3x3, stride 1, pad 1 (same-size output)
  kAdd,
  kScale,
  kSum,         // full reduction, or weighted sum against a constant mask
  kSoftmaxXentSum,  // sum of per-cell softmax cross-entropy over listed cells
};

using NodeId = int;

struct TapeNode {
  OpKind kind = OpKind::kLeaf;
  std::array<NodeId, 2> in{-1, -1};
  bool needs_grad = false;
  Tensor value;
  Tensor grad;  // allocated lazily by backward()

  // Op-specific records.
  ConvGeom conv{};
  NodeId conv_bias = -1;
  float scale = 1.0f;
  Tensor mask;                      // kSum: optional constant weights
  std::vector<CellTarget> targets;  // kSoftmaxXentSum
  Tensor saved;                     // kSoftmaxXentSum: per-target softmax probs [T, K]
  std::vector<std::int32_t> argmax;  // kMaxPool3x3: chosen input index per output cell
};

struct Seed {
  NodeId node = -1;
  Tensor grad;
};

// Records a forward computation over the fixed primitive set and replays it
// backwards for reverse-mode gradients. Single-threaded; one tape per image.
class Tape {
 public:
  NodeId leaf(Tensor value, bool requires_grad = false);
  NodeId conv2d(NodeId x, NodeId w, NodeId b, int stride, int pad);
  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId maxpool3x3(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId x, float c);
  NodeId sum(NodeId x);
  NodeId masked_sum(NodeId x, Tensor mask);
  NodeId softmax_xent_sum(NodeId logits, std::vector<CellTarget> targets);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& grad(NodeId id);  // zero tensor if backward never reached it
  bool needs_grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Reverse pass in exact reverse record order. Seeds are added to the named
  // nodes' gradients; a scalar loss is seeded with a [1] tensor holding 1.
  void backward(std::span<const Seed> seeds);
  void backward_scalar(NodeId loss);

  void zero_grads();

  // Re-executes every recorded op on the recorded operands and returns the
  // recomputed outputs; used to check bit-identical replay.
  std::vector<Tensor> replay_forward() const;

 private:
  NodeId push(TapeNode node);
  void forward_one(const TapeNode& node, Tensor& out) const;

  std::vector<TapeNode> nodes_;
};

// Raw kernels, templated so verification oracles can run them in double.
namespace kernels {

template <typename S>
void conv2d_forward(const ConvGeom& g, const S* x, const S* w, const S* b, S* y,
                    int in_h, int in_w);

template <typename S>
void conv2d_backward_input(const ConvGeom& g, const S* w, const S* gy, S* gx,
                           int in_h, int in_w);

template <typename S>
void conv2d_backward_params(const ConvGeom& g, const S* x, const S* gy, S* gw,
                            S* gb, int in_h, int in_w);

template <typename S>
S sigmoid_scalar(S v);

// Output spatial dims for a geometry applied to in_h x in_w.
inline std::pair<int, int> conv_out_hw(const ConvGeom& g, int in_h, int in_w) {
  return {(in_h + 2 * g.pad - g.ksize) / g.stride + 1,
          (in_w + 2 * g.pad - g.ksize) / g.stride + 1};
}

}  // namespace kernels

}  // namespace cwa

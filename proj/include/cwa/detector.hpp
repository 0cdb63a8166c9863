#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "cwa/tape.hpp"
#include "cwa/tensor.hpp"

namespace cwa {

struct ConvLayer {
  ConvGeom geom;
  Tensor w;  // [out_ch, in_ch, k, k]
  Tensor b;  // [out_ch]
};

// CenterNet-style toy detector: conv3x3-relu trunk with a single stride-2
// downsample, then 1x1 heads for K keypoint-heatmap channels (sigmoid) and
// 2 size channels (width, height in input pixels).
struct DetectorModel {
  int num_categories = 3;
  int input_h = 64;
  int input_w = 64;
  float visual_threshold = 0.3f;
  std::uint64_t seed = 0;

  std::vector<ConvLayer> trunk;
  ConvLayer hm_head;
  ConvLayer size_head;

  int total_stride() const;
  int heatmap_h() const { return input_h / total_stride(); }
  int heatmap_w() const { return input_w / total_stride(); }
  void validate() const;
};

// He-initialized model. widths are trunk output channels; the layer at
// downsample_index uses stride 2, all others stride 1.
DetectorModel make_detector(int num_categories, int input_h, int input_w,
                            std::span<const int> widths, int downsample_index,
                            float visual_threshold, std::uint64_t seed);

struct DetectorOutput {
  Tensor logits;  // [K, h, w]
  Tensor probs;   // [K, h, w], sigmoid of logits
  Tensor sizes;   // [2, h, w]
};

// Tape handles for building losses on top of a recorded forward pass.
struct DetectorNodes {
  NodeId input = -1;   // CHW image leaf
  NodeId logits = -1;  // [K, h, w]
  NodeId probs = -1;   // [K, h, w]
  NodeId sizes = -1;   // [2, h, w]
};

// Records the full forward pass on the tape. image is [H, W, 3] in [0,1].
// When params_need_grad is set, every weight/bias leaf requires grad and the
// returned ids list them in layer order (trunk..., hm_head, size_head), as
// (w, b) pairs.
DetectorNodes build_forward(Tape& tape, const DetectorModel& model, const Tensor& image_hwc,
                            bool input_needs_grad, bool params_need_grad,
                            std::vector<NodeId>* param_nodes = nullptr);

DetectorOutput forward(const DetectorModel& model, const Tensor& image_hwc);

// A scalar loss over detector outputs, built from tape primitives.
struct ScalarLossSpec {
  std::function<NodeId(Tape&, const DetectorNodes&)> build;
};

// d(loss)/d(image), same [H, W, 3] shape as the input image.
Tensor grad_wrt_input(const DetectorModel& model, const Tensor& image_hwc,
                      const ScalarLossSpec& loss);

struct Detection {
  int category = 0;
  float score = 0.0f;
  // Box center/size in input-pixel units, clipped to image bounds.
  float cx = 0.0f, cy = 0.0f, w = 0.0f, h = 0.0f;
  int key_row = 0, key_col = 0;
};

// Keypoint extraction: a cell is a keypoint iff it is the maximum of its 3x3
// neighborhood (ties broken toward smaller (row, col)) and its probability is
// at least visual_threshold.
std::vector<Detection> decode(const DetectorOutput& output, float visual_threshold,
                              int total_stride, int input_h, int input_w);
std::vector<Detection> decode(const DetectorModel& model, const DetectorOutput& output);

// Layout helpers between the public [H, W, 3] image layout and the internal
// channel-first layout used by the conv kernels.
Tensor hwc_to_chw(const Tensor& hwc);
Tensor chw_to_hwc(const Tensor& chw);

// Model file: one line of JSON (architecture, thresholds, seed, tensor list),
// then the parameter tensors concatenated in CWT1 format.
void save_model(const std::filesystem::path& path, const DetectorModel& model);
DetectorModel load_model(const std::filesystem::path& path);

// Double-precision forward used by gradient-verification oracles.
struct DetectorOutputD {
  TensorD logits;
  TensorD sizes;
};
DetectorOutputD forward_double(const DetectorModel& model, const TensorD& image_hwc);

}  // namespace cwa

#pragma once

#include <cstdint>
#include <vector>

#include "cwa/detector.hpp"
#include "cwa/scenes.hpp"

namespace cwa {

struct TrainConfig {
  int epochs = 30;
  float lr = 0.02f;
  int batch_size = 16;
  float momentum = 0.9f;
  float size_loss_weight = 0.1f;
  // Fixed schedule: lr is multiplied by lr_drop_factor at lr_drop_epoch.
  int lr_drop_epoch = 24;
  float lr_drop_factor = 0.1f;
  float holdout_fraction = 0.1f;  // trailing slice of the dataset, never trained on
  std::vector<int> widths{16, 32, 32, 32};
  int downsample_index = 0;
  float visual_threshold = 0.3f;
};

struct TrainLog {
  std::vector<double> epoch_losses;
  double holdout_map = -1.0;  // clean mAP on the held-out slice at IoU 0.5
  int holdout_count = 0;
};

// Deterministic SGD-with-momentum training of the toy detector on Gaussian
// keypoint heatmaps (penalty-reduced focal loss) plus L1 size regression.
DetectorModel train(const SceneSet& dataset, const TrainConfig& config, std::uint64_t seed,
                    TrainLog* log = nullptr);

// Gaussian-splatted target heatmap [K, h, w] plus center cells for one scene.
struct SceneTargets {
  Tensor heatmap;
  std::vector<CellTarget> centers;        // category + heatmap cell per object
  std::vector<std::pair<float, float>> center_sizes;  // (w, h) in input pixels
};
SceneTargets make_targets(const Scene& scene, int num_categories, int stride, int hm_h,
                          int hm_w);

}  // namespace cwa

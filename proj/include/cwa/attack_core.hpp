#pragma once

#include <vector>

#include "cwa/detector.hpp"

namespace cwa {

struct HeatmapPixel {
  int row = 0;
  int col = 0;
};

// Per-category sets of heatmap cells under attack. A cell enters the set when
// its probability reaches t_attack; once removed it is never re-added.
struct TargetPixelSets {
  float t_attack = 0.1f;
  std::vector<std::vector<HeatmapPixel>> sets;  // indexed by category

  int num_categories() const { return static_cast<int>(sets.size()); }
  bool all_empty() const;
  std::size_t total_pixels() const;
  // Cells currently at or above the visual threshold (the detected subset).
  std::vector<std::vector<HeatmapPixel>> detected_subset(const DetectorOutput& output,
                                                         float visual_threshold) const;
};

struct AttackBudget {
  int max_inner_sca = 20;       // M_s
  int max_outer_dca = 10;       // M_D
  float eps_dca = 8.0f / 255;   // total L-inf budget
  int max_outer_sca = 50;

  void validate() const;
};

struct AttackResult {
  Tensor adversarial;    // [H, W, 3] in [0,1]
  Tensor perturbation;   // adversarial - original (tracked, not recomputed)
  bool success = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double l0_fraction = 0.0;
  double l2_rms = 0.0;
  double linf = 0.0;
  double elapsed_s = 0.0;
  // One entry per outer iteration: the attacked category and its summed
  // softmax score over the active set at the start of the iteration.
  std::vector<std::pair<int, double>> target_scores;
};

// All heatmap cells with probability >= t_attack, per category: detected
// pixels plus the runner-up pixels just below the visual threshold.
TargetPixelSets select_target_pixels(const DetectorOutput& output, float t_attack,
                                     float visual_threshold);

// Category with the highest summed per-pixel softmax score over its set;
// ties break toward the smaller index. At least one set must be nonempty.
int select_target_category(const DetectorOutput& output, const TargetPixelSets& sets);

double summed_softmax(const DetectorOutput& output, const std::vector<HeatmapPixel>& pixels,
                      int category);

// Drops every stored cell whose probability on x_new fell below t_attack.
// Never adds cells. x_prev is part of the recorded step for telemetry parity;
// only x_new is consulted.
TargetPixelSets remove_pixels(const DetectorModel& model, const Tensor& x_prev,
                              const Tensor& x_new, const TargetPixelSets& sets);
TargetPixelSets remove_pixels(const DetectorOutput& output_new, const TargetPixelSets& sets);

// True iff every per-category set is empty.
bool attack_succeeded(const TargetPixelSets& sets);

}  // namespace cwa

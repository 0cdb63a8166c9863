#include "cwa/attack_core.hpp"

#include <cmath>

namespace cwa {

bool TargetPixelSets::all_empty() const {
  for (const auto& s : sets) {
    if (!s.empty()) return false;
  }
  return true;
}

std::size_t TargetPixelSets::total_pixels() const {
  std::size_t n = 0;
  for (const auto& s : sets) n += s.size();
  return n;
}

std::vector<std::vector<HeatmapPixel>> TargetPixelSets::detected_subset(
    const DetectorOutput& output, float visual_threshold) const {
  std::vector<std::vector<HeatmapPixel>> out(sets.size());
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (const HeatmapPixel& px : sets[k]) {
      if (output.probs.at(static_cast<int>(k), px.row, px.col) >= visual_threshold) {
        out[k].push_back(px);
      }
    }
  }
  return out;
}

void AttackBudget::validate() const {
  if (max_inner_sca < 1 || max_outer_dca < 1 || max_outer_sca < 1 || eps_dca <= 0.0f) {
    throw ConfigError("attack budget: all caps must be positive");
  }
  if (eps_dca > 16.0f / 255.0f) {
    throw ConfigError("attack budget: eps_dca must be <= 16/255");
  }
}

TargetPixelSets select_target_pixels(const DetectorOutput& output, float t_attack,
                                     float visual_threshold) {
  if (t_attack <= 0.0f || t_attack >= visual_threshold) {
    throw ConfigError("select_target_pixels: need 0 < t_attack < visual_threshold");
  }
  const int K = output.probs.dim(0), h = output.probs.dim(1), w = output.probs.dim(2);
  TargetPixelSets sets;
  sets.t_attack = t_attack;
  sets.sets.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (output.probs.at(k, r, c) >= t_attack) {
          sets.sets[static_cast<std::size_t>(k)].push_back(HeatmapPixel{r, c});
        }
      }
    }
  }
  return sets;
}

double summed_softmax(const DetectorOutput& output, const std::vector<HeatmapPixel>& pixels,
                      int category) {
  const int K = output.logits.dim(0);
  double total = 0.0;
  for (const HeatmapPixel& px : pixels) {
    double m = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      m = std::max(m, static_cast<double>(output.logits.at(k, px.row, px.col)));
    }
    double z = 0.0;
    for (int k = 0; k < K; ++k) {
      z += std::exp(static_cast<double>(output.logits.at(k, px.row, px.col)) - m);
    }
    total += std::exp(static_cast<double>(output.logits.at(category, px.row, px.col)) - m) / z;
  }
  return total;
}

int select_target_category(const DetectorOutput& output, const TargetPixelSets& sets) {
  int best = -1;
  double best_score = 0.0;
  for (int k = 0; k < sets.num_categories(); ++k) {
    const auto& pixels = sets.sets[static_cast<std::size_t>(k)];
    if (pixels.empty()) continue;
    const double score = summed_softmax(output, pixels, k);
    if (best < 0 || score > best_score) {
      best = k;
      best_score = score;
    }
  }
  if (best < 0) {
    throw ContractViolationError("select_target_category: all target sets are empty");
  }
  return best;
}

TargetPixelSets remove_pixels(const DetectorOutput& output_new, const TargetPixelSets& sets) {
  TargetPixelSets out;
  out.t_attack = sets.t_attack;
  out.sets.resize(sets.sets.size());
  for (std::size_t k = 0; k < sets.sets.size(); ++k) {
    for (const HeatmapPixel& px : sets.sets[k]) {
      if (output_new.probs.at(static_cast<int>(k), px.row, px.col) >= sets.t_attack) {
        out.sets[k].push_back(px);
      }
    }
  }
  return out;
}

TargetPixelSets remove_pixels(const DetectorModel& model, const Tensor& x_prev,
                              const Tensor& x_new, const TargetPixelSets& sets) {
  (void)x_prev;
  return remove_pixels(forward(model, x_new), sets);
}

bool attack_succeeded(const TargetPixelSets& sets) { return sets.all_empty(); }

}  // namespace cwa

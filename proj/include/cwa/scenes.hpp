#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cwa/tensor.hpp"

namespace cwa {

constexpr int kSceneSize = 64;
constexpr int kNumCategories = 3;  // 0 circle, 1 square, 2 triangle

struct Annotation {
  int category = 0;
  float cx = 0.0f, cy = 0.0f, w = 0.0f, h = 0.0f;  // input-pixel units
};

struct Scene {
  Tensor image;  // [64, 64, 3] in [0,1], quantized to the 8-bit grid
  std::vector<Annotation> annotations;
};

struct SceneSet {
  std::uint64_t seed = 0;
  std::vector<Scene> scenes;
};

// Deterministic generator: 1-4 colored shapes (circle/square/triangle) on a
// value-noise background; pairwise box IoU <= 0.3, sides in [10, 24] pixels.
SceneSet generate_scenes(int count, std::uint64_t seed);

float box_iou(const Annotation& a, const Annotation& b);

// 8-bit binary PPM (P6).
void write_ppm(const std::filesystem::path& path, const Tensor& image_hwc);
Tensor read_ppm(const std::filesystem::path& path);

// Dataset directory: NNNNN.ppm + NNNNN.json per scene, manifest.json on top.
void save_dataset(const std::filesystem::path& dir, const SceneSet& set);
SceneSet load_dataset(const std::filesystem::path& dir);

}  // namespace cwa

#pragma once

#include <functional>
#include <optional>

#include "cwa/attack_core.hpp"

namespace cwa {

// SCA constants: DeepFool step overshoot and cap, sparse-solver overshoot.
inline constexpr double kDeepfoolOvershoot = 1.02;
inline constexpr int kDeepfoolMaxSteps = 50;
inline constexpr double kSolverOvershoot = 1.05;

// Differentiable scalar decision function F of an image-shaped tensor; the
// decision boundary is F = 0 and the attack drives F negative.
struct ScalarField {
  std::function<double(const Tensor&)> value;
  std::function<std::pair<double, Tensor>(const Tensor&)> value_and_grad;
};

struct DeepFoolResult {
  Tensor x_boundary;
  bool crossed = false;
  int steps = 0;
};

// Iterative minimal-norm steps r = -(F/|grad F|^2) grad F, scaled by the
// overshoot, until F <= 0 or the step cap. overshoot = 1 gives the plain
// hyperplane projection on a linear F.
DeepFoolResult deepfool_to_boundary(const ScalarField& field, const Tensor& x0,
                                    double overshoot = kDeepfoolOvershoot,
                                    int max_steps = kDeepfoolMaxSteps);

// Detector instantiation: F(x) = sum of the target category's logits over the
// pixel set minus the best competing category's same sum.
ScalarField category_margin_field(const DetectorModel& model,
                                  const std::vector<HeatmapPixel>& pixels, int target_category);

// Dense boundary point for the current target set (category-wise DeepFool).
DeepFoolResult cw_deepfool(const DetectorModel& model, const Tensor& x,
                           const std::vector<HeatmapPixel>& pixels, int target_category);

struct HyperplaneApprox {
  Tensor normal;  // w, [H, W, 3]
  Tensor anchor;  // x_B, [H, W, 3]
};

// Local boundary normal at x_B: gradient of the winning-category sum at x_B
// minus gradient of the original winning-category sum, both taken at x_B.
// Empty when the two winners coincide (degenerate boundary).
std::optional<HyperplaneApprox> approx_boundary(const DetectorModel& model, const Tensor& x_b,
                                                const Tensor& x,
                                                const std::vector<HeatmapPixel>& pixels);

struct LinearSolverResult {
  Tensor x;                         // sparse-perturbed point, inside the box
  std::vector<std::int64_t> touched;  // flat coordinates actually modified
  bool crossed = false;
};

// Greedy coordinate projection onto {x : w^T (x - x_b) = 0}: repeatedly move
// the largest-|w| untried coordinate to the residual-minimizing value inside
// [box_lo, box_hi] until the residual crosses zero (with overshoot) or all
// coordinates are exhausted. Untouched coordinates keep their exact values.
LinearSolverResult linear_solver(const Tensor& x, const Tensor& w, const Tensor& x_b,
                                 float box_lo = 0.0f, float box_hi = 1.0f,
                                 double overshoot = kSolverOvershoot);

// Sparse category-wise attack: outer loop over target categories, inner loop
// of deepfool -> boundary approximation -> sparse projection -> pixel removal.
AttackResult sca_attack(const DetectorModel& model, const Tensor& image,
                        const AttackBudget& budget, float t_attack);

}  // namespace cwa

#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "cwa/detector.hpp"
#include "cwa/scenes.hpp"

namespace cwa {

struct MapResult {
  double map = 0.0;
  std::map<int, double> per_category_ap;  // categories present in the ground truth
};

// VOC-style mAP at a single IoU threshold: all-point interpolated AP with
// greedy score-ordered matching, each ground-truth box matched at most once.
MapResult mean_average_precision(const std::vector<std::vector<Detection>>& detections,
                                 const std::vector<std::vector<Annotation>>& ground_truth,
                                 double iou_threshold = 0.5);

double detection_iou(const Detection& d, const Annotation& a);

// ASR = 1 - mAP_attack / mAP_clean, clipped below at zero.
double attack_success_rate(double map_clean, double map_attack);

// ATR = ASR_target / ASR_origin.
double attack_transfer_ratio(double asr_origin, double asr_target);

struct Perceptibility {
  double p_l2 = 0.0;  // RMS over all pixel-channel values
  double p_l0 = 0.0;  // fraction of spatial pixels with any perturbed channel
};
Perceptibility perceptibility(const Tensor& perturbation_hwc);

struct EvalReport {
  double map_clean = 0.0;
  double map_attack = 0.0;
  double asr = 0.0;
  double p_l2 = 0.0;
  double p_l0 = 0.0;
  std::map<int, double> per_category_ap_clean;
  std::map<int, double> per_category_ap_attack;
  double mean_attack_time_s = 0.0;
};

struct TransferReport {
  std::string origin_model;
  std::string target_model;
  double map_clean_target = 0.0;
  double map_attack_target = 0.0;
  double asr_origin = 0.0;
  double asr_target = 0.0;
  double atr = 0.0;
};

// Evaluates adversarial images generated on an origin model against a target
// model; asr_origin is the origin's own white-box ASR on the same set.
TransferReport transfer_eval(const std::vector<Tensor>& adversarial_images,
                             const DetectorModel& target_model,
                             const std::vector<std::vector<Annotation>>& ground_truth,
                             double asr_origin, double map_clean_target);

void save_eval_report(const std::filesystem::path& path, const EvalReport& report);
void save_transfer_report(const std::filesystem::path& path, const TransferReport& report);

}  // namespace cwa

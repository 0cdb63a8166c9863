#include "cwa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "cwa/fs_util.hpp"

namespace cwa {

double detection_iou(const Detection& d, const Annotation& a) {
  const double dx0 = d.cx - d.w / 2.0, dx1 = d.cx + d.w / 2.0;
  const double dy0 = d.cy - d.h / 2.0, dy1 = d.cy + d.h / 2.0;
  const double ax0 = a.cx - a.w / 2.0, ax1 = a.cx + a.w / 2.0;
  const double ay0 = a.cy - a.h / 2.0, ay1 = a.cy + a.h / 2.0;
  const double iw = std::max(0.0, std::min(dx1, ax1) - std::max(dx0, ax0));
  const double ih = std::max(0.0, std::min(dy1, ay1) - std::max(dy0, ay0));
  const double inter = iw * ih;
  const double uni = d.w * static_cast<double>(d.h) + a.w * static_cast<double>(a.h) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

struct RankedDet {
  float score;
  int image;
  int index;  // input order within the image
};

// AP for one category: greedy matching in score order; precision/recall
// points are emitted per distinct score so equal-score detections form one
// group and image order cannot change the result.
double average_precision(const std::vector<std::vector<Detection>>& detections,
                         const std::vector<std::vector<Annotation>>& ground_truth, int category,
                         double iou_threshold, int total_gt) {
  std::vector<RankedDet> ranked;
  for (std::size_t img = 0; img < detections.size(); ++img) {
    const auto& dets = detections[img];
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (dets[i].category == category) {
        ranked.push_back(RankedDet{dets[i].score, static_cast<int>(img), static_cast<int>(i)});
      }
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedDet& a, const RankedDet& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.index < b.index;
  });

  std::vector<std::vector<bool>> gt_used(ground_truth.size());
  for (std::size_t img = 0; img < ground_truth.size(); ++img) {
    gt_used[img].assign(ground_truth[img].size(), false);
  }

  std::vector<double> recalls, precisions;
  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const RankedDet& rd = ranked[i];
    const Detection& det = detections[static_cast<std::size_t>(rd.image)]
                                     [static_cast<std::size_t>(rd.index)];
    // Best-IoU unmatched ground truth of this category in the same image.
    double best_iou = 0.0;
    int best_gt = -1;
    const auto& gts = ground_truth[static_cast<std::size_t>(rd.image)];
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].category != category || gt_used[static_cast<std::size_t>(rd.image)][g]) continue;
      const double iou = detection_iou(det, gts[g]);
      if (iou > best_iou) {
        best_iou = iou;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best_iou >= iou_threshold) {
      gt_used[static_cast<std::size_t>(rd.image)][static_cast<std::size_t>(best_gt)] = true;
      ++tp;
    } else {
      ++fp;
    }
    const bool group_end = (i + 1 == ranked.size()) || (ranked[i + 1].score != rd.score);
    if (group_end) {
      recalls.push_back(static_cast<double>(tp) / total_gt);
      precisions.push_back(static_cast<double>(tp) / (tp + fp));
    }
  }

  // All-point interpolation: area under the monotone precision envelope.
  double ap = 0.0;
  double prev_recall = 0.0;
  std::vector<double> env(precisions.size());
  double running = 0.0;
  for (int i = static_cast<int>(precisions.size()) - 1; i >= 0; --i) {
    running = std::max(running, precisions[static_cast<std::size_t>(i)]);
    env[static_cast<std::size_t>(i)] = running;
  }
  for (std::size_t i = 0; i < recalls.size(); ++i) {
    ap += (recalls[i] - prev_recall) * env[i];
    prev_recall = recalls[i];
  }
  return ap;
}

}  // namespace

MapResult mean_average_precision(const std::vector<std::vector<Detection>>& detections,
                                 const std::vector<std::vector<Annotation>>& ground_truth,
                                 double iou_threshold) {
  if (detections.size() != ground_truth.size()) {
    throw InvalidInputError("mAP: detections/ground-truth image counts differ");
  }
  if (iou_threshold <= 0.0 || iou_threshold >= 1.0) {
    throw ConfigError("mAP: iou_threshold must be in (0,1)");
  }
  std::map<int, int> gt_counts;
  for (const auto& gts : ground_truth) {
    for (const Annotation& a : gts) ++gt_counts[a.category];
  }
  if (gt_counts.empty()) {
    throw UndefinedMetricError("mAP: no ground-truth boxes in the dataset");
  }
  MapResult result;
  for (const auto& [category, total] : gt_counts) {
    const double ap = average_precision(detections, ground_truth, category, iou_threshold, total);
    result.per_category_ap[category] = ap;
    result.map += ap;
  }
  result.map /= static_cast<double>(result.per_category_ap.size());
  return result;
}

double attack_success_rate(double map_clean, double map_attack) {
  if (map_clean <= 0.0) throw UndefinedMetricError("ASR undefined: clean mAP is zero");
  return std::max(0.0, 1.0 - map_attack / map_clean);
}

double attack_transfer_ratio(double asr_origin, double asr_target) {
  if (asr_origin <= 0.0) throw UndefinedMetricError("ATR undefined: origin ASR is zero");
  return asr_target / asr_origin;
}

Perceptibility perceptibility(const Tensor& r) {
  Perceptibility p;
  if (r.rank() != 3) throw InvalidInputError("perceptibility: expected [H,W,3]");
  const int H = r.dim(0), W = r.dim(1), C = r.dim(2);
  double sq = 0.0;
  std::int64_t touched = 0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      bool any = false;
      for (int c = 0; c < C; ++c) {
        const double v = r.at(y, x, c);
        sq += v * v;
        if (std::abs(v) > 1e-12) any = true;
      }
      if (any) ++touched;
    }
  }
  p.p_l2 = std::sqrt(sq / static_cast<double>(r.numel()));
  p.p_l0 = static_cast<double>(touched) / (static_cast<double>(H) * W);
  return p;
}

TransferReport transfer_eval(const std::vector<Tensor>& adversarial_images,
                             const DetectorModel& target_model,
                             const std::vector<std::vector<Annotation>>& ground_truth,
                             double asr_origin, double map_clean_target) {
  if (adversarial_images.size() != ground_truth.size()) {
    throw InvalidInputError("transfer_eval: image/ground-truth counts differ");
  }
  TransferReport report;
  report.asr_origin = asr_origin;
  report.map_clean_target = map_clean_target;
  std::vector<std::vector<Detection>> dets;
  dets.reserve(adversarial_images.size());
  for (const Tensor& img : adversarial_images) {
    dets.push_back(decode(target_model, forward(target_model, img)));
  }
  report.map_attack_target = mean_average_precision(dets, ground_truth, 0.5).map;
  report.asr_target = attack_success_rate(map_clean_target, report.map_attack_target);
  report.atr = attack_transfer_ratio(asr_origin, report.asr_target);
  return report;
}

namespace {

using nlohmann::json;

json ap_map_to_json(const std::map<int, double>& ap) {
  json j = json::object();
  for (const auto& [k, v] : ap) j[std::to_string(k)] = v;
  return j;
}

}  // namespace

void save_eval_report(const std::filesystem::path& path, const EvalReport& r) {
  json j;
  j["schema"] = "cwreport/1";
  j["map_clean"] = r.map_clean;
  j["map_attack"] = r.map_attack;
  j["asr"] = r.asr;
  j["p_l2"] = r.p_l2;
  j["p_l0"] = r.p_l0;
  j["per_category_ap_clean"] = ap_map_to_json(r.per_category_ap_clean);
  j["per_category_ap_attack"] = ap_map_to_json(r.per_category_ap_attack);
  j["mean_attack_time_s"] = r.mean_attack_time_s;
  atomic_write_file(path, j.dump(2) + "\n");
}

void save_transfer_report(const std::filesystem::path& path, const TransferReport& r) {
  json j;
  j["schema"] = "cwreport/1";
  j["origin_model"] = r.origin_model;
  j["target_model"] = r.target_model;
  j["map_clean_target"] = r.map_clean_target;
  j["map_attack_target"] = r.map_attack_target;
  j["asr_origin"] = r.asr_origin;
  j["asr_target"] = r.asr_target;
  j["atr"] = r.atr;
  atomic_write_file(path, j.dump(2) + "\n");
}

}  // namespace cwa

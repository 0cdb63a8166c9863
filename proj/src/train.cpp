#include "cwa/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cwa/metrics.hpp"
#include "cwa/rng.hpp"

namespace cwa {

SceneTargets make_targets(const Scene& scene, int num_categories, int stride, int hm_h,
                          int hm_w) {
  SceneTargets t;
  t.heatmap = Tensor({num_categories, hm_h, hm_w});
  for (const Annotation& ann : scene.annotations) {
    const int cr = std::clamp(static_cast<int>(ann.cy) / stride, 0, hm_h - 1);
    const int cc = std::clamp(static_cast<int>(ann.cx) / stride, 0, hm_w - 1);
    t.centers.push_back(CellTarget{ann.category, cr, cc});
    t.center_sizes.emplace_back(ann.w, ann.h);

    const float side_hm = std::max(ann.w, ann.h) / static_cast<float>(stride);
    const float sigma = std::max(1.0f, side_hm / 6.0f);
    const int radius = static_cast<int>(std::ceil(3.0f * sigma));
    for (int dr = -radius; dr <= radius; ++dr) {
      const int r = cr + dr;
      if (r < 0 || r >= hm_h) continue;
      for (int dc = -radius; dc <= radius; ++dc) {
        const int c = cc + dc;
        if (c < 0 || c >= hm_w) continue;
        const float g = std::exp(-(dr * dr + dc * dc) / (2.0f * sigma * sigma));
        float& cell = t.heatmap.at(ann.category, r, c);
        cell = std::max(cell, g);
      }
    }
    t.heatmap.at(ann.category, cr, cc) = 1.0f;
  }
  return t;
}

namespace {

// Penalty-reduced focal loss on sigmoid heatmaps (alpha=2, beta=4), returned
// as d(loss)/d(logit) plus the loss value itself. Normalized by object count.
double focal_seed(const Tensor& probs, const Tensor& target, int num_objects, Tensor& dlogit) {
  const float inv_n = 1.0f / static_cast<float>(std::max(1, num_objects));
  double loss = 0.0;
  for (std::int64_t i = 0; i < probs.numel(); ++i) {
    const float p = std::clamp(probs[i], 1e-6f, 1.0f - 1e-6f);
    const float y = target[i];
    if (y >= 1.0f) {
      const float om = 1.0f - p;
      loss -= om * om * std::log(p) * inv_n;
      dlogit[i] = (2.0f * p * om * om * std::log(p) - om * om * om) * inv_n;
    } else {
      const float w = (1.0f - y) * (1.0f - y);
      const float w4 = w * w;
      loss -= w4 * p * p * std::log(1.0f - p) * inv_n;
      dlogit[i] = w4 * (p * p * p - 2.0f * p * p * (1.0f - p) * std::log(1.0f - p)) * inv_n;
    }
  }
  return loss;
}

struct SgdState {
  std::vector<Tensor> velocity;
};

}  // namespace

DetectorModel train(const SceneSet& dataset, const TrainConfig& config, std::uint64_t seed,
                    TrainLog* log) {
  if (dataset.scenes.empty()) throw InvalidInputError("train: empty dataset");
  if (config.epochs < 1 || config.batch_size < 1 || config.lr <= 0.0f) {
    throw ConfigError("train: epochs, batch_size and lr must be positive");
  }

  const int holdout =
      std::min(static_cast<int>(dataset.scenes.size()) - 1,
               static_cast<int>(std::round(config.holdout_fraction *
                                           static_cast<double>(dataset.scenes.size()))));
  const int train_count = static_cast<int>(dataset.scenes.size()) - holdout;

  DetectorModel model = make_detector(kNumCategories, kSceneSize, kSceneSize, config.widths,
                                      config.downsample_index, config.visual_threshold, seed);
  const int stride = model.total_stride();
  const int hm_h = model.heatmap_h(), hm_w = model.heatmap_w();

  std::vector<SceneTargets> targets;
  targets.reserve(static_cast<std::size_t>(train_count));
  for (int i = 0; i < train_count; ++i) {
    targets.push_back(
        make_targets(dataset.scenes[static_cast<std::size_t>(i)], kNumCategories, stride, hm_h,
                     hm_w));
  }

  // Parameter list in tape order: (w, b) per trunk layer, then both heads.
  std::vector<Tensor*> params;
  for (ConvLayer& l : model.trunk) {
    params.push_back(&l.w);
    params.push_back(&l.b);
  }
  params.push_back(&model.hm_head.w);
  params.push_back(&model.hm_head.b);
  params.push_back(&model.size_head.w);
  params.push_back(&model.size_head.b);

  SgdState opt;
  for (Tensor* p : params) opt.velocity.emplace_back(p->shape());
  std::vector<Tensor> grads;
  for (Tensor* p : params) grads.emplace_back(p->shape());

  std::vector<int> order(static_cast<std::size_t>(train_count));
  std::iota(order.begin(), order.end(), 0);

  Rng shuffle_rng(Rng::mix(seed, 0xd00dULL));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Deterministic Fisher-Yates shuffle.
    for (int i = train_count - 1; i > 0; --i) {
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, i))]);
    }
    const float lr =
        epoch >= config.lr_drop_epoch ? config.lr * config.lr_drop_factor : config.lr;

    double epoch_loss = 0.0;
    int in_batch = 0;
    for (Tensor& g : grads) g.fill(0.0f);

    auto apply_update = [&](int batch_n) {
      const float scale = 1.0f / static_cast<float>(batch_n);
      for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& v = opt.velocity[p];
        Tensor& g = grads[p];
        Tensor& w = *params[p];
        for (std::int64_t i = 0; i < w.numel(); ++i) {
          v[i] = config.momentum * v[i] + g[i] * scale;
          w[i] -= lr * v[i];
        }
        g.fill(0.0f);
      }
    };

    for (int idx = 0; idx < train_count; ++idx) {
      const int si = order[static_cast<std::size_t>(idx)];
      const Scene& scene = dataset.scenes[static_cast<std::size_t>(si)];
      const SceneTargets& tgt = targets[static_cast<std::size_t>(si)];

      Tape tape;
      std::vector<NodeId> param_nodes;
      const DetectorNodes nodes =
          build_forward(tape, model, scene.image, false, true, &param_nodes);

      const int num_obj = static_cast<int>(tgt.centers.size());
      Tensor hm_seed(tape.value(nodes.logits).shape());
      const double hm_loss =
          focal_seed(tape.value(nodes.probs), tgt.heatmap, num_obj, hm_seed);

      Tensor size_seed(tape.value(nodes.sizes).shape());
      double size_loss = 0.0;
      const Tensor& size_out = tape.value(nodes.sizes);
      const float sw = config.size_loss_weight / static_cast<float>(std::max(1, num_obj));
      for (std::size_t o = 0; o < tgt.centers.size(); ++o) {
        const CellTarget& ct = tgt.centers[o];
        const auto [gw, gh] = tgt.center_sizes[o];
        const float dw = size_out.at(0, ct.row, ct.col) - gw;
        const float dh = size_out.at(1, ct.row, ct.col) - gh;
        size_loss += (std::abs(dw) + std::abs(dh)) * sw;
        size_seed.at(0, ct.row, ct.col) += (dw > 0.0f ? 1.0f : (dw < 0.0f ? -1.0f : 0.0f)) * sw;
        size_seed.at(1, ct.row, ct.col) += (dh > 0.0f ? 1.0f : (dh < 0.0f ? -1.0f : 0.0f)) * sw;
      }

      const double sample_loss = hm_loss + size_loss;
      if (!std::isfinite(sample_loss)) {
        throw TrainingFailureError("train: loss diverged at epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += sample_loss;

      const Seed seeds[2] = {{nodes.logits, std::move(hm_seed)},
                             {nodes.sizes, std::move(size_seed)}};
      tape.backward(seeds);
      for (std::size_t p = 0; p < param_nodes.size(); ++p) {
        const Tensor& g = tape.grad(param_nodes[p]);
        Tensor& acc = grads[p];
        for (std::int64_t i = 0; i < acc.numel(); ++i) acc[i] += g[i];
      }

      if (++in_batch == config.batch_size || idx == train_count - 1) {
        apply_update(in_batch);
        in_batch = 0;
      }
    }

    if (log) log->epoch_losses.push_back(epoch_loss / train_count);
  }

  if (log) {
    log->holdout_count = holdout;
    if (holdout > 0) {
      std::vector<std::vector<Detection>> dets;
      std::vector<std::vector<Annotation>> gts;
      for (int i = train_count; i < static_cast<int>(dataset.scenes.size()); ++i) {
        const Scene& s = dataset.scenes[static_cast<std::size_t>(i)];
        dets.push_back(decode(model, forward(model, s.image)));
        gts.push_back(s.annotations);
      }
      log->holdout_map = mean_average_precision(dets, gts, 0.5).map;
    }
  }
  return model;
}

}  // namespace cwa

#include "cwa/detector.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cwa/fs_util.hpp"
#include "cwa/rng.hpp"
#include "cwa/tensor_io.hpp"

namespace cwa {

int DetectorModel::total_stride() const {
  int s = 1;
  for (const ConvLayer& l : trunk) s *= l.geom.stride;
  return s * hm_head.geom.stride;
}

void DetectorModel::validate() const {
  if (num_categories < 1) throw ConfigError("detector: num_categories must be >= 1");
  if (visual_threshold <= 0.0f || visual_threshold >= 1.0f) {
    throw ConfigError("detector: visual_threshold must be in (0,1)");
  }
  const int s = total_stride();
  if (input_h % s != 0 || input_w % s != 0) {
    throw ConfigError("detector: input size not divisible by total stride");
  }
  if (hm_head.geom.out_ch != num_categories || size_head.geom.out_ch != 2) {
    throw ConfigError("detector: head channel mismatch");
  }
}

namespace {

ConvLayer make_layer(Rng& rng, int in_ch, int out_ch, int ksize, int stride, int pad,
                     float bias_init) {
  ConvLayer l;
  l.geom = ConvGeom{in_ch, out_ch, ksize, stride, pad};
  l.w = Tensor({out_ch, in_ch, ksize, ksize});
  const double std_dev = std::sqrt(2.0 / (in_ch * ksize * ksize));
  for (std::int64_t i = 0; i < l.w.numel(); ++i) {
    l.w[i] = static_cast<float>(rng.normal() * std_dev);
  }
  l.b = Tensor({out_ch}, bias_init);
  return l;
}

}  // namespace

DetectorModel make_detector(int num_categories, int input_h, int input_w,
                            std::span<const int> widths, int downsample_index,
                            float visual_threshold, std::uint64_t seed) {
  DetectorModel m;
  m.num_categories = num_categories;
  m.input_h = input_h;
  m.input_w = input_w;
  m.visual_threshold = visual_threshold;
  m.seed = seed;

  Rng rng(Rng::mix(seed, 0x5eedu));
  int in_ch = 3;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int stride = (static_cast<int>(i) == downsample_index) ? 2 : 1;
    m.trunk.push_back(make_layer(rng, in_ch, widths[i], 3, stride, 1, 0.0f));
    in_ch = widths[i];
  }
  // Head bias priors: keypoint probabilities start near 0.1, sizes near a
  // mid-range box side.
  m.hm_head = make_layer(rng, in_ch, num_categories, 1, 1, 0, -2.1972246f);
  m.size_head = make_layer(rng, in_ch, 2, 1, 1, 0, 16.0f);
  m.validate();
  return m;
}

Tensor hwc_to_chw(const Tensor& hwc) {
  if (hwc.rank() != 3) throw InvalidInputError("hwc_to_chw: expected rank-3 tensor");
  const int H = hwc.dim(0), W = hwc.dim(1), C = hwc.dim(2);
  Tensor chw({C, H, W});
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) chw.at(c, y, x) = hwc.at(y, x, c);
    }
  }
  return chw;
}

Tensor chw_to_hwc(const Tensor& chw) {
  if (chw.rank() != 3) throw InvalidInputError("chw_to_hwc: expected rank-3 tensor");
  const int C = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
  Tensor hwc({H, W, C});
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) hwc.at(y, x, c) = chw.at(c, y, x);
    }
  }
  return hwc;
}

DetectorNodes build_forward(Tape& tape, const DetectorModel& model, const Tensor& image_hwc,
                            bool input_needs_grad, bool params_need_grad,
                            std::vector<NodeId>* param_nodes) {
  if (image_hwc.rank() != 3 || image_hwc.dim(0) != model.input_h ||
      image_hwc.dim(1) != model.input_w || image_hwc.dim(2) != 3) {
    throw InvalidInputError("forward: image must be [" + std::to_string(model.input_h) + "," +
                            std::to_string(model.input_w) + ",3], got " +
                            shape_str(image_hwc.shape()));
  }

  DetectorNodes nodes;
  nodes.input = tape.leaf(hwc_to_chw(image_hwc), input_needs_grad);

  auto add_params = [&](const ConvLayer& l) {
    const NodeId w = tape.leaf(l.w, params_need_grad);
    const NodeId b = tape.leaf(l.b, params_need_grad);
    if (param_nodes) {
      param_nodes->push_back(w);
      param_nodes->push_back(b);
    }
    return std::pair<NodeId, NodeId>{w, b};
  };

  NodeId cur = nodes.input;
  for (const ConvLayer& l : model.trunk) {
    const auto [w, b] = add_params(l);
    cur = tape.relu(tape.conv2d(cur, w, b, l.geom.stride, l.geom.pad));
  }
  {
    const auto [w, b] = add_params(model.hm_head);
    nodes.logits = tape.conv2d(cur, w, b, model.hm_head.geom.stride, model.hm_head.geom.pad);
    nodes.probs = tape.sigmoid(nodes.logits);
  }
  {
    const auto [w, b] = add_params(model.size_head);
    nodes.sizes = tape.conv2d(cur, w, b, model.size_head.geom.stride, model.size_head.geom.pad);
  }
  return nodes;
}

DetectorOutput forward(const DetectorModel& model, const Tensor& image_hwc) {
  Tape tape;
  const DetectorNodes n = build_forward(tape, model, image_hwc, false, false);
  DetectorOutput out;
  out.logits = tape.value(n.logits);
  out.probs = tape.value(n.probs);
  out.sizes = tape.value(n.sizes);
  return out;
}

Tensor grad_wrt_input(const DetectorModel& model, const Tensor& image_hwc,
                      const ScalarLossSpec& loss) {
  Tape tape;
  const DetectorNodes n = build_forward(tape, model, image_hwc, true, false);
  const NodeId l = loss.build(tape, n);
  if (tape.value(l).numel() != 1) {
    throw ContractViolationError("grad_wrt_input: loss must be scalar");
  }
  tape.backward_scalar(l);
  return chw_to_hwc(tape.grad(n.input));
}

std::vector<Detection> decode(const DetectorOutput& output, float visual_threshold,
                              int total_stride, int input_h, int input_w) {
  const Tensor& probs = output.probs;
  const int K = probs.dim(0), h = probs.dim(1), w = probs.dim(2);
  std::vector<Detection> dets;
  for (int k = 0; k < K; ++k) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const float p = probs.at(k, r, c);
        if (p < visual_threshold) continue;
        bool peak = true;
        for (int dr = -1; dr <= 1 && peak; ++dr) {
          const int rr = r + dr;
          if (rr < 0 || rr >= h) continue;
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = c + dc;
            if (cc < 0 || cc >= w || (dr == 0 && dc == 0)) continue;
            const float q = probs.at(k, rr, cc);
            // Ties go to the lexicographically smaller (row, col).
            if (q > p || (q == p && (rr < r || (rr == r && cc < c)))) {
              peak = false;
              break;
            }
          }
        }
        if (!peak) continue;
        Detection d;
        d.category = k;
        d.score = p;
        d.key_row = r;
        d.key_col = c;
        d.cx = (static_cast<float>(c) + 0.5f) * static_cast<float>(total_stride);
        d.cy = (static_cast<float>(r) + 0.5f) * static_cast<float>(total_stride);
        d.w = std::max(1.0f, output.sizes.at(0, r, c));
        d.h = std::max(1.0f, output.sizes.at(1, r, c));
        // Clip the box to image bounds, preserving the center.
        const float x0 = std::max(0.0f, d.cx - d.w / 2);
        const float x1 = std::min(static_cast<float>(input_w), d.cx + d.w / 2);
        const float y0 = std::max(0.0f, d.cy - d.h / 2);
        const float y1 = std::min(static_cast<float>(input_h), d.cy + d.h / 2);
        d.cx = (x0 + x1) / 2;
        d.cy = (y0 + y1) / 2;
        d.w = x1 - x0;
        d.h = y1 - y0;
        dets.push_back(d);
      }
    }
  }
  return dets;
}

std::vector<Detection> decode(const DetectorModel& model, const DetectorOutput& output) {
  return decode(output, model.visual_threshold, model.total_stride(), model.input_h,
                model.input_w);
}

namespace {

using nlohmann::json;

json geom_to_json(const ConvGeom& g) {
  return json{{"in_ch", g.in_ch}, {"out_ch", g.out_ch}, {"ksize", g.ksize},
              {"stride", g.stride}, {"pad", g.pad}};
}

ConvGeom geom_from_json(const json& j) {
  ConvGeom g;
  g.in_ch = j.at("in_ch").get<int>();
  g.out_ch = j.at("out_ch").get<int>();
  g.ksize = j.at("ksize").get<int>();
  g.stride = j.at("stride").get<int>();
  g.pad = j.at("pad").get<int>();
  return g;
}

}  // namespace

void save_model(const std::filesystem::path& path, const DetectorModel& model) {
  json header;
  header["format"] = "cwmodel/1";
  header["num_categories"] = model.num_categories;
  header["input_h"] = model.input_h;
  header["input_w"] = model.input_w;
  header["visual_threshold"] = model.visual_threshold;
  header["seed"] = model.seed;
  json layers = json::array();
  for (const ConvLayer& l : model.trunk) layers.push_back(geom_to_json(l.geom));
  header["trunk"] = layers;
  header["hm_head"] = geom_to_json(model.hm_head.geom);
  header["size_head"] = geom_to_json(model.size_head.geom);

  std::ostringstream body(std::ios::binary);
  body << header.dump() << "\n";
  auto dump_layer = [&body](const ConvLayer& l) {
    write_cwt(body, l.w);
    write_cwt(body, l.b);
  };
  for (const ConvLayer& l : model.trunk) dump_layer(l);
  dump_layer(model.hm_head);
  dump_layer(model.size_head);
  atomic_write_file(path, std::move(body).str());
}

DetectorModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("model: missing header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(std::string("model: bad header: ") + e.what());
  }
  if (header.value("format", "") != "cwmodel/1") throw IoError("model: unknown format");

  DetectorModel m;
  m.num_categories = header.at("num_categories").get<int>();
  m.input_h = header.at("input_h").get<int>();
  m.input_w = header.at("input_w").get<int>();
  m.visual_threshold = header.at("visual_threshold").get<float>();
  m.seed = header.at("seed").get<std::uint64_t>();

  auto read_layer = [&is, &path](const ConvGeom& g) {
    ConvLayer l;
    l.geom = g;
    l.w = read_cwt(is);
    l.b = read_cwt(is);
    if (l.w.rank() != 4 || l.w.dim(0) != g.out_ch || l.w.dim(1) != g.in_ch ||
        l.b.dim(0) != g.out_ch) {
      throw IoError("model: tensor/geometry mismatch in " + path.string());
    }
    return l;
  };
  for (const json& jl : header.at("trunk")) m.trunk.push_back(read_layer(geom_from_json(jl)));
  m.hm_head = read_layer(geom_from_json(header.at("hm_head")));
  m.size_head = read_layer(geom_from_json(header.at("size_head")));
  m.validate();
  return m;
}

DetectorOutputD forward_double(const DetectorModel& model, const TensorD& image_hwc) {
  const int H = model.input_h, W = model.input_w;
  if (image_hwc.rank() != 3 || image_hwc.dim(0) != H || image_hwc.dim(1) != W ||
      image_hwc.dim(2) != 3) {
    throw InvalidInputError("forward_double: bad image shape");
  }
  TensorD cur({3, H, W});
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) cur.at(c, y, x) = image_hwc.at(y, x, c);
    }
  }
  int cur_h = H, cur_w = W;
  for (const ConvLayer& l : model.trunk) {
    const auto [oh, ow] = kernels::conv_out_hw(l.geom, cur_h, cur_w);
    TensorD next({l.geom.out_ch, oh, ow});
    const TensorD wd = l.w.cast<double>();
    const TensorD bd = l.b.cast<double>();
    kernels::conv2d_forward(l.geom, cur.data(), wd.data(), bd.data(), next.data(), cur_h, cur_w);
    for (std::int64_t i = 0; i < next.numel(); ++i) {
      if (next[i] < 0.0) next[i] = 0.0;
    }
    cur = std::move(next);
    cur_h = oh;
    cur_w = ow;
  }
  DetectorOutputD out;
  {
    const TensorD wd = model.hm_head.w.cast<double>();
    const TensorD bd = model.hm_head.b.cast<double>();
    out.logits = TensorD({model.num_categories, cur_h, cur_w});
    kernels::conv2d_forward(model.hm_head.geom, cur.data(), wd.data(), bd.data(),
                            out.logits.data(), cur_h, cur_w);
  }
  {
    const TensorD wd = model.size_head.w.cast<double>();
    const TensorD bd = model.size_head.b.cast<double>();
    out.sizes = TensorD({2, cur_h, cur_w});
    kernels::conv2d_forward(model.size_head.geom, cur.data(), wd.data(), bd.data(),
                            out.sizes.data(), cur_h, cur_w);
  }
  return out;
}

}  // namespace cwa

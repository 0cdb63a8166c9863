#include "cwa/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cwa/fs_util.hpp"
#include "cwa/rng.hpp"

namespace cwa {

float box_iou(const Annotation& a, const Annotation& b) {
  const float ax0 = a.cx - a.w / 2, ax1 = a.cx + a.w / 2;
  const float ay0 = a.cy - a.h / 2, ay1 = a.cy + a.h / 2;
  const float bx0 = b.cx - b.w / 2, bx1 = b.cx + b.w / 2;
  const float by0 = b.cy - b.h / 2, by1 = b.cy + b.h / 2;
  const float iw = std::max(0.0f, std::min(ax1, bx1) - std::max(ax0, bx0));
  const float ih = std::max(0.0f, std::min(ay1, by1) - std::max(ay0, by0));
  const float inter = iw * ih;
  const float uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0f ? inter / uni : 0.0f;
}

namespace {

constexpr int kMinSide = 10;
constexpr int kMaxSide = 24;
constexpr float kNoiseAmp = 0.15f;  // peak-to-peak background noise
constexpr float kColorOffset = 0.3f;

// Smooth value noise: coarse random grid, bilinear upsample.
void render_background(Rng& rng, Tensor& img) {
  const int grid = 9, cell = kSceneSize / (grid - 1);
  float base[3];
  for (float& v : base) v = static_cast<float>(rng.uniform(0.25, 0.75));
  std::vector<float> knots(grid * grid);
  for (float& v : knots) {
    v = static_cast<float>(rng.uniform(-kNoiseAmp / 2, kNoiseAmp / 2));
  }
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      const int gy = std::min(y / cell, grid - 2), gx = std::min(x / cell, grid - 2);
      const float fy = static_cast<float>(y) / cell - gy;
      const float fx = static_cast<float>(x) / cell - gx;
      const float n00 = knots[gy * grid + gx], n01 = knots[gy * grid + gx + 1];
      const float n10 = knots[(gy + 1) * grid + gx], n11 = knots[(gy + 1) * grid + gx + 1];
      const float n = (n00 * (1 - fx) + n01 * fx) * (1 - fy) + (n10 * (1 - fx) + n11 * fx) * fy;
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = std::clamp(base[c] + n, 0.0f, 1.0f);
      }
    }
  }
}

bool inside_shape(int category, float px, float py, const Annotation& ann) {
  const float dx = px - ann.cx, dy = py - ann.cy, half = ann.w / 2;
  switch (category) {
    case 0:  // circle
      return dx * dx + dy * dy <= half * half;
    case 1:  // square
      return std::abs(dx) <= half && std::abs(dy) <= half;
    default: {  // up-pointing isoceles triangle inscribed in the box
      if (dy < -half || dy > half) return false;
      const float t = (dy + half) / (2 * half);  // 0 at apex row, 1 at base
      return std::abs(dx) <= t * half;
    }
  }
}

Scene generate_one(std::uint64_t scene_seed) {
  Rng rng(scene_seed);
  Scene scene;
  scene.image = Tensor({kSceneSize, kSceneSize, 3});
  render_background(rng, scene.image);

  const int want = rng.uniform_int(1, 4);
  for (int attempt = 0; attempt < 200 && static_cast<int>(scene.annotations.size()) < want;
       ++attempt) {
    Annotation ann;
    ann.category = rng.uniform_int(0, kNumCategories - 1);
    const int side = rng.uniform_int(kMinSide, kMaxSide);
    ann.w = ann.h = static_cast<float>(side);
    ann.cx = static_cast<float>(rng.uniform(side / 2.0 + 1.0, kSceneSize - side / 2.0 - 1.0));
    ann.cy = static_cast<float>(rng.uniform(side / 2.0 + 1.0, kSceneSize - side / 2.0 - 1.0));

    // Boxes are kept disjoint with a 2px margin (pairwise IoU is then 0,
    // within the <= 0.3 contract) so each shape sits on clean background.
    bool ok = true;
    for (const Annotation& other : scene.annotations) {
      const float gap_x = std::abs(ann.cx - other.cx) - (ann.w + other.w) / 2;
      const float gap_y = std::abs(ann.cy - other.cy) - (ann.h + other.h) / 2;
      if (std::max(gap_x, gap_y) < 2.0f) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    // The category's key channel is offset from the background by more than
    // the noise amplitude; the other two channels get mild jitter.
    float color[3];
    const int key = ann.category;
    for (int c = 0; c < 3; ++c) {
      const float bg = scene.image.at(static_cast<int>(ann.cy), static_cast<int>(ann.cx), c);
      if (c == key) {
        color[c] = bg >= 0.5f ? bg - kColorOffset - kNoiseAmp : bg + kColorOffset + kNoiseAmp;
      } else {
        color[c] = std::clamp(bg + static_cast<float>(rng.uniform(-0.12, 0.12)), 0.0f, 1.0f);
      }
    }

    for (int y = 0; y < kSceneSize; ++y) {
      for (int x = 0; x < kSceneSize; ++x) {
        if (!inside_shape(ann.category, static_cast<float>(x), static_cast<float>(y), ann)) {
          continue;
        }
        for (int c = 0; c < 3; ++c) {
          scene.image.at(y, x, c) = std::clamp(color[c], 0.0f, 1.0f);
        }
      }
    }
    scene.annotations.push_back(ann);
  }

  // Snap to the 8-bit grid so PPM round-trips are exact.
  for (std::int64_t i = 0; i < scene.image.numel(); ++i) {
    scene.image[i] = std::round(scene.image[i] * 255.0f) / 255.0f;
  }
  return scene;
}

}  // namespace

SceneSet generate_scenes(int count, std::uint64_t seed) {
  if (count < 1) throw InvalidInputError("generate_scenes: count must be >= 1");
  SceneSet set;
  set.seed = seed;
  set.scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    set.scenes.push_back(generate_one(Rng::mix(seed, static_cast<std::uint64_t>(i))));
  }
  return set;
}

void write_ppm(const std::filesystem::path& path, const Tensor& image_hwc) {
  if (image_hwc.rank() != 3 || image_hwc.dim(2) != 3) {
    throw InvalidInputError("write_ppm: expected [H,W,3]");
  }
  const int H = image_hwc.dim(0), W = image_hwc.dim(1);
  std::ostringstream body(std::ios::binary);
  body << "P6\n" << W << " " << H << "\n255\n";
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(image_hwc.at(y, x, c), 0.0f, 1.0f);
        body.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0f))));
      }
    }
  }
  atomic_write_file(path, std::move(body).str());
}

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P6") throw IoError("ppm: expected P6: " + path.string());
  auto next_int = [&is, &path]() {
    // skip whitespace and '#' comments
    for (;;) {
      const int ch = is.peek();
      if (ch == '#') {
        std::string junk;
        std::getline(is, junk);
      } else if (std::isspace(ch)) {
        is.get();
      } else {
        break;
      }
    }
    int v = 0;
    if (!(is >> v)) throw IoError("ppm: bad header: " + path.string());
    return v;
  };
  const int W = next_int(), H = next_int(), maxval = next_int();
  if (maxval != 255 || W <= 0 || H <= 0) throw IoError("ppm: unsupported header");
  is.get();  // single whitespace after maxval
  Tensor img({H, W, 3});
  std::vector<char> row(static_cast<std::size_t>(W) * 3);
  for (int y = 0; y < H; ++y) {
    is.read(row.data(), static_cast<std::streamsize>(row.size()));
    if (!is) throw IoError("ppm: truncated: " + path.string());
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) =
            static_cast<float>(static_cast<unsigned char>(row[x * 3 + c])) / 255.0f;
      }
    }
  }
  return img;
}

namespace {

using nlohmann::json;

std::string scene_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return buf;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const SceneSet& set) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < set.scenes.size(); ++i) {
    const Scene& s = set.scenes[i];
    const std::string stem = scene_stem(static_cast<int>(i));
    write_ppm(dir / (stem + ".ppm"), s.image);
    json anns = json::array();
    for (const Annotation& a : s.annotations) {
      anns.push_back(json{{"category", a.category}, {"box", {a.cx, a.cy, a.w, a.h}}});
    }
    atomic_write_file(dir / (stem + ".json"), json{{"annotations", anns}}.dump(2) + "\n");
  }
  const json manifest{{"count", set.scenes.size()}, {"seed", set.seed}};
  atomic_write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

SceneSet load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw IoError("dataset: missing manifest: " + manifest_path.string());
  }
  json manifest;
  try {
    manifest = json::parse(read_file_bytes(manifest_path));
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset: bad manifest: ") + e.what());
  }
  SceneSet set;
  set.seed = manifest.value("seed", 0ULL);
  const int count = manifest.at("count").get<int>();
  for (int i = 0; i < count; ++i) {
    const std::string stem = scene_stem(i);
    Scene s;
    s.image = read_ppm(dir / (stem + ".ppm"));
    json anns;
    try {
      anns = json::parse(read_file_bytes(dir / (stem + ".json")));
    } catch (const json::exception& e) {
      throw IoError(std::string("dataset: bad annotation json: ") + e.what());
    }
    for (const json& ja : anns.at("annotations")) {
      Annotation a;
      a.category = ja.at("category").get<int>();
      const auto& box = ja.at("box");
      a.cx = box.at(0).get<float>();
      a.cy = box.at(1).get<float>();
      a.w = box.at(2).get<float>();
      a.h = box.at(3).get<float>();
      s.annotations.push_back(a);
    }
    set.scenes.push_back(std::move(s));
  }
  return set;
}

}  // namespace cwa

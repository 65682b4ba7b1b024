#include "omnimatte/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "omnimatte/compositing.hpp"
#include "omnimatte/errors.hpp"

namespace omnimatte {

namespace {

using nlohmann::json;

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw ValidationError("scene spec: expected [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

bool sprite_body(const SceneSprite& s, double dx, double dy) {
  if (s.shape == SceneSprite::Shape::kDisc)
    return dx * dx + dy * dy <= s.radius * s.radius;
  return std::abs(dx) <= s.rect_w * 0.5 && std::abs(dy) <= s.rect_h * 0.5;
}

bool sprite_shadow(const SceneSprite& s, double dx, double dy) {
  if (!s.has_shadow) return false;
  double ex = (dx - s.shadow_offset.x) / s.shadow_rx;
  double ey = (dy - s.shadow_offset.y) / s.shadow_ry;
  return ex * ex + ey * ey <= 1.0;
}

// Smooth per-channel field: low-frequency sinusoids plus a few Gaussian
// blobs, affinely normalized to span [low, high] exactly.
Image procedural_canvas(int width, int height, std::uint64_t seed, double low,
                        double high) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Image img(width, height, 3);
  for (int c = 0; c < 3; ++c) {
    double fx = 1.5 + 2.0 * uni(rng), fy = 1.5 + 2.0 * uni(rng);
    double px = 2.0 * M_PI * uni(rng), py = 2.0 * M_PI * uni(rng);
    struct Blob {
      double cx, cy, sigma, amp;
    };
    std::vector<Blob> blobs(4);
    for (auto& b : blobs) {
      b.cx = uni(rng) * width;
      b.cy = uni(rng) * height;
      b.sigma = (0.08 + 0.15 * uni(rng)) * std::max(width, height);
      b.amp = (uni(rng) - 0.5) * 1.6;
    }
    double vmin = 1e30, vmax = -1e30;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double v = std::sin(2.0 * M_PI * fx * x / width + px) *
                   std::cos(2.0 * M_PI * fy * y / height + py);
        for (const auto& b : blobs) {
          double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
          v += b.amp * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
        }
        img.at(x, y, c) = v;
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    double span = vmax - vmin > 1e-12 ? vmax - vmin : 1.0;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        img.at(x, y, c) = low + (high - low) * (img.at(x, y, c) - vmin) / span;
  }
  return img;
}

}  // namespace

SceneSpec SceneSpec::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scene spec parse error: ") + e.what());
  }
  SceneSpec s;
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.frames = j.value("frames", s.frames);
  s.seed = j.value("seed", s.seed);
  if (j.contains("background")) {
    s.background_low = j["background"].value("low", s.background_low);
    s.background_high = j["background"].value("high", s.background_high);
  }
  if (j.contains("camera_velocity")) s.camera_velocity = vec2_from(j["camera_velocity"]);
  s.brightness_drift = j.value("brightness_drift", 0.0);
  if (s.frames < 2) throw ValidationError("scene spec: needs at least 2 frames");
  if (!j.contains("sprites") || !j["sprites"].is_array() || j["sprites"].empty())
    throw ValidationError("scene spec: needs a non-empty 'sprites' array");
  for (const json& js : j["sprites"]) {
    SceneSprite sp;
    std::string shape = js.value("shape", "disc");
    if (shape == "disc") sp.shape = SceneSprite::Shape::kDisc;
    else if (shape == "rect") sp.shape = SceneSprite::Shape::kRect;
    else throw ValidationError("scene spec: unknown sprite shape '" + shape + "'");
    sp.radius = js.value("radius", sp.radius);
    if (js.contains("size")) {
      sp.rect_w = js["size"][0].get<double>();
      sp.rect_h = js["size"][1].get<double>();
    }
    if (js.contains("color")) {
      for (int c = 0; c < 3; ++c) sp.color[c] = js["color"][c].get<double>();
    }
    if (js.contains("start")) sp.start = vec2_from(js["start"]);
    if (js.contains("velocity")) sp.velocity = vec2_from(js["velocity"]);
    if (js.contains("shadow")) {
      const json& sh = js["shadow"];
      sp.has_shadow = true;
      if (sh.contains("offset")) sp.shadow_offset = vec2_from(sh["offset"]);
      sp.shadow_rx = sh.value("rx", sp.shadow_rx);
      sp.shadow_ry = sh.value("ry", sp.shadow_ry);
      sp.attenuation = sh.value("attenuation", sp.attenuation);
      if (sp.attenuation <= 0.0 || sp.attenuation > 1.0)
        throw ValidationError("scene spec: shadow attenuation must be in (0, 1]");
    }
    s.sprites.push_back(sp);
  }
  return s;
}

SceneSpec SceneSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene spec: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

SyntheticScene synth_scene(const SceneSpec& spec) {
  const int W = spec.width, H = spec.height, T = spec.frames;
  const int N = static_cast<int>(spec.sprites.size());

  SyntheticScene scene;
  scene.spec = spec;
  Dataset& data = scene.data;

  data.homographies.reserve(T);
  for (int t = 0; t < T; ++t)
    data.homographies.push_back(Homography::translation(
        spec.camera_velocity.x * t, spec.camera_velocity.y * t));
  scene.canvas_spec = canvas_from_homographies(data.homographies, W, H);
  scene.gt_canvas = procedural_canvas(scene.canvas_spec.width, scene.canvas_spec.height,
                                      spec.seed, spec.background_low, spec.background_high);

  Homography to_px = Homography::translation(-scene.canvas_spec.x0, -scene.canvas_spec.y0);
  scene.gt_background.reserve(T);
  for (int t = 0; t < T; ++t) {
    WarpResult bg = warp_by_homography(scene.gt_canvas,
                                       to_px.compose(data.homographies[t]), W, H);
    scene.gt_background.push_back(std::move(bg.image));
  }

  // sprite layers, ground truth and input masks
  scene.gt_alpha.resize(N);
  scene.gt_color.resize(N);
  data.masks.masks.resize(N);
  for (int i = 0; i < N; ++i) {
    const SceneSprite& sp = spec.sprites[i];
    for (int t = 0; t < T; ++t) {
      Vec2 c{sp.start.x + t * sp.velocity.x, sp.start.y + t * sp.velocity.y};
      double extent_x = sp.shape == SceneSprite::Shape::kDisc ? sp.radius : sp.rect_w * 0.5;
      double extent_y = sp.shape == SceneSprite::Shape::kDisc ? sp.radius : sp.rect_h * 0.5;
      if (c.x - extent_x < 0 || c.x + extent_x > W - 1 || c.y - extent_y < 0 ||
          c.y + extent_y > H - 1)
        throw ValidationError("sprite " + std::to_string(i) + " leaves the frame at t=" +
                              std::to_string(t));
      Image alpha(W, H, 1), color(W, H, 3), mask(W, H, 1);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          double dx = x - c.x, dy = y - c.y;
          if (sprite_body(sp, dx, dy)) {
            alpha.at(x, y) = 1.0;
            mask.at(x, y) = 1.0;
            for (int ch = 0; ch < 3; ++ch) color.at(x, y, ch) = sp.color[ch];
          } else if (sprite_shadow(sp, dx, dy)) {
            alpha.at(x, y) = 1.0 - sp.attenuation;
            // color stays black: the shadow only attenuates what is below
          }
        }
      scene.gt_alpha[i].push_back(std::move(alpha));
      scene.gt_color[i].push_back(std::move(color));
      data.masks.masks[i].push_back(std::move(mask));
    }
  }

  // frames: composite ground truth back to front, then apply the drift
  scene.drift.assign(T, 1.0);
  if (spec.brightness_drift != 0.0)
    for (int t = 0; t < T; ++t)
      scene.drift[t] =
          1.0 - spec.brightness_drift * std::cos(M_PI * t / double(T - 1));

  data.frames.width = W;
  data.frames.height = H;
  for (int t = 0; t < T; ++t) {
    Image frame = scene.gt_background[t];
    for (int i = 0; i < N; ++i) {
      const Image& a = scene.gt_alpha[i][t];
      const Image& col = scene.gt_color[i][t];
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          double av = a.at(x, y);
          for (int ch = 0; ch < 3; ++ch)
            frame.at(x, y, ch) =
                av * col.at(x, y, ch) + (1.0 - av) * frame.at(x, y, ch);
        }
    }
    if (scene.drift[t] != 1.0)
      for (size_t k = 0; k < frame.size(); ++k)
        frame[k] = clamp01(frame[k] * scene.drift[t]);
    data.frames.frames.push_back(std::move(frame));
  }

  // exact flows: sprite velocity on the body, camera-induced flow elsewhere
  for (int t = 0; t + 1 < T; ++t) {
    FlowField fwd, bwd;
    fwd.uv = Image(W, H, 2);
    bwd.uv = Image(W, H, 2);
    fwd.direction = FlowDirection::kForward;
    bwd.direction = FlowDirection::kBackward;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        fwd.uv.at(x, y, 0) = -spec.camera_velocity.x;
        fwd.uv.at(x, y, 1) = -spec.camera_velocity.y;
        bwd.uv.at(x, y, 0) = spec.camera_velocity.x;
        bwd.uv.at(x, y, 1) = spec.camera_velocity.y;
      }
    for (int i = 0; i < N; ++i) {
      const SceneSprite& sp = spec.sprites[i];
      const Image& m_t = data.masks.masks[i][t];
      const Image& m_t1 = data.masks.masks[i][t + 1];
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          if (m_t.at(x, y) != 0.0) {
            fwd.uv.at(x, y, 0) = sp.velocity.x;
            fwd.uv.at(x, y, 1) = sp.velocity.y;
          }
          if (m_t1.at(x, y) != 0.0) {
            bwd.uv.at(x, y, 0) = -sp.velocity.x;
            bwd.uv.at(x, y, 1) = -sp.velocity.y;
          }
        }
    }
    data.flow_fwd.push_back(std::move(fwd));
    data.flow_bwd.push_back(std::move(bwd));
  }

  data.masks.order.resize(T);
  for (int t = 0; t < T; ++t) {
    data.masks.order[t].resize(N);
    for (int i = 0; i < N; ++i) data.masks.order[t][i] = i;
  }
  return scene;
}

Image SyntheticScene::gt_support(int layer, int t) const {
  const Image& a = gt_alpha[layer][t];
  Image s(a.width(), a.height(), 1);
  for (size_t k = 0; k < a.size(); ++k) s[k] = a[k] > 0.0 ? 1.0 : 0.0;
  return s;
}

void save_scene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const Dataset& data = scene.data;
  const int T = data.frame_count(), N = data.layer_count();

  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "flow");
  fs::create_directories(dir / "gt");
  for (int i = 0; i < N; ++i)
    fs::create_directories(dir / ("masks_" + std::to_string(i)));

  char buf[64];
  json manifest;
  for (int t = 0; t < T; ++t) {
    std::snprintf(buf, sizeof buf, "frames/frame_%04d.png", t);
    write_png(data.frames.frames[t], dir / buf);
    manifest["frames"].push_back(buf);
  }
  for (int i = 0; i < N; ++i) {
    json layer = json::array();
    for (int t = 0; t < T; ++t) {
      std::snprintf(buf, sizeof buf, "masks_%d/mask_%04d.png", i, t);
      write_png(data.masks.masks[i][t], dir / buf);
      layer.push_back(buf);
    }
    manifest["masks"].push_back(std::move(layer));
  }
  for (int t = 0; t + 1 < T; ++t) {
    std::snprintf(buf, sizeof buf, "flow/fwd_%04d.flo", t);
    write_flo(data.flow_fwd[t], dir / buf);
    manifest["flow_fwd"].push_back(buf);
    std::snprintf(buf, sizeof buf, "flow/bwd_%04d.flo", t);
    write_flo(data.flow_bwd[t], dir / buf);
    manifest["flow_bwd"].push_back(buf);
  }
  for (int t = 0; t < T; ++t) {
    json row = json::array();
    for (double v : data.homographies[t].m()) row.push_back(v);
    manifest["homographies"].push_back(std::move(row));
  }

  std::ofstream mf(dir / "manifest.json");
  if (!mf) throw IoError("cannot write manifest under " + dir.string());
  mf << manifest.dump(2) << "\n";

  // ground truth for evaluation
  write_png(scene.gt_canvas, dir / "gt" / "canvas.png");
  for (int t = 0; t < T; ++t) {
    std::snprintf(buf, sizeof buf, "gt/background_%04d.png", t);
    write_png(scene.gt_background[t], dir / buf);
  }
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      std::snprintf(buf, sizeof buf, "gt/alpha_%d_%04d.png", i, t);
      write_png(scene.gt_alpha[i][t], dir / buf);
      std::snprintf(buf, sizeof buf, "gt/support_%d_%04d.png", i, t);
      write_png(scene.gt_support(i, t), dir / buf);
    }
}

LayerStack stack_from_ground_truth(const SyntheticScene& scene) {
  const Dataset& data = scene.data;
  const int T = data.frame_count(), N = data.layer_count();
  const int W = data.frames.width, H = data.frames.height;

  LayerStack stack;
  stack.canvas = scene.gt_canvas;
  stack.canvas_spec = scene.canvas_spec;
  stack.frames.resize(T);
  for (int t = 0; t < T; ++t) {
    OutputFrame& f = stack.frames[t];
    f.order = data.masks.order[t];
    f.background = scene.gt_background[t];
    f.background_validity = Image(W, H, 1, 1.0);
    f.layers.resize(N);
    for (int i = 0; i < N; ++i) {
      f.layers[i].alpha = scene.gt_alpha[i][t];
      f.layers[i].color = scene.gt_color[i][t];
      Image flow(W, H, 2, 0.0);
      const SceneSprite& sp = scene.spec.sprites[i];
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          if (scene.gt_alpha[i][t].at(x, y) > 0.0) {
            flow.at(x, y, 0) = sp.velocity.x;
            flow.at(x, y, 1) = sp.velocity.y;
          }
      f.layers[i].flow = std::move(flow);
    }
    f.recon = comp_over(f);
  }
  return stack;
}

}  // namespace omnimatte

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "omnimatte/videodata.hpp"

namespace omnimatte {

// Moving sprite over a procedural background. Positions are frame
// coordinates; the camera moves the background window instead. An attached
// shadow is an offset ellipse that attenuates whatever is beneath it; as a
// layer that is alpha = 1 - attenuation with black color.
struct SceneSprite {
  enum class Shape { kDisc, kRect };
  Shape shape = Shape::kDisc;
  double radius = 8.0;              // disc
  double rect_w = 12.0, rect_h = 8.0;  // rect, full extents
  double color[3] = {0.8, 0.3, 0.2};
  Vec2 start{16.0, 16.0};
  Vec2 velocity{1.0, 0.0};
  bool has_shadow = false;
  Vec2 shadow_offset{6.0, 8.0};
  double shadow_rx = 10.0, shadow_ry = 6.0;
  double attenuation = 0.6;  // fraction of light surviving under the shadow
};

struct SceneSpec {
  int width = 96, height = 64, frames = 20;
  std::uint64_t seed = 1;
  double background_low = 0.15, background_high = 0.85;
  Vec2 camera_velocity{0.0, 0.0};
  // Peak relative brightness drift; frame t is scaled by
  // 1 - amplitude * cos(pi * t / (T-1)), a slow sweep from -a to +a.
  double brightness_drift = 0.0;
  std::vector<SceneSprite> sprites;

  static SceneSpec from_json_text(const std::string& text);
  static SceneSpec from_json_file(const std::filesystem::path& path);
};

// Scene with exact ground truth: compositing the gt layers over the gt
// background reproduces the (pre-drift) frames to machine precision.
struct SyntheticScene {
  SceneSpec spec;
  Dataset data;  // ready to optimize on (frames include the drift, if any)
  std::vector<std::vector<Image>> gt_alpha;  // [layer][t]
  std::vector<std::vector<Image>> gt_color;  // [layer][t]
  std::vector<Image> gt_background;          // clean background per frame
  Image gt_canvas;                           // clean canvas
  CanvasSpec canvas_spec;
  std::vector<double> drift;                 // per-frame brightness factor

  // object-plus-effects support of a layer at t: gt alpha > 0
  Image gt_support(int layer, int t) const;
};

SyntheticScene synth_scene(const SceneSpec& spec);

// Writes frames/, masks/, flow/ and manifest.json under dir, plus the ground
// truth under dir/gt. The manifest loads back through load_sequence.
void save_scene(const SyntheticScene& scene, const std::filesystem::path& dir);

// Assembles a LayerStack from the ground truth (pure inputs, no training);
// used to drive the effects without an optimization run.
LayerStack stack_from_ground_truth(const SyntheticScene& scene);

}  // namespace omnimatte

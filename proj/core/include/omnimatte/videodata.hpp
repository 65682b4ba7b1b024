#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "omnimatte/config.hpp"
#include "omnimatte/geometry.hpp"
#include "omnimatte/image.hpp"

namespace omnimatte {

// Input video frames, float RGB in [0, 1].
struct FrameSequence {
  std::vector<Image> frames;
  int width = 0, height = 0;
  int count() const { return static_cast<int>(frames.size()); }
};

// Per-layer binary masks plus the per-frame back-to-front compositing order.
struct MaskStack {
  std::vector<std::vector<Image>> masks;  // [layer][frame], values in {0, 1}
  std::vector<std::vector<int>> order;    // [frame] -> layer ids, back to front
  int layers() const { return static_cast<int>(masks.size()); }
};

struct Dataset {
  FrameSequence frames;
  MaskStack masks;
  std::vector<FlowField> flow_fwd;  // T-1, frame t -> t+1
  std::vector<FlowField> flow_bwd;  // T-1, frame t+1 -> t
  std::vector<Homography> homographies;  // T, frame -> canvas
  Config config;                         // defaults + manifest overrides
  std::filesystem::path root;            // manifest directory

  int frame_count() const { return frames.count(); }
  int layer_count() const { return masks.layers(); }
};

// -- PNG ---------------------------------------------------------------------

// Reads an 8/16-bit PNG into [0, 1] doubles; palette images expand to RGB,
// 16-bit files are reduced to 8. Channels follow the file (1, 2, 3 or 4).
Image read_png(const std::filesystem::path& path);

// Writes an 8-bit PNG (1 = gray, 3 = RGB, 4 = RGBA); values are clamped to
// [0, 1] and quantized with round-half-up.
void write_png(const Image& img, const std::filesystem::path& path);

Image to_rgb(const Image& img);
Image to_gray(const Image& img);

// Quantization applied by write_png, exposed for tests.
inline int quantize8(double v) {
  return static_cast<int>(std::floor(clamp01(v) * 255.0 + 0.5));
}

// -- Middlebury .flo ---------------------------------------------------------

FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& flow, const std::filesystem::path& path);

// -- Dataset -----------------------------------------------------------------

// Loads and validates a dataset described by a JSON manifest. All paths in
// the manifest are relative to the manifest's directory. Throws
// ValidationError / IoError with the offending path and index.
Dataset load_sequence(const std::filesystem::path& manifest_path);

// Rescales frames, masks, flows and homographies to a new resolution.
void resize_dataset(Dataset& data, int new_width, int new_height);

// -- Outputs -----------------------------------------------------------------

struct OutputLayer {
  Image alpha;  // 1 channel
  Image color;  // 3 channels
  Image flow;   // 2 channels
};

struct OutputFrame {
  std::vector<OutputLayer> layers;  // index = layer id
  Image background;                 // 3 channels, opaque
  Image background_validity;        // 1 channel
  Image recon;                      // model reconstruction of the input frame
  std::vector<int> order;           // back to front
};

// Realized decomposition: per-frame omnimattes plus the shared canvas.
struct LayerStack {
  std::vector<OutputFrame> frames;
  Image canvas;  // 3 channels
  CanvasSpec canvas_spec;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int layer_count() const {
    return frames.empty() ? 0 : static_cast<int>(frames[0].layers.size());
  }
};

// Writes alpha_<i>_<t>.png, rgba_<i>_<t>.png, flow_<i>_<t>.flo per layer and
// frame, plus canvas.png and recon_<t>.png. Creates `dir` if needed.
void save_outputs(const LayerStack& stack, const std::filesystem::path& dir);

}  // namespace omnimatte

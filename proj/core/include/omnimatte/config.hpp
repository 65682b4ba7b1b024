#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace omnimatte {

// Run configuration. Defaults follow the training recipe; JSON overrides are
// applied key-by-key (absent keys keep their current value). Merge order is
// defaults < manifest "config" < --config file < command-line flags.
struct Config {
  // objective weights
  double lambda_r = 0.005;   // alpha sparsity
  double lambda_m = 50.0;    // mask bootstrap, gated off at mask_gate
  double lambda_w = 0.005;   // alpha temporal warp
  double lambda_p = 0.25;    // photometric warp (only if enable_photo)
  double gamma = 0.1;        // L1 share inside the sparsity mix
  double beta = 20.0;        // photometric gate threshold, 0-255 scale
  double mask_gate = 0.05;   // bootstrap turn-off threshold
  int dilate_radius = 5;     // boundary erosion disc radius, px
  bool enable_photo = false;
  double flow_reg = 1e-3;    // L2 pull of flow residuals toward 0
  bool enable_warp_grid = true;
  bool enable_brightness_grid = true;

  // solver
  int epochs = 2000;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 = final checkpoint only
  int log_every = 50;
  int threads = 0;           // 0 = hardware concurrency
  double divergence_factor = 1e3;

  // Applies the keys present in a JSON object string; unknown keys are an
  // error (catches typos in manifests).
  void apply_json_text(const std::string& json_text);
  void apply_json_file(const std::filesystem::path& path);
  std::string to_json_text() const;
};

}  // namespace omnimatte

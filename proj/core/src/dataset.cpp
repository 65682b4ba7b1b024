#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "omnimatte/errors.hpp"
#include "omnimatte/videodata.hpp"

namespace omnimatte {

namespace {

using nlohmann::json;

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("manifest parse error in " + path.string() + ": " + e.what());
  }
}

std::string describe(const char* what, int index, const std::filesystem::path& p) {
  std::ostringstream os;
  os << what << " [" << index << "]: " << p.string();
  return os.str();
}

void check_dims(const Image& img, int w, int h, const char* what, int index,
                const std::filesystem::path& p) {
  if (img.width() != w || img.height() != h) {
    std::ostringstream os;
    os << describe(what, index, p) << ": expected " << w << "x" << h << ", got "
       << img.width() << "x" << img.height();
    throw ValidationError(os.str());
  }
}

}  // namespace

Dataset load_sequence(const std::filesystem::path& manifest_path) {
  const json j = parse_json_file(manifest_path);
  if (!j.is_object()) throw ValidationError("manifest root must be an object");
  Dataset data;
  data.root = manifest_path.parent_path();

  auto resolve = [&](const std::string& rel) { return data.root / rel; };

  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].size() < 2)
    throw ValidationError("manifest needs a 'frames' array with at least 2 entries");
  const int T = static_cast<int>(j["frames"].size());

  for (int t = 0; t < T; ++t) {
    auto path = resolve(j["frames"][t].get<std::string>());
    if (!std::filesystem::exists(path))
      throw ValidationError("missing " + describe("frame", t, path));
    Image img = to_rgb(read_png(path));
    if (t == 0) {
      data.frames.width = img.width();
      data.frames.height = img.height();
    }
    check_dims(img, data.frames.width, data.frames.height, "frame", t, path);
    data.frames.frames.push_back(std::move(img));
  }
  const int W = data.frames.width, H = data.frames.height;

  if (!j.contains("masks") || !j["masks"].is_array() || j["masks"].empty())
    throw ValidationError("manifest needs a non-empty 'masks' array of layers");
  const int N = static_cast<int>(j["masks"].size());
  data.masks.masks.resize(N);
  for (int i = 0; i < N; ++i) {
    const auto& layer = j["masks"][i];
    if (!layer.is_array() || static_cast<int>(layer.size()) != T) {
      std::ostringstream os;
      os << "mask layer " << i << ": expected " << T << " masks, got "
         << (layer.is_array() ? layer.size() : 0);
      throw ValidationError(os.str());
    }
    for (int t = 0; t < T; ++t) {
      auto path = resolve(layer[t].get<std::string>());
      if (!std::filesystem::exists(path))
        throw ValidationError("missing " + describe("mask", t, path));
      Image g = to_gray(read_png(path));
      check_dims(g, W, H, "mask", t, path);
      // binarize 8-bit values at 128
      for (size_t k = 0; k < g.size(); ++k) g[k] = g[k] * 255.0 >= 128.0 ? 1.0 : 0.0;
      data.masks.masks[i].push_back(std::move(g));
    }
  }

  auto load_flows = [&](const char* key, const char* what, FlowDirection dir) {
    std::vector<FlowField> flows;
    if (!j.contains(key) || !j[key].is_array() ||
        static_cast<int>(j[key].size()) != T - 1) {
      std::ostringstream os;
      os << "expected " << (T - 1) << " " << what << "s, got "
         << (j.contains(key) && j[key].is_array() ? j[key].size() : 0);
      throw ValidationError(os.str());
    }
    for (int t = 0; t < T - 1; ++t) {
      auto path = resolve(j[key][t].get<std::string>());
      if (!std::filesystem::exists(path))
        throw ValidationError("missing " + describe(what, t, path));
      FlowField f = read_flo(path);
      f.direction = dir;
      check_dims(f.uv, W, H, what, t, path);
      if (!f.uv.all_finite())
        throw ValidationError("non-finite values in " + describe(what, t, path));
      flows.push_back(std::move(f));
    }
    return flows;
  };
  data.flow_fwd = load_flows("flow_fwd", "forward flow", FlowDirection::kForward);
  data.flow_bwd = load_flows("flow_bwd", "backward flow", FlowDirection::kBackward);

  if (!j.contains("homographies") || !j["homographies"].is_array() ||
      static_cast<int>(j["homographies"].size()) != T) {
    std::ostringstream os;
    os << "expected " << T << " homographies, got "
       << (j.contains("homographies") && j["homographies"].is_array()
               ? j["homographies"].size()
               : 0);
    throw ValidationError(os.str());
  }
  for (int t = 0; t < T; ++t) {
    const auto& row = j["homographies"][t];
    if (!row.is_array() || row.size() != 9) {
      std::ostringstream os;
      os << "homography [" << t << "] must be 9 row-major floats";
      throw ValidationError(os.str());
    }
    std::array<double, 9> m;
    for (int k = 0; k < 9; ++k) m[k] = row[k].get<double>();
    try {
      data.homographies.push_back(Homography::from_row_major(m));
    } catch (const ValidationError& e) {
      std::ostringstream os;
      os << "homography [" << t << "]: " << e.what();
      throw ValidationError(os.str());
    }
  }

  data.masks.order.resize(T);
  if (j.contains("order")) {
    const auto& order = j["order"];
    if (!order.is_array() || static_cast<int>(order.size()) != T)
      throw ValidationError("'order' must list one layer ordering per frame");
    for (int t = 0; t < T; ++t) {
      std::vector<int> o = order[t].get<std::vector<int>>();
      std::vector<int> sorted = o;
      std::sort(sorted.begin(), sorted.end());
      bool perm = static_cast<int>(sorted.size()) == N;
      for (int i = 0; perm && i < N; ++i) perm = sorted[i] == i;
      if (!perm) {
        std::ostringstream os;
        os << "order [" << t << "] is not a permutation of 0.." << N - 1;
        throw ValidationError(os.str());
      }
      data.masks.order[t] = std::move(o);
    }
  } else {
    for (int t = 0; t < T; ++t) {
      data.masks.order[t].resize(N);
      for (int i = 0; i < N; ++i) data.masks.order[t][i] = i;
    }
  }

  if (j.contains("config")) data.config.apply_json_text(j["config"].dump());
  return data;
}

void resize_dataset(Dataset& data, int new_width, int new_height) {
  const int old_w = data.frames.width, old_h = data.frames.height;
  if (old_w == new_width && old_h == new_height) return;
  for (auto& f : data.frames.frames) f = resize_bilinear(f, new_width, new_height);
  data.frames.width = new_width;
  data.frames.height = new_height;
  for (auto& layer : data.masks.masks)
    for (auto& m : layer) {
      m = resize_bilinear(m, new_width, new_height);
      for (size_t k = 0; k < m.size(); ++k) m[k] = m[k] >= 0.5 ? 1.0 : 0.0;
    }
  const double sx = double(new_width) / old_w, sy = double(new_height) / old_h;
  auto scale_flows = [&](std::vector<FlowField>& flows) {
    for (auto& f : flows) {
      f.uv = resize_bilinear(f.uv, new_width, new_height);
      for (int y = 0; y < new_height; ++y)
        for (int x = 0; x < new_width; ++x) {
          f.uv.at(x, y, 0) *= sx;
          f.uv.at(x, y, 1) *= sy;
        }
    }
  };
  scale_flows(data.flow_fwd);
  scale_flows(data.flow_bwd);
  // conjugate by the axis scaling: frame and canvas coordinates both rescale
  std::array<double, 9> s{sx, 0, 0, 0, sy, 0, 0, 0, 1};
  std::array<double, 9> si{1.0 / sx, 0, 0, 0, 1.0 / sy, 0, 0, 0, 1};
  Homography S = Homography::from_row_major(s);
  Homography Si = Homography::from_row_major(si);
  for (auto& h : data.homographies) h = S.compose(h).compose(Si);
}

void save_outputs(const LayerStack& stack, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output dir " + dir.string() + ": " + ec.message());

  const int T = stack.frame_count();
  const int N = stack.layer_count();
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) {
      const OutputLayer& layer = stack.frames[t].layers[i];
      std::string suffix = std::to_string(i) + "_" + std::to_string(t);
      write_png(layer.alpha, dir / ("alpha_" + suffix + ".png"));

      Image rgba(layer.color.width(), layer.color.height(), 4);
      for (int y = 0; y < rgba.height(); ++y)
        for (int x = 0; x < rgba.width(); ++x) {
          for (int c = 0; c < 3; ++c) rgba.at(x, y, c) = clamp01(layer.color.at(x, y, c));
          rgba.at(x, y, 3) = layer.alpha.at(x, y);
        }
      write_png(rgba, dir / ("rgba_" + suffix + ".png"));

      FlowField f;
      f.uv = layer.flow;
      write_flo(f, dir / ("flow_" + suffix + ".flo"));
    }
  }
  for (int t = 0; t < T; ++t)
    write_png(stack.frames[t].recon, dir / ("recon_" + std::to_string(t) + ".png"));
  write_png(stack.canvas, dir / "canvas.png");
}

}  // namespace omnimatte

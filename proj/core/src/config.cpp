#include "omnimatte/config.hpp"

#include <fstream>

#include <json.hpp>

#include "omnimatte/errors.hpp"

namespace omnimatte {

namespace {
using nlohmann::json;

void apply_keys(Config& c, const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "lambda_r") c.lambda_r = v.get<double>();
    else if (k == "lambda_m") c.lambda_m = v.get<double>();
    else if (k == "lambda_w") c.lambda_w = v.get<double>();
    else if (k == "lambda_p") c.lambda_p = v.get<double>();
    else if (k == "gamma") c.gamma = v.get<double>();
    else if (k == "beta") c.beta = v.get<double>();
    else if (k == "mask_gate") c.mask_gate = v.get<double>();
    else if (k == "dilate_radius") c.dilate_radius = v.get<int>();
    else if (k == "enable_photo") c.enable_photo = v.get<bool>();
    else if (k == "flow_reg") c.flow_reg = v.get<double>();
    else if (k == "enable_warp_grid") c.enable_warp_grid = v.get<bool>();
    else if (k == "enable_brightness_grid") c.enable_brightness_grid = v.get<bool>();
    else if (k == "epochs") c.epochs = v.get<int>();
    else if (k == "lr") c.lr = v.get<double>();
    else if (k == "adam_beta1") c.adam_beta1 = v.get<double>();
    else if (k == "adam_beta2") c.adam_beta2 = v.get<double>();
    else if (k == "adam_eps") c.adam_eps = v.get<double>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "checkpoint_every") c.checkpoint_every = v.get<int>();
    else if (k == "log_every") c.log_every = v.get<int>();
    else if (k == "threads") c.threads = v.get<int>();
    else if (k == "divergence_factor") c.divergence_factor = v.get<double>();
    else throw ValidationError("unknown config key: " + k);
  }
}
}  // namespace

void Config::apply_json_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  apply_keys(*this, j);
}

void Config::apply_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  apply_json_text(text);
}

std::string Config::to_json_text() const {
  json j{{"lambda_r", lambda_r},
         {"lambda_m", lambda_m},
         {"lambda_w", lambda_w},
         {"lambda_p", lambda_p},
         {"gamma", gamma},
         {"beta", beta},
         {"mask_gate", mask_gate},
         {"dilate_radius", dilate_radius},
         {"enable_photo", enable_photo},
         {"flow_reg", flow_reg},
         {"enable_warp_grid", enable_warp_grid},
         {"enable_brightness_grid", enable_brightness_grid},
         {"epochs", epochs},
         {"lr", lr},
         {"adam_beta1", adam_beta1},
         {"adam_beta2", adam_beta2},
         {"adam_eps", adam_eps},
         {"seed", seed},
         {"checkpoint_every", checkpoint_every},
         {"log_every", log_every},
         {"threads", threads},
         {"divergence_factor", divergence_factor}};
  return j.dump(2);
}

}  // namespace omnimatte

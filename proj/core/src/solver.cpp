#include "omnimatte/solver.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "omnimatte/errors.hpp"

namespace omnimatte {

OptimState OptimState::zeros_like(ParameterSet& params) {
  OptimState s;
  for (const TensorRef& ref : parameter_tensors(params)) {
    s.m.emplace_back(ref.size, 0.0);
    s.v.emplace_back(ref.size, 0.0);
  }
  return s;
}

void adam_step(ParameterSet& params, ParamAdjoints& grads, OptimState& state,
               const Config& config) {
  std::vector<TensorRef> prefs = parameter_tensors(params);
  std::vector<TensorRef> grefs = adjoint_tensors(grads, params);
  state.step += 1;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, double(state.step));
  const double bc2 = 1.0 - std::pow(b2, double(state.step));
  for (size_t ti = 0; ti < prefs.size(); ++ti) {
    double* p = prefs[ti].data;
    const double* g = grefs[ti].data;
    double* m = state.m[ti].data();
    double* v = state.v[ti].data();
    for (size_t k = 0; k < prefs[ti].size; ++k) {
      if (std::isnan(g[k]))
        throw NumericalError("NaN gradient in tensor '" + prefs[ti].name + "'");
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      double mhat = m[k] / bc1;
      double vhat = v[k] / bc2;
      p[k] -= config.lr * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
  }
  // keep the brightness scale positive
  for (double& b : params.grids.brightness.v)
    if (b < 0.01) b = 0.01;
}

TrainState train(const TrainingInputs& inputs, const Config& config,
                 TrainState* resume, const TrainOptions& opts) {
  TrainState st;
  if (resume) {
    st = std::move(*resume);
    check_checkpoint_compatible(st, inputs);
  } else {
    st.params = init_parameters(inputs, config);
    st.optim = OptimState::zeros_like(st.params);
  }

  LossWeights weights = LossWeights::from_config(config);
  weights.bootstrap_active = st.bootstrap_active;

  ParamAdjoints adj = ParamAdjoints::zeros_like(st.params);
  double initial_total = -1.0;
  for (const HistoryEntry& h : st.history)
    if (h.epoch == 0) initial_total = std::max(h.report.total, 1e-12);

  for (int epoch = st.epoch; epoch < config.epochs; ++epoch) {
    LossReport rep = grad_total(st.params, inputs, config, weights,
                                config.threads, adj);
    st.history.push_back({epoch, rep});
    if (opts.on_epoch) opts.on_epoch(epoch, rep);

    if (!std::isfinite(rep.total))
      throw NumericalError("non-finite total loss at epoch " + std::to_string(epoch));
    if (initial_total < 0.0) initial_total = std::max(rep.total, 1e-12);
    if (rep.total > config.divergence_factor * initial_total) {
      std::ostringstream os;
      os << "optimization diverged at epoch " << epoch << ": total " << rep.total
         << " > " << config.divergence_factor << " x initial " << initial_total;
      throw NumericalError(os.str());
    }

    // Gate the bootstrap permanently once the mask term first dips below the
    // threshold; takes effect from the next epoch.
    if (weights.bootstrap_active && rep.mask < weights.mask_gate) {
      weights.bootstrap_active = false;
      st.bootstrap_active = false;
    }

    adam_step(st.params, adj, st.optim, config);
    st.epoch = epoch + 1;

    if (config.checkpoint_every > 0 && !opts.checkpoint_dir.empty() &&
        st.epoch % config.checkpoint_every == 0 && st.epoch < config.epochs) {
      save_checkpoint(st, opts.checkpoint_dir /
                              ("checkpoint_" + std::to_string(st.epoch) + ".ckpt"));
    }
  }
  return st;
}

// ---------------------------------------------------------------------------
// Checkpoint container: "OMCK" | u32 version | u64 json header | tensors.
// Every tensor is named, shaped and stored as little-endian float64 so a
// reload resumes the exact trajectory.
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'O', 'M', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  uint64_t v;
  static_assert(sizeof(v) == sizeof(d));
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

struct Reader {
  const unsigned char* p;
  size_t n, off = 0;
  explicit Reader(const std::string& s)
      : p(reinterpret_cast<const unsigned char*>(s.data())), n(s.size()) {}
  void need(size_t k) const {
    if (off + k > n) throw ValidationError("truncated checkpoint");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[off + i]) << (8 * i);
    off += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[off + i]) << (8 * i);
    off += 8;
    return v;
  }
  double f64() {
    uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string bytes(size_t k) {
    need(k);
    std::string s(reinterpret_cast<const char*>(p + off), k);
    off += k;
    return s;
  }
};

json history_json(const std::vector<HistoryEntry>& history) {
  json arr = json::array();
  for (const HistoryEntry& h : history) {
    json e{{"epoch", h.epoch},
           {"rgb", h.report.rgb},
           {"reg", h.report.reg},
           {"mask", h.report.mask},
           {"flow", h.report.flow},
           {"alpha_warp", h.report.alpha_warp},
           {"photo", h.report.photo},
           {"flow_reg", h.report.flow_reg},
           {"total", h.report.total},
           {"lambda_m", h.report.lambda_m_effective}};
    if (!h.report.grad_norms.empty()) e["grad_norms"] = h.report.grad_norms;
    arr.push_back(std::move(e));
  }
  return arr;
}

std::vector<HistoryEntry> history_from_json(const json& arr) {
  std::vector<HistoryEntry> out;
  for (const json& e : arr) {
    HistoryEntry h;
    h.epoch = e.at("epoch").get<int>();
    h.report.rgb = e.at("rgb").get<double>();
    h.report.reg = e.at("reg").get<double>();
    h.report.mask = e.at("mask").get<double>();
    h.report.flow = e.at("flow").get<double>();
    h.report.alpha_warp = e.at("alpha_warp").get<double>();
    h.report.photo = e.at("photo").get<double>();
    h.report.flow_reg = e.at("flow_reg").get<double>();
    h.report.total = e.at("total").get<double>();
    h.report.lambda_m_effective = e.at("lambda_m").get<double>();
    out.push_back(std::move(h));
  }
  return out;
}

void append_tensor(std::string& out, const std::string& name,
                   const std::vector<uint64_t>& dims, const double* data,
                   size_t size) {
  put_u32(out, uint32_t(name.size()));
  out.append(name);
  put_u32(out, uint32_t(dims.size()));
  uint64_t prod = 1;
  for (uint64_t d : dims) {
    put_u64(out, d);
    prod *= d;
  }
  if (prod != size) throw ValidationError("tensor dims mismatch for " + name);
  for (size_t k = 0; k < size; ++k) put_f64(out, data[k]);
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  TrainState& st = const_cast<TrainState&>(state);
  json header{{"epoch", state.epoch},
              {"bootstrap_active", state.bootstrap_active},
              {"adam_step", state.optim.step},
              {"layer_count", state.params.layer_count},
              {"frame_count", state.params.frame_count},
              {"width", state.params.width},
              {"height", state.params.height},
              {"canvas",
               {{"x0", state.params.canvas_spec.x0},
                {"y0", state.params.canvas_spec.y0},
                {"width", state.params.canvas_spec.width},
                {"height", state.params.canvas_spec.height}}},
              {"history", history_json(state.history)}};
  std::string header_text = header.dump();

  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, header_text.size());
  out.append(header_text);

  std::vector<TensorRef> refs = parameter_tensors(st.params);
  put_u32(out, uint32_t(refs.size() * 3));

  auto dims_for = [&](const TensorRef& ref) -> std::vector<uint64_t> {
    return {uint64_t(ref.size)};
  };
  for (const TensorRef& ref : refs)
    append_tensor(out, ref.name, dims_for(ref), ref.data, ref.size);
  for (size_t i = 0; i < refs.size(); ++i)
    append_tensor(out, "adam_m/" + refs[i].name, {uint64_t(refs[i].size)},
                  st.optim.m[i].data(), st.optim.m[i].size());
  for (size_t i = 0; i < refs.size(); ++i)
    append_tensor(out, "adam_v/" + refs[i].name, {uint64_t(refs[i].size)},
                  st.optim.v[i].data(), st.optim.v[i].size());

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint: " + path.string());
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw IoError("checkpoint write failed: " + path.string());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path.string());
  std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(blob);

  if (r.bytes(4) != std::string(kMagic, 4))
    throw ValidationError("not a checkpoint file: " + path.string());
  uint32_t version = r.u32();
  if (version != kVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  uint64_t hlen = r.u64();
  json header = json::parse(r.bytes(hlen));

  TrainState st;
  st.epoch = header.at("epoch").get<int>();
  st.bootstrap_active = header.at("bootstrap_active").get<bool>();
  st.history = history_from_json(header.at("history"));

  ParameterSet& p = st.params;
  p.layer_count = header.at("layer_count").get<int>();
  p.frame_count = header.at("frame_count").get<int>();
  p.width = header.at("width").get<int>();
  p.height = header.at("height").get<int>();
  p.canvas_spec.x0 = header.at("canvas").at("x0").get<double>();
  p.canvas_spec.y0 = header.at("canvas").at("y0").get<double>();
  p.canvas_spec.width = header.at("canvas").at("width").get<int>();
  p.canvas_spec.height = header.at("canvas").at("height").get<int>();

  p.alpha_latent.assign(size_t(p.layer_count) * p.frame_count, Image(p.width, p.height, 1));
  p.color_latent.assign(size_t(p.layer_count) * p.frame_count, Image(p.width, p.height, 3));
  p.flow_residual.assign(size_t(p.layer_count) * p.frame_count, Image(p.width, p.height, 2));
  p.canvas_latent = Image(p.canvas_spec.width, p.canvas_spec.height, 3);
  p.grids = AdjustGrids::neutral(p.frame_count);
  st.optim = OptimState::zeros_like(p);
  st.optim.step = header.at("adam_step").get<long>();

  std::vector<TensorRef> refs = parameter_tensors(p);
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < refs.size(); ++i) index[refs[i].name] = i;

  uint32_t count = r.u32();
  for (uint32_t k = 0; k < count; ++k) {
    uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    uint32_t ndim = r.u32();
    uint64_t size = 1;
    for (uint32_t d = 0; d < ndim; ++d) size *= r.u64();

    double* dst = nullptr;
    size_t expect = 0;
    if (name.rfind("adam_m/", 0) == 0) {
      auto it = index.find(name.substr(7));
      if (it == index.end()) throw ValidationError("unknown tensor '" + name + "' in checkpoint");
      dst = st.optim.m[it->second].data();
      expect = st.optim.m[it->second].size();
    } else if (name.rfind("adam_v/", 0) == 0) {
      auto it = index.find(name.substr(7));
      if (it == index.end()) throw ValidationError("unknown tensor '" + name + "' in checkpoint");
      dst = st.optim.v[it->second].data();
      expect = st.optim.v[it->second].size();
    } else {
      auto it = index.find(name);
      if (it == index.end()) throw ValidationError("unknown tensor '" + name + "' in checkpoint");
      dst = refs[it->second].data;
      expect = refs[it->second].size;
    }
    if (size != expect)
      throw ValidationError("shape mismatch for tensor '" + name + "': file has " +
                            std::to_string(size) + " values, expected " +
                            std::to_string(expect));
    for (uint64_t q = 0; q < size; ++q) dst[q] = r.f64();
  }
  return st;
}

void check_checkpoint_compatible(const TrainState& state, const TrainingInputs& inputs) {
  const ParameterSet& p = state.params;
  if (p.frame_count != inputs.frame_count())
    throw ValidationError("checkpoint frame count " + std::to_string(p.frame_count) +
                          " does not match dataset " + std::to_string(inputs.frame_count()));
  if (p.layer_count != inputs.layer_count())
    throw ValidationError("checkpoint layer count " + std::to_string(p.layer_count) +
                          " does not match dataset " + std::to_string(inputs.layer_count()));
  if (p.width != inputs.data->frames.width || p.height != inputs.data->frames.height)
    throw ValidationError("checkpoint resolution does not match dataset");
  if (p.canvas_spec.width != inputs.canvas_spec.width ||
      p.canvas_spec.height != inputs.canvas_spec.height)
    throw ValidationError("checkpoint canvas does not match dataset homographies");
}

std::string history_to_json(const std::vector<HistoryEntry>& history) {
  return history_json(history).dump(2);
}

}  // namespace omnimatte

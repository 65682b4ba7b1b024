#include "omnimatte/compositing.hpp"

#include <stdexcept>

#include "omnimatte/errors.hpp"

namespace omnimatte {

CompositeTrace composite_over_traced(const Image& background,
                                     const std::vector<CompLayer>& layers,
                                     const std::vector<int>& order) {
  CompositeTrace trace;
  trace.out = background;
  trace.below.reserve(order.size());
  for (int id : order) {
    const CompLayer& l = layers[id];
    trace.below.push_back(trace.out);
    Image& out = trace.out;
    const int ch = out.channels();
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) {
        double a = l.alpha->at(x, y);
        for (int c = 0; c < ch; ++c)
          out.at(x, y, c) = a * l.values->at(x, y, c) + (1.0 - a) * out.at(x, y, c);
      }
  }
  return trace;
}

void composite_over_backward(const CompositeTrace& trace,
                             const std::vector<CompLayer>& layers,
                             const std::vector<int>& order, const Image& d_out,
                             Image* d_background, std::vector<Image*> d_alpha,
                             std::vector<Image*> d_values) {
  Image d_running = d_out;
  const int ch = d_out.channels();
  for (int k = static_cast<int>(order.size()) - 1; k >= 0; --k) {
    int id = order[k];
    const CompLayer& l = layers[id];
    const Image& below = trace.below[k];
    for (int y = 0; y < d_running.height(); ++y)
      for (int x = 0; x < d_running.width(); ++x) {
        double a = l.alpha->at(x, y);
        double da = 0.0;
        for (int c = 0; c < ch; ++c) {
          double adj = d_running.at(x, y, c);
          da += adj * (l.values->at(x, y, c) - below.at(x, y, c));
          if (d_values[id]) d_values[id]->at(x, y, c) += adj * a;
          d_running.at(x, y, c) = adj * (1.0 - a);
        }
        if (d_alpha[id]) d_alpha[id]->at(x, y) += da;
      }
  }
  if (d_background)
    for (size_t i = 0; i < d_running.size(); ++i)
      (*d_background)[i] += d_running[i];
}

Image comp_over(const OutputFrame& frame) {
  std::vector<CompLayer> layers(frame.layers.size());
  for (size_t i = 0; i < frame.layers.size(); ++i)
    layers[i] = {&frame.layers[i].alpha, &frame.layers[i].color};
  return composite_over_traced(frame.background, layers, frame.order).out;
}

Image comp_alpha(const OutputFrame& frame, const std::set<int>& subset) {
  const Image& ref = frame.background;
  Image a(ref.width(), ref.height(), 1, 0.0);
  for (int id : frame.order) {
    if (!subset.count(id)) continue;
    const Image& la = frame.layers[id].alpha;
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        double v = la.at(x, y);
        a.at(x, y) = v + (1.0 - v) * a.at(x, y);
      }
  }
  return a;
}

Image transmittance(const OutputFrame& frame, int layer) {
  if (layer < 0 || layer >= static_cast<int>(frame.layers.size()))
    throw std::out_of_range("transmittance: layer index out of range");
  std::set<int> subset;
  for (int id = layer; id < static_cast<int>(frame.layers.size()); ++id)
    subset.insert(id);
  Image tau = comp_alpha(frame, subset);
  for (size_t i = 0; i < tau.size(); ++i) tau[i] = 1.0 - tau[i];
  return tau;
}

void detail_transfer(LayerStack& stack, const FrameSequence& frames) {
  for (int t = 0; t < stack.frame_count(); ++t) {
    OutputFrame& frame = stack.frames[t];
    const Image& target = frames.frames[t];
    const Image& recon = frame.recon;
    for (int i = 0; i < static_cast<int>(frame.layers.size()); ++i) {
      Image tau = transmittance(frame, i);
      Image& color = frame.layers[i].color;
      for (int y = 0; y < color.height(); ++y)
        for (int x = 0; x < color.width(); ++x) {
          double tv = tau.at(x, y);
          for (int c = 0; c < 3; ++c)
            color.at(x, y, c) += tv * (target.at(x, y, c) - recon.at(x, y, c));
        }
    }
  }
}

Image composite_without(const OutputFrame& frame, const std::set<int>& removed) {
  std::vector<CompLayer> layers(frame.layers.size());
  for (size_t i = 0; i < frame.layers.size(); ++i)
    layers[i] = {&frame.layers[i].alpha, &frame.layers[i].color};
  std::vector<int> order;
  for (int id : frame.order)
    if (!removed.count(id)) order.push_back(id);
  return composite_over_traced(frame.background, layers, order).out;
}

}  // namespace omnimatte

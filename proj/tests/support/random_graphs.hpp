#pragma once

// Randomized small-model generator for oracle tests. Keeps everything at desk
// scale: at most 8 layers, channels in {8,16,24,32}, spatial dims tracked so
// every generated model expands, validates, shape-infers, and runs.

#include <random>
#include <vector>

#include "backbone_lens/expand.hpp"
#include "backbone_lens/model_spec.hpp"
#include "backbone_lens/shapes.hpp"
#include "backbone_lens/tensor.hpp"

namespace testsupport {

struct RandomModel {
  backbone_lens::ModelSpec spec;
  backbone_lens::Shape input;
};

inline RandomModel random_model(std::uint64_t seed) {
  namespace bl = backbone_lens;
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const int channel_menu[] = {8, 16, 24, 32};

  RandomModel model;
  const int side = 8 << pick(0, 2);  // 8, 16, or 32
  model.input = {pick(0, 4) == 0 ? 2 : 1, 3, side, side};
  model.spec.name = "random-" + std::to_string(seed);

  const int layer_count = pick(2, 8);
  // per-layer bookkeeping: output channels and spatial size
  std::vector<int> channels;
  std::vector<int> spatial;

  for (int i = 0; i < layer_count; ++i) {
    bl::LayerSpec layer;
    const int prev_ch = i == 0 ? model.input.c : channels[i - 1];
    const int prev_sp = i == 0 ? side : spatial[i - 1];
    const int kind_roll = i == 0 ? 0 : pick(0, 9);
    int out_ch = channel_menu[pick(0, 3)];
    int out_sp = prev_sp;
    switch (kind_roll) {
      case 0:
      case 1: {  // Conv
        layer.kind = bl::LayerKind::Conv;
        layer.args.kernel = pick(0, 1) ? 3 : 1;
        layer.args.stride = (prev_sp >= 8 && pick(0, 1)) ? 2 : 1;
        layer.args.out_channels = out_ch;
        if (layer.args.stride == 2)
          out_sp = (prev_sp + 2 * (layer.args.kernel / 2) - layer.args.kernel) / 2 + 1;
        break;
      }
      case 2: {  // Bottleneck chain
        layer.kind = bl::LayerKind::Bottleneck;
        layer.repeats = pick(1, 2);
        const bool shortcut = pick(0, 1) == 1;
        layer.args.shortcut = shortcut;
        layer.args.out_channels = shortcut ? prev_ch : out_ch;  // add needs equal widths
        layer.args.e = pick(0, 1) ? 0.5 : 1.0;
        out_ch = layer.args.out_channels;
        break;
      }
      case 3:
      case 4: {  // C2f
        layer.kind = bl::LayerKind::C2f;
        layer.repeats = pick(1, 2);
        layer.args.out_channels = out_ch;
        layer.args.shortcut = pick(0, 1) == 1;
        break;
      }
      case 5: {  // C3k
        layer.kind = bl::LayerKind::C3k;
        layer.repeats = pick(1, 2);
        layer.args = bl::default_args(bl::LayerKind::C3k);
        layer.args.out_channels = out_ch;
        layer.args.shortcut = pick(0, 1) == 1;
        break;
      }
      case 6: {  // C3k2
        layer.kind = bl::LayerKind::C3k2;
        layer.repeats = pick(1, 2);
        layer.args.out_channels = out_ch;
        layer.args.shortcut = pick(0, 1) == 1;
        layer.args.c3k = pick(0, 1) == 1;
        break;
      }
      case 7: {  // SPPF
        layer.kind = bl::LayerKind::SPPF;
        layer.args = bl::default_args(bl::LayerKind::SPPF);
        layer.args.out_channels = out_ch;
        break;
      }
      case 8: {  // Upsample (keep spatial bounded)
        if (prev_sp > 16) {
          layer.kind = bl::LayerKind::Conv;
          layer.args.out_channels = out_ch;
          break;
        }
        layer.kind = bl::LayerKind::Upsample;
        layer.args = bl::default_args(bl::LayerKind::Upsample);
        out_ch = prev_ch;
        out_sp = prev_sp * 2;
        break;
      }
      default: {  // Concat of earlier layers with matching spatial size
        std::vector<int> candidates;
        for (int j = 0; j < i; ++j)
          if (spatial[j] == prev_sp) candidates.push_back(j);
        if (candidates.empty()) {
          layer.kind = bl::LayerKind::Conv;
          layer.args.out_channels = out_ch;
          break;
        }
        layer.kind = bl::LayerKind::Concat;
        layer.args = bl::default_args(bl::LayerKind::Concat);
        const int partner = candidates[pick(0, static_cast<int>(candidates.size()) - 1)];
        layer.from = {-1, partner};
        out_ch = prev_ch + channels[partner];
        break;
      }
    }
    channels.push_back(out_ch);
    spatial.push_back(out_sp);
    model.spec.layers.push_back(std::move(layer));
  }
  return model;
}

inline backbone_lens::Tensor random_tensor(const backbone_lens::Shape& shape,
                                           std::uint64_t seed) {
  backbone_lens::Tensor tensor(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : tensor.data) v = dist(rng);
  return tensor;
}

}  // namespace testsupport

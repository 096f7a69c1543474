#pragma once

// Built-in model descriptions: a C2f backbone and its C3k2 counterpart, both
// at nano scale (depth 0.33, width 0.25). The two differ only in the stage
// block kind, which makes them a controlled pair for cost comparisons.

#include <string>
#include <vector>

#include "backbone_lens/error.hpp"
#include "backbone_lens/model_spec.hpp"

namespace backbone_lens {

inline std::vector<std::string> builtin_preset_names() {
  return {"yoloworld-c2f-n", "yoloworld-c3k2-n"};
}

namespace detail {

inline LayerSpec conv_layer(int out_channels, int kernel, int stride) {
  LayerSpec layer;
  layer.kind = LayerKind::Conv;
  layer.args.out_channels = out_channels;
  layer.args.kernel = kernel;
  layer.args.stride = stride;
  return layer;
}

// Stage block: C2f in the baseline, C3k2 in the reworked backbone. The c3k
// flag only matters for the C3k2 variant (deep stages use the nested C3k
// form, shallow ones plain bottlenecks).
inline LayerSpec stage_layer(LayerKind kind, int out_channels, int repeats, bool c3k) {
  LayerSpec layer;
  layer.kind = kind;
  layer.repeats = repeats;
  layer.args.out_channels = out_channels;
  layer.args.shortcut = true;
  if (kind == LayerKind::C3k2) layer.args.c3k = c3k;
  return layer;
}

inline ModelSpec backbone_preset(const std::string& name, LayerKind stage_kind) {
  ModelSpec spec;
  spec.name = name;
  spec.depth_multiple = 0.33;
  spec.width_multiple = 0.25;
  spec.layers = {
      conv_layer(64, 3, 2),                        // 0: stem, /2
      conv_layer(128, 3, 2),                       // 1: /4
      stage_layer(stage_kind, 128, 3, false),      // 2
      conv_layer(256, 3, 2),                       // 3: /8
      stage_layer(stage_kind, 256, 6, false),      // 4
      conv_layer(512, 3, 2),                       // 5: /16
      stage_layer(stage_kind, 512, 6, true),       // 6
      conv_layer(1024, 3, 2),                      // 7: /32
      stage_layer(stage_kind, 1024, 3, true),      // 8
      {},                                          // 9: SPPF, filled below
      {},                                          // 10: fusion boundary
  };
  LayerSpec sppf;
  sppf.kind = LayerKind::SPPF;
  sppf.args = default_args(LayerKind::SPPF);
  sppf.args.out_channels = 1024;
  spec.layers[9] = sppf;
  LayerSpec fusion;
  fusion.kind = LayerKind::FusionStub;
  fusion.args = default_args(LayerKind::FusionStub);
  spec.layers[10] = fusion;
  return spec;
}

}  // namespace detail

inline ModelSpec builtin_preset(const std::string& name) {
  if (name == "yoloworld-c2f-n") return detail::backbone_preset(name, LayerKind::C2f);
  if (name == "yoloworld-c3k2-n") return detail::backbone_preset(name, LayerKind::C3k2);
  throw Error("unknown preset \"" + name + "\"");
}

}  // namespace backbone_lens

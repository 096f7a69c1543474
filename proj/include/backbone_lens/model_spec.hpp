#pragma once

// Declarative backbone descriptions. A model is an ordered layer list with
// composite block kinds; depth/width multiples scale repeat counts and channel
// widths before the list is lowered to a primitive graph.
//
// File schema (JSON):
//   { "name": str, "depth_multiple": num, "width_multiple": num,
//     "layers": [ { "from": [int...], "repeats": int, "kind": str,
//                   "args": { "out_channels": int, "kernel": int,
//                             "stride": int, "shortcut": bool,
//                             "c3k": bool, "e": num } } ] }
// `from` entries are earlier layer indices, or -1 for the previous layer
// (the graph input when used at layer 0). Args not meaningful for a kind are
// rejected; see kind_allowed_args below.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "backbone_lens/error.hpp"

namespace backbone_lens {

enum class LayerKind { Conv, Bottleneck, C2f, C3k, C3k2, SPPF, Upsample, Concat, FusionStub };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "Conv";
    case LayerKind::Bottleneck: return "Bottleneck";
    case LayerKind::C2f: return "C2f";
    case LayerKind::C3k: return "C3k";
    case LayerKind::C3k2: return "C3k2";
    case LayerKind::SPPF: return "SPPF";
    case LayerKind::Upsample: return "Upsample";
    case LayerKind::Concat: return "Concat";
    case LayerKind::FusionStub: return "FusionStub";
  }
  return "?";
}

inline std::optional<LayerKind> layer_kind_from_string(const std::string& s) {
  static const std::pair<const char*, LayerKind> table[] = {
      {"Conv", LayerKind::Conv},     {"Bottleneck", LayerKind::Bottleneck},
      {"C2f", LayerKind::C2f},       {"C3k", LayerKind::C3k},
      {"C3k2", LayerKind::C3k2},     {"SPPF", LayerKind::SPPF},
      {"Upsample", LayerKind::Upsample}, {"Concat", LayerKind::Concat},
      {"FusionStub", LayerKind::FusionStub},
  };
  for (const auto& [name, kind] : table)
    if (s == name) return kind;
  return std::nullopt;
}

struct LayerArgs {
  int out_channels = 0;  // 0 = not applicable for this kind
  int kernel = 1;
  int stride = 1;
  bool shortcut = false;
  bool c3k = false;
  double e = 0.5;

  bool operator==(const LayerArgs&) const = default;
};

struct LayerSpec {
  std::vector<int> from{-1};
  int repeats = 1;  // inner sub-block count for C2f/C3k/C3k2, chain length for Bottleneck
  LayerKind kind = LayerKind::Conv;
  LayerArgs args;

  bool operator==(const LayerSpec&) const = default;
};

struct ModelSpec {
  std::string name;
  double depth_multiple = 1.0;
  double width_multiple = 1.0;
  std::vector<LayerSpec> layers;

  bool operator==(const ModelSpec&) const = default;
};

inline bool kind_has_out_channels(LayerKind k) {
  switch (k) {
    case LayerKind::Upsample:
    case LayerKind::Concat:
    case LayerKind::FusionStub: return false;
    default: return true;
  }
}

inline bool kind_has_repeats(LayerKind k) {
  switch (k) {
    case LayerKind::Bottleneck:
    case LayerKind::C2f:
    case LayerKind::C3k:
    case LayerKind::C3k2: return true;
    default: return false;
  }
}

// Args accepted per kind; anything else in the file is a schema error.
inline std::set<std::string> kind_allowed_args(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return {"out_channels", "kernel", "stride"};
    case LayerKind::Bottleneck: return {"out_channels", "shortcut", "e"};
    case LayerKind::C2f: return {"out_channels", "shortcut", "e"};
    case LayerKind::C3k: return {"out_channels", "shortcut", "e", "kernel"};
    case LayerKind::C3k2: return {"out_channels", "shortcut", "c3k", "e"};
    case LayerKind::SPPF: return {"out_channels", "kernel", "e"};
    default: return {};
  }
}

// Kind-specific defaults applied before reading the args object.
inline LayerArgs default_args(LayerKind k) {
  LayerArgs a;
  if (k == LayerKind::C3k) a.kernel = 3;   // inner bottleneck kernel
  if (k == LayerKind::SPPF) a.kernel = 5;  // pool window
  return a;
}

inline void validate_model_spec(const ModelSpec& spec) {
  if (!(spec.depth_multiple > 0.0))
    throw Error("model \"" + spec.name + "\": depth_multiple must be > 0");
  if (!(spec.width_multiple > 0.0))
    throw Error("model \"" + spec.name + "\": width_multiple must be > 0");
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(layer.kind) + ")";
    if (layer.repeats < 1) throw Error(where + ": repeats must be >= 1");
    if (!kind_has_repeats(layer.kind) && layer.repeats != 1)
      throw Error(where + ": repeats not applicable to this kind");
    if (kind_has_out_channels(layer.kind) && layer.args.out_channels < 1)
      throw Error(where + ": out_channels must be >= 1");
    if (layer.args.kernel < 1) throw Error(where + ": kernel must be >= 1");
    if (layer.args.stride < 1) throw Error(where + ": stride must be >= 1");
    if (layer.from.empty()) throw Error(where + ": from must name at least one input");
    if (layer.kind == LayerKind::Concat) {
      if (layer.from.size() < 2) throw Error(where + ": Concat takes >= 2 inputs");
    } else if (layer.from.size() != 1) {
      throw Error(where + ": takes exactly 1 input");
    }
    for (int ref : layer.from) {
      if (ref == -1) continue;  // previous layer (or the graph input at layer 0)
      if (ref < 0 || ref >= static_cast<int>(i))
        throw Error(where + ": unresolvable reference to layer " + std::to_string(ref));
    }
  }
}

namespace detail {

inline Error schema_error(const std::string& msg) {
  return Error("model spec parse error: " + msg);
}

}  // namespace detail

inline ModelSpec parse_model_spec(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw detail::schema_error(e.what());
  }
  if (!doc.is_object()) throw detail::schema_error("top level must be an object");
  for (const auto& [key, _] : doc.items())
    if (key != "name" && key != "depth_multiple" && key != "width_multiple" && key != "layers")
      throw detail::schema_error("unknown top-level key \"" + key + "\"");

  ModelSpec spec;
  try {
    spec.name = doc.value("name", std::string{});
    spec.depth_multiple = doc.value("depth_multiple", 1.0);
    spec.width_multiple = doc.value("width_multiple", 1.0);
    if (!doc.contains("layers") || !doc["layers"].is_array())
      throw detail::schema_error("\"layers\" array is required");
    for (std::size_t i = 0; i < doc["layers"].size(); ++i) {
      const auto& item = doc["layers"][i];
      const std::string where = "layer " + std::to_string(i);
      if (!item.is_object()) throw detail::schema_error(where + ": must be an object");
      for (const auto& [key, _] : item.items())
        if (key != "from" && key != "repeats" && key != "kind" && key != "args")
          throw detail::schema_error(where + ": unknown key \"" + key + "\"");
      if (!item.contains("kind") || !item["kind"].is_string())
        throw detail::schema_error(where + ": \"kind\" string is required");
      const std::string kind_name = item["kind"].get<std::string>();
      const auto kind = layer_kind_from_string(kind_name);
      if (!kind) throw detail::schema_error(where + ": unknown layer kind \"" + kind_name + "\"");

      LayerSpec layer;
      layer.kind = *kind;
      layer.args = default_args(*kind);
      if (item.contains("from")) {
        if (!item["from"].is_array()) throw detail::schema_error(where + ": \"from\" must be an array");
        layer.from = item["from"].get<std::vector<int>>();
      }
      layer.repeats = item.value("repeats", 1);
      if (item.contains("args")) {
        const auto& args = item["args"];
        if (!args.is_object()) throw detail::schema_error(where + ": \"args\" must be an object");
        const auto allowed = kind_allowed_args(*kind);
        for (const auto& [key, _] : args.items())
          if (!allowed.count(key))
            throw detail::schema_error(where + ": arg \"" + key + "\" not applicable to " + kind_name);
        layer.args.out_channels = args.value("out_channels", layer.args.out_channels);
        layer.args.kernel = args.value("kernel", layer.args.kernel);
        layer.args.stride = args.value("stride", layer.args.stride);
        layer.args.shortcut = args.value("shortcut", layer.args.shortcut);
        layer.args.c3k = args.value("c3k", layer.args.c3k);
        layer.args.e = args.value("e", layer.args.e);
      }
      spec.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw detail::schema_error(e.what());
  }
  validate_model_spec(spec);
  return spec;
}

inline ModelSpec parse_model_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model spec: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_model_spec(text.str());
}

inline std::string serialize_model_spec(const ModelSpec& spec) {
  nlohmann::ordered_json doc;
  doc["name"] = spec.name;
  doc["depth_multiple"] = spec.depth_multiple;
  doc["width_multiple"] = spec.width_multiple;
  doc["layers"] = nlohmann::ordered_json::array();
  for (const LayerSpec& layer : spec.layers) {
    nlohmann::ordered_json item;
    item["from"] = layer.from;
    if (kind_has_repeats(layer.kind)) item["repeats"] = layer.repeats;
    item["kind"] = to_string(layer.kind);
    nlohmann::ordered_json args = nlohmann::ordered_json::object();
    const auto allowed = kind_allowed_args(layer.kind);
    if (allowed.count("out_channels")) args["out_channels"] = layer.args.out_channels;
    if (allowed.count("kernel")) args["kernel"] = layer.args.kernel;
    if (allowed.count("stride")) args["stride"] = layer.args.stride;
    if (allowed.count("shortcut")) args["shortcut"] = layer.args.shortcut;
    if (allowed.count("c3k")) args["c3k"] = layer.args.c3k;
    if (allowed.count("e")) args["e"] = layer.args.e;
    if (!args.empty()) item["args"] = std::move(args);
    doc["layers"].push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

// Smallest multiple of 8 that is >= c (ceiling rule); c may be a fractional
// width product.
inline int make_divisible(double c) {
  if (!(c > 0.0)) throw Error("make_divisible requires a positive channel count");
  return static_cast<int>(std::ceil(c / 8.0)) * 8;
}

// Resolve depth/width multiples into concrete repeat counts and channel
// widths; the result carries multiples of 1.0 and is a fixed point of this
// function.
inline ModelSpec apply_scaling(const ModelSpec& spec) {
  ModelSpec scaled = spec;
  for (LayerSpec& layer : scaled.layers) {
    layer.repeats = static_cast<int>(
        std::max<long long>(std::llround(layer.repeats * spec.depth_multiple), 1));
    if (kind_has_out_channels(layer.kind))
      layer.args.out_channels = make_divisible(layer.args.out_channels * spec.width_multiple);
  }
  scaled.depth_multiple = 1.0;
  scaled.width_multiple = 1.0;
  return scaled;
}

}  // namespace backbone_lens

#pragma once

// Lowering from ModelSpec to PrimitiveGraph.
//
// Fixed block semantics:
//   Conv(c,k,s)        conv2d(k, s, pad = k/2) + act_silu
//   Bottleneck(c)      conv unit (c_h,k,1) -> conv unit (c,k,1), add with the
//                      block input when shortcut is set; c_h = round(c*e)
//   C2f(c,n)           conv unit (2*c_h,1,1); channel split; n bottlenecks
//                      chained on the high half, every intermediate kept;
//                      concat of all n+2 branches; conv unit (c,1,1)
//   C3k(c,n,k)         two parallel conv units (c_h,1,1); one side through n
//                      k*k bottlenecks; concat; conv unit (c,1,1)
//   C3k2(c,n,c3k)      the C2f skeleton, with each inner sub-block a
//                      C3k(c_h, 2) when c3k is set, else a bottleneck
//   SPPF(c,k)          conv unit (c_h,1,1); three chained maxpools (k, stride
//                      1, pad k/2); concat of the four stages; conv unit
//   Upsample           nearest-neighbour 2x
//   Concat             channel concat of the referenced layers
//   FusionStub         identity boundary node
//
// Inner bottlenecks of C2f/C3k/C3k2 use e = 1.0 (hidden width equals their
// output width); a standalone Bottleneck layer defaults to e = 0.5.
//
// Node ids are "l<layer>" plus a dotted path, e.g. "l2.cv1.conv",
// "l2.m0.add", "l6.m1.m0.cv2.act", "l9.pool1". The graph input is a single
// identity node "input" with no inputs.

#include <cmath>
#include <string>
#include <vector>

#include "backbone_lens/error.hpp"
#include "backbone_lens/graph.hpp"
#include "backbone_lens/model_spec.hpp"

namespace backbone_lens {

namespace detail {

inline int hidden_channels(int out_channels, double e) {
  return std::max(1, static_cast<int>(std::lround(out_channels * e)));
}

class GraphBuilder {
 public:
  explicit GraphBuilder(std::string name) { graph_.name = std::move(name); }

  std::string add_input(int channels) {
    PrimNode node;
    node.id = "input";
    node.op = PrimOp::Identity;
    node.layer = -1;
    graph_.nodes.push_back(std::move(node));
    (void)channels;
    return "input";
  }

  std::string conv_unit(const std::string& prefix, const std::string& input, int in_ch,
                        int out_ch, int kernel, int stride, int layer) {
    PrimNode conv;
    conv.id = prefix + ".conv";
    conv.op = PrimOp::Conv2d;
    conv.inputs = {input};
    conv.conv = {in_ch, out_ch, kernel, stride, kernel / 2, 1};
    conv.layer = layer;
    graph_.nodes.push_back(std::move(conv));
    PrimNode act;
    act.id = prefix + ".act";
    act.op = PrimOp::ActSilu;
    act.inputs = {prefix + ".conv"};
    act.layer = layer;
    graph_.nodes.push_back(std::move(act));
    return prefix + ".act";
  }

  std::string bottleneck(const std::string& prefix, const std::string& input, int in_ch,
                         int out_ch, int kernel, bool shortcut, double e, int layer) {
    const int hidden = hidden_channels(out_ch, e);
    const std::string mid = conv_unit(prefix + ".cv1", input, in_ch, hidden, kernel, 1, layer);
    const std::string out = conv_unit(prefix + ".cv2", mid, hidden, out_ch, kernel, 1, layer);
    if (!shortcut) return out;
    if (in_ch != out_ch)
      throw Error(prefix + ": shortcut requested with mismatched channels (" +
                  std::to_string(in_ch) + " vs " + std::to_string(out_ch) + ")");
    PrimNode add;
    add.id = prefix + ".add";
    add.op = PrimOp::Add;
    add.inputs = {input, out};
    add.layer = layer;
    graph_.nodes.push_back(std::move(add));
    return prefix + ".add";
  }

  std::string c3k(const std::string& prefix, const std::string& input, int in_ch, int out_ch,
                  int repeats, int kernel, bool shortcut, double e, int layer) {
    const int hidden = hidden_channels(out_ch, e);
    std::string a = conv_unit(prefix + ".cv1", input, in_ch, hidden, 1, 1, layer);
    const std::string b = conv_unit(prefix + ".cv2", input, in_ch, hidden, 1, 1, layer);
    for (int r = 0; r < repeats; ++r)
      a = bottleneck(prefix + ".m" + std::to_string(r), a, hidden, hidden, kernel, shortcut,
                     1.0, layer);
    PrimNode cat;
    cat.id = prefix + ".cat";
    cat.op = PrimOp::ConcatC;
    cat.inputs = {a, b};
    cat.layer = layer;
    graph_.nodes.push_back(std::move(cat));
    return conv_unit(prefix + ".cv3", prefix + ".cat", 2 * hidden, out_ch, 1, 1, layer);
  }

  // Shared skeleton of C2f and C3k2; `nested` selects C3k sub-blocks.
  std::string split_stage(const std::string& prefix, const std::string& input, int in_ch,
                          int out_ch, int repeats, bool shortcut, double e, bool nested,
                          int layer) {
    const int hidden = hidden_channels(out_ch, e);
    const std::string stem =
        conv_unit(prefix + ".cv1", input, in_ch, 2 * hidden, 1, 1, layer);
    std::vector<std::string> branches;
    for (int part = 0; part < 2; ++part) {
      PrimNode split;
      split.id = prefix + ".split" + std::to_string(part);
      split.op = PrimOp::SplitC;
      split.inputs = {stem};
      split.split_part = part;
      split.layer = layer;
      graph_.nodes.push_back(std::move(split));
      branches.push_back(prefix + ".split" + std::to_string(part));
    }
    std::string chain = branches.back();
    for (int r = 0; r < repeats; ++r) {
      const std::string sub_prefix = prefix + ".m" + std::to_string(r);
      chain = nested ? c3k(sub_prefix, chain, hidden, hidden, 2, 3, shortcut, 0.5, layer)
                     : bottleneck(sub_prefix, chain, hidden, hidden, 3, shortcut, 1.0, layer);
      branches.push_back(chain);
    }
    PrimNode cat;
    cat.id = prefix + ".cat";
    cat.op = PrimOp::ConcatC;
    cat.inputs = branches;
    cat.layer = layer;
    graph_.nodes.push_back(std::move(cat));
    return conv_unit(prefix + ".cv2", prefix + ".cat",
                     static_cast<int>(branches.size()) * hidden, out_ch, 1, 1, layer);
  }

  std::string sppf(const std::string& prefix, const std::string& input, int in_ch, int out_ch,
                   int kernel, double e, int layer) {
    const int hidden = hidden_channels(out_ch, e);
    const std::string stem = conv_unit(prefix + ".cv1", input, in_ch, hidden, 1, 1, layer);
    std::vector<std::string> stages{stem};
    for (int p = 0; p < 3; ++p) {
      const std::string id = prefix + ".pool" + std::to_string(p);
      PrimNode pool;
      pool.id = id;
      pool.op = PrimOp::MaxPool2d;
      pool.inputs = {stages.back()};
      pool.pool = {kernel, 1, kernel / 2};
      pool.layer = layer;
      graph_.nodes.push_back(std::move(pool));
      stages.push_back(id);
    }
    PrimNode cat;
    cat.id = prefix + ".cat";
    cat.op = PrimOp::ConcatC;
    cat.inputs = stages;
    cat.layer = layer;
    graph_.nodes.push_back(std::move(cat));
    return conv_unit(prefix + ".cv2", prefix + ".cat", 4 * hidden, out_ch, 1, 1, layer);
  }

  std::string simple_node(const std::string& id, PrimOp op, std::vector<std::string> inputs,
                          int layer) {
    PrimNode node;
    node.id = id;
    node.op = op;
    node.inputs = std::move(inputs);
    node.layer = layer;
    graph_.nodes.push_back(std::move(node));
    return id;
  }

  PrimitiveGraph take() { return std::move(graph_); }

 private:
  PrimitiveGraph graph_;
};

}  // namespace detail

// Lower a scaled spec (multiples resolved to 1.0) into primitives.
// `in_channels` is the image channel count at the graph input.
inline PrimitiveGraph expand(const ModelSpec& spec, int in_channels = 3) {
  if (spec.depth_multiple != 1.0 || spec.width_multiple != 1.0)
    throw Error("expand requires a scaled spec (multiples of 1.0); apply_scaling first");
  validate_model_spec(spec);
  if (in_channels < 1) throw Error("expand: in_channels must be >= 1");

  detail::GraphBuilder builder(spec.name);
  const std::string input_id = builder.add_input(in_channels);

  std::vector<std::string> layer_out(spec.layers.size());
  std::vector<int> layer_ch(spec.layers.size());
  PrimitiveGraph graph;  // filled at the end
  std::vector<LayerTrace> traces;

  auto resolve = [&](int ref, std::size_t i) -> std::pair<std::string, int> {
    if (ref == -1) {
      if (i == 0) return {input_id, in_channels};
      return {layer_out[i - 1], layer_ch[i - 1]};
    }
    return {layer_out[ref], layer_ch[ref]};
  };

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const std::string prefix = "l" + std::to_string(i);
    const int li = static_cast<int>(i);
    std::string out;
    int out_ch = 0;
    switch (layer.kind) {
      case LayerKind::Conv: {
        const auto [in, in_ch] = resolve(layer.from[0], i);
        out = builder.conv_unit(prefix, in, in_ch, layer.args.out_channels, layer.args.kernel,
                                layer.args.stride, li);
        out_ch = layer.args.out_channels;
        break;
      }
      case LayerKind::Bottleneck: {
        auto [in, in_ch] = resolve(layer.from[0], i);
        for (int r = 0; r < layer.repeats; ++r) {
          in = builder.bottleneck(prefix + ".m" + std::to_string(r), in, in_ch,
                                  layer.args.out_channels, 3, layer.args.shortcut,
                                  layer.args.e, li);
          in_ch = layer.args.out_channels;
        }
        out = in;
        out_ch = layer.args.out_channels;
        break;
      }
      case LayerKind::C2f: {
        const auto [in, in_ch] = resolve(layer.from[0], i);
        out = builder.split_stage(prefix, in, in_ch, layer.args.out_channels, layer.repeats,
                                  layer.args.shortcut, layer.args.e, false, li);
        out_ch = layer.args.out_channels;
        break;
      }
      case LayerKind::C3k2: {
        const auto [in, in_ch] = resolve(layer.from[0], i);
        out = builder.split_stage(prefix, in, in_ch, layer.args.out_channels, layer.repeats,
                                  layer.args.shortcut, layer.args.e, layer.args.c3k, li);
        out_ch = layer.args.out_channels;
        break;
      }
      case LayerKind::C3k: {
        const auto [in, in_ch] = resolve(layer.from[0], i);
        out = builder.c3k(prefix, in, in_ch, layer.args.out_channels, layer.repeats,
                          layer.args.kernel, layer.args.shortcut, layer.args.e, li);
        out_ch = layer.args.out_channels;
        break;
      }
      case LayerKind::SPPF: {
        const auto [in, in_ch] = resolve(layer.from[0], i);
        out = builder.sppf(prefix, in, in_ch, layer.args.out_channels, layer.args.kernel,
                           layer.args.e, li);
        out_ch = layer.args.out_channels;
        break;
      }
      case LayerKind::Upsample: {
        const auto [in, in_ch] = resolve(layer.from[0], i);
        out = builder.simple_node(prefix + ".up", PrimOp::Upsample2x, {in}, li);
        out_ch = in_ch;
        break;
      }
      case LayerKind::Concat: {
        std::vector<std::string> inputs;
        int total = 0;
        for (int ref : layer.from) {
          const auto [in, in_ch] = resolve(ref, i);
          inputs.push_back(in);
          total += in_ch;
        }
        out = builder.simple_node(prefix + ".cat", PrimOp::ConcatC, std::move(inputs), li);
        out_ch = total;
        break;
      }
      case LayerKind::FusionStub: {
        const auto [in, in_ch] = resolve(layer.from[0], i);
        out = builder.simple_node(prefix + ".fusion", PrimOp::Identity, {in}, li);
        out_ch = in_ch;
        break;
      }
    }
    layer_out[i] = out;
    layer_ch[i] = out_ch;
    traces.push_back({li, to_string(layer.kind), out});
  }

  graph = builder.take();
  graph.layers = std::move(traces);
  graph.outputs = {spec.layers.empty() ? input_id : layer_out.back()};
  return graph;
}

}  // namespace backbone_lens

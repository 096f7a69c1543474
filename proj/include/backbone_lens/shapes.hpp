#pragma once

// Static shape inference over primitive graphs.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "backbone_lens/error.hpp"
#include "backbone_lens/graph.hpp"
#include "backbone_lens/tensor.hpp"

namespace backbone_lens {

using ShapeMap = std::map<std::string, Shape>;

// Standard convolution arithmetic; also used for pooling windows.
inline std::pair<int, int> conv_out_shape(int h, int w, int kernel, int stride, int padding) {
  if (h < 1 || w < 1 || kernel < 1 || stride < 1 || padding < 0)
    throw Error("conv_out_shape: arguments out of range");
  const int oh = (h + 2 * padding - kernel) / stride + 1;
  const int ow = (w + 2 * padding - kernel) / stride + 1;
  if (oh < 1 || ow < 1)
    throw Error("conv_out_shape: output collapses to " + std::to_string(oh) + "x" +
                std::to_string(ow) + " (input " + std::to_string(h) + "x" + std::to_string(w) +
                ", kernel " + std::to_string(kernel) + ", stride " + std::to_string(stride) +
                ", padding " + std::to_string(padding) + ")");
  return {oh, ow};
}

// Computes every node's output shape. Nodes without inputs take `input`.
inline ShapeMap infer_shapes(const PrimitiveGraph& graph, const Shape& input) {
  if (input.n < 1 || input.c < 1 || input.h < 1 || input.w < 1)
    throw Error("infer_shapes: input shape must be positive");
  ShapeMap shapes;
  std::map<std::string, const PrimNode*> by_id;
  for (const PrimNode& node : graph.nodes) by_id[node.id] = &node;

  for (const std::string& id : topo_order(graph)) {
    const PrimNode& node = *by_id.at(id);
    const std::string where = "node \"" + id + "\"";
    // Nodes without inputs read the graph input directly.
    std::vector<Shape> in;
    if (node.inputs.empty()) in.push_back(input);
    for (const std::string& source : node.inputs) in.push_back(shapes.at(source));
    switch (node.op) {
      case PrimOp::Identity:
        shapes[id] = in.at(0);
        break;
      case PrimOp::Conv2d: {
        const Shape x = in.at(0);
        if (x.c != node.conv.in_channels)
          throw Error(where + ": channel mismatch (input has " + std::to_string(x.c) +
                      ", conv expects " + std::to_string(node.conv.in_channels) + ")");
        try {
          const auto [oh, ow] =
              conv_out_shape(x.h, x.w, node.conv.kernel, node.conv.stride, node.conv.padding);
          shapes[id] = {x.n, node.conv.out_channels, oh, ow};
        } catch (const Error& e) {
          throw Error(where + ": " + e.what());
        }
        break;
      }
      case PrimOp::ActSilu:
        shapes[id] = in.at(0);
        break;
      case PrimOp::MaxPool2d: {
        const Shape x = in.at(0);
        try {
          const auto [oh, ow] =
              conv_out_shape(x.h, x.w, node.pool.kernel, node.pool.stride, node.pool.padding);
          shapes[id] = {x.n, x.c, oh, ow};
        } catch (const Error& e) {
          throw Error(where + ": " + e.what());
        }
        break;
      }
      case PrimOp::SplitC: {
        const Shape x = in.at(0);
        if (x.c % 2 != 0)
          throw Error(where + ": cannot split odd channel count " + std::to_string(x.c));
        shapes[id] = {x.n, x.c / 2, x.h, x.w};
        break;
      }
      case PrimOp::ConcatC: {
        Shape out = in.at(0);
        for (std::size_t k = 1; k < in.size(); ++k) {
          const Shape& x = in[k];
          if (x.n != out.n || x.h != out.h || x.w != out.w)
            throw Error(where + ": concat inputs disagree on batch/spatial dims (" + out.str() +
                        " vs " + x.str() + ")");
          out.c += x.c;
        }
        shapes[id] = out;
        break;
      }
      case PrimOp::Add: {
        if (!(in.at(0) == in.at(1)))
          throw Error(where + ": add inputs have different shapes (" + in[0].str() + " vs " +
                      in[1].str() + ")");
        shapes[id] = in[0];
        break;
      }
      case PrimOp::Upsample2x: {
        const Shape x = in.at(0);
        shapes[id] = {x.n, x.c, x.h * 2, x.w * 2};
        break;
      }
    }
  }
  return shapes;
}

}  // namespace backbone_lens

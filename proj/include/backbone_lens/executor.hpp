#pragma once

// Deterministic numeric executor for primitive graphs. Everything is double
// precision with a fixed accumulation order (kernel row, kernel column, then
// input channel), so a given (graph, seed, input) triple reproduces identical
// bytes on any run.
//
// The convolution multiplies explicit zeros in the padding region rather than
// skipping them; the instrumented multiply count is therefore exactly
// N * k^2 * (in_ch/groups) * out_ch * h' * w' per conv node, the same figure
// the static analyzer computes.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "backbone_lens/error.hpp"
#include "backbone_lens/graph.hpp"
#include "backbone_lens/rng.hpp"
#include "backbone_lens/shapes.hpp"
#include "backbone_lens/tensor.hpp"

namespace backbone_lens {

struct ConvWeights {
  // kernel layout: (out_ch, in_ch/groups, k, k) row-major
  std::vector<double> kernel;
  std::vector<double> scale;  // per output channel (folded norm)
  std::vector<double> shift;
};

using WeightStore = std::map<std::string, ConvWeights>;

struct ExecTrace {
  long long multiplies = 0;
  std::map<std::string, Shape> node_shapes;
};

// Weight streams are keyed by (seed, node id), so two graphs that share node
// ids draw identical values regardless of node order or graph size.
inline WeightStore init_weights(const PrimitiveGraph& graph, std::uint64_t seed) {
  WeightStore store;
  for (const PrimNode& node : graph.nodes) {
    if (node.op != PrimOp::Conv2d) continue;
    const ConvParams& c = node.conv;
    SplitMix64 whiten(seed);
    SplitMix64 rng(whiten.next() ^ fnv1a64(node.id));
    ConvWeights w;
    const std::size_t count = static_cast<std::size_t>(c.out_channels) *
                              (c.in_channels / c.groups) * c.kernel * c.kernel;
    w.kernel.reserve(count);
    for (std::size_t i = 0; i < count; ++i) w.kernel.push_back(rng.next_in(-0.1, 0.1));
    w.scale.assign(c.out_channels, 1.0);
    w.shift.assign(c.out_channels, 0.0);
    store[node.id] = std::move(w);
  }
  return store;
}

inline double silu(double v) { return v / (1.0 + std::exp(-v)); }

inline Tensor act_silu(const Tensor& x) {
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = silu(x.data[i]);
  return out;
}

inline Tensor conv2d_direct(const Tensor& x, const ConvParams& p, const ConvWeights& w,
                            ExecTrace* trace = nullptr) {
  if (x.shape.c != p.in_channels)
    throw Error("conv2d: channel mismatch (input has " + std::to_string(x.shape.c) +
                ", conv expects " + std::to_string(p.in_channels) + ")");
  const int cin_g = p.in_channels / p.groups;
  const int cout_g = p.out_channels / p.groups;
  if (w.kernel.size() !=
      static_cast<std::size_t>(p.out_channels) * cin_g * p.kernel * p.kernel)
    throw Error("conv2d: kernel size does not match conv parameters");
  if (w.scale.size() != static_cast<std::size_t>(p.out_channels) ||
      w.shift.size() != static_cast<std::size_t>(p.out_channels))
    throw Error("conv2d: scale/shift length does not match out_channels");
  const auto [oh, ow] = conv_out_shape(x.shape.h, x.shape.w, p.kernel, p.stride, p.padding);
  Tensor out({x.shape.n, p.out_channels, oh, ow});
  long long multiplies = trace ? trace->multiplies : 0;
  for (int n = 0; n < x.shape.n; ++n)
    for (int co = 0; co < p.out_channels; ++co) {
      const int group = co / cout_g;
      const int ci0 = group * cin_g;
      const std::size_t kbase = static_cast<std::size_t>(co) * cin_g * p.kernel * p.kernel;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int ky = 0; ky < p.kernel; ++ky)
            for (int kx = 0; kx < p.kernel; ++kx) {
              const int iy = oy * p.stride + ky - p.padding;
              const int ix = ox * p.stride + kx - p.padding;
              const bool inside =
                  iy >= 0 && iy < x.shape.h && ix >= 0 && ix < x.shape.w;
              for (int ci = 0; ci < cin_g; ++ci) {
                const double v = inside ? x.at(n, ci0 + ci, iy, ix) : 0.0;
                const double k =
                    w.kernel[kbase + (static_cast<std::size_t>(ci) * p.kernel + ky) * p.kernel +
                             kx];
                acc += k * v;
                ++multiplies;
              }
            }
          // scale/shift are affine bookkeeping, not counted as MACs
          out.at(n, co, oy, ox) = acc * w.scale[co] + w.shift[co];
        }
    }
  if (trace) trace->multiplies = multiplies;
  return out;
}

inline Tensor maxpool2d(const Tensor& x, const PoolParams& p) {
  const auto [oh, ow] = conv_out_shape(x.shape.h, x.shape.w, p.kernel, p.stride, p.padding);
  Tensor out({x.shape.n, x.shape.c, oh, ow});
  for (int n = 0; n < x.shape.n; ++n)
    for (int c = 0; c < x.shape.c; ++c)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          // padding behaves as -infinity: out-of-bounds taps never win
          double best = -std::numeric_limits<double>::infinity();
          for (int ky = 0; ky < p.kernel; ++ky)
            for (int kx = 0; kx < p.kernel; ++kx) {
              const int iy = oy * p.stride + ky - p.padding;
              const int ix = ox * p.stride + kx - p.padding;
              if (iy < 0 || iy >= x.shape.h || ix < 0 || ix >= x.shape.w) continue;
              best = std::max(best, x.at(n, c, iy, ix));
            }
          out.at(n, c, oy, ox) = best;
        }
  return out;
}

// Equal halves by channel index; first = lower indices.
inline std::pair<Tensor, Tensor> split_c(const Tensor& x) {
  if (x.shape.c % 2 != 0)
    throw Error("split_c: cannot split odd channel count " + std::to_string(x.shape.c));
  const int half = x.shape.c / 2;
  Tensor lo({x.shape.n, half, x.shape.h, x.shape.w});
  Tensor hi({x.shape.n, half, x.shape.h, x.shape.w});
  for (int n = 0; n < x.shape.n; ++n)
    for (int c = 0; c < x.shape.c; ++c) {
      Tensor& dst = c < half ? lo : hi;
      const int dc = c < half ? c : c - half;
      for (int y = 0; y < x.shape.h; ++y)
        for (int xx = 0; xx < x.shape.w; ++xx) dst.at(n, dc, y, xx) = x.at(n, c, y, xx);
    }
  return {std::move(lo), std::move(hi)};
}

inline Tensor concat_c(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw Error("concat_c: no inputs");
  int channels = 0;
  for (const Tensor& x : xs) {
    if (x.shape.n != xs[0].shape.n || x.shape.h != xs[0].shape.h || x.shape.w != xs[0].shape.w)
      throw Error("concat_c: inputs disagree on batch/spatial dims (" + xs[0].shape.str() +
                  " vs " + x.shape.str() + ")");
    channels += x.shape.c;
  }
  Tensor out({xs[0].shape.n, channels, xs[0].shape.h, xs[0].shape.w});
  int base = 0;
  for (const Tensor& x : xs) {
    for (int n = 0; n < x.shape.n; ++n)
      for (int c = 0; c < x.shape.c; ++c)
        for (int y = 0; y < x.shape.h; ++y)
          for (int xx = 0; xx < x.shape.w; ++xx)
            out.at(n, base + c, y, xx) = x.at(n, c, y, xx);
    base += x.shape.c;
  }
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (!(a.shape == b.shape))
    throw Error("add: inputs have different shapes (" + a.shape.str() + " vs " + b.shape.str() +
                ")");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

inline Tensor upsample2x(const Tensor& x) {
  Tensor out({x.shape.n, x.shape.c, x.shape.h * 2, x.shape.w * 2});
  for (int n = 0; n < x.shape.n; ++n)
    for (int c = 0; c < x.shape.c; ++c)
      for (int y = 0; y < out.shape.h; ++y)
        for (int xx = 0; xx < out.shape.w; ++xx)
          out.at(n, c, y, xx) = x.at(n, c, y / 2, xx / 2);
  return out;
}

struct RunResult {
  std::vector<Tensor> outputs;  // one per graph output, in declaration order
  ExecTrace trace;
};

inline RunResult run_graph(const PrimitiveGraph& graph, const WeightStore& weights,
                           const Tensor& input) {
  std::map<std::string, const PrimNode*> by_id;
  std::map<std::string, int> consumers_left;
  for (const PrimNode& node : graph.nodes) {
    by_id[node.id] = &node;
    for (const std::string& source : node.inputs) ++consumers_left[source];
  }
  for (const std::string& output : graph.outputs) ++consumers_left[output];

  RunResult result;
  std::map<std::string, Tensor> values;
  auto consume = [&](const std::string& id) -> const Tensor& {
    auto it = values.find(id);
    if (it == values.end()) throw Error("node \"" + id + "\" evaluated before its input");
    return it->second;
  };

  for (const std::string& id : topo_order(graph)) {
    const PrimNode& node = *by_id.at(id);
    try {
      Tensor out({1, 1, 1, 1});
      const bool reads_graph_input = node.inputs.empty();
      switch (node.op) {
        case PrimOp::Identity:
          out = reads_graph_input ? input : consume(node.inputs[0]);
          break;
        case PrimOp::Conv2d: {
          auto wit = weights.find(id);
          if (wit == weights.end()) throw Error("no weights for conv node");
          out = conv2d_direct(reads_graph_input ? input : consume(node.inputs[0]), node.conv,
                              wit->second, &result.trace);
          break;
        }
        case PrimOp::ActSilu:
          out = act_silu(reads_graph_input ? input : consume(node.inputs[0]));
          break;
        case PrimOp::MaxPool2d:
          out = maxpool2d(reads_graph_input ? input : consume(node.inputs[0]), node.pool);
          break;
        case PrimOp::SplitC: {
          auto halves = split_c(reads_graph_input ? input : consume(node.inputs[0]));
          out = node.split_part == 0 ? std::move(halves.first) : std::move(halves.second);
          break;
        }
        case PrimOp::ConcatC: {
          std::vector<Tensor> xs;
          for (const std::string& source : node.inputs) xs.push_back(consume(source));
          out = concat_c(xs);
          break;
        }
        case PrimOp::Add:
          out = add(consume(node.inputs[0]), consume(node.inputs[1]));
          break;
        case PrimOp::Upsample2x:
          out = upsample2x(reads_graph_input ? input : consume(node.inputs[0]));
          break;
      }
      result.trace.node_shapes[id] = out.shape;
      values.emplace(id, std::move(out));
    } catch (const Error& e) {
      const std::string what = e.what();
      if (what.rfind("node \"", 0) == 0) throw;
      throw Error("node \"" + id + "\": " + what);
    }
    // free tensors nobody will read again
    for (const std::string& source : node.inputs)
      if (--consumers_left[source] == 0) values.erase(source);
  }
  for (const std::string& output : graph.outputs) result.outputs.push_back(values.at(output));
  return result;
}

}  // namespace backbone_lens

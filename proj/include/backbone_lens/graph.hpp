#pragma once

// Primitive compute graphs. Composite layers lower to these ops only:
//   conv2d      weighted op (folded batch-norm: kernel + per-channel scale/shift)
//   act_silu    x * sigmoid(x)
//   maxpool2d   window max, -inf padding
//   split_c     one half of a channel split (part 0 = low channel indices)
//   concat_c    channel concatenation, input order preserved
//   add         elementwise sum of two same-shape tensors
//   upsample2x  nearest-neighbour doubling
//   identity    pass-through (fusion boundaries)
// Nodes are identified by strings like "l2.m0.cv1.conv"; the layer index
// prefix ties every node back to the layer it came from.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "backbone_lens/error.hpp"
#include "backbone_lens/tensor.hpp"

namespace backbone_lens {

enum class PrimOp { Conv2d, ActSilu, MaxPool2d, SplitC, ConcatC, Add, Upsample2x, Identity };

inline const char* to_string(PrimOp op) {
  switch (op) {
    case PrimOp::Conv2d: return "conv2d";
    case PrimOp::ActSilu: return "act_silu";
    case PrimOp::MaxPool2d: return "maxpool2d";
    case PrimOp::SplitC: return "split_c";
    case PrimOp::ConcatC: return "concat_c";
    case PrimOp::Add: return "add";
    case PrimOp::Upsample2x: return "upsample2x";
    case PrimOp::Identity: return "identity";
  }
  return "?";
}

struct ConvParams {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int groups = 1;

  bool operator==(const ConvParams&) const = default;
};

struct PoolParams {
  int kernel = 5;
  int stride = 1;
  int padding = 2;

  bool operator==(const PoolParams&) const = default;
};

struct PrimNode {
  std::string id;
  PrimOp op = PrimOp::Identity;
  std::vector<std::string> inputs;  // node ids; empty marks a graph input
  ConvParams conv;                  // Conv2d only
  PoolParams pool;                  // MaxPool2d only
  int split_part = 0;               // SplitC only: 0 = low half, 1 = high half
  int layer = -1;                   // originating layer index
};

// One row of the layer-level summary: the layer's kind and the node whose
// output is the layer's output.
struct LayerTrace {
  int index = 0;
  std::string kind;
  std::string output;
};

struct PrimitiveGraph {
  std::string name;
  std::vector<PrimNode> nodes;      // expansion order; not necessarily topological
  std::vector<std::string> outputs;
  std::vector<LayerTrace> layers;

  const PrimNode& node(const std::string& id) const {
    for (const PrimNode& n : nodes)
      if (n.id == id) return n;
    throw Error("no node \"" + id + "\" in graph");
  }
};

// Structural checks; returns human-readable problems, empty when well formed.
inline std::vector<std::string> validate_graph(const PrimitiveGraph& graph) {
  std::vector<std::string> problems;
  std::map<std::string, const PrimNode*> by_id;
  for (const PrimNode& node : graph.nodes) {
    if (node.id.empty()) problems.push_back("node with empty id");
    if (!by_id.emplace(node.id, &node).second)
      problems.push_back("duplicate node id \"" + node.id + "\"");
  }
  for (const PrimNode& node : graph.nodes) {
    for (const std::string& input : node.inputs)
      if (!by_id.count(input))
        problems.push_back("node \"" + node.id + "\" reads undefined node \"" + input + "\"");
    const std::size_t arity = node.inputs.size();
    switch (node.op) {
      case PrimOp::ConcatC:
        if (arity < 2) problems.push_back("node \"" + node.id + "\": concat_c needs >= 2 inputs");
        break;
      case PrimOp::Add:
        if (arity != 2) problems.push_back("node \"" + node.id + "\": add needs exactly 2 inputs");
        break;
      default:
        if (arity > 1) problems.push_back("node \"" + node.id + "\": takes at most 1 input");
        break;
    }
    if (node.op == PrimOp::Conv2d) {
      const ConvParams& c = node.conv;
      if (c.in_channels < 1 || c.out_channels < 1 || c.kernel < 1 || c.stride < 1 ||
          c.padding < 0 || c.groups < 1)
        problems.push_back("node \"" + node.id + "\": bad conv params");
      else if (c.in_channels % c.groups != 0 || c.out_channels % c.groups != 0)
        problems.push_back("node \"" + node.id + "\": channels not divisible by groups");
    }
    if (node.op == PrimOp::SplitC && node.split_part != 0 && node.split_part != 1)
      problems.push_back("node \"" + node.id + "\": split part must be 0 or 1");
  }
  for (const std::string& output : graph.outputs)
    if (!by_id.count(output))
      problems.push_back("graph output \"" + output + "\" is not a node");

  // Cycle check via Kahn's algorithm over well-referenced edges.
  std::map<std::string, int> pending;
  std::map<std::string, std::vector<std::string>> consumers;
  for (const PrimNode& node : graph.nodes) {
    int degree = 0;
    for (const std::string& input : node.inputs)
      if (by_id.count(input)) {
        ++degree;
        consumers[input].push_back(node.id);
      }
    pending[node.id] = degree;
  }
  std::vector<std::string> ready;
  for (const auto& [id, degree] : pending)
    if (degree == 0) ready.push_back(id);
  std::size_t visited = 0;
  while (!ready.empty()) {
    std::string id = ready.back();
    ready.pop_back();
    ++visited;
    for (const std::string& next : consumers[id])
      if (--pending[next] == 0) ready.push_back(next);
  }
  if (visited != pending.size()) problems.push_back("graph contains a cycle");
  return problems;
}

// Deterministic topological order: repeatedly emit the lexicographically
// smallest ready node. Throws on cycles or broken references.
inline std::vector<std::string> topo_order(const PrimitiveGraph& graph) {
  std::map<std::string, int> pending;
  std::map<std::string, std::vector<std::string>> consumers;
  std::set<std::string> ids;
  for (const PrimNode& node : graph.nodes) ids.insert(node.id);
  for (const PrimNode& node : graph.nodes) {
    int degree = 0;
    for (const std::string& input : node.inputs) {
      if (!ids.count(input))
        throw Error("node \"" + node.id + "\" reads undefined node \"" + input + "\"");
      ++degree;
      consumers[input].push_back(node.id);
    }
    pending[node.id] = degree;
  }
  std::set<std::string> ready;
  for (const auto& [id, degree] : pending)
    if (degree == 0) ready.insert(id);
  std::vector<std::string> order;
  order.reserve(graph.nodes.size());
  while (!ready.empty()) {
    const std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const std::string& next : consumers[id])
      if (--pending[next] == 0) ready.insert(next);
  }
  if (order.size() != graph.nodes.size()) throw Error("graph contains a cycle");
  return order;
}

}  // namespace backbone_lens

#pragma once

// Parameter and FLOP accounting over primitive graphs, plus diff reports.
//
// Conventions: conv2d params = k^2 * (in_ch/groups) * out_ch + 2*out_ch (the
// folded norm's scale/shift; no bias); conv2d MACs = N * k^2 * (in_ch/groups)
// * out_ch * h' * w'; FLOPs = 2 * MACs. Every other primitive costs zero.

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "backbone_lens/error.hpp"
#include "backbone_lens/format.hpp"
#include "backbone_lens/graph.hpp"
#include "backbone_lens/shapes.hpp"

namespace backbone_lens {

inline long long conv_param_count(const ConvParams& c) {
  return static_cast<long long>(c.kernel) * c.kernel * (c.in_channels / c.groups) *
             c.out_channels +
         2LL * c.out_channels;
}

struct NodeCost {
  long long params = 0;
  long long macs = 0;

  bool operator==(const NodeCost&) const = default;
};

// One row per pre-expansion layer, for stage-level tables and diffs.
struct LayerCost {
  int index = 0;
  std::string kind;
  Shape out_shape;
  long long params = 0;
  long long macs = 0;
};

struct CostReport {
  std::string name;
  Shape input;
  std::map<std::string, NodeCost> nodes;
  std::vector<LayerCost> layers;
  long long total_params = 0;
  long long total_macs = 0;

  long long total_flops() const { return 2 * total_macs; }
  double gflops() const { return total_flops() / 1e9; }
  double params_millions() const { return total_params / 1e6; }
};

// Per-node parameter counts; independent of any input shape.
inline std::map<std::string, long long> count_params(const PrimitiveGraph& graph) {
  std::map<std::string, long long> out;
  for (const PrimNode& node : graph.nodes)
    out[node.id] = node.op == PrimOp::Conv2d ? conv_param_count(node.conv) : 0;
  return out;
}

inline long long total_params(const PrimitiveGraph& graph) {
  long long total = 0;
  for (const auto& [_, params] : count_params(graph)) total += params;
  return total;
}

inline CostReport count_flops(const PrimitiveGraph& graph, const Shape& input) {
  const ShapeMap shapes = infer_shapes(graph, input);
  CostReport report;
  report.name = graph.name;
  report.input = input;

  std::map<int, LayerCost> stage;  // by layer index
  for (const LayerTrace& trace : graph.layers) {
    LayerCost row;
    row.index = trace.index;
    row.kind = trace.kind;
    row.out_shape = shapes.at(trace.output);
    stage[trace.index] = row;
  }
  for (const PrimNode& node : graph.nodes) {
    NodeCost cost;
    if (node.op == PrimOp::Conv2d) {
      cost.params = conv_param_count(node.conv);
      const Shape out = shapes.at(node.id);
      cost.macs = static_cast<long long>(out.n) * node.conv.kernel * node.conv.kernel *
                  (node.conv.in_channels / node.conv.groups) * node.conv.out_channels * out.h *
                  out.w;
    }
    report.nodes[node.id] = cost;
    report.total_params += cost.params;
    report.total_macs += cost.macs;
    auto it = stage.find(node.layer);
    if (it != stage.end()) {
      it->second.params += cost.params;
      it->second.macs += cost.macs;
    }
  }
  for (const auto& [_, row] : stage) report.layers.push_back(row);
  std::sort(report.layers.begin(), report.layers.end(),
            [](const LayerCost& a, const LayerCost& b) { return a.index < b.index; });
  return report;
}

struct StageDelta {
  int index = 0;
  std::string baseline_kind;
  std::string variant_kind;
  long long dparams = 0;
  long long dflops = 0;
};

struct DeltaReport {
  std::string baseline;
  std::string variant;
  long long baseline_params = 0, variant_params = 0;
  long long baseline_flops = 0, variant_flops = 0;
  long long dparams = 0;
  long long dflops = 0;
  double dparams_pct = 0.0;
  double dflops_pct = 0.0;
  std::vector<StageDelta> stages;
  bool stage_count_mismatch = false;  // extra stages beyond the shared prefix are ignored

  // Direction of variant relative to baseline.
  std::string verdict() const {
    if (dparams == 0 && dflops == 0) return "identical";
    if (dparams <= 0 && dflops <= 0) return "lighter";
    if (dparams >= 0 && dflops >= 0) return "heavier";
    return "mixed";
  }
};

inline DeltaReport diff_reports(const CostReport& baseline, const CostReport& variant) {
  DeltaReport delta;
  delta.baseline = baseline.name;
  delta.variant = variant.name;
  delta.baseline_params = baseline.total_params;
  delta.variant_params = variant.total_params;
  delta.baseline_flops = baseline.total_flops();
  delta.variant_flops = variant.total_flops();
  delta.dparams = variant.total_params - baseline.total_params;
  delta.dflops = variant.total_flops() - baseline.total_flops();
  delta.dparams_pct =
      baseline.total_params == 0 ? 0.0 : 100.0 * delta.dparams / baseline.total_params;
  delta.dflops_pct =
      baseline.total_flops() == 0 ? 0.0 : 100.0 * delta.dflops / baseline.total_flops();
  const std::size_t shared = std::min(baseline.layers.size(), variant.layers.size());
  delta.stage_count_mismatch = baseline.layers.size() != variant.layers.size();
  for (std::size_t i = 0; i < shared; ++i) {
    const LayerCost& a = baseline.layers[i];
    const LayerCost& b = variant.layers[i];
    StageDelta row;
    row.index = a.index;
    row.baseline_kind = a.kind;
    row.variant_kind = b.kind;
    row.dparams = b.params - a.params;
    row.dflops = 2 * (b.macs - a.macs);
    delta.stages.push_back(row);
  }
  return delta;
}

inline std::string render_cost_table(const CostReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"layer", "kind", "out_shape", "params", "macs"});
  for (const LayerCost& row : report.layers)
    rows.push_back({std::to_string(row.index), row.kind, row.out_shape.str(),
                    std::to_string(row.params), std::to_string(row.macs)});
  std::ostringstream out;
  out << report.name << " @ " << report.input.str() << "\n";
  out << detail::render_columns(rows, 3);
  out << "total params " << report.total_params << " (" << fixed1_trunc(report.params_millions())
      << "M)  macs " << report.total_macs << "  flops " << report.total_flops() << " ("
      << fixed1_trunc(report.gflops()) << " GFLOPs)\n";
  return out.str();
}

inline std::string render_cost_csv(const CostReport& report) {
  std::ostringstream out;
  out << "layer,kind,out_shape,params,macs\n";
  for (const LayerCost& row : report.layers)
    out << row.index << ',' << row.kind << ',' << row.out_shape.str() << ',' << row.params << ','
        << row.macs << "\n";
  return out.str();
}

inline nlohmann::ordered_json cost_to_json(const CostReport& report) {
  nlohmann::ordered_json doc;
  doc["name"] = report.name;
  doc["input"] = report.input.str();
  doc["layers"] = nlohmann::ordered_json::array();
  for (const LayerCost& row : report.layers) {
    nlohmann::ordered_json item;
    item["layer"] = row.index;
    item["kind"] = row.kind;
    item["out_shape"] = row.out_shape.str();
    item["params"] = row.params;
    item["macs"] = row.macs;
    doc["layers"].push_back(std::move(item));
  }
  doc["totals"]["params"] = report.total_params;
  doc["totals"]["macs"] = report.total_macs;
  doc["totals"]["flops"] = report.total_flops();
  doc["totals"]["gflops"] = report.gflops();
  return doc;
}

inline std::string render_delta_table(const DeltaReport& delta) {
  std::ostringstream out;
  out << "baseline " << delta.baseline << ": params " << delta.baseline_params << ", flops "
      << delta.baseline_flops << "\n";
  out << "variant  " << delta.variant << ": params " << delta.variant_params << ", flops "
      << delta.variant_flops << "\n";
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"layer", "baseline", "variant", "dparams", "dflops"});
  for (const StageDelta& row : delta.stages)
    rows.push_back({std::to_string(row.index), row.baseline_kind, row.variant_kind,
                    std::to_string(row.dparams), std::to_string(row.dflops)});
  out << detail::render_columns(rows, 3);
  if (delta.stage_count_mismatch)
    out << "warning: layer counts differ; compared the shared prefix only\n";
  out << "delta params " << delta.dparams << " (" << fixed1_trunc(delta.dparams_pct)
      << "%)  delta flops " << delta.dflops << " (" << fixed1_trunc(delta.dflops_pct) << "%)\n";
  out << "variant is " << delta.verdict() << "\n";
  return out.str();
}

inline std::string render_delta_csv(const DeltaReport& delta) {
  std::ostringstream out;
  out << "layer,baseline_kind,variant_kind,dparams,dflops\n";
  for (const StageDelta& row : delta.stages)
    out << row.index << ',' << row.baseline_kind << ',' << row.variant_kind << ',' << row.dparams
        << ',' << row.dflops << "\n";
  return out.str();
}

inline nlohmann::ordered_json delta_to_json(const DeltaReport& delta) {
  nlohmann::ordered_json doc;
  doc["baseline"] = delta.baseline;
  doc["variant"] = delta.variant;
  doc["baseline_totals"] = {{"params", delta.baseline_params}, {"flops", delta.baseline_flops}};
  doc["variant_totals"] = {{"params", delta.variant_params}, {"flops", delta.variant_flops}};
  doc["dparams"] = delta.dparams;
  doc["dparams_pct"] = delta.dparams_pct;
  doc["dflops"] = delta.dflops;
  doc["dflops_pct"] = delta.dflops_pct;
  doc["verdict"] = delta.verdict();
  doc["stage_count_mismatch"] = delta.stage_count_mismatch;
  doc["stages"] = nlohmann::ordered_json::array();
  for (const StageDelta& row : delta.stages) {
    nlohmann::ordered_json item;
    item["layer"] = row.index;
    item["baseline_kind"] = row.baseline_kind;
    item["variant_kind"] = row.variant_kind;
    item["dparams"] = row.dparams;
    item["dflops"] = row.dflops;
    doc["stages"].push_back(std::move(item));
  }
  return doc;
}

}  // namespace backbone_lens

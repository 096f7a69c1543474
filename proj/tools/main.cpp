// backbone-lens command-line tool: analyze and diff backbone architectures,
// execute graphs on tensor files, evaluate detection results.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "backbone_lens/backbone_lens.hpp"

namespace bl = backbone_lens;
namespace fs = std::filesystem;

namespace {

bl::Shape parse_shape(const std::string& text) {
  int dims[4];
  int count = 0;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    if (count == 4) throw bl::Error("invalid shape \"" + text + "\": expected N,C,H,W");
    char* end = nullptr;
    const long v = std::strtol(token.c_str(), &end, 10);
    if (token.empty() || end != token.c_str() + token.size() || v < 1 || v > 1 << 20)
      throw bl::Error("invalid shape \"" + text + "\": expected four positive integers");
    dims[count++] = static_cast<int>(v);
  }
  if (count != 4) throw bl::Error("invalid shape \"" + text + "\": expected N,C,H,W");
  return {dims[0], dims[1], dims[2], dims[3]};
}

void check_threshold(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw bl::Error(std::string(name) + " must be in [0,1], got " + std::to_string(v));
}

// --preset NAME or --spec PATH; exactly one.
bl::ModelSpec load_model(const std::string& preset, const std::string& spec_path) {
  if (!preset.empty() && !spec_path.empty())
    throw bl::Error("give either --preset or --spec, not both");
  if (!preset.empty()) return bl::builtin_preset(preset);
  if (!spec_path.empty()) return bl::parse_model_spec_file(spec_path);
  throw bl::Error("a model is required: --preset NAME or --spec PATH");
}

// diff positionals: a path when a file exists there, otherwise a preset name.
bl::ModelSpec load_model_arg(const std::string& arg) {
  if (fs::exists(arg)) return bl::parse_model_spec_file(arg);
  return bl::builtin_preset(arg);
}

bl::PrimitiveGraph prepare_graph(const bl::ModelSpec& spec) {
  const bl::PrimitiveGraph graph = bl::expand(bl::apply_scaling(spec));
  const auto problems = bl::validate_graph(graph);
  if (!problems.empty()) throw bl::Error("invalid graph: " + problems.front());
  return graph;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bl::Error("cannot write " + path.string());
  out << content;
}

int cmd_presets(const std::string& format) {
  const auto names = bl::builtin_preset_names();
  if (format == "json") {
    nlohmann::ordered_json doc;
    doc["presets"] = nlohmann::ordered_json::array();
    for (const std::string& name : names)
      doc["presets"].push_back(
          nlohmann::ordered_json::parse(bl::serialize_model_spec(bl::builtin_preset(name))));
    std::cout << doc.dump(2) << "\n";
    return 0;
  }
  if (format == "csv") {
    std::cout << "preset,layer,kind,repeats,out_channels,kernel,stride,shortcut,c3k\n";
    for (const std::string& name : names) {
      const bl::ModelSpec spec = bl::builtin_preset(name);
      for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const bl::LayerSpec& layer = spec.layers[i];
        std::cout << name << ',' << i << ',' << bl::to_string(layer.kind) << ','
                  << layer.repeats << ',' << layer.args.out_channels << ',' << layer.args.kernel
                  << ',' << layer.args.stride << ',' << (layer.args.shortcut ? 1 : 0) << ','
                  << (layer.args.c3k ? 1 : 0) << "\n";
      }
    }
    return 0;
  }
  const char* blurbs[] = {"C2f-stage backbone, nano scale",
                          "C3k2-stage backbone, nano scale"};
  for (std::size_t p = 0; p < names.size(); ++p) {
    const bl::ModelSpec spec = bl::builtin_preset(names[p]);
    std::cout << names[p] << " - " << blurbs[p] << "\n";
    std::cout << "  depth_multiple " << spec.depth_multiple << ", width_multiple "
              << spec.width_multiple << "\n";
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"layer", "kind", "repeats", "out_channels", "kernel", "stride", "flags"});
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      const bl::LayerSpec& layer = spec.layers[i];
      std::string flags;
      if (layer.args.shortcut) flags += "shortcut";
      if (layer.args.c3k) flags += std::string(flags.empty() ? "" : ",") + "c3k";
      rows.push_back({std::to_string(i), bl::to_string(layer.kind),
                      std::to_string(layer.repeats), std::to_string(layer.args.out_channels),
                      std::to_string(layer.args.kernel), std::to_string(layer.args.stride),
                      flags});
    }
    std::string table = bl::detail::render_columns(rows, 2);
    std::istringstream lines(table);
    for (std::string line; std::getline(lines, line);) std::cout << "  " << line << "\n";
    if (p + 1 < names.size()) std::cout << "\n";
  }
  return 0;
}

int cmd_analyze(const std::string& preset, const std::string& spec_path,
                const std::string& shape_text, const std::string& format) {
  const bl::Shape input = parse_shape(shape_text);
  const bl::ModelSpec spec = load_model(preset, spec_path);
  const bl::PrimitiveGraph graph = prepare_graph(spec);
  const bl::CostReport report = bl::count_flops(graph, input);
  if (format == "json")
    std::cout << bl::cost_to_json(report).dump(2) << "\n";
  else if (format == "csv")
    std::cout << bl::render_cost_csv(report);
  else
    std::cout << bl::render_cost_table(report);
  return 0;
}

int cmd_diff(const std::string& baseline_arg, const std::string& variant_arg,
             const std::string& shape_text, const std::string& format) {
  const bl::Shape input = parse_shape(shape_text);
  bl::CostReport baseline, variant;
  try {
    baseline = bl::count_flops(prepare_graph(load_model_arg(baseline_arg)), input);
  } catch (const bl::Error& e) {
    throw bl::Error("baseline: " + std::string(e.what()));
  }
  try {
    variant = bl::count_flops(prepare_graph(load_model_arg(variant_arg)), input);
  } catch (const bl::Error& e) {
    throw bl::Error("variant: " + std::string(e.what()));
  }
  const bl::DeltaReport delta = bl::diff_reports(baseline, variant);
  if (format == "json")
    std::cout << bl::delta_to_json(delta).dump(2) << "\n";
  else if (format == "csv")
    std::cout << bl::render_delta_csv(delta);
  else
    std::cout << bl::render_delta_table(delta);
  return 0;
}

int cmd_run(const std::string& preset, const std::string& spec_path,
            const std::string& input_path, std::uint64_t seed, const std::string& format,
            const std::string& out_dir) {
  const bl::ModelSpec spec = load_model(preset, spec_path);
  const bl::PrimitiveGraph graph = prepare_graph(spec);
  const bl::Tensor input = bl::read_tensor_file(input_path);
  const bl::WeightStore weights = bl::init_weights(graph, seed);
  const bl::RunResult result = bl::run_graph(graph, weights, input);

  fs::create_directories(out_dir);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < result.outputs.size(); ++i) {
    const fs::path path = fs::path(out_dir) / ("output_" + std::to_string(i) + ".tensor");
    std::ostringstream body;
    bl::write_tensor(body, result.outputs[i]);
    write_file(path, body.str());
    files.push_back(path.string());
  }

  if (format == "json") {
    nlohmann::ordered_json doc;
    doc["input"] = input.shape.str();
    doc["seed"] = seed;
    doc["multiplies"] = result.trace.multiplies;
    doc["outputs"] = files;
    doc["node_shapes"] = nlohmann::ordered_json::object();
    for (const std::string& id : bl::topo_order(graph))
      doc["node_shapes"][id] = result.trace.node_shapes.at(id).str();
    std::cout << doc.dump(2) << "\n";
  } else if (format == "csv") {
    std::cout << "node,shape\n";
    for (const std::string& id : bl::topo_order(graph))
      std::cout << id << ',' << result.trace.node_shapes.at(id).str() << "\n";
  } else {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"node", "shape"});
    for (const std::string& id : bl::topo_order(graph))
      rows.push_back({id, result.trace.node_shapes.at(id).str()});
    std::cout << bl::detail::render_columns(rows, 99);
    std::cout << "multiplies " << result.trace.multiplies << "\n";
    for (const std::string& file : files) std::cout << "wrote " << file << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& dets_path, const std::string& gts_path,
             const std::string& names_path, double iou_thr, double conf_thr,
             const std::string& format, const std::string& out_dir) {
  check_threshold(iou_thr, "--iou");
  check_threshold(conf_thr, "--conf");
  const auto dets = bl::load_detections_file(dets_path);
  const auto gts = bl::load_ground_truth_file(gts_path);
  const auto names = bl::load_class_names_file(names_path);
  const bl::EvalReport report = bl::eval_report(dets, gts, names, iou_thr, conf_thr);

  if (format == "json")
    std::cout << bl::eval_to_json(report, iou_thr, conf_thr).dump(2) << "\n";
  else if (format == "csv")
    std::cout << bl::render_eval_csv(report);
  else
    std::cout << bl::render_eval_table(report);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "report.txt", bl::render_eval_table(report));
    write_file(fs::path(out_dir) / "report.json",
               bl::eval_to_json(report, iou_thr, conf_thr).dump(2) + "\n");
    write_file(fs::path(out_dir) / "pr_curve.csv", bl::pr_curves_csv(report));
    write_file(fs::path(out_dir) / "confusion.csv", bl::confusion_csv(report, names));
  }
  return 0;
}

struct PresetsOpts {
  std::string format = "table";
};
struct AnalyzeOpts {
  std::string preset, spec, shape = "1,3,640,640", format = "table";
};
struct DiffOpts {
  std::string baseline, variant, shape = "1,3,640,640", format = "table";
};
struct RunOpts {
  std::string input, preset, spec, format = "table", out_dir = ".";
  std::uint64_t seed = 0;
};
struct EvalOpts {
  std::string dets, gts, names, format = "table", out_dir;
  double iou = 0.5, conf = 0.25;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"backbone graphs, cost analysis, reference execution, detection metrics"};
  app.require_subcommand(1);

  auto format_check = CLI::IsMember(std::vector<std::string>{"table", "csv", "json"});

  PresetsOpts po;
  CLI::App* presets = app.add_subcommand("presets", "list built-in model presets");
  presets->add_option("--format", po.format, "table|csv|json")->check(format_check);

  AnalyzeOpts ao;
  CLI::App* analyze = app.add_subcommand("analyze", "static cost report for a model");
  analyze->add_option("--preset", ao.preset, "built-in preset name");
  analyze->add_option("--spec", ao.spec, "model spec file");
  analyze->add_option("--shape", ao.shape, "input shape N,C,H,W");
  analyze->add_option("--format", ao.format, "table|csv|json")->check(format_check);

  DiffOpts dopts;
  CLI::App* diff = app.add_subcommand("diff", "compare two models' cost reports");
  diff->add_option("baseline", dopts.baseline, "baseline: spec file or preset name")->required();
  diff->add_option("variant", dopts.variant, "variant: spec file or preset name")->required();
  diff->add_option("--shape", dopts.shape, "input shape N,C,H,W");
  diff->add_option("--format", dopts.format, "table|csv|json")->check(format_check);

  RunOpts ro;
  CLI::App* run = app.add_subcommand("run", "execute a model on a tensor file");
  run->add_option("input", ro.input, "input tensor file")->required();
  run->add_option("--preset", ro.preset, "built-in preset name");
  run->add_option("--spec", ro.spec, "model spec file");
  run->add_option("--seed", ro.seed, "weight seed");
  run->add_option("--format", ro.format, "table|csv|json")->check(format_check);
  run->add_option("--out-dir", ro.out_dir, "directory for output tensors");

  EvalOpts eo;
  CLI::App* eval = app.add_subcommand("eval", "evaluate detections against ground truth");
  eval->add_option("dets", eo.dets, "detections CSV")->required();
  eval->add_option("gts", eo.gts, "ground-truth CSV")->required();
  eval->add_option("names", eo.names, "class names file")->required();
  eval->add_option("--iou", eo.iou, "IoU threshold");
  eval->add_option("--conf", eo.conf, "confusion-matrix confidence threshold");
  eval->add_option("--format", eo.format, "table|csv|json")->check(format_check);
  eval->add_option("--out-dir", eo.out_dir,
                   "write report.txt/report.json/pr_curve.csv/confusion.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (presets->parsed()) return cmd_presets(po.format);
    if (analyze->parsed()) return cmd_analyze(ao.preset, ao.spec, ao.shape, ao.format);
    if (diff->parsed()) return cmd_diff(dopts.baseline, dopts.variant, dopts.shape, dopts.format);
    if (run->parsed()) return cmd_run(ro.preset, ro.spec, ro.input, ro.seed, ro.format, ro.out_dir);
    if (eval->parsed())
      return cmd_eval(eo.dets, eo.gts, eo.names, eo.iou, eo.conf, eo.format, eo.out_dir);
  } catch (const bl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

// File formats around the evaluation stack.
//
//   detections CSV    header image_id,class_id,score,x1,y1,x2,y2
//   ground-truth CSV  header image_id,class_id,x1,y1,x2,y2
//   class names       one name per line; line number = class id
//   PR-curve CSV      class,recall,precision
//   confusion CSV     gt_class rows x predicted columns, background last
//
// Loader errors carry "<file>:<line>:" so a bad row is directly addressable.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "backbone_lens/error.hpp"
#include "backbone_lens/format.hpp"
#include "backbone_lens/metrics.hpp"

namespace backbone_lens {

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

inline std::string at_line(const std::string& source, int line) {
  return source + ":" + std::to_string(line) + ": ";
}

inline double parse_double_field(const std::string& token, const std::string& source, int line,
                                 const char* what) {
  if (token.empty()) throw Error(at_line(source, line) + std::string("empty ") + what);
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || !std::isfinite(v))
    throw Error(at_line(source, line) + "invalid " + what + " \"" + token + "\"");
  return v;
}

inline int parse_class_field(const std::string& token, const std::string& source, int line) {
  if (token.empty()) throw Error(at_line(source, line) + "empty class_id");
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end != token.c_str() + token.size() || v < 0 || v > 1000000)
    throw Error(at_line(source, line) + "invalid class_id \"" + token + "\"");
  return static_cast<int>(v);
}

inline void check_box(double x1, double y1, double x2, double y2, const std::string& source,
                      int line) {
  if (!(x2 > x1)) throw Error(at_line(source, line) + "x2 <= x1");
  if (!(y2 > y1)) throw Error(at_line(source, line) + "y2 <= y1");
}

}  // namespace detail

inline std::vector<DetBox> load_detections(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) ||
      detail::strip_cr(line) != "image_id,class_id,score,x1,y1,x2,y2")
    throw Error(source + ":1: expected header \"image_id,class_id,score,x1,y1,x2,y2\"");
  std::vector<DetBox> dets;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 7)
      throw Error(detail::at_line(source, line_no) + "expected 7 fields, got " +
                  std::to_string(fields.size()));
    DetBox det;
    det.image_id = fields[0];
    if (det.image_id.empty())
      throw Error(detail::at_line(source, line_no) + "empty image_id");
    det.class_id = detail::parse_class_field(fields[1], source, line_no);
    det.score = detail::parse_double_field(fields[2], source, line_no, "score");
    if (det.score < 0.0 || det.score > 1.0)
      throw Error(detail::at_line(source, line_no) + "score out of [0,1]");
    det.box.x1 = detail::parse_double_field(fields[3], source, line_no, "x1");
    det.box.y1 = detail::parse_double_field(fields[4], source, line_no, "y1");
    det.box.x2 = detail::parse_double_field(fields[5], source, line_no, "x2");
    det.box.y2 = detail::parse_double_field(fields[6], source, line_no, "y2");
    detail::check_box(det.box.x1, det.box.y1, det.box.x2, det.box.y2, source, line_no);
    dets.push_back(std::move(det));
  }
  return dets;
}

inline std::vector<GtBox> load_ground_truth(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "image_id,class_id,x1,y1,x2,y2")
    throw Error(source + ":1: expected header \"image_id,class_id,x1,y1,x2,y2\"");
  std::vector<GtBox> gts;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 6)
      throw Error(detail::at_line(source, line_no) + "expected 6 fields, got " +
                  std::to_string(fields.size()));
    GtBox gt;
    gt.image_id = fields[0];
    if (gt.image_id.empty()) throw Error(detail::at_line(source, line_no) + "empty image_id");
    gt.class_id = detail::parse_class_field(fields[1], source, line_no);
    gt.box.x1 = detail::parse_double_field(fields[2], source, line_no, "x1");
    gt.box.y1 = detail::parse_double_field(fields[3], source, line_no, "y1");
    gt.box.x2 = detail::parse_double_field(fields[4], source, line_no, "x2");
    gt.box.y2 = detail::parse_double_field(fields[5], source, line_no, "y2");
    detail::check_box(gt.box.x1, gt.box.y1, gt.box.x2, gt.box.y2, source, line_no);
    gts.push_back(std::move(gt));
  }
  return gts;
}

inline std::vector<std::string> load_class_names(std::istream& in, const std::string& source) {
  std::vector<std::string> names;
  std::string line;
  int line_no = 0;
  int pending_blanks = 0;  // blank lines are only legal as trailing whitespace
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) {
      ++pending_blanks;
      continue;
    }
    if (pending_blanks > 0)
      throw Error(detail::at_line(source, line_no - pending_blanks) + "empty class name");
    if (line.find(',') != std::string::npos)
      throw Error(detail::at_line(source, line_no) + "class name contains a comma");
    names.push_back(line);
  }
  if (names.empty()) throw Error(source + ": no class names");
  return names;
}

inline std::vector<DetBox> load_detections_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open detections file: " + path);
  return load_detections(in, path);
}

inline std::vector<GtBox> load_ground_truth_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ground-truth file: " + path);
  return load_ground_truth(in, path);
}

inline std::vector<std::string> load_class_names_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open class names file: " + path);
  return load_class_names(in, path);
}

namespace detail {

inline std::string row_notes(long long detections, long long instances) {
  std::string notes;
  if (detections == 0) notes = "[no predictions]";
  if (instances == 0) notes += std::string(notes.empty() ? "" : " ") + "[no instances]";
  return notes;
}

}  // namespace detail

// Per-class results with an "All" row on top; percentages at one decimal.
inline std::string render_eval_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back(
      {"Class", "Instances", "Precision (%)", "Recall (%)", "F1 score (%)", "mAP@0.5 (%)", ""});
  long long all_dets = 0;
  for (const ClassMetrics& row : report.classes) all_dets += row.detections;
  rows.push_back({"All", std::to_string(report.instances), percent1(report.precision),
                  percent1(report.recall), percent1(report.f1), percent1(report.map),
                  detail::row_notes(all_dets, report.instances)});
  for (const ClassMetrics& row : report.classes)
    rows.push_back({row.name, std::to_string(row.instances), percent1(row.precision),
                    percent1(row.recall), percent1(row.f1), percent1(row.ap),
                    detail::row_notes(row.detections, row.instances)});
  return detail::render_columns(rows, 1);
}

// CSV mirror of the table, carrying raw counts and exact fractions.
inline std::string render_eval_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "class,instances,tp,fp,fn,precision,recall,f1,ap\n";
  out << "All," << report.instances << ',' << report.tp << ',' << report.fp << ',' << report.fn
      << ',' << exact_double(report.precision) << ',' << exact_double(report.recall) << ','
      << exact_double(report.f1) << ',' << exact_double(report.map) << "\n";
  for (const ClassMetrics& row : report.classes)
    out << row.name << ',' << row.instances << ',' << row.tp << ',' << row.fp << ',' << row.fn
        << ',' << exact_double(row.precision) << ',' << exact_double(row.recall) << ','
        << exact_double(row.f1) << ',' << exact_double(row.ap) << "\n";
  return out.str();
}

inline nlohmann::ordered_json eval_to_json(const EvalReport& report, double iou_threshold,
                                           double conf_threshold) {
  nlohmann::ordered_json doc;
  doc["iou_threshold"] = iou_threshold;
  doc["conf_threshold"] = conf_threshold;
  doc["overall"] = {{"instances", report.instances}, {"tp", report.tp},
                    {"fp", report.fp},               {"fn", report.fn},
                    {"precision", report.precision}, {"recall", report.recall},
                    {"f1", report.f1},               {"map", report.map}};
  doc["classes"] = nlohmann::ordered_json::array();
  for (const ClassMetrics& row : report.classes) {
    nlohmann::ordered_json item;
    item["id"] = row.class_id;
    item["name"] = row.name;
    item["instances"] = row.instances;
    item["detections"] = row.detections;
    item["tp"] = row.tp;
    item["fp"] = row.fp;
    item["fn"] = row.fn;
    item["precision"] = row.precision;
    item["recall"] = row.recall;
    item["f1"] = row.f1;
    item["ap"] = row.ap;
    doc["classes"].push_back(std::move(item));
  }
  doc["confusion"] = report.confusion;
  doc["pr_curves"] = nlohmann::ordered_json::object();
  for (const ClassMetrics& row : report.classes) {
    auto it = report.pr_curves.find(row.class_id);
    if (it == report.pr_curves.end()) continue;
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const PrPoint& point : it->second)
      points.push_back({{"recall", point.recall}, {"precision", point.precision}});
    doc["pr_curves"][row.name] = std::move(points);
  }
  return doc;
}

inline std::string pr_curves_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "class,recall,precision\n";
  for (const ClassMetrics& row : report.classes) {
    auto it = report.pr_curves.find(row.class_id);
    if (it == report.pr_curves.end()) continue;
    for (const PrPoint& point : it->second)
      out << row.name << ',' << exact_double(point.recall) << ','
          << exact_double(point.precision) << "\n";
  }
  return out.str();
}

inline std::string confusion_csv(const EvalReport& report,
                                 const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << "gt_class";
  for (const std::string& name : class_names) out << ',' << name;
  out << ",background\n";
  const std::size_t side = class_names.size() + 1;
  for (std::size_t r = 0; r < side; ++r) {
    out << (r < class_names.size() ? class_names[r] : "background");
    for (std::size_t c = 0; c < side; ++c) out << ',' << report.confusion[r][c];
    out << "\n";
  }
  return out.str();
}

}  // namespace backbone_lens

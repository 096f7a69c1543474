#pragma once

// Detection evaluation: IoU matching, precision/recall/F1, PR curves with the
// monotone envelope, per-class AP and mAP, and class-agnostic confusion
// matrices.
//
// Inputs are canonically sorted before any matching (detections by descending
// score with content tie-breaks, ground truth by content), so results are
// independent of input row order.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "backbone_lens/error.hpp"

namespace backbone_lens {

struct Rect {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  bool operator==(const Rect&) const = default;
  auto key() const { return std::tie(x1, y1, x2, y2); }
};

struct DetBox {
  std::string image_id;
  int class_id = 0;
  double score = 0.0;
  Rect box;
};

struct GtBox {
  std::string image_id;
  int class_id = 0;
  Rect box;
};

inline double iou(const Rect& a, const Rect& b) {
  if (!(a.x2 > a.x1 && a.y2 > a.y1 && b.x2 > b.x1 && b.y2 > b.y1))
    throw Error("iou: degenerate box");
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return inter / uni;
}

inline double precision(long long tp, long long fp) {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
}

inline double recall(long long tp, long long fn) {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
}

inline double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

namespace detail {

inline bool det_before(const DetBox& a, const DetBox& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.image_id, a.class_id) < std::tie(b.image_id, b.class_id) ||
         (std::tie(a.image_id, a.class_id) == std::tie(b.image_id, b.class_id) &&
          a.box.key() < b.box.key());
}

inline bool gt_before(const GtBox& a, const GtBox& b) {
  return std::tie(a.image_id, a.class_id) < std::tie(b.image_id, b.class_id) ||
         (std::tie(a.image_id, a.class_id) == std::tie(b.image_id, b.class_id) &&
          a.box.key() < b.box.key());
}

}  // namespace detail

// One scored detection with its matching outcome.
struct DetFlag {
  double score = 0.0;
  bool tp = false;
};

struct ClassMatches {
  int class_id = 0;
  long long gt_count = 0;
  std::vector<DetFlag> det_flags;  // descending score
  long long tp = 0, fp = 0, fn = 0;
};

// Greedy per-(image, class) matching: each detection, in descending score
// order, claims the unmatched ground-truth box of its class with the highest
// IoU >= threshold (ties go to the lower-indexed box after canonical
// sorting). The map has one entry per class id present in either input.
inline std::map<int, ClassMatches> match_detections(std::vector<DetBox> dets,
                                                    std::vector<GtBox> gts,
                                                    double iou_threshold = 0.5) {
  std::sort(dets.begin(), dets.end(), detail::det_before);
  std::sort(gts.begin(), gts.end(), detail::gt_before);

  std::map<int, ClassMatches> out;
  for (const GtBox& gt : gts) {
    ClassMatches& cm = out[gt.class_id];
    cm.class_id = gt.class_id;
    ++cm.gt_count;
  }
  for (const DetBox& det : dets) {
    ClassMatches& cm = out[det.class_id];
    cm.class_id = det.class_id;
  }

  // group ground truth per (image, class); sorted order defines the index
  std::map<std::pair<std::string, int>, std::vector<const GtBox*>> gt_groups;
  for (const GtBox& gt : gts) gt_groups[{gt.image_id, gt.class_id}].push_back(&gt);
  std::map<const GtBox*, bool> claimed;
  for (const GtBox& gt : gts) claimed[&gt] = false;

  for (const DetBox& det : dets) {
    ClassMatches& cm = out[det.class_id];
    bool matched = false;
    auto group = gt_groups.find({det.image_id, det.class_id});
    if (group != gt_groups.end()) {
      double best = -1.0;
      const GtBox* best_gt = nullptr;
      for (const GtBox* gt : group->second) {
        if (claimed[gt]) continue;
        const double overlap = iou(det.box, gt->box);
        if (overlap >= iou_threshold && overlap > best) {  // tie keeps the earlier box
          best = overlap;
          best_gt = gt;
        }
      }
      if (best_gt) {
        claimed[best_gt] = true;
        matched = true;
      }
    }
    cm.det_flags.push_back({det.score, matched});
    matched ? ++cm.tp : ++cm.fp;
  }
  for (auto& [_, cm] : out) cm.fn = cm.gt_count - cm.tp;
  return out;
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;

  bool operator==(const PrPoint&) const = default;
};

// Cumulative sweep in descending score, one point per distinct score value,
// then the monotone precision envelope. Flags must already be sorted by
// descending score (match_detections emits them that way). A class with no
// ground truth yields an empty curve.
inline std::vector<PrPoint> pr_curve(const std::vector<DetFlag>& flags, long long total_gt) {
  std::vector<PrPoint> points;
  if (total_gt <= 0) return points;
  long long tp = 0, fp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    flags[i].tp ? ++tp : ++fp;
    const bool last_of_score = i + 1 == flags.size() || flags[i + 1].score != flags[i].score;
    if (last_of_score)
      points.push_back({static_cast<double>(tp) / total_gt, precision(tp, fp)});
  }
  for (std::size_t i = points.size(); i-- > 1;)
    points[i - 1].precision = std::max(points[i - 1].precision, points[i].precision);
  return points;
}

// Area under the enveloped curve: sum of (r_i - r_{i-1}) * p_i with r_0 = 0.
inline double ap(const std::vector<PrPoint>& curve) {
  double area = 0.0, prev = 0.0;
  for (const PrPoint& point : curve) {
    area += (point.recall - prev) * point.precision;
    prev = point.recall;
  }
  return area;
}

inline double mean_ap(const std::vector<double>& per_class_ap) {
  if (per_class_ap.empty()) throw Error("mean_ap: no classes with ground-truth instances");
  double sum = 0.0;
  for (double v : per_class_ap) sum += v;
  return sum / per_class_ap.size();
}

// (C+1)x(C+1) counts; rows are ground-truth classes, columns predicted, the
// final row/column is background. Matching here is class-agnostic greedy by
// descending IoU; detections under conf_threshold are dropped first.
inline std::vector<std::vector<long long>> confusion_matrix(std::vector<DetBox> dets,
                                                            std::vector<GtBox> gts,
                                                            int num_classes,
                                                            double iou_threshold = 0.5,
                                                            double conf_threshold = 0.25) {
  if (num_classes < 1) throw Error("confusion_matrix: need at least one class");
  for (const DetBox& det : dets)
    if (det.class_id < 0 || det.class_id >= num_classes)
      throw Error("confusion_matrix: detection class id " + std::to_string(det.class_id) +
                  " out of range (have " + std::to_string(num_classes) + " classes)");
  for (const GtBox& gt : gts)
    if (gt.class_id < 0 || gt.class_id >= num_classes)
      throw Error("confusion_matrix: ground-truth class id " + std::to_string(gt.class_id) +
                  " out of range (have " + std::to_string(num_classes) + " classes)");

  dets.erase(std::remove_if(dets.begin(), dets.end(),
                            [&](const DetBox& d) { return d.score < conf_threshold; }),
             dets.end());
  std::sort(dets.begin(), dets.end(), detail::det_before);
  std::sort(gts.begin(), gts.end(), detail::gt_before);

  const int background = num_classes;
  std::vector<std::vector<long long>> cm(num_classes + 1,
                                         std::vector<long long>(num_classes + 1, 0));

  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> images;
  for (std::size_t i = 0; i < dets.size(); ++i)
    images[dets[i].image_id].first.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < gts.size(); ++i)
    images[gts[i].image_id].second.push_back(static_cast<int>(i));

  for (const auto& [_, indices] : images) {
    const auto& [det_idx, gt_idx] = indices;
    struct Pair {
      double overlap;
      int d, g;
    };
    std::vector<Pair> pairs;
    for (int d : det_idx)
      for (int g : gt_idx) {
        const double overlap = iou(dets[d].box, gts[g].box);
        if (overlap >= iou_threshold) pairs.push_back({overlap, d, g});
      }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.overlap != b.overlap) return a.overlap > b.overlap;
      return std::tie(a.d, a.g) < std::tie(b.d, b.g);
    });
    std::vector<bool> det_used(dets.size(), false), gt_used(gts.size(), false);
    for (const Pair& pair : pairs) {
      if (det_used[pair.d] || gt_used[pair.g]) continue;
      det_used[pair.d] = true;
      gt_used[pair.g] = true;
      ++cm[gts[pair.g].class_id][dets[pair.d].class_id];
    }
    for (int g : gt_idx)
      if (!gt_used[g]) ++cm[gts[g].class_id][background];
    for (int d : det_idx)
      if (!det_used[d]) ++cm[background][dets[d].class_id];
  }
  return cm;
}

struct ClassMetrics {
  int class_id = 0;
  std::string name;
  long long instances = 0;
  long long tp = 0, fp = 0, fn = 0;
  long long detections = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0, ap = 0.0;
};

struct EvalReport {
  std::vector<ClassMetrics> classes;  // one per class id, in id order
  long long tp = 0, fp = 0, fn = 0;
  long long instances = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double map = 0.0;  // mean AP over classes with >= 1 instance; 0 when none
  std::map<int, std::vector<PrPoint>> pr_curves;
  std::vector<std::vector<long long>> confusion;
};

// Full pipeline: per-class matching and AP, micro-averaged overall numbers,
// PR curves, and the confusion matrix (the only consumer of conf_threshold).
inline EvalReport eval_report(const std::vector<DetBox>& dets, const std::vector<GtBox>& gts,
                              const std::vector<std::string>& class_names,
                              double iou_threshold = 0.5, double conf_threshold = 0.25) {
  const int num_classes = static_cast<int>(class_names.size());
  if (num_classes < 1) throw Error("eval_report: need at least one class name");
  for (const DetBox& det : dets)
    if (det.class_id < 0 || det.class_id >= num_classes)
      throw Error("eval_report: detection class id " + std::to_string(det.class_id) +
                  " out of range (have " + std::to_string(num_classes) + " classes)");
  for (const GtBox& gt : gts)
    if (gt.class_id < 0 || gt.class_id >= num_classes)
      throw Error("eval_report: ground-truth class id " + std::to_string(gt.class_id) +
                  " out of range (have " + std::to_string(num_classes) + " classes)");

  auto matches = match_detections(dets, gts, iou_threshold);
  EvalReport report;
  std::vector<double> aps;
  for (int c = 0; c < num_classes; ++c) {
    ClassMetrics row;
    row.class_id = c;
    row.name = class_names[c];
    auto it = matches.find(c);
    if (it != matches.end()) {
      const ClassMatches& cm = it->second;
      row.instances = cm.gt_count;
      row.tp = cm.tp;
      row.fp = cm.fp;
      row.fn = cm.fn;
      row.detections = static_cast<long long>(cm.det_flags.size());
      row.precision = precision(cm.tp, cm.fp);
      row.recall = recall(cm.tp, cm.fn);
      row.f1 = f1(row.precision, row.recall);
      const auto curve = pr_curve(cm.det_flags, cm.gt_count);
      row.ap = ap(curve);
      if (!curve.empty()) report.pr_curves[c] = curve;
    }
    if (row.instances > 0) aps.push_back(row.ap);
    report.tp += row.tp;
    report.fp += row.fp;
    report.fn += row.fn;
    report.instances += row.instances;
    report.classes.push_back(std::move(row));
  }
  report.precision = precision(report.tp, report.fp);
  report.recall = recall(report.tp, report.fn);
  report.f1 = f1(report.precision, report.recall);
  report.map = aps.empty() ? 0.0 : mean_ap(aps);
  report.confusion = confusion_matrix(dets, gts, num_classes, iou_threshold, conf_threshold);
  return report;
}

}  // namespace backbone_lens

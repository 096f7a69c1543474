#pragma once

// Brute-force oracles, written independently of the library's sweep logic.

#include <algorithm>
#include <set>
#include <vector>

#include "backbone_lens/metrics.hpp"

namespace testsupport {

// Greedy matcher re-implemented from the matching rule directly: detections
// in descending score order, each claims its best unmatched same-class
// same-image ground truth with IoU >= threshold.
struct OracleCounts {
  long long tp = 0, fp = 0;
};

inline OracleCounts oracle_match(const std::vector<backbone_lens::DetBox>& dets,
                                 const std::vector<backbone_lens::GtBox>& gts,
                                 int class_id, double iou_threshold) {
  namespace bl = backbone_lens;
  std::vector<const bl::GtBox*> class_gts;
  for (const bl::GtBox& gt : gts)
    if (gt.class_id == class_id) class_gts.push_back(&gt);
  std::sort(class_gts.begin(), class_gts.end(), [](const bl::GtBox* a, const bl::GtBox* b) {
    if (a->image_id != b->image_id) return a->image_id < b->image_id;
    return a->box.key() < b->box.key();
  });
  std::vector<const bl::DetBox*> class_dets;
  for (const bl::DetBox& det : dets)
    if (det.class_id == class_id) class_dets.push_back(&det);
  std::sort(class_dets.begin(), class_dets.end(), [](const bl::DetBox* a, const bl::DetBox* b) {
    if (a->score != b->score) return a->score > b->score;
    if (a->image_id != b->image_id) return a->image_id < b->image_id;
    return a->box.key() < b->box.key();
  });

  OracleCounts counts;
  std::set<const bl::GtBox*> claimed;
  for (const bl::DetBox* det : class_dets) {
    const bl::GtBox* best = nullptr;
    double best_iou = -1.0;
    for (const bl::GtBox* gt : class_gts) {
      if (gt->image_id != det->image_id || claimed.count(gt)) continue;
      const double overlap = bl::iou(det->box, gt->box);
      if (overlap >= iou_threshold && overlap > best_iou) {
        best_iou = overlap;
        best = gt;
      }
    }
    if (best) {
      claimed.insert(best);
      ++counts.tp;
    } else {
      ++counts.fp;
    }
  }
  return counts;
}

// AP by enumerating every distinct score threshold: evaluate (R, P) at each
// operating point "keep detections with score >= t" via fresh matching, then
// integrate the upper envelope max{P_t : R_t >= r} over recall.
inline double oracle_ap(const std::vector<backbone_lens::DetBox>& dets,
                        const std::vector<backbone_lens::GtBox>& gts, int class_id,
                        double iou_threshold) {
  namespace bl = backbone_lens;
  long long total_gt = 0;
  for (const bl::GtBox& gt : gts)
    if (gt.class_id == class_id) ++total_gt;
  if (total_gt == 0) return 0.0;

  std::set<double> thresholds;
  for (const bl::DetBox& det : dets)
    if (det.class_id == class_id) thresholds.insert(det.score);

  struct Point {
    double recall, precision;
  };
  std::vector<Point> points;
  for (double t : thresholds) {
    std::vector<bl::DetBox> kept;
    for (const bl::DetBox& det : dets)
      if (det.score >= t) kept.push_back(det);
    const OracleCounts counts = oracle_match(kept, gts, class_id, iou_threshold);
    const double r = static_cast<double>(counts.tp) / total_gt;
    const double p =
        counts.tp + counts.fp == 0 ? 0.0 : static_cast<double>(counts.tp) / (counts.tp + counts.fp);
    points.push_back({r, p});
  }

  std::set<double> recalls;
  for (const Point& point : points) recalls.insert(point.recall);
  double area = 0.0, prev = 0.0;
  for (double r : recalls) {
    if (r <= prev) continue;
    double best = 0.0;
    for (const Point& point : points)
      if (point.recall >= r) best = std::max(best, point.precision);
    area += (r - prev) * best;
    prev = r;
  }
  return area;
}

}  // namespace testsupport

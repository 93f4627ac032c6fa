#pragma once
// Category-level metrics: oriented-box 3D IoU and pose accuracy at
// rotation/translation thresholds, aggregated into per-category pass
// fractions. Every ground-truth instance has exactly one prediction, so the
// usual detection AP degenerates to per-category accuracy.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "copse/geometry.hpp"

namespace copse::eval {

struct PredictionRecord {
  std::string id;
  std::string category;
  geom::RigidTransform pred_pose;
  geom::RigidTransform gt_pose;
  geom::Size3 pred_size;
  geom::Size3 gt_size;
  geom::SymmetrySpec symmetry;
};

// Closed-form IoU for boxes sharing one rotation (axis-aligned in the common
// frame).
double iou3d_aligned(const geom::OrientedBox& a, const geom::OrientedBox& b,
                     bool* degenerate = nullptr);

// Deterministic estimate on a regular grid of cell centers spanning the
// axis-aligned bounds of both corner sets; symmetric in its arguments.
double iou3d_grid(const geom::OrientedBox& a, const geom::OrientedBox& b, int grid = 64,
                  bool* degenerate = nullptr);

// Dispatches to the closed form when the two rotations are identical, the
// grid estimate otherwise. Degenerate zero-volume overlap reports 0 and sets
// the flag.
double iou3d(const geom::OrientedBox& a, const geom::OrientedBox& b, int grid = 64,
             bool* degenerate = nullptr);

// True iff the symmetry-aware rotation error is below max_deg degrees AND the
// translation error is below max_cm centimeters (both strict).
bool pose_accuracy(const PredictionRecord& r, double max_deg, double max_cm);

struct CategoryMetrics {
  double iou25 = 0, iou50 = 0, iou75 = 0;
  double d5_2 = 0, d5_5 = 0, d10_2 = 0, d10_5 = 0;
  double median_rot_deg = 0;
  double median_trans_m = 0;
  double median_trans_over_diameter = 0;  // diameter = ||gt extents||_2
  int n = 0;
};

struct MetricReport {
  std::map<std::string, CategoryMetrics> per_category;
  // Pass fractions averaged over categories (unweighted); medians pooled over
  // all records; n = total record count.
  CategoryMetrics mean;
  int grid = 64;
};

MetricReport compute_report(const std::vector<PredictionRecord>& records, int grid = 64);

nlohmann::json report_to_json(const MetricReport& report, const nlohmann::json& config);
void write_report_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace copse::eval

#include "copse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace copse::eval {

namespace {

double median(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double iou3d_aligned(const geom::OrientedBox& a, const geom::OrientedBox& b, bool* degenerate) {
  if (degenerate) *degenerate = false;
  const Eigen::Vector3d ha = a.size.extents / 2.0, hb = b.size.extents / 2.0;
  const Eigen::Vector3d c = a.pose.rotation.transpose() * (b.pose.translation - a.pose.translation);
  double inter = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = std::max(-ha(axis), c(axis) - hb(axis));
    const double hi = std::min(ha(axis), c(axis) + hb(axis));
    inter *= std::max(hi - lo, 0.0);
  }
  const double uni = a.size.volume() + b.size.volume() - inter;
  if (!(uni > 0.0)) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return inter / uni;
}

double iou3d_grid(const geom::OrientedBox& a, const geom::OrientedBox& b, int grid, bool* degenerate) {
  if (degenerate) *degenerate = false;
  const Eigen::Matrix<double, 8, 3> ca = a.corners(), cb = b.corners();
  Eigen::Vector3d lo = ca.colwise().minCoeff().cwiseMin(cb.colwise().minCoeff()).transpose();
  Eigen::Vector3d hi = ca.colwise().maxCoeff().cwiseMax(cb.colwise().maxCoeff()).transpose();
  const Eigen::Vector3d step = (hi - lo) / static_cast<double>(grid);

  const Eigen::Matrix3d ra = a.pose.rotation.transpose(), rb = b.pose.rotation.transpose();
  const Eigen::Vector3d ta = a.pose.translation, tb = b.pose.translation;
  const Eigen::Vector3d ha = a.size.extents / 2.0, hb = b.size.extents / 2.0;

  long both = 0, either = 0;
  for (int ix = 0; ix < grid; ++ix) {
    const double x = lo.x() + (ix + 0.5) * step.x();
    for (int iy = 0; iy < grid; ++iy) {
      const double y = lo.y() + (iy + 0.5) * step.y();
      for (int iz = 0; iz < grid; ++iz) {
        const Eigen::Vector3d p(x, y, lo.z() + (iz + 0.5) * step.z());
        const Eigen::Vector3d la = ra * (p - ta);
        const Eigen::Vector3d lb = rb * (p - tb);
        const bool in_a = (la.cwiseAbs().array() <= ha.array()).all();
        const bool in_b = (lb.cwiseAbs().array() <= hb.array()).all();
        both += in_a && in_b;
        either += in_a || in_b;
      }
    }
  }
  if (either == 0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return static_cast<double>(both) / static_cast<double>(either);
}

double iou3d(const geom::OrientedBox& a, const geom::OrientedBox& b, int grid, bool* degenerate) {
  if ((a.pose.rotation - b.pose.rotation).cwiseAbs().maxCoeff() < 1e-12)
    return iou3d_aligned(a, b, degenerate);
  return iou3d_grid(a, b, grid, degenerate);
}

bool pose_accuracy(const PredictionRecord& r, double max_deg, double max_cm) {
  const double trans_m = (r.pred_pose.translation - r.gt_pose.translation).norm();
  const double rot_deg = geom::rotation_error_deg(r.pred_pose, r.gt_pose, r.symmetry);
  return rot_deg < max_deg && trans_m < max_cm * 0.01;
}

MetricReport compute_report(const std::vector<PredictionRecord>& records, int grid) {
  if (records.empty()) throw EmptyPredictions("compute_report: no predictions");
  MetricReport report;
  report.grid = grid;

  struct Accum {
    CategoryMetrics m;
    std::vector<double> rot, trans, trans_frac;
  };
  std::map<std::string, Accum> by_cat;
  Accum pooled;

  for (const PredictionRecord& r : records) {
    const double iou = iou3d({r.gt_pose, r.gt_size}, {r.pred_pose, r.pred_size}, grid);
    const double rot = geom::rotation_error_deg(r.pred_pose, r.gt_pose, r.symmetry);
    const double trans = (r.pred_pose.translation - r.gt_pose.translation).norm();
    const double diameter = r.gt_size.extents.norm();
    for (Accum* acc : {&by_cat[r.category], &pooled}) {
      CategoryMetrics& m = acc->m;
      m.iou25 += iou >= 0.25;
      m.iou50 += iou >= 0.50;
      m.iou75 += iou >= 0.75;
      m.d5_2 += rot < 5.0 && trans < 0.02;
      m.d5_5 += rot < 5.0 && trans < 0.05;
      m.d10_2 += rot < 10.0 && trans < 0.02;
      m.d10_5 += rot < 10.0 && trans < 0.05;
      m.n += 1;
      acc->rot.push_back(rot);
      acc->trans.push_back(trans);
      acc->trans_frac.push_back(diameter > 0.0 ? trans / diameter : 0.0);
    }
  }

  for (auto& [cat, acc] : by_cat) {
    CategoryMetrics m = acc.m;
    const double n = static_cast<double>(m.n);
    m.iou25 /= n; m.iou50 /= n; m.iou75 /= n;
    m.d5_2 /= n; m.d5_5 /= n; m.d10_2 /= n; m.d10_5 /= n;
    m.median_rot_deg = median(acc.rot);
    m.median_trans_m = median(acc.trans);
    m.median_trans_over_diameter = median(acc.trans_frac);
    report.per_category[cat] = m;
  }

  CategoryMetrics& mean = report.mean;
  const double n_cat = static_cast<double>(report.per_category.size());
  for (const auto& [cat, m] : report.per_category) {
    mean.iou25 += m.iou25 / n_cat;
    mean.iou50 += m.iou50 / n_cat;
    mean.iou75 += m.iou75 / n_cat;
    mean.d5_2 += m.d5_2 / n_cat;
    mean.d5_5 += m.d5_5 / n_cat;
    mean.d10_2 += m.d10_2 / n_cat;
    mean.d10_5 += m.d10_5 / n_cat;
  }
  mean.n = pooled.m.n;
  mean.median_rot_deg = median(pooled.rot);
  mean.median_trans_m = median(pooled.trans);
  mean.median_trans_over_diameter = median(pooled.trans_frac);
  return report;
}

namespace {

nlohmann::json metrics_to_json(const CategoryMetrics& m) {
  return {{"iou25", m.iou25},
          {"iou50", m.iou50},
          {"iou75", m.iou75},
          {"d5_2", m.d5_2},
          {"d5_5", m.d5_5},
          {"d10_2", m.d10_2},
          {"d10_5", m.d10_5},
          {"median_rot_deg", m.median_rot_deg},
          {"median_trans_m", m.median_trans_m},
          {"median_trans_over_diameter", m.median_trans_over_diameter},
          {"n", m.n}};
}

}  // namespace

nlohmann::json report_to_json(const MetricReport& report, const nlohmann::json& config) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config;
  j["config"]["grid"] = report.grid;
  j["ap_definition"] =
      "pass fraction per category (exactly one prediction per ground-truth instance); "
      "mean is the unweighted category average";
  nlohmann::json per;
  for (const auto& [cat, m] : report.per_category) per[cat] = metrics_to_json(m);
  j["per_category"] = std::move(per);
  j["mean"] = metrics_to_json(report.mean);
  return j;
}

void write_report_csv(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("report: cannot write " + path.string());
  out << "category,n,iou25,iou50,iou75,d5_2,d5_5,d10_2,d10_5,median_rot_deg,median_trans_m\n";
  auto row = [&out](const std::string& name, const CategoryMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  name.c_str(), m.n, m.iou25, m.iou50, m.iou75, m.d5_2, m.d5_5, m.d10_2, m.d10_5,
                  m.median_rot_deg, m.median_trans_m);
    out << buf;
  };
  for (const auto& [cat, m] : report.per_category) row(cat, m);
  row("mean", report.mean);
}

}  // namespace copse::eval

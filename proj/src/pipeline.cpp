#include "copse/pipeline.hpp"

namespace copse::sar {

PreparedData prepare_samples(const synth::Dataset& ds, const std::string& split) {
  PreparedData out;
  out.kc_by_category.reserve(ds.categories.size());
  for (const synth::CategoryTemplate& t : ds.categories)
    out.kc_by_category.push_back(tensor_from_cloud(t.kc));
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (!split.empty() && ds.sample_split[i] != split) continue;
    const int ci = ds.sample_category[i];
    out.samples.push_back(make_train_sample(ds.samples[i], ci, ds.categories[ci].symmetry));
  }
  return out;
}

std::vector<eval::PredictionRecord> predict_dataset(SarNetParams& net, const synth::Dataset& ds,
                                                    const std::string& split) {
  std::vector<eval::PredictionRecord> records;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (!split.empty() && ds.sample_split[i] != split) continue;
    const synth::InstanceSample& s = ds.samples[i];
    const synth::CategoryTemplate& tmpl = ds.categories[ds.sample_category[i]];
    const PoseSizeEstimate est = infer(net, s.observed, tmpl.kc);
    eval::PredictionRecord r;
    r.id = ds.sample_id[i];
    r.category = s.category;
    r.pred_pose = est.pose;
    r.pred_size = est.size;
    r.gt_pose = s.pose;
    r.gt_size = geom::Size3(s.size);
    r.symmetry = tmpl.symmetry;
    records.push_back(std::move(r));
  }
  return records;
}

eval::MetricReport evaluate_model(SarNetParams& net, const synth::Dataset& ds,
                                  const std::string& split, int grid) {
  return eval::compute_report(predict_dataset(net, ds, split), grid);
}

}  // namespace copse::sar

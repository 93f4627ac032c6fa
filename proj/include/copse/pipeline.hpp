#pragma once
// Glue between dataset, model, and metrics: train-sample preparation and
// whole-split evaluation.

#include <string>
#include <vector>

#include "copse/evaluation.hpp"
#include "copse/losses.hpp"
#include "copse/model.hpp"
#include "copse/synthdata.hpp"

namespace copse::sar {

struct PreparedData {
  std::vector<TrainSample> samples;
  std::vector<nn::Tensor> kc_by_category;
};

// Samples of one split ("train"/"test"; empty = all) as training tensors.
PreparedData prepare_samples(const synth::Dataset& ds, const std::string& split);

// Runs inference on every sample of the split and pairs it with ground truth.
std::vector<eval::PredictionRecord> predict_dataset(SarNetParams& net, const synth::Dataset& ds,
                                                    const std::string& split);

eval::MetricReport evaluate_model(SarNetParams& net, const synth::Dataset& ds,
                                  const std::string& split, int grid = 64);

}  // namespace copse::sar

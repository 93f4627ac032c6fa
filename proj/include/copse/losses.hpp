#pragma once
// Four-term training loss (deformed template, symmetric cloud, center
// offsets, size), the rotational-orbit variant of the deformation loss,
// teacher-forced warm-up, the training loop, and finite-difference checking.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "copse/model.hpp"
#include "copse/synthdata.hpp"

namespace copse::sar {

struct LossBreakdown {
  double def = 0.0, sym = 0.0, cen = 0.0, size = 0.0, total = 0.0;
  static LossBreakdown from_parts(double d, double s, double c, double z) {
    return {d, s, c, z, d + s + c + z};
  }
};

struct TrainConfig {
  int epochs = 100;
  int batch = 32;
  double base_lr = 4e-4;
  double decay = 0.75;
  int decay_period = 4;   // epochs between learning-rate decays
  int warm_epochs = 10;   // teacher-forced coarse shape before this epoch
  int sym_rotations = 12; // orbit size for the rotational deformation loss
  std::uint64_t seed = 42;
  int threads = 0;  // 0 = resolve from COPSE_THREADS / hardware

  nlohmann::json to_json() const;
};

// One prepared example, everything in the normalized frame.
struct TrainSample {
  nn::Tensor observed;      // [N,3]
  nn::Tensor gt_deformed;   // [Nk,3]
  nn::Tensor gt_symmetric;  // [N,3]
  Eigen::Vector3d center_norm{Eigen::Vector3d::Zero()};
  Eigen::Vector3d size_norm{Eigen::Vector3d::Ones()};
  geom::SymmetrySpec symmetry_world;  // object symmetry rotated into the observed state
  int category = 0;
};

TrainSample make_train_sample(const synth::InstanceSample& s, int category_idx,
                              const geom::SymmetrySpec& object_symmetry);

// Mean over template points of the per-point L1 norm. For rotational
// symmetry: minimum over m_rotations copies of the target rotated about the
// (world-frame) symmetry axis by 2*pi*j/m.
nn::Var loss_def(nn::Graph& g, nn::Var deformed, const nn::Tensor& gt,
                 const geom::SymmetrySpec& symmetry_world, int m_rotations);

// Mean over observed points of the per-point L1 norm.
nn::Var loss_sym(nn::Graph& g, nn::Var symmetric, const nn::Tensor& gt);

// Offset targets are center - g_i for the coarse points actually fed to the
// head, so gradients flow through a predicted coarse shape.
nn::Var loss_cen(nn::Graph& g, nn::Var offsets, const CoarseShape& coarse,
                 const Eigen::Vector3d& center_norm);
// Direct-regression variant: L1 norm between the predicted and true center in
// the centralized frame.
nn::Var loss_cen_direct(nn::Graph& g, nn::Var center, const CoarseShape& coarse,
                        const Eigen::Vector3d& center_norm);
// L1 norm of the size residual (sum over the three extents).
nn::Var loss_size(nn::Graph& g, nn::Var size, const Eigen::Vector3d& size_norm);

struct SampleLossVars {
  nn::Var def = nullptr, sym = nullptr, cen = nullptr, size = nullptr, total = nullptr;
  ForwardOut fwd;
};

// Builds the full forward graph and all four losses for one sample.
SampleLossVars sample_losses(nn::Graph& g, SarNetParams& net, const TrainSample& sample,
                             const nn::Tensor& kc, bool teacher_forcing, int m_rotations);

LossBreakdown breakdown(const SampleLossVars& v);

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown loss;
  double wall_ms = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
};

// Deterministic given the config seed and a fixed thread count. When jsonl is
// non-null one JSON line per epoch is appended:
// {epoch, lr, L_def, L_sym, L_cen, L_size, L_total, wall_ms}.
TrainResult train(SarNetParams& net, const std::vector<TrainSample>& data,
                  const std::vector<nn::Tensor>& kc_by_category, const TrainConfig& cfg,
                  std::ostream* jsonl = nullptr);

struct GradCheckConfig {
  double h = 1e-5;
  double tol = 1e-4;
  int m_rotations = 12;
  bool teacher_forcing = false;
};

struct GradCheckResult {
  long checked = 0;
  long failed = 0;
  double max_rel = 0.0;
};

// Central finite differences of the batch-mean total loss against the
// analytic gradient, for every element of every trainable parameter.
GradCheckResult gradcheck_model(SarNetParams& net, const std::vector<TrainSample>& batch,
                                const std::vector<nn::Tensor>& kc_by_category,
                                const GradCheckConfig& cfg);

// COPSE_THREADS, else hardware concurrency.
int resolve_threads(int requested);

}  // namespace copse::sar

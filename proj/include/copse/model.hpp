#pragma once
// The three encoder-decoders: template deformation (rotation carrier),
// symmetric correspondence (shape completion), and center/size estimation
// from the coarse shape, plus pose/size post-processing.

#include <filesystem>
#include <vector>

#include "copse/geometry.hpp"
#include "copse/nn.hpp"

namespace copse::sar {

struct ModelConfig {
  int n_template = 36;    // template cloud point count
  int n_observed = 1024;  // observed cloud point count after resampling
  int feat_dim = 128;     // pooled global feature width
  int enc_hidden = 64;    // point encoder: 3 -> enc_hidden -> feat_dim
  int dec_hidden1 = 128;  // decoders: (3 + 2*feat_dim) -> dec_hidden1 -> dec_hidden2 -> 3
  int dec_hidden2 = 64;
  bool regress_center = false;  // pooled center regression instead of per-point voting

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// All trainable layers. The point encoder is shared by the observed cloud,
// the template cloud, and the coarse shape.
struct SarNetParams {
  ModelConfig cfg;
  nn::LinearLayer enc1, enc2;
  nn::LinearLayer sa1, sa2, sa3;        // template deformation decoder
  nn::LinearLayer sc1, sc2, sc3;        // symmetric correspondence decoder
  nn::LinearLayer off1, off2, off3;     // per-point center offset head
  nn::LinearLayer cen1, cen2, cen3;     // pooled direct center head (ablation)
  nn::LinearLayer size1, size2, size3;  // pooled size head, abs-activated output

  explicit SarNetParams(const ModelConfig& c = {});
  void init(Rng& rng);
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  void copy_values_from(const SarNetParams& other);
  void zero_grads();
};

// Pooled global features of the observed and template clouds.
struct ShapeFeatures {
  nn::Var observed = nullptr;
  nn::Var tmpl = nullptr;
};

// Coarse shape: centralized concatenation of observed and symmetric clouds.
struct CoarseShape {
  nn::Var raw = nullptr;       // [2N,3] before centralization
  nn::Var centered = nullptr;  // [2N,3]
  nn::Var centroid = nullptr;  // [3]
};

// Offset field (voting mode) or direct center (regression mode), plus size.
struct CenterSizeOut {
  nn::Var offsets = nullptr;  // [2N,3], voting mode only
  nn::Var center = nullptr;   // [3], regression mode only
  nn::Var size = nullptr;     // [3], positive
};

struct ForwardOut {
  ShapeFeatures feats;
  nn::Var deformed = nullptr;   // [n_template,3]
  nn::Var symmetric = nullptr;  // [n_observed,3]
  CoarseShape coarse;
  CenterSizeOut head;
};

// Shared point MLP + max pool; permutation invariant in the point order.
nn::Var encode_pooled(nn::Graph& g, SarNetParams& net, nn::Var pts);
ShapeFeatures encode_features(nn::Graph& g, SarNetParams& net, nn::Var observed_pts, nn::Var template_pts);
nn::Var predict_deformed_template(nn::Graph& g, SarNetParams& net, nn::Var template_pts,
                                  const ShapeFeatures& feats);
nn::Var predict_symmetric_cloud(nn::Graph& g, SarNetParams& net, nn::Var observed_pts,
                                const ShapeFeatures& feats);
CoarseShape build_coarse_shape(nn::Graph& g, nn::Var observed_pts, nn::Var symmetric_pts);
CenterSizeOut predict_center_size(nn::Graph& g, SarNetParams& net, const CoarseShape& coarse,
                                  nn::Var template_feat);

// Full forward pass. When teacher_symmetric is non-null the coarse shape is
// built from it instead of the predicted symmetric cloud (the symmetric
// prediction is still produced for its own loss).
ForwardOut forward(nn::Graph& g, SarNetParams& net, const nn::Tensor& observed,
                   const nn::Tensor& tmpl, const nn::Tensor* teacher_symmetric = nullptr);

struct PoseSizeEstimate {
  geom::RigidTransform pose;
  geom::Size3 size;
};

// Rotation from rigid alignment of the template onto its deformation; center
// from per-point votes mapped back through the coarse-shape centroid and the
// normalization record; size rescaled by the normalization factor.
PoseSizeEstimate recover_pose_size(const geom::Cloud& template_pts, const geom::Cloud& deformed,
                                   const geom::Cloud& offsets, const Eigen::Vector3d& size_norm,
                                   const geom::Cloud& coarse_centered,
                                   const Eigen::Vector3d& coarse_centroid,
                                   const geom::NormalizationRecord& rec);

// Direct-regression variant: the center in the centralized normalized frame is
// predicted as a single vector.
PoseSizeEstimate recover_pose_size_direct(const geom::Cloud& template_pts, const geom::Cloud& deformed,
                                          const Eigen::Vector3d& center_centered,
                                          const Eigen::Vector3d& size_norm,
                                          const Eigen::Vector3d& coarse_centroid,
                                          const geom::NormalizationRecord& rec);

// Normalize, run the network, recover pose and size in the camera frame.
PoseSizeEstimate infer(SarNetParams& net, const geom::PointCloud& observed_camera,
                       const geom::Cloud& template_pts);

nn::Tensor tensor_from_cloud(const geom::Cloud& c);
geom::Cloud cloud_from_tensor(const nn::Tensor& t);

// Checkpoint io for the whole model (layer blob + config header).
void save_model(const std::filesystem::path& path, const SarNetParams& net,
                const nn::OptimizerConfig& opt, const nlohmann::json& extra);
SarNetParams load_model(const std::filesystem::path& path, nlohmann::json* header_out = nullptr);

}  // namespace copse::sar

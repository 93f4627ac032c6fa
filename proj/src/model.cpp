#include "copse/model.hpp"

namespace copse::sar {

nlohmann::json ModelConfig::to_json() const {
  return {{"n_template", n_template},   {"n_observed", n_observed},
          {"feat_dim", feat_dim},       {"enc_hidden", enc_hidden},
          {"dec_hidden1", dec_hidden1}, {"dec_hidden2", dec_hidden2},
          {"regress_center", regress_center}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.n_template = j.at("n_template");
  c.n_observed = j.at("n_observed");
  c.feat_dim = j.at("feat_dim");
  c.enc_hidden = j.at("enc_hidden");
  c.dec_hidden1 = j.at("dec_hidden1");
  c.dec_hidden2 = j.at("dec_hidden2");
  c.regress_center = j.at("regress_center");
  return c;
}

SarNetParams::SarNetParams(const ModelConfig& c)
    : cfg(c),
      enc1("enc1", 3, c.enc_hidden),
      enc2("enc2", c.enc_hidden, c.feat_dim),
      sa1("sa1", 3 + 2 * c.feat_dim, c.dec_hidden1),
      sa2("sa2", c.dec_hidden1, c.dec_hidden2),
      sa3("sa3", c.dec_hidden2, 3),
      sc1("sc1", 3 + 2 * c.feat_dim, c.dec_hidden1),
      sc2("sc2", c.dec_hidden1, c.dec_hidden2),
      sc3("sc3", c.dec_hidden2, 3),
      off1("off1", 3 + 2 * c.feat_dim, c.dec_hidden1),
      off2("off2", c.dec_hidden1, c.dec_hidden2),
      off3("off3", c.dec_hidden2, 3),
      cen1("cen1", 2 * c.feat_dim, c.dec_hidden1),
      cen2("cen2", c.dec_hidden1, c.dec_hidden2),
      cen3("cen3", c.dec_hidden2, 3),
      size1("size1", 2 * c.feat_dim, c.dec_hidden1),
      size2("size2", c.dec_hidden1, c.dec_hidden2),
      size3("size3", c.dec_hidden2, 3) {}

void SarNetParams::init(Rng& rng) {
  for (nn::LinearLayer* l : {&enc1, &enc2, &sa1, &sa2, &sa3, &sc1, &sc2, &sc3, &off1, &off2,
                             &off3, &cen1, &cen2, &cen3, &size1, &size2, &size3})
    l->init_he(rng);
}

std::vector<nn::Parameter*> SarNetParams::parameters() {
  std::vector<nn::Parameter*> out;
  for (nn::LinearLayer* l : {&enc1, &enc2, &sa1, &sa2, &sa3, &sc1, &sc2, &sc3, &off1, &off2,
                             &off3, &cen1, &cen2, &cen3, &size1, &size2, &size3}) {
    out.push_back(&l->weight);
    out.push_back(&l->bias);
  }
  return out;
}

std::vector<const nn::Parameter*> SarNetParams::parameters() const {
  auto mutable_params = const_cast<SarNetParams*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

void SarNetParams::copy_values_from(const SarNetParams& other) {
  auto dst = parameters();
  auto src = other.parameters();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value.v = src[i]->value.v;
}

void SarNetParams::zero_grads() {
  for (nn::Parameter* p : parameters()) p->zero_grad();
}

nn::Var encode_pooled(nn::Graph& g, SarNetParams& net, nn::Var pts) {
  if (pts->value.rows() < 1) throw EmptyCloud("encode_pooled: empty cloud");
  nn::Var h = g.relu(g.linear(pts, net.enc1));
  h = g.relu(g.linear(h, net.enc2));
  return g.maxpool_rows(h);
}

ShapeFeatures encode_features(nn::Graph& g, SarNetParams& net, nn::Var observed_pts,
                              nn::Var template_pts) {
  return {encode_pooled(g, net, observed_pts), encode_pooled(g, net, template_pts)};
}

namespace {

// Per-point decoder: concat(point, pooled features) -> MLP -> 3D output.
nn::Var point_decoder(nn::Graph& g, nn::Var pts, nn::Var f_a, nn::Var f_b, nn::LinearLayer& l1,
                      nn::LinearLayer& l2, nn::LinearLayer& l3) {
  const int n = pts->value.rows();
  nn::Var in = g.hcat({pts, g.broadcast_rows(f_a, n), g.broadcast_rows(f_b, n)});
  nn::Var h = g.relu(g.linear(in, l1));
  h = g.relu(g.linear(h, l2));
  return g.linear(h, l3);
}

nn::Var pooled_head(nn::Graph& g, nn::Var f_a, nn::Var f_b, nn::LinearLayer& l1,
                    nn::LinearLayer& l2, nn::LinearLayer& l3) {
  nn::Var in = g.hcat({f_a, f_b});
  nn::Var h = g.relu(g.linear(in, l1));
  h = g.relu(g.linear(h, l2));
  return g.linear(h, l3);
}

}  // namespace

nn::Var predict_deformed_template(nn::Graph& g, SarNetParams& net, nn::Var template_pts,
                                  const ShapeFeatures& feats) {
  return point_decoder(g, template_pts, feats.observed, feats.tmpl, net.sa1, net.sa2, net.sa3);
}

nn::Var predict_symmetric_cloud(nn::Graph& g, SarNetParams& net, nn::Var observed_pts,
                                const ShapeFeatures& feats) {
  return point_decoder(g, observed_pts, feats.observed, feats.tmpl, net.sc1, net.sc2, net.sc3);
}

CoarseShape build_coarse_shape(nn::Graph& g, nn::Var observed_pts, nn::Var symmetric_pts) {
  if (observed_pts->value.rows() != symmetric_pts->value.rows())
    throw ShapeMismatch("build_coarse_shape: point counts differ");
  CoarseShape cs;
  cs.raw = g.vcat(observed_pts, symmetric_pts);
  cs.centroid = g.mean_rows(cs.raw);
  cs.centered = g.sub(cs.raw, g.broadcast_rows(cs.centroid, cs.raw->value.rows()));
  return cs;
}

CenterSizeOut predict_center_size(nn::Graph& g, SarNetParams& net, const CoarseShape& coarse,
                                  nn::Var template_feat) {
  CenterSizeOut out;
  nn::Var f_coarse = encode_pooled(g, net, coarse.centered);
  if (net.cfg.regress_center)
    out.center = pooled_head(g, f_coarse, template_feat, net.cen1, net.cen2, net.cen3);
  else
    out.offsets = point_decoder(g, coarse.centered, f_coarse, template_feat, net.off1, net.off2,
                                net.off3);
  out.size = g.abs(pooled_head(g, f_coarse, template_feat, net.size1, net.size2, net.size3));
  return out;
}

ForwardOut forward(nn::Graph& g, SarNetParams& net, const nn::Tensor& observed,
                   const nn::Tensor& tmpl, const nn::Tensor* teacher_symmetric) {
  ForwardOut out;
  nn::Var obs = g.constant(observed);
  nn::Var kc = g.constant(tmpl);
  out.feats = encode_features(g, net, obs, kc);
  out.deformed = predict_deformed_template(g, net, kc, out.feats);
  out.symmetric = predict_symmetric_cloud(g, net, obs, out.feats);
  nn::Var sym_src = teacher_symmetric ? g.constant(*teacher_symmetric) : out.symmetric;
  out.coarse = build_coarse_shape(g, obs, sym_src);
  out.head = predict_center_size(g, net, out.coarse, out.feats.tmpl);
  return out;
}

PoseSizeEstimate recover_pose_size(const geom::Cloud& template_pts, const geom::Cloud& deformed,
                                   const geom::Cloud& offsets, const Eigen::Vector3d& size_norm,
                                   const geom::Cloud& coarse_centered,
                                   const Eigen::Vector3d& coarse_centroid,
                                   const geom::NormalizationRecord& rec) {
  if (offsets.rows() != coarse_centered.rows())
    throw ShapeMismatch("recover_pose_size: offset and coarse point counts differ");
  const Eigen::Vector3d center_centered = (coarse_centered + offsets).colwise().mean().transpose();
  return recover_pose_size_direct(template_pts, deformed, center_centered, size_norm,
                                  coarse_centroid, rec);
}

PoseSizeEstimate recover_pose_size_direct(const geom::Cloud& template_pts, const geom::Cloud& deformed,
                                          const Eigen::Vector3d& center_centered,
                                          const Eigen::Vector3d& size_norm,
                                          const Eigen::Vector3d& coarse_centroid,
                                          const geom::NormalizationRecord& rec) {
  PoseSizeEstimate est;
  est.pose.rotation = geom::umeyama_align(geom::PointCloud(template_pts, geom::Frame::normalized),
                                          geom::PointCloud(deformed, geom::Frame::normalized))
                          .rotation;
  est.pose.translation = (center_centered + coarse_centroid) * rec.scale + rec.centroid;
  est.size = geom::Size3(rec.scale * size_norm);
  return est;
}

PoseSizeEstimate infer(SarNetParams& net, const geom::PointCloud& observed_camera,
                       const geom::Cloud& template_pts) {
  auto [normalized, rec] = geom::normalize_cloud(observed_camera);
  nn::Graph g;
  ForwardOut out =
      forward(g, net, tensor_from_cloud(normalized.pts), tensor_from_cloud(template_pts));
  const geom::Cloud deformed = cloud_from_tensor(out.deformed->value);
  const Eigen::Vector3d size_norm = out.head.size->value.v.matrix();
  const Eigen::Vector3d centroid = out.coarse.centroid->value.v.matrix();
  if (net.cfg.regress_center) {
    const Eigen::Vector3d center = out.head.center->value.v.matrix();
    return recover_pose_size_direct(template_pts, deformed, center, size_norm, centroid, rec);
  }
  return recover_pose_size(template_pts, deformed, cloud_from_tensor(out.head.offsets->value),
                           size_norm, cloud_from_tensor(out.coarse.centered->value), centroid, rec);
}

nn::Tensor tensor_from_cloud(const geom::Cloud& c) { return nn::Tensor::from_matrix(c); }

geom::Cloud cloud_from_tensor(const nn::Tensor& t) {
  if (t.cols() != 3) throw ShapeMismatch("cloud_from_tensor: expected 3 columns");
  return t.mat();
}

void save_model(const std::filesystem::path& path, const SarNetParams& net,
                const nn::OptimizerConfig& opt, const nlohmann::json& extra) {
  nlohmann::json header = extra;
  header["kind"] = "copse-checkpoint";
  header["model"] = net.cfg.to_json();
  header["optimizer"] = opt.to_json();
  nn::save_params(path, net.parameters(), header);
}

SarNetParams load_model(const std::filesystem::path& path, nlohmann::json* header_out) {
  nlohmann::json header = nn::peek_header(path);
  if (header.value("kind", "") != "copse-checkpoint")
    throw IoError("checkpoint: not a model checkpoint: " + path.string());
  SarNetParams net(ModelConfig::from_json(header.at("model")));
  nn::load_params(path, net.parameters());
  if (header_out) *header_out = std::move(header);
  return net;
}

}  // namespace copse::sar

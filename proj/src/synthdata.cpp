#include "copse/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>

#include "copse/ply.hpp"

namespace copse::synth {

namespace {

constexpr std::uint64_t kTemplateSeedBase = 0xC0503EED5ULL;
constexpr double kPi = std::numbers::pi;

struct Part {
  double area;
  std::function<void(Rng&, Eigen::Vector3d&, Eigen::Vector3d&)> draw;
};

void draw_disk(Rng& rng, double radius_lo, double radius_hi, double y, double ny,
               Eigen::Vector3d& p, Eigen::Vector3d& n) {
  const double r = std::sqrt(rng.uniform(radius_lo * radius_lo, radius_hi * radius_hi));
  const double a = rng.uniform(0.0, 2.0 * kPi);
  p = {r * std::cos(a), y, r * std::sin(a)};
  n = {0.0, ny, 0.0};
}

void draw_wall(Rng& rng, double radius, double y_lo, double y_hi, double n_sign,
               Eigen::Vector3d& p, Eigen::Vector3d& n) {
  const double a = rng.uniform(0.0, 2.0 * kPi);
  p = {radius * std::cos(a), rng.uniform(y_lo, y_hi), radius * std::sin(a)};
  n = {n_sign * std::cos(a), 0.0, n_sign * std::sin(a)};
}

// Oriented cuboid faces: center, orthonormal axes, half extents. Appends six
// parts, one per face.
void add_cuboid(std::vector<Part>& parts, const Eigen::Vector3d& center, const Eigen::Matrix3d& axes,
                const Eigen::Vector3d& half) {
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    const double area = 4.0 * half(u) * half(v);
    for (double side : {-1.0, 1.0}) {
      parts.push_back(Part{area, [=](Rng& rng, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                             Eigen::Vector3d local = Eigen::Vector3d::Zero();
                             local(axis) = side * half(axis);
                             local(u) = rng.uniform(-half(u), half(u));
                             local(v) = rng.uniform(-half(v), half(v));
                             p = center + axes * local;
                             n = side * axes.col(axis);
                           }});
    }
  }
}

std::vector<Part> shape_parts(Category cat) {
  std::vector<Part> parts;
  switch (cat) {
    case Category::cyl: {
      // Bottle: body + shoulder frustum + neck + caps, rotationally symmetric
      // about +y, top/bottom asymmetric so the axis direction is observable.
      const double rb = 0.38, rn = 0.15;
      const double body_lo = -0.85, body_hi = 0.25, shoulder_hi = 0.55, neck_hi = 0.85;
      const double slant = std::hypot(rb - rn, shoulder_hi - body_hi);
      parts.push_back({2.0 * kPi * rb * (body_hi - body_lo),
                       [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_wall(r, rb, body_lo, body_hi, 1.0, p, n);
                       }});
      parts.push_back({kPi * (rb + rn) * slant,
                       [=](Rng& rng, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         const double t = rng.uniform(0.0, 1.0);
                         const double rad = rb + (rn - rb) * t;
                         const double a = rng.uniform(0.0, 2.0 * kPi);
                         p = {rad * std::cos(a), body_hi + (shoulder_hi - body_hi) * t, rad * std::sin(a)};
                         n = Eigen::Vector3d(std::cos(a) * (shoulder_hi - body_hi), rb - rn,
                                             std::sin(a) * (shoulder_hi - body_hi))
                                 .normalized();
                       }});
      parts.push_back({2.0 * kPi * rn * (neck_hi - shoulder_hi),
                       [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_wall(r, rn, shoulder_hi, neck_hi, 1.0, p, n);
                       }});
      parts.push_back({kPi * rn * rn, [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_disk(r, 0.0, rn, neck_hi, 1.0, p, n);
                       }});
      parts.push_back({kPi * rb * rb, [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_disk(r, 0.0, rb, body_lo, -1.0, p, n);
                       }});
      break;
    }
    case Category::bowl: {
      // Open hemispherical shell, rim up.
      const double ro = 0.95, ri = 0.85;
      auto hemi = [](Rng& rng, double radius, double n_sign, Eigen::Vector3d& p, Eigen::Vector3d& n) {
        const double y = -radius * rng.uniform();
        const double rho = std::sqrt(std::max(radius * radius - y * y, 0.0));
        const double a = rng.uniform(0.0, 2.0 * kPi);
        p = {rho * std::cos(a), y, rho * std::sin(a)};
        n = n_sign * p.normalized();
      };
      parts.push_back({2.0 * kPi * ro * ro, [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         hemi(r, ro, 1.0, p, n);
                       }});
      parts.push_back({2.0 * kPi * ri * ri, [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         hemi(r, ri, -1.0, p, n);
                       }});
      parts.push_back({kPi * (ro * ro - ri * ri), [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_disk(r, ri, ro, 0.0, 1.0, p, n);
                       }});
      break;
    }
    case Category::box: {
      // Open laptop: base slab + tilted screen slab hinged at the back edge.
      // Mirror symmetric across x = 0; no 180-degree rotational self-map.
      const double alpha = 20.0 * kPi / 180.0;
      const Eigen::Vector3d base_half(0.55, 0.06, 0.42);
      add_cuboid(parts, Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity(), base_half);
      const double screen_len = 0.85, screen_th = 0.03;
      const Eigen::Vector3d u(0.0, std::cos(alpha), -std::sin(alpha));
      const Eigen::Vector3d w(0.0, std::sin(alpha), std::cos(alpha));
      Eigen::Matrix3d axes;
      axes.col(0) = Eigen::Vector3d::UnitX();
      axes.col(1) = u;
      axes.col(2) = w;
      const Eigen::Vector3d hinge(0.0, base_half.y(), -base_half.z());
      add_cuboid(parts, hinge + 0.5 * screen_len * u, axes,
                 {base_half.x(), 0.5 * screen_len, screen_th});
      break;
    }
    case Category::mug: {
      // Open cup + handle. The handle arc sits slightly off the x = 0 plane
      // (weak reflectional symmetry).
      const double rw = 0.42, ri = 0.36, y_top = 0.5, y_bot = -0.5, y_ibot = -0.38;
      parts.push_back({2.0 * kPi * rw * (y_top - y_bot),
                       [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_wall(r, rw, y_bot, y_top, 1.0, p, n);
                       }});
      parts.push_back({2.0 * kPi * ri * (y_top - y_ibot),
                       [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_wall(r, ri, y_ibot, y_top, -1.0, p, n);
                       }});
      parts.push_back({kPi * rw * rw, [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_disk(r, 0.0, rw, y_bot, -1.0, p, n);
                       }});
      parts.push_back({kPi * ri * ri, [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_disk(r, 0.0, ri, y_ibot, 1.0, p, n);
                       }});
      parts.push_back({kPi * (rw * rw - ri * ri), [=](Rng& r, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         draw_disk(r, ri, rw, y_top, 1.0, p, n);
                       }});
      const double xh = 0.03, arc_r = 0.30, tube_r = 0.055;
      const double phi_max = 110.0 * kPi / 180.0;
      parts.push_back({arc_r * 2.0 * phi_max * 2.0 * kPi * tube_r,
                       [=](Rng& rng, Eigen::Vector3d& p, Eigen::Vector3d& n) {
                         const double phi = rng.uniform(-phi_max, phi_max);
                         const double psi = rng.uniform(0.0, 2.0 * kPi);
                         const Eigen::Vector3d ring(xh, arc_r * std::sin(phi), rw + arc_r * std::cos(phi));
                         const Eigen::Vector3d er(0.0, std::sin(phi), std::cos(phi));
                         n = std::cos(psi) * er + std::sin(psi) * Eigen::Vector3d::UnitX();
                         p = ring + tube_r * n;
                       }});
      break;
    }
  }
  return parts;
}

SurfacePoints sample_raw(Category cat, int count, Rng& rng) {
  const std::vector<Part> parts = shape_parts(cat);
  double total = 0.0;
  for (const Part& p : parts) total += p.area;
  SurfacePoints out;
  out.points.resize(count, 3);
  out.normals.resize(count, 3);
  for (int i = 0; i < count; ++i) {
    double pick = rng.uniform() * total;
    std::size_t which = 0;
    while (which + 1 < parts.size() && pick > parts[which].area) {
      pick -= parts[which].area;
      ++which;
    }
    Eigen::Vector3d p, n;
    parts[which].draw(rng, p, n);
    out.points.row(i) = p.transpose();
    out.normals.row(i) = n.transpose();
  }
  return out;
}

geom::SymmetrySpec category_symmetry(Category cat) {
  switch (cat) {
    case Category::cyl:
    case Category::bowl:
      return geom::SymmetrySpec::rotational(Eigen::Vector3d::UnitY());
    default:
      return geom::SymmetrySpec::reflectional(Eigen::Vector3d::UnitX());
  }
}

}  // namespace

const std::vector<std::string>& category_names() {
  static const std::vector<std::string> names{"cyl", "bowl", "box", "mug"};
  return names;
}

Category category_from_name(const std::string& name) {
  const auto& names = category_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Category>(i);
  throw InvalidCount("unknown category: " + name);
}

std::string to_string(Category cat) { return category_names()[static_cast<std::size_t>(cat)]; }

SurfacePoints CategoryTemplate::sample_canonical(int n, Rng& rng) const {
  SurfacePoints s = sample_raw(category, n, rng);
  s.points = (s.points.rowwise() - shift.transpose()) * scale;
  return s;
}

CategoryTemplate make_template(Category cat, int dense_count, int n_template) {
  CategoryTemplate t;
  t.id = to_string(cat);
  t.category = cat;
  t.symmetry = category_symmetry(cat);

  // Bake the canonical shift and scale from a large fixed sample. Components
  // along the symmetry plane/axis stay exactly zero so the symmetry passes
  // through the origin; the 1% scale margin keeps later samples inside the
  // unit ball.
  Rng canon_rng(Rng::mix(kTemplateSeedBase, static_cast<std::uint64_t>(cat) * 2 + 1));
  SurfacePoints big = sample_raw(cat, 200000, canon_rng);
  Eigen::Vector3d c = big.points.colwise().mean().transpose();
  c.x() = 0.0;
  if (t.symmetry.kind == geom::SymmetrySpec::Kind::rotational) c.z() = 0.0;
  t.shift = c;
  const double max_r =
      std::sqrt((big.points.rowwise() - c.transpose()).rowwise().squaredNorm().maxCoeff());
  t.scale = 1.0 / (max_r * 1.01);

  Rng dense_rng(Rng::mix(kTemplateSeedBase, static_cast<std::uint64_t>(cat) * 2));
  t.dense = t.sample_canonical(dense_count, dense_rng).points;
  t.kc = geom::fps_sample(geom::PointCloud(t.dense, geom::Frame::object), n_template).pts;
  return t;
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"sigma", sigma},
          {"jitter", jitter},
          {"dense_count", dense_count},
          {"n_observed", n_observed},
          {"dropout", dropout},
          {"min_diameter", min_diameter},
          {"max_diameter", max_diameter},
          {"min_survivors", min_survivors}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.sigma = j.at("sigma");
  c.jitter = j.at("jitter");
  c.dense_count = j.at("dense_count");
  c.n_observed = j.at("n_observed");
  c.dropout = j.at("dropout");
  c.min_diameter = j.at("min_diameter");
  c.max_diameter = j.at("max_diameter");
  c.min_survivors = j.at("min_survivors");
  return c;
}

std::vector<int> cull_backfaces(const SurfacePoints& surface, const Eigen::Vector3d& view_dir) {
  std::vector<int> keep;
  keep.reserve(surface.points.rows());
  const Eigen::VectorXd facing = surface.normals * view_dir;
  for (int i = 0; i < surface.points.rows(); ++i)
    if (facing(i) < 0.0) keep.push_back(i);
  return keep;
}

geom::Cloud resample_cloud(const geom::Cloud& c, int n, Rng& rng) {
  const int m = static_cast<int>(c.rows());
  if (n < 1 || m < 1) throw InvalidCount("resample_cloud: need n >= 1 and a non-empty cloud");
  if (n == m) return c;
  geom::Cloud out(n, 3);
  if (n < m) {
    // partial Fisher-Yates: n distinct indices in selection order
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    for (int i = 0; i < n; ++i) {
      const int j = i + rng.index(m - i);
      std::swap(idx[i], idx[j]);
      out.row(i) = c.row(idx[i]);
    }
  } else {
    out.topRows(m) = c;
    for (int i = m; i < n; ++i) out.row(i) = c.row(rng.index(m));
  }
  return out;
}

void finalize_instance(InstanceSample& s, const CategoryTemplate& tmpl) {
  auto [norm, rec] = geom::normalize_cloud(s.observed);
  s.rec = rec;
  s.observed_norm = std::move(norm);
  s.center_norm = (s.pose.translation - rec.centroid) / rec.scale;
  s.size_norm = s.size / rec.scale;
  s.diameter = s.size.norm();

  // Symmetric counterpart of each observed point, via the object frame.
  const geom::Cloud obj =
      (s.observed.pts.rowwise() - s.pose.translation.transpose()) * s.pose.rotation;
  const geom::PointCloud sym_obj =
      geom::make_symmetric_gt(geom::PointCloud(obj, geom::Frame::object), tmpl.symmetry);
  geom::Cloud sym_cam = sym_obj.pts * s.pose.rotation.transpose();
  sym_cam.rowwise() += s.pose.translation.transpose();
  s.gt_symmetric = (sym_cam.rowwise() - rec.centroid.transpose()) / rec.scale;

  s.gt_deformed = tmpl.kc * s.pose.rotation.transpose();

  const int n = s.observed.size();
  geom::Cloud g_raw(2 * n, 3);
  g_raw.topRows(n) = s.observed_norm.pts;
  g_raw.bottomRows(n) = s.gt_symmetric;
  s.gt_offsets = -(g_raw.rowwise() - s.center_norm.transpose());
}

InstanceSample generate_instance(const CategoryTemplate& tmpl, std::uint64_t seed,
                                 const GeneratorConfig& cfg) {
  Rng rng(seed);
  const bool rotational = tmpl.symmetry.kind == geom::SymmetrySpec::Kind::rotational;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::Vector3d scales;
    if (rotational) {
      // equal extents perpendicular to the axis keep the instance rotationally
      // symmetric (and box comparisons spin-invariant)
      const double sr = 1.0 + cfg.jitter * (2.0 * rng.uniform() - 1.0);
      const double sy = 1.0 + cfg.jitter * (2.0 * rng.uniform() - 1.0);
      scales = {sr, sy, sr};
    } else {
      for (int a = 0; a < 3; ++a) scales(a) = 1.0 + cfg.jitter * (2.0 * rng.uniform() - 1.0);
    }
    const double diameter = rng.uniform(cfg.min_diameter, cfg.max_diameter);
    geom::RigidTransform pose;
    pose.rotation = geom::random_rotation(rng);
    pose.translation = {rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25), rng.uniform(0.6, 1.2)};

    SurfacePoints surf = tmpl.sample_canonical(cfg.dense_count, rng);
    for (int i = 0; i < surf.points.rows(); ++i) {
      surf.points.row(i) = surf.points.row(i).cwiseProduct(scales.transpose());
      surf.normals.row(i) = surf.normals.row(i).cwiseQuotient(scales.transpose()).normalized();
    }
    const double max_r = std::sqrt(surf.points.rowwise().squaredNorm().maxCoeff());
    surf.points *= diameter / (2.0 * max_r);
    const Eigen::Vector3d size = 2.0 * surf.points.cwiseAbs().colwise().maxCoeff().transpose();

    SurfacePoints cam;
    cam.points = surf.points * pose.rotation.transpose();
    cam.points.rowwise() += pose.translation.transpose();
    cam.normals = surf.normals * pose.rotation.transpose();

    std::vector<int> keep = cull_backfaces(cam, pose.translation.normalized());
    std::vector<int> kept;
    kept.reserve(keep.size());
    for (int idx : keep)
      if (rng.uniform() >= cfg.dropout) kept.push_back(idx);
    if (static_cast<int>(kept.size()) < std::max(cfg.min_survivors, 1)) continue;

    geom::Cloud visible(kept.size(), 3);
    for (std::size_t i = 0; i < kept.size(); ++i) visible.row(i) = cam.points.row(kept[i]);
    if (cfg.sigma > 0.0) {
      for (int i = 0; i < visible.rows(); ++i) {
        Eigen::Vector3d e(rng.gaussian(), rng.gaussian(), rng.gaussian());
        e *= cfg.sigma;
        const double lim = 3.0 * cfg.sigma;
        if (e.norm() > lim) e *= lim / e.norm();  // keeps points inside the 3-sigma box
        visible.row(i) += e.transpose();
      }
    }

    InstanceSample s;
    s.category = tmpl.id;
    s.seed = seed;
    s.observed = geom::PointCloud(resample_cloud(visible, cfg.n_observed, rng), geom::Frame::camera);
    s.pose = pose;
    s.size = size;
    finalize_instance(s, tmpl);
    return s;
  }
  throw DegenerateView("generate_instance: no pose left enough visible points");
}

namespace {

nlohmann::json symmetry_to_json(const geom::SymmetrySpec& s) {
  const char* kind = s.kind == geom::SymmetrySpec::Kind::rotational ? "rotational"
                     : s.kind == geom::SymmetrySpec::Kind::reflectional ? "reflectional"
                                                                        : "none";
  return {{"kind", kind}, {"direction", {s.direction.x(), s.direction.y(), s.direction.z()}}};
}

geom::SymmetrySpec symmetry_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind");
  Eigen::Vector3d dir(j.at("direction")[0], j.at("direction")[1], j.at("direction")[2]);
  if (kind == "rotational") return geom::SymmetrySpec::rotational(dir);
  if (kind == "reflectional") return geom::SymmetrySpec::reflectional(dir);
  return geom::SymmetrySpec::none();
}

std::uint64_t sample_seed(std::uint64_t dataset_seed, int cat_idx, bool test_split, int index) {
  const std::uint64_t tag = (static_cast<std::uint64_t>(cat_idx) << 40) |
                            (static_cast<std::uint64_t>(test_split ? 1 : 0) << 32) |
                            static_cast<std::uint64_t>(index);
  return Rng::mix(dataset_seed, tag);
}

}  // namespace

std::filesystem::path build_dataset(const std::filesystem::path& out_dir, const DatasetConfig& cfg) {
  if (cfg.n_train < 1) throw InvalidCount("build_dataset: n_train must be >= 1");
  if (cfg.categories.empty()) throw InvalidCount("build_dataset: no categories");
  std::filesystem::create_directories(out_dir / "templates");
  std::filesystem::create_directories(out_dir / "samples");

  nlohmann::json manifest;
  manifest["version"] = kSchemaVersion;
  manifest["seed"] = cfg.seed;
  nlohmann::json cats_cfg = nlohmann::json::array();
  for (Category c : cfg.categories) cats_cfg.push_back(to_string(c));
  manifest["config"] = {{"generator", cfg.gen.to_json()},
                        {"categories", cats_cfg},
                        {"n_train", cfg.n_train},
                        {"n_test", cfg.n_test},
                        {"n_template", cfg.n_template},
                        {"template_dense", cfg.template_dense},
                        {"ascii_ply", cfg.ascii_ply}};

  nlohmann::json categories = nlohmann::json::array();
  nlohmann::json samples = nlohmann::json::array();
  char name_buf[64];

  for (std::size_t ci = 0; ci < cfg.categories.size(); ++ci) {
    const CategoryTemplate tmpl = make_template(cfg.categories[ci], cfg.template_dense, cfg.n_template);
    const std::string tmpl_rel = "templates/" + tmpl.id + ".ply";
    geom::write_ply(out_dir / tmpl_rel, tmpl.dense, !cfg.ascii_ply);
    categories.push_back(
        {{"id", tmpl.id}, {"template_ply", tmpl_rel}, {"symmetry", symmetry_to_json(tmpl.symmetry)}});

    for (int split = 0; split < 2; ++split) {
      const int count = split == 0 ? cfg.n_train : cfg.n_test;
      for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = sample_seed(cfg.seed, static_cast<int>(ci), split == 1, i);
        InstanceSample s = generate_instance(tmpl, seed, cfg.gen);
        std::snprintf(name_buf, sizeof(name_buf), "%s_%s_%06d", tmpl.id.c_str(),
                      split == 0 ? "train" : "test", i);
        const std::string id = name_buf;
        const std::string cloud_rel = "samples/" + id + ".ply";
        const std::string gt_rel = "samples/" + id + ".json";
        geom::write_ply(out_dir / cloud_rel, s.observed.pts, !cfg.ascii_ply);

        nlohmann::json gt;
        nlohmann::json r9 = nlohmann::json::array();
        for (int row = 0; row < 3; ++row)
          for (int col = 0; col < 3; ++col) r9.push_back(s.pose.rotation(row, col));
        gt["R"] = std::move(r9);
        gt["t"] = {s.pose.translation.x(), s.pose.translation.y(), s.pose.translation.z()};
        gt["s"] = {s.size.x(), s.size.y(), s.size.z()};
        gt["seed"] = s.seed;
        std::ofstream gt_out(out_dir / gt_rel);
        if (!gt_out) throw IoError("build_dataset: cannot write " + (out_dir / gt_rel).string());
        gt_out << gt.dump() << "\n";

        samples.push_back({{"id", id},
                           {"category", tmpl.id},
                           {"cloud_ply", cloud_rel},
                           {"gt_json", gt_rel},
                           {"split", split == 0 ? "train" : "test"}});
      }
    }
  }
  manifest["categories"] = std::move(categories);
  manifest["samples"] = std::move(samples);

  const std::filesystem::path manifest_path = out_dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw IoError("build_dataset: cannot write " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  return manifest_path;
}

namespace {

nlohmann::json read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("load_dataset: cannot open " + manifest_path.string());
  nlohmann::json manifest;
  in >> manifest;
  return manifest;
}

std::vector<CategoryTemplate> templates_from_manifest(const std::filesystem::path& dir,
                                                      const nlohmann::json& manifest,
                                                      int n_template) {
  const int nk = n_template > 0 ? n_template : manifest.at("config").at("n_template").get<int>();
  std::vector<CategoryTemplate> out;
  for (const auto& cj : manifest.at("categories")) {
    CategoryTemplate t;
    t.id = cj.at("id");
    t.category = category_from_name(t.id);
    t.symmetry = symmetry_from_json(cj.at("symmetry"));
    t.dense = geom::read_ply(dir / cj.at("template_ply").get<std::string>());
    t.kc = geom::fps_sample(geom::PointCloud(t.dense, geom::Frame::object), nk).pts;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::vector<CategoryTemplate> load_templates(const std::filesystem::path& manifest_path,
                                             int n_template) {
  return templates_from_manifest(manifest_path.parent_path(), read_manifest(manifest_path),
                                 n_template);
}

Dataset load_dataset(const std::filesystem::path& manifest_path, int n_template) {
  Dataset ds;
  ds.dir = manifest_path.parent_path();
  ds.manifest = read_manifest(manifest_path);
  ds.categories = templates_from_manifest(ds.dir, ds.manifest, n_template);

  for (const auto& sj : ds.manifest.at("samples")) {
    InstanceSample s;
    s.category = sj.at("category");
    int cat_idx = -1;
    for (std::size_t i = 0; i < ds.categories.size(); ++i)
      if (ds.categories[i].id == s.category) cat_idx = static_cast<int>(i);
    if (cat_idx < 0) throw IoError("load_dataset: sample references unknown category " + s.category);

    s.observed = geom::PointCloud(geom::read_ply(ds.dir / sj.at("cloud_ply").get<std::string>()),
                                  geom::Frame::camera);
    std::ifstream gt_in(ds.dir / sj.at("gt_json").get<std::string>());
    if (!gt_in) throw IoError("load_dataset: missing gt file for sample " + sj.at("id").get<std::string>());
    nlohmann::json gt;
    gt_in >> gt;
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) s.pose.rotation(row, col) = gt.at("R")[3 * row + col];
    for (int a = 0; a < 3; ++a) {
      s.pose.translation(a) = gt.at("t")[a];
      s.size(a) = gt.at("s")[a];
    }
    s.seed = gt.at("seed");
    finalize_instance(s, ds.categories[cat_idx]);

    ds.sample_category.push_back(cat_idx);
    ds.sample_split.push_back(sj.at("split"));
    ds.sample_id.push_back(sj.at("id"));
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace copse::synth

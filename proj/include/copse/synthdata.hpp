#pragma once
// Procedural generator of category templates and pose-annotated partial-view
// instances, plus dataset serialization (PLY clouds + JSON ground truth +
// manifest).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "copse/geometry.hpp"

namespace copse::synth {

// Desk-scale categories: "cyl" (bottle-like) and "bowl" are rotationally
// symmetric about +y; "box" (laptop-like) and "mug" are reflectionally
// symmetric across the x = 0 plane. The mug is only weakly symmetric: its
// handle is offset slightly off the plane.
enum class Category { cyl, bowl, box, mug };

const std::vector<std::string>& category_names();
Category category_from_name(const std::string& name);
std::string to_string(Category cat);

struct SurfacePoints {
  geom::Cloud points;
  geom::Cloud normals;  // unit outward normals
};

// Canonical sampler for one category. The canonical frame has the symmetry
// axis/plane through the origin exactly; centroid offset and overall scale are
// baked once from a large fixed-seed sample so the centroid sits at the origin
// and the max radius stays below 1.
struct CategoryTemplate {
  std::string id;
  Category category{Category::cyl};
  geom::SymmetrySpec symmetry;
  Eigen::Vector3d shift{Eigen::Vector3d::Zero()};  // canonical p = (raw - shift) * scale
  double scale = 1.0;
  geom::Cloud dense;  // canonical dense surface sample
  geom::Cloud kc;     // template cloud = fps_sample(dense, n_template)

  SurfacePoints sample_canonical(int n, Rng& rng) const;
};

// Templates are seeded by a fixed constant so every dataset shares the same
// canonical template clouds.
CategoryTemplate make_template(Category cat, int dense_count, int n_template);

struct GeneratorConfig {
  double sigma = 0.002;       // isotropic depth noise (meters), norm-clamped at 3 sigma
  double jitter = 0.2;        // per-axis scale jitter half-range
  int dense_count = 4096;     // surface samples per instance before culling
  int n_observed = 1024;      // observed cloud size after resampling
  double dropout = 0.1;       // random point dropout after culling
  double min_diameter = 0.1;  // meters
  double max_diameter = 0.3;
  int min_survivors = 64;     // below this the pose is redrawn

  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

// One synthetic example carrying the observed cloud and every ground truth.
struct InstanceSample {
  std::string category;
  std::uint64_t seed = 0;
  geom::PointCloud observed;  // camera frame, meters
  geom::RigidTransform pose;  // object -> camera
  Eigen::Vector3d size{Eigen::Vector3d::Ones()};  // full extents, meters

  // Derived fields, recomputed on load from the stored cloud + pose + template.
  geom::NormalizationRecord rec;
  geom::PointCloud observed_norm;                     // normalized frame
  geom::Cloud gt_symmetric;                           // normalized frame, index-corresponded
  geom::Cloud gt_deformed;                            // template in the observed rotational state
  geom::Cloud gt_offsets;                             // [2N,3] center offsets, centralized frame
  Eigen::Vector3d center_norm{Eigen::Vector3d::Zero()};  // object center, normalized frame
  Eigen::Vector3d size_norm{Eigen::Vector3d::Ones()};
  double diameter = 0.0;  // ||size||_2
};

// Fills all derived fields from observed + pose + size and the template.
void finalize_instance(InstanceSample& s, const CategoryTemplate& tmpl);

InstanceSample generate_instance(const CategoryTemplate& tmpl, std::uint64_t seed,
                                 const GeneratorConfig& cfg);

// Indices of camera-frame surface points facing the camera (normal . view < 0).
std::vector<int> cull_backfaces(const SurfacePoints& surface, const Eigen::Vector3d& view_dir);

// Random subsample without replacement (n < N) or full cloud plus random
// repeats (n > N); n == N returns the cloud unchanged.
geom::Cloud resample_cloud(const geom::Cloud& c, int n, Rng& rng);

struct DatasetConfig {
  std::vector<Category> categories{Category::cyl, Category::bowl, Category::box, Category::mug};
  int n_train = 500;
  int n_test = 0;
  std::uint64_t seed = 42;
  GeneratorConfig gen;
  int n_template = 36;
  int template_dense = 2048;  // dense template cloud size written to disk
  bool ascii_ply = false;
};

// Writes templates, per-sample clouds and ground-truth files, and the
// manifest; returns the manifest path.
std::filesystem::path build_dataset(const std::filesystem::path& out_dir, const DatasetConfig& cfg);

struct Dataset {
  std::filesystem::path dir;
  nlohmann::json manifest;
  std::vector<CategoryTemplate> categories;  // kc resampled at load-time n_template
  std::vector<InstanceSample> samples;
  std::vector<int> sample_category;  // index into categories
  std::vector<std::string> sample_split;
  std::vector<std::string> sample_id;
};

// n_template <= 0 keeps the value recorded in the manifest.
Dataset load_dataset(const std::filesystem::path& manifest_path, int n_template = 0);

// Templates only (no samples); same n_template rule as load_dataset.
std::vector<CategoryTemplate> load_templates(const std::filesystem::path& manifest_path,
                                             int n_template = 0);

}  // namespace copse::synth

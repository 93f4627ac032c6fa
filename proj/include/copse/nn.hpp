#pragma once
// Reverse-mode differentiable tensor core: enough for shared point MLPs,
// max-pooling over points, concatenation, and L1 losses. All math is f64 and
// deterministic; backward replays a per-graph tape in reverse creation order.

#include <Eigen/Core>
#include <deque>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "copse/common.hpp"

namespace copse::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// Flat f64 buffer plus a shape. Rank 0 (empty shape) is a scalar; for matrix
// views the trailing dimension is the column count and all leading dimensions
// collapse into rows.
struct Tensor {
  std::vector<int> shape;
  Eigen::ArrayXd v;

  Tensor() = default;
  static Tensor zeros(std::vector<int> s);
  static Tensor uninit(std::vector<int> s);  // allocated but not filled
  static Tensor scalar(double x);
  static Tensor from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m);

  int numel() const { return static_cast<int>(v.size()); }
  bool is_scalar() const { return v.size() == 1 && shape.empty(); }
  int cols() const { return shape.empty() ? 1 : shape.back(); }
  int rows() const { return cols() == 0 ? 0 : numel() / cols(); }
  double value() const;  // scalar access, throws NotScalar otherwise

  MatMap mat() { return MatMap(v.data(), rows(), cols()); }
  ConstMatMap mat() const { return ConstMatMap(v.data(), rows(), cols()); }
  Eigen::MatrixXd to_matrix() const { return mat(); }
};

bool same_shape(const Tensor& a, const Tensor& b);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(Tensor::zeros(shape)), grad(Tensor::zeros(shape)) {}
  void zero_grad() { grad.v.setZero(); }
};

struct LinearLayer {
  Parameter weight;  // [out, in]
  Parameter bias;    // [out]
  int in = 0, out = 0;

  LinearLayer() = default;
  LinearLayer(const std::string& name, int in_dim, int out_dim)
      : weight(name + ".weight", {out_dim, in_dim}),
        bias(name + ".bias", {out_dim}),
        in(in_dim),
        out(out_dim) {}

  // He-normal weights, zero bias.
  void init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / static_cast<double>(in));
    for (int i = 0; i < weight.value.numel(); ++i) weight.value.v(i) = std * rng.gaussian();
    bias.value.v.setZero();
  }
  std::vector<Parameter*> params() { return {&weight, &bias}; }
};

class Graph;
struct Node;
using Var = Node*;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool has_grad = false;
  int id = 0;
  std::function<void()> backward;
};

// Tape of operations. Nodes live for the lifetime of the graph; parameters
// referenced by ops receive gradient accumulation directly (callers reset
// Parameter::grad between steps).
class Graph {
 public:
  // Leaf with gradient tracking (gradient readable from the node afterwards).
  Var variable(Tensor v);
  // Leaf without gradient.
  Var constant(Tensor v);

  // y = x W^T + b over the trailing dimension.
  Var linear(Var x, LinearLayer& layer);
  Var relu(Var x);
  // [N,C] -> [C]; backward routes each channel's gradient to the first argmax row.
  Var maxpool_rows(Var x);
  // [C] -> [N,C]
  Var broadcast_rows(Var x, int n);
  // Column-wise concatenation; rank-1 inputs concatenate into a rank-1 output.
  Var hcat(const std::vector<Var>& xs);
  // Row-wise concatenation of matrices with equal column counts.
  Var vcat(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var abs(Var x);
  Var scale(Var x, double c);
  Var sum(Var x);       // scalar
  Var mean_rows(Var x); // [N,C] -> [C]
  // Minimum of scalar nodes; gradient flows only to the first argmin.
  Var min_of(const std::vector<Var>& xs);
  // Mean over all elements of |pred - gt|; the subgradient at 0 is 0.
  Var l1_loss(Var pred, Var gt);

  // Populates gradients for every node and parameter reachable from loss.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  Var make(Tensor value, bool requires_grad);
  static void accum(Var n, const Eigen::Ref<const Eigen::ArrayXd>& g);

  std::deque<Node> nodes_;
};

// Adam with a stepped exponential learning-rate schedule.
struct OptimizerConfig {
  double base_lr = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay = 0.75;
  int decay_period = 4;  // epochs per decay step

  nlohmann::json to_json() const;
  static OptimizerConfig from_json(const nlohmann::json& j);
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, OptimizerConfig cfg);

  double lr_for_epoch(int epoch) const {
    return cfg_.base_lr * std::pow(cfg_.decay, epoch / cfg_.decay_period);
  }
  void step(int epoch);
  void zero_grad();
  long steps() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  OptimizerConfig cfg_;
  long t_ = 0;
  std::vector<Eigen::ArrayXd> m_, v_;
};

// Checkpoint format: one-line JSON header (schema version, extra config, layer
// names and shapes, optimizer hyperparameters), then a raw little-endian f64
// blob with parameter values in header order.
void save_params(const std::filesystem::path& path, const std::vector<const Parameter*>& params,
                 const nlohmann::json& header_extra);
nlohmann::json load_params(const std::filesystem::path& path, const std::vector<Parameter*>& params);
nlohmann::json peek_header(const std::filesystem::path& path);

}  // namespace copse::nn

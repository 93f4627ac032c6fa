#include "copse/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace copse::nn {

namespace {

int product(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

void alloc_grad(Var n) {
  n->grad.shape = n->value.shape;
  n->grad.v.resize(n->value.numel());
}

// First touch assigns, later touches accumulate; avoids zero-filling buffers
// that are fully overwritten.
template <class E>
void accum_arr(Var n, const E& e) {
  if (!n->has_grad) {
    alloc_grad(n);
    n->grad.v = e;
    n->has_grad = true;
  } else {
    n->grad.v += e;
  }
}

template <class E>
void accum_mat(Var n, const E& e) {
  if (!n->has_grad) {
    alloc_grad(n);
    n->grad.mat().noalias() = e;
    n->has_grad = true;
  } else {
    n->grad.mat().noalias() += e;
  }
}

// Zero-initialized gradient for scatter-style backward passes.
MatMap zeroed_grad_mat(Var n) {
  if (!n->has_grad) {
    alloc_grad(n);
    n->grad.v.setZero();
    n->has_grad = true;
  }
  return n->grad.mat();
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> s) {
  Tensor t;
  t.shape = std::move(s);
  t.v = Eigen::ArrayXd::Zero(product(t.shape));
  return t;
}

Tensor Tensor::uninit(std::vector<int> s) {
  Tensor t;
  t.shape = std::move(s);
  t.v.resize(product(t.shape));
  return t;
}

Tensor Tensor::scalar(double x) {
  Tensor t;
  t.v = Eigen::ArrayXd::Constant(1, x);
  return t;
}

Tensor Tensor::from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Tensor t;
  t.shape = {static_cast<int>(m.rows()), static_cast<int>(m.cols())};
  t.v.resize(m.size());
  t.mat() = m;
  return t;
}

double Tensor::value() const {
  if (v.size() != 1) throw NotScalar("tensor is not a scalar");
  return v(0);
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

Var Graph::make(Tensor value, bool requires_grad) {
  nodes_.emplace_back();
  Node& n = nodes_.back();
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.id = static_cast<int>(nodes_.size()) - 1;
  return &n;
}

Var Graph::variable(Tensor v) { return make(std::move(v), true); }

Var Graph::constant(Tensor v) { return make(std::move(v), false); }

Var Graph::linear(Var x, LinearLayer& layer) {
  if (x->value.cols() != layer.in)
    throw ShapeMismatch("linear: input has " + std::to_string(x->value.cols()) +
                        " channels, layer expects " + std::to_string(layer.in));
  std::vector<int> out_shape = x->value.shape;
  out_shape.back() = layer.out;
  Tensor out = Tensor::uninit(std::move(out_shape));
  out.mat().noalias() = x->value.mat() * layer.weight.value.mat().transpose();
  out.mat().rowwise() += layer.bias.value.mat().row(0);
  Var y = make(std::move(out), true);
  y->backward = [y, x, &layer]() {
    auto dy = y->grad.mat();
    if (x->requires_grad) accum_mat(x, dy * layer.weight.value.mat());
    layer.weight.grad.mat().noalias() += dy.transpose() * x->value.mat();
    layer.bias.grad.mat().row(0) += dy.colwise().sum();
  };
  return y;
}

Var Graph::relu(Var x) {
  Tensor out = Tensor::uninit(x->value.shape);
  out.v = x->value.v.max(0.0);
  Var y = make(std::move(out), x->requires_grad);
  if (y->requires_grad)
    y->backward = [y, x]() { accum_arr(x, y->grad.v * (x->value.v > 0.0).cast<double>()); };
  return y;
}

Var Graph::maxpool_rows(Var x) {
  if (x->value.shape.size() != 2) throw ShapeMismatch("maxpool_rows: rank-2 input required");
  const int rows = x->value.rows(), cols = x->value.cols();
  if (rows < 1) throw EmptyInput("maxpool_rows: need at least one row");
  Tensor out = Tensor::uninit({cols});
  std::vector<int> argmax(cols, 0);
  {
    auto m = x->value.mat();
    out.mat().row(0) = m.row(0);
    for (int r = 1; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (m(r, c) > out.v(c)) {  // strict: first max wins ties
          out.v(c) = m(r, c);
          argmax[c] = r;
        }
  }
  Var y = make(std::move(out), x->requires_grad);
  if (y->requires_grad)
    y->backward = [y, x, argmax = std::move(argmax)]() {
      MatMap gx = zeroed_grad_mat(x);
      for (int c = 0; c < static_cast<int>(argmax.size()); ++c) gx(argmax[c], c) += y->grad.v(c);
    };
  return y;
}

Var Graph::broadcast_rows(Var x, int n) {
  if (x->value.shape.size() != 1) throw ShapeMismatch("broadcast_rows: rank-1 input required");
  const int c = x->value.numel();
  Tensor out = Tensor::uninit({n, c});
  out.mat().rowwise() = x->value.mat().row(0);
  Var y = make(std::move(out), x->requires_grad);
  if (y->requires_grad)
    y->backward = [y, x]() { accum_mat(x, y->grad.mat().colwise().sum()); };
  return y;
}

Var Graph::hcat(const std::vector<Var>& xs) {
  if (xs.empty()) throw EmptyInput("hcat: no inputs");
  const bool rank1 = xs[0]->value.shape.size() == 1;
  const int rows = xs[0]->value.rows();
  int cols = 0;
  bool rg = false;
  for (Var x : xs) {
    if ((x->value.shape.size() == 1) != rank1 || (!rank1 && x->value.shape.size() != 2) ||
        x->value.rows() != rows)
      throw ShapeMismatch("hcat: incompatible input shapes");
    cols += x->value.cols();
    rg = rg || x->requires_grad;
  }
  Tensor out = rank1 ? Tensor::uninit({cols}) : Tensor::uninit({rows, cols});
  int off = 0;
  for (Var x : xs) {
    out.mat().middleCols(off, x->value.cols()) = x->value.mat();
    off += x->value.cols();
  }
  Var y = make(std::move(out), rg);
  if (rg)
    y->backward = [y, xs]() {
      int off2 = 0;
      for (Var x : xs) {
        const int c = x->value.cols();
        if (x->requires_grad) accum_mat(x, y->grad.mat().middleCols(off2, c));
        off2 += c;
      }
    };
  return y;
}

Var Graph::vcat(Var a, Var b) {
  if (a->value.shape.size() != 2 || b->value.shape.size() != 2 || a->value.cols() != b->value.cols())
    throw ShapeMismatch("vcat: rank-2 inputs with equal column counts required");
  const int ra = a->value.rows(), rb = b->value.rows(), c = a->value.cols();
  Tensor out = Tensor::uninit({ra + rb, c});
  out.mat().topRows(ra) = a->value.mat();
  out.mat().bottomRows(rb) = b->value.mat();
  Var y = make(std::move(out), a->requires_grad || b->requires_grad);
  if (y->requires_grad)
    y->backward = [y, a, b, ra, rb]() {
      if (a->requires_grad) accum_mat(a, y->grad.mat().topRows(ra));
      if (b->requires_grad) accum_mat(b, y->grad.mat().bottomRows(rb));
    };
  return y;
}

Var Graph::add(Var a, Var b) {
  if (!same_shape(a->value, b->value)) throw ShapeMismatch("add: shapes differ");
  Tensor out = Tensor::uninit(a->value.shape);
  out.v = a->value.v + b->value.v;
  Var y = make(std::move(out), a->requires_grad || b->requires_grad);
  if (y->requires_grad)
    y->backward = [y, a, b]() {
      if (a->requires_grad) accum_arr(a, y->grad.v);
      if (b->requires_grad) accum_arr(b, y->grad.v);
    };
  return y;
}

Var Graph::sub(Var a, Var b) {
  if (!same_shape(a->value, b->value)) throw ShapeMismatch("sub: shapes differ");
  Tensor out = Tensor::uninit(a->value.shape);
  out.v = a->value.v - b->value.v;
  Var y = make(std::move(out), a->requires_grad || b->requires_grad);
  if (y->requires_grad)
    y->backward = [y, a, b]() {
      if (a->requires_grad) accum_arr(a, y->grad.v);
      if (b->requires_grad) accum_arr(b, -y->grad.v);
    };
  return y;
}

Var Graph::abs(Var x) {
  Tensor out = Tensor::uninit(x->value.shape);
  out.v = x->value.v.abs();
  Var y = make(std::move(out), x->requires_grad);
  if (y->requires_grad)
    y->backward = [y, x]() {
      accum_arr(x, y->grad.v * x->value.v.sign());  // sign(0) = 0
    };
  return y;
}

Var Graph::scale(Var x, double c) {
  Tensor out = Tensor::uninit(x->value.shape);
  out.v = c * x->value.v;
  Var y = make(std::move(out), x->requires_grad);
  if (y->requires_grad)
    y->backward = [y, x, c]() { accum_arr(x, c * y->grad.v); };
  return y;
}

Var Graph::sum(Var x) {
  Var y = make(Tensor::scalar(x->value.v.sum()), x->requires_grad);
  if (y->requires_grad)
    y->backward = [y, x]() {
      accum_arr(x, Eigen::ArrayXd::Constant(x->value.numel(), y->grad.v(0)));
    };
  return y;
}

Var Graph::mean_rows(Var x) {
  if (x->value.shape.size() != 2) throw ShapeMismatch("mean_rows: rank-2 input required");
  const int rows = x->value.rows();
  if (rows < 1) throw EmptyInput("mean_rows: need at least one row");
  Tensor out = Tensor::uninit({x->value.cols()});
  out.mat().row(0) = x->value.mat().colwise().mean();
  Var y = make(std::move(out), x->requires_grad);
  if (y->requires_grad)
    y->backward = [y, x, rows]() {
      accum_mat(x, (y->grad.mat().row(0) / static_cast<double>(rows)).replicate(rows, 1));
    };
  return y;
}

Var Graph::min_of(const std::vector<Var>& xs) {
  if (xs.empty()) throw EmptyInput("min_of: no inputs");
  int best = 0;
  bool rg = false;
  for (int i = 0; i < static_cast<int>(xs.size()); ++i) {
    if (xs[i]->value.numel() != 1) throw NotScalar("min_of: inputs must be scalars");
    if (xs[i]->value.v(0) < xs[best]->value.v(0)) best = i;  // first min wins ties
    rg = rg || xs[i]->requires_grad;
  }
  Var y = make(Tensor::scalar(xs[best]->value.v(0)), rg);
  Var chosen = xs[best];
  if (rg && chosen->requires_grad)
    y->backward = [y, chosen]() { accum_arr(chosen, y->grad.v); };
  return y;
}

Var Graph::l1_loss(Var pred, Var gt) {
  if (!same_shape(pred->value, gt->value)) throw ShapeMismatch("l1_loss: shapes differ");
  const double n = static_cast<double>(pred->value.numel());
  const Eigen::ArrayXd diff = pred->value.v - gt->value.v;
  Var y = make(Tensor::scalar(diff.abs().sum() / n), pred->requires_grad || gt->requires_grad);
  if (y->requires_grad)
    y->backward = [y, pred, gt, diff, n]() {
      const Eigen::ArrayXd g = y->grad.v(0) / n * diff.sign();
      if (pred->requires_grad) accum_arr(pred, g);
      if (gt->requires_grad) accum_arr(gt, -g);
    };
  return y;
}

void Graph::backward(Var loss) {
  if (loss->value.numel() != 1) throw NotScalar("backward: loss must be a scalar");
  accum_arr(loss, Eigen::ArrayXd::Constant(1, 1.0));
  for (int i = loss->id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward();
  }
}

nlohmann::json OptimizerConfig::to_json() const {
  return {{"base_lr", base_lr}, {"beta1", beta1},   {"beta2", beta2},
          {"eps", eps},         {"decay", decay},   {"decay_period", decay_period}};
}

OptimizerConfig OptimizerConfig::from_json(const nlohmann::json& j) {
  OptimizerConfig c;
  c.base_lr = j.at("base_lr");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.eps = j.at("eps");
  c.decay = j.at("decay");
  c.decay_period = j.at("decay_period");
  return c;
}

Adam::Adam(std::vector<Parameter*> params, OptimizerConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.push_back(Eigen::ArrayXd::Zero(p->value.numel()));
    v_.push_back(Eigen::ArrayXd::Zero(p->value.numel()));
  }
}

void Adam::step(int epoch) {
  ++t_;
  const double lr = lr_for_epoch(epoch);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad.v;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.v.square();
    p.value.v -= lr * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + cfg_.eps);
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void save_params(const std::filesystem::path& path, const std::vector<const Parameter*>& params,
                 const nlohmann::json& header_extra) {
  nlohmann::json header = header_extra;
  header["schema_version"] = kSchemaVersion;
  nlohmann::json layers = nlohmann::json::array();
  for (const Parameter* p : params)
    layers.push_back({{"name", p->name}, {"shape", p->value.shape}});
  header["layers"] = std::move(layers);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open for writing: " + path.string());
  out << header.dump() << "\n";
  for (const Parameter* p : params)
    out.write(reinterpret_cast<const char*>(p->value.v.data()),
              static_cast<std::streamsize>(p->value.numel() * sizeof(double)));
  if (!out) throw IoError("checkpoint: write failed: " + path.string());
}

nlohmann::json peek_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint: missing header: " + path.string());
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded()) throw IoError("checkpoint: malformed header: " + path.string());
  return header;
}

nlohmann::json load_params(const std::filesystem::path& path, const std::vector<Parameter*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint: missing header: " + path.string());
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded()) throw IoError("checkpoint: malformed header: " + path.string());

  const auto& layers = header.at("layers");
  if (layers.size() != params.size()) throw IoError("checkpoint: layer count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& l = layers[i];
    if (l.at("name").get<std::string>() != params[i]->name)
      throw IoError("checkpoint: layer name mismatch at index " + std::to_string(i));
    std::vector<int> shape = l.at("shape").get<std::vector<int>>();
    if (shape != params[i]->value.shape)
      throw IoError("checkpoint: shape mismatch for layer " + params[i]->name);
  }
  for (Parameter* p : params) {
    in.read(reinterpret_cast<char*>(p->value.v.data()),
            static_cast<std::streamsize>(p->value.numel() * sizeof(double)));
    if (!in) throw IoError("checkpoint: truncated blob: " + path.string());
  }
  return header;
}

}  // namespace copse::nn

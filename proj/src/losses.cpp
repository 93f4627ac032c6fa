#include "copse/losses.hpp"

#include <chrono>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <thread>

namespace copse::sar {

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},   {"batch", batch},
          {"base_lr", base_lr}, {"decay", decay},
          {"decay_period", decay_period}, {"warm_epochs", warm_epochs},
          {"sym_rotations", sym_rotations}, {"seed", seed}};
}

TrainSample make_train_sample(const synth::InstanceSample& s, int category_idx,
                              const geom::SymmetrySpec& object_symmetry) {
  TrainSample t;
  t.observed = tensor_from_cloud(s.observed_norm.pts);
  t.gt_deformed = tensor_from_cloud(s.gt_deformed);
  t.gt_symmetric = tensor_from_cloud(s.gt_symmetric);
  t.center_norm = s.center_norm;
  t.size_norm = s.size_norm;
  t.symmetry_world = object_symmetry;
  t.symmetry_world.direction = s.pose.rotation * object_symmetry.direction;
  t.category = category_idx;
  return t;
}

namespace {

// Mean over points of the per-point L1 norm: sum of |residual| / point count.
nn::Var per_point_l1(nn::Graph& g, nn::Var pred, const nn::Tensor& target) {
  if (pred->value.shape != target.shape) throw ShapeMismatch("loss: prediction/target shapes differ");
  nn::Var diff = g.sub(g.constant(target), pred);
  return g.scale(g.sum(g.abs(diff)), 1.0 / static_cast<double>(target.rows()));
}

}  // namespace

nn::Var loss_def(nn::Graph& g, nn::Var deformed, const nn::Tensor& gt,
                 const geom::SymmetrySpec& symmetry_world, int m_rotations) {
  if (symmetry_world.kind != geom::SymmetrySpec::Kind::rotational || m_rotations <= 1)
    return per_point_l1(g, deformed, gt);
  const Eigen::MatrixXd k = gt.mat();
  std::vector<nn::Var> branches;
  branches.reserve(m_rotations);
  for (int j = 0; j < m_rotations; ++j) {
    const double angle = 2.0 * std::numbers::pi * j / m_rotations;
    const Eigen::Matrix3d rot = geom::axis_angle(symmetry_world.direction, angle);
    branches.push_back(per_point_l1(g, deformed, nn::Tensor::from_matrix(k * rot.transpose())));
  }
  return g.min_of(branches);
}

nn::Var loss_sym(nn::Graph& g, nn::Var symmetric, const nn::Tensor& gt) {
  return per_point_l1(g, symmetric, gt);
}

nn::Var loss_cen(nn::Graph& g, nn::Var offsets, const CoarseShape& coarse,
                 const Eigen::Vector3d& center_norm) {
  const int n2 = coarse.raw->value.rows();
  if (offsets->value.rows() != n2) throw ShapeMismatch("loss_cen: offset/coarse counts differ");
  nn::Tensor center_rows = nn::Tensor::zeros({n2, 3});
  center_rows.mat().rowwise() = center_norm.transpose();
  // target_i = center - g'_i; flows back into a predicted coarse shape
  nn::Var target = g.sub(g.constant(center_rows), coarse.raw);
  nn::Var diff = g.sub(target, offsets);
  return g.scale(g.sum(g.abs(diff)), 1.0 / static_cast<double>(n2));
}

nn::Var loss_cen_direct(nn::Graph& g, nn::Var center, const CoarseShape& coarse,
                        const Eigen::Vector3d& center_norm) {
  nn::Tensor c = nn::Tensor::zeros({3});
  c.v = center_norm.array();
  nn::Var target = g.sub(g.constant(c), coarse.centroid);
  return g.sum(g.abs(g.sub(target, center)));
}

nn::Var loss_size(nn::Graph& g, nn::Var size, const Eigen::Vector3d& size_norm) {
  nn::Tensor s = nn::Tensor::zeros({3});
  s.v = size_norm.array();
  return g.sum(g.abs(g.sub(size, g.constant(s))));
}

SampleLossVars sample_losses(nn::Graph& g, SarNetParams& net, const TrainSample& sample,
                             const nn::Tensor& kc, bool teacher_forcing, int m_rotations) {
  SampleLossVars out;
  out.fwd = forward(g, net, sample.observed, kc,
                    teacher_forcing ? &sample.gt_symmetric : nullptr);
  out.def = loss_def(g, out.fwd.deformed, sample.gt_deformed, sample.symmetry_world, m_rotations);
  out.sym = loss_sym(g, out.fwd.symmetric, sample.gt_symmetric);
  out.cen = net.cfg.regress_center
                ? loss_cen_direct(g, out.fwd.head.center, out.fwd.coarse, sample.center_norm)
                : loss_cen(g, out.fwd.head.offsets, out.fwd.coarse, sample.center_norm);
  out.size = loss_size(g, out.fwd.head.size, sample.size_norm);
  out.total = g.add(g.add(g.add(out.def, out.sym), out.cen), out.size);
  return out;
}

LossBreakdown breakdown(const SampleLossVars& v) {
  return LossBreakdown::from_parts(v.def->value.value(), v.sym->value.value(),
                                   v.cen->value.value(), v.size->value.value());
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("COPSE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

TrainResult train(SarNetParams& net, const std::vector<TrainSample>& data,
                  const std::vector<nn::Tensor>& kc_by_category, const TrainConfig& cfg,
                  std::ostream* jsonl) {
  if (data.empty()) throw EmptyDataset("train: empty dataset");
  const int n = static_cast<int>(data.size());
  const int threads = std::min(resolve_threads(cfg.threads), cfg.batch);

  nn::OptimizerConfig opt_cfg;
  opt_cfg.base_lr = cfg.base_lr;
  opt_cfg.decay = cfg.decay;
  opt_cfg.decay_period = cfg.decay_period;
  nn::Adam adam(net.parameters(), opt_cfg);

  // Worker replicas: forward/backward writes layer gradients directly, so each
  // thread owns a full parameter copy and gradients reduce in worker order.
  std::vector<SarNetParams> replicas(threads, net);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(Rng::mix(cfg.seed, 0xE70C000ULL + static_cast<std::uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.index(i + 1)]);

    const bool teacher = epoch < cfg.warm_epochs;
    double sum_def = 0, sum_sym = 0, sum_cen = 0, sum_size = 0;

    for (int start = 0; start < n; start += cfg.batch) {
      const int bn = std::min(cfg.batch, n - start);
      const int active = std::min(threads, bn);
      adam.zero_grad();

      std::vector<LossBreakdown> worker_sum(active);
      auto run = [&](int w) {
        SarNetParams& local = replicas[w];
        local.copy_values_from(net);
        local.zero_grads();
        const int lo = w * bn / active, hi = (w + 1) * bn / active;
        LossBreakdown acc;
        for (int b = lo; b < hi; ++b) {
          const TrainSample& ts = data[order[start + b]];
          nn::Graph g;
          SampleLossVars lv =
              sample_losses(g, local, ts, kc_by_category[ts.category], teacher, cfg.sym_rotations);
          g.backward(g.scale(lv.total, 1.0 / static_cast<double>(bn)));
          const LossBreakdown lb = breakdown(lv);
          acc.def += lb.def;
          acc.sym += lb.sym;
          acc.cen += lb.cen;
          acc.size += lb.size;
        }
        worker_sum[w] = acc;
      };
      if (active == 1) {
        run(0);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(active);
        for (int w = 0; w < active; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
      }

      auto master_params = net.parameters();
      for (int w = 0; w < active; ++w) {
        auto local_params = replicas[w].parameters();
        for (std::size_t p = 0; p < master_params.size(); ++p)
          master_params[p]->grad.v += local_params[p]->grad.v;
        sum_def += worker_sum[w].def;
        sum_sym += worker_sum[w].sym;
        sum_cen += worker_sum[w].cen;
        sum_size += worker_sum[w].size;
      }
      if (!std::isfinite(sum_def + sum_sym + sum_cen + sum_size))
        throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch));
      adam.step(epoch);
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = adam.lr_for_epoch(epoch);
    log.loss = LossBreakdown::from_parts(sum_def / n, sum_sym / n, sum_cen / n, sum_size / n);
    log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (jsonl) {
      nlohmann::json line = {{"epoch", log.epoch},      {"lr", log.lr},
                             {"L_def", log.loss.def},   {"L_sym", log.loss.sym},
                             {"L_cen", log.loss.cen},   {"L_size", log.loss.size},
                             {"L_total", log.loss.total}, {"wall_ms", log.wall_ms}};
      (*jsonl) << line.dump() << "\n";
    }
    result.log.push_back(log);
  }
  return result;
}

GradCheckResult gradcheck_model(SarNetParams& net, const std::vector<TrainSample>& batch,
                                const std::vector<nn::Tensor>& kc_by_category,
                                const GradCheckConfig& cfg) {
  if (batch.empty()) throw EmptyDataset("gradcheck_model: empty batch");
  const double bn = static_cast<double>(batch.size());

  auto loss_value = [&]() {
    double total = 0.0;
    for (const TrainSample& ts : batch) {
      nn::Graph g;
      SampleLossVars lv =
          sample_losses(g, net, ts, kc_by_category[ts.category], cfg.teacher_forcing, cfg.m_rotations);
      total += lv.total->value.value();
    }
    return total / bn;
  };

  net.zero_grads();
  for (const TrainSample& ts : batch) {
    nn::Graph g;
    SampleLossVars lv =
        sample_losses(g, net, ts, kc_by_category[ts.category], cfg.teacher_forcing, cfg.m_rotations);
    g.backward(g.scale(lv.total, 1.0 / bn));
  }

  std::vector<Eigen::ArrayXd> analytic;
  auto params = net.parameters();
  analytic.reserve(params.size());
  for (nn::Parameter* p : params) analytic.push_back(p->grad.v);

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    nn::Parameter& p = *params[pi];
    for (int e = 0; e < p.value.numel(); ++e) {
      const double saved = p.value.v(e);
      p.value.v(e) = saved + cfg.h;
      const double f_plus = loss_value();
      p.value.v(e) = saved - cfg.h;
      const double f_minus = loss_value();
      p.value.v(e) = saved;
      const double g_fd = (f_plus - f_minus) / (2.0 * cfg.h);
      const double g_an = analytic[pi](e);
      const double rel =
          std::abs(g_an - g_fd) / std::max({std::abs(g_an), std::abs(g_fd), 1e-5});
      res.max_rel = std::max(res.max_rel, rel);
      ++res.checked;
      if (rel > cfg.tol) ++res.failed;
    }
  }
  return res;
}

}  // namespace copse::sar

#include "copse/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>

#include "copse/pipeline.hpp"
#include "copse/ply.hpp"

namespace copse::cli {

namespace {

std::vector<synth::Category> parse_categories(const std::string& csv) {
  std::vector<synth::Category> cats;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string name = csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!name.empty()) cats.push_back(synth::category_from_name(name));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (cats.empty()) throw CLI::ValidationError("--categories", "no categories given");
  return cats;
}

int cmd_gen(const std::filesystem::path& out_dir, const std::string& categories_csv,
            synth::DatasetConfig cfg) {
  cfg.categories = parse_categories(categories_csv);
  const auto manifest = synth::build_dataset(out_dir, cfg);
  const int total = static_cast<int>(cfg.categories.size()) * (cfg.n_train + cfg.n_test);
  std::cout << "manifest: " << manifest.string() << "\n"
            << "samples: " << total << " (" << cfg.n_train << " train + " << cfg.n_test
            << " test per category)\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::filesystem::path out_dir;
  sar::TrainConfig cfg;
  int nk = 36;
  int feat_dim = 128;
  int enc_hidden = 64;
  int dec_hidden1 = 128;
  int dec_hidden2 = 64;
  bool regress_center = false;
};

int cmd_train(const TrainArgs& a) {
  synth::Dataset ds = synth::load_dataset(a.data, a.nk);
  sar::PreparedData prep = sar::prepare_samples(ds, "train");
  if (prep.samples.empty()) throw EmptyDataset("train: no samples in the train split");

  sar::ModelConfig mc;
  mc.n_template = a.nk;
  mc.n_observed = prep.samples.front().observed.rows();
  mc.feat_dim = a.feat_dim;
  mc.enc_hidden = a.enc_hidden;
  mc.dec_hidden1 = a.dec_hidden1;
  mc.dec_hidden2 = a.dec_hidden2;
  mc.regress_center = a.regress_center;
  sar::SarNetParams net(mc);
  Rng init_rng(Rng::mix(a.cfg.seed, 0xA11CE));
  net.init(init_rng);

  std::filesystem::create_directories(a.out_dir);
  const auto log_path = a.out_dir / "train_log.jsonl";
  std::ofstream log(log_path);
  if (!log) throw IoError("train: cannot write " + log_path.string());
  nlohmann::json header = {{"schema_version", kSchemaVersion},
                           {"config", {{"train", a.cfg.to_json()},
                                       {"model", mc.to_json()},
                                       {"data", a.data}}}};
  log << header.dump() << "\n";

  sar::TrainResult result = sar::train(net, prep.samples, prep.kc_by_category, a.cfg, &log);

  nn::OptimizerConfig opt;
  opt.base_lr = a.cfg.base_lr;
  opt.decay = a.cfg.decay;
  opt.decay_period = a.cfg.decay_period;
  const auto ckpt_path = a.out_dir / "model.ckpt";
  sar::save_model(ckpt_path, net, opt, {{"train", a.cfg.to_json()}});

  std::cout << "checkpoint: " << ckpt_path.string() << "\n"
            << "log: " << log_path.string() << "\n";
  if (!result.log.empty())
    std::cout << "final L_total: " << result.log.back().loss.total << " (epoch "
              << result.log.back().epoch << ")\n";
  return 0;
}

int cmd_eval(const std::string& data, const std::string& ckpt, const std::filesystem::path& out,
             const std::string& csv, const std::string& split, int grid) {
  nlohmann::json header;
  sar::SarNetParams net = sar::load_model(ckpt, &header);
  synth::Dataset ds = synth::load_dataset(data, net.cfg.n_template);
  eval::MetricReport report = sar::evaluate_model(net, ds, split, grid);

  nlohmann::json config = {{"data", data}, {"ckpt", ckpt}, {"split", split},
                           {"n_template", net.cfg.n_template}};
  std::ofstream out_stream(out);
  if (!out_stream) throw IoError("eval: cannot write " + out.string());
  out_stream << eval::report_to_json(report, config).dump(2) << "\n";
  if (!csv.empty()) eval::write_report_csv(csv, report);

  std::cout << "report: " << out.string() << "\n"
            << "mean iou50 " << report.mean.iou50 << ", 5deg2cm " << report.mean.d5_2
            << ", median rot " << report.mean.median_rot_deg << " deg, median trans "
            << report.mean.median_trans_m << " m\n";
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& data, const std::string& category,
              const std::string& ply, std::uint64_t seed) {
  sar::SarNetParams net = sar::load_model(ckpt);
  const auto templates = synth::load_templates(data, net.cfg.n_template);
  const synth::CategoryTemplate* tmpl = nullptr;
  for (const auto& t : templates)
    if (t.id == category) tmpl = &t;
  if (!tmpl) throw IoError("infer: category not in manifest: " + category);

  geom::Cloud cloud = geom::read_ply(ply);
  if (cloud.rows() != net.cfg.n_observed) {
    Rng rng(Rng::mix(seed, 0x1FE2));
    cloud = synth::resample_cloud(cloud, net.cfg.n_observed, rng);
  }
  const sar::PoseSizeEstimate est =
      sar::infer(net, geom::PointCloud(cloud, geom::Frame::camera), tmpl->kc);

  nlohmann::json r9 = nlohmann::json::array();
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) r9.push_back(est.pose.rotation(row, col));
  nlohmann::json out = {{"R", std::move(r9)},
                        {"t", {est.pose.translation.x(), est.pose.translation.y(),
                               est.pose.translation.z()}},
                        {"s", {est.size.extents.x(), est.size.extents.y(), est.size.extents.z()}},
                        {"category", category}};
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double h, double tol) {
  // Reduced-width model over 64-point clouds: small enough that every
  // parameter is checked in seconds, while covering every layer and both
  // center-estimation modes.
  synth::GeneratorConfig gen;
  gen.n_observed = 64;
  gen.dense_count = 512;
  gen.min_survivors = 32;
  const auto cyl = synth::make_template(synth::Category::cyl, 512, 12);
  const auto mug = synth::make_template(synth::Category::mug, 512, 12);

  std::vector<sar::TrainSample> batch;
  std::vector<nn::Tensor> kc;
  kc.push_back(sar::tensor_from_cloud(cyl.kc));
  kc.push_back(sar::tensor_from_cloud(mug.kc));
  batch.push_back(sar::make_train_sample(synth::generate_instance(cyl, Rng::mix(seed, 1), gen), 0,
                                         cyl.symmetry));
  batch.push_back(sar::make_train_sample(synth::generate_instance(mug, Rng::mix(seed, 2), gen), 1,
                                         mug.symmetry));

  sar::GradCheckConfig gc;
  gc.h = h;
  gc.tol = tol;
  bool ok = true;
  for (bool regress : {false, true}) {
    sar::ModelConfig mc;
    mc.n_template = 12;
    mc.n_observed = 64;
    mc.feat_dim = 24;
    mc.enc_hidden = 16;
    mc.dec_hidden1 = 24;
    mc.dec_hidden2 = 12;
    mc.regress_center = regress;
    sar::SarNetParams net(mc);
    Rng rng(Rng::mix(seed, regress ? 0xB0 : 0xA0));
    net.init(rng);
    const sar::GradCheckResult res = sar::gradcheck_model(net, batch, kc, gc);
    std::cout << (res.failed == 0 ? "pass" : "FAIL") << "  mode="
              << (regress ? "regress-center" : "voting") << "  params=" << res.checked
              << "  failed=" << res.failed << "  max_rel_err=" << res.max_rel << "\n";
    ok = ok && res.failed == 0;
  }
  return ok ? 0 : 4;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"copse: category-level object pose and size estimation on synthetic point clouds"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  std::filesystem::path gen_out;
  std::string gen_cats = "cyl,bowl,box,mug";
  synth::DatasetConfig gen_cfg;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--categories", gen_cats, "comma-separated category list");
  gen->add_option("--n", gen_cfg.n_train, "train samples per category")
      ->check(CLI::PositiveNumber);
  gen->add_option("--n-test", gen_cfg.n_test, "test samples per category")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_cfg.seed, "dataset seed");
  gen->add_option("--sigma", gen_cfg.gen.sigma, "depth noise sigma, meters")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--jitter", gen_cfg.gen.jitter, "per-axis shape jitter half-range")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--dense", gen_cfg.gen.dense_count, "dense surface samples per instance")
      ->check(CLI::PositiveNumber);
  gen->add_option("--n-observed", gen_cfg.gen.n_observed, "observed cloud size")
      ->check(CLI::PositiveNumber);
  gen->add_option("--nk", gen_cfg.n_template, "default template cloud size")
      ->check(CLI::PositiveNumber);
  gen->add_flag("--ascii", gen_cfg.ascii_ply, "write ASCII PLY instead of binary");

  // train
  auto* train = app.add_subcommand("train", "train a model on a generated dataset");
  TrainArgs ta;
  train->add_option("--data", ta.data, "dataset manifest path")->required();
  train->add_option("--out", ta.out_dir, "output directory")->required();
  train->add_option("--epochs", ta.cfg.epochs, "training epochs")->check(CLI::PositiveNumber);
  train->add_option("--batch", ta.cfg.batch, "batch size")->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.cfg.base_lr, "base learning rate")->check(CLI::PositiveNumber);
  train->add_option("--warm", ta.cfg.warm_epochs, "teacher-forced warm-up epochs")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--nk", ta.nk, "template cloud size")->check(CLI::PositiveNumber);
  train->add_option("--msym", ta.cfg.sym_rotations, "rotation orbit size for the deformation loss")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", ta.cfg.seed, "training seed");
  train->add_option("--threads", ta.cfg.threads, "worker threads (0 = COPSE_THREADS or cores)");
  train->add_option("--feat", ta.feat_dim, "global feature width")->check(CLI::PositiveNumber);
  train->add_option("--enc-hidden", ta.enc_hidden, "encoder hidden width")->check(CLI::PositiveNumber);
  train->add_option("--dec-hidden1", ta.dec_hidden1, "decoder hidden width 1")->check(CLI::PositiveNumber);
  train->add_option("--dec-hidden2", ta.dec_hidden2, "decoder hidden width 2")->check(CLI::PositiveNumber);
  train->add_flag("--regress-center", ta.regress_center,
                  "regress the center directly instead of offset voting");

  // eval
  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  std::string ev_data, ev_ckpt, ev_csv, ev_split = "test";
  std::filesystem::path ev_out = "report.json";
  int ev_grid = 64;
  evalc->add_option("--data", ev_data, "dataset manifest path")->required();
  evalc->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
  evalc->add_option("--out", ev_out, "report JSON path");
  evalc->add_option("--csv", ev_csv, "optional CSV path");
  evalc->add_option("--split", ev_split, "dataset split to evaluate");
  evalc->add_option("--grid", ev_grid, "IoU grid resolution")->check(CLI::PositiveNumber);

  // infer
  auto* infer = app.add_subcommand("infer", "estimate pose and size for one PLY cloud");
  std::string in_ckpt, in_data, in_cat, in_ply;
  std::uint64_t in_seed = 42;
  infer->add_option("--ckpt", in_ckpt, "checkpoint path")->required();
  infer->add_option("--data", in_data, "dataset manifest (for templates)")->required();
  infer->add_option("--category", in_cat, "category id")->required();
  infer->add_option("--ply", in_ply, "input cloud")->required();
  infer->add_option("--seed", in_seed, "resampling seed");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of all gradients");
  std::uint64_t gc_seed = 42;
  double gc_h = 1e-5, gc_tol = 1e-4;
  gc->add_option("--seed", gc_seed, "seed");
  gc->add_option("--step", gc_h, "finite difference step");
  gc->add_option("--tol", gc_tol, "relative error tolerance");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen) return cmd_gen(gen_out, gen_cats, gen_cfg);
    if (*train) return cmd_train(ta);
    if (*evalc) return cmd_eval(ev_data, ev_ckpt, ev_out, ev_csv, ev_split, ev_grid);
    if (*infer) return cmd_infer(in_ckpt, in_data, in_cat, in_ply, in_seed);
    if (*gc) return cmd_gradcheck(gc_seed, gc_h, gc_tol);
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? argc - 1 : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace copse::cli

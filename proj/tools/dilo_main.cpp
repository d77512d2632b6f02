#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dilo/config.hpp"
#include "dilo/checkpoint.hpp"
#include "dilo/diagnose.hpp"
#include "dilo/png_io.hpp"
#include "dilo/trainer.hpp"

int dilo_run_selftest();

namespace {

namespace fs = std::filesystem;
using namespace dilo;

Image read_rgb(const std::string &path) {
  Image img = png_read(path);
  return img.channels == 3 ? img : gray_to_rgb(img);
}

BackgroundProvider provider_from_spec(const std::string &spec,
                                      AugmentationConfig &cfg,
                                      std::uint64_t seed) {
  if (spec == "gray") {
    cfg.background = BackgroundKind::Grayscale;
    return BackgroundProvider::grayscale();
  }
  if (spec.rfind("texture:", 0) == 0) {
    cfg.background = BackgroundKind::TextureDir;
    cfg.background_dir = spec.substr(8);
    return BackgroundProvider::texture_dir(cfg.background_dir);
  }
  if (spec.rfind("crops:", 0) == 0) {
    cfg.background = BackgroundKind::DatasetCrops;
    cfg.background_dir = spec.substr(6);
    return BackgroundProvider::dataset_crops(
        harvest_no_saliency_crops(cfg.background_dir, 128, mix64(seed ^ 0xb6ULL)));
  }
  throw parameter_error("bad --bg value (gray | texture:DIR | crops:DIR): " +
                        spec);
}

int cmd_gen_shapes(int n, std::uint64_t seed, const std::string &out) {
  shapesworld::generate_dataset(n, seed, out);
  std::cout << "wrote " << n << " scenes to " << out << "\n";
  return 0;
}

int cmd_saliency(const std::string &method, const std::string &in,
                 const std::string &out, const std::string &params_file,
                 const std::string &labels_out) {
  SaliencyParams params;
  if (!params_file.empty())
    params = RunConfig::parse_file(params_file).saliency;
  Image img = read_rgb(in);
  SaliencyMap map =
      compute_saliency(saliency_method_from_string(method), img, params);
  mask_write(out, map.mask);
  if (!labels_out.empty()) {
    auto labeling = slic_segment(img, params.slic);
    std::vector<std::uint16_t> ids(labeling.labels.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      ids[i] = static_cast<std::uint16_t>(labeling.labels[i]);
    png_write16(labels_out, ids, labeling.height, labeling.width);
  }
  return 0;
}

int cmd_eval_saliency(const std::string &method, const std::string &data,
                      const std::string &out) {
  SaliencyMethod m = saliency_method_from_string(method);
  shapesworld::Dataset ds = shapesworld::load_dataset(data);
  const int n = static_cast<int>(ds.scenes.size());
  std::vector<double> fb(n, -1.0), er(n, -1.0);
  std::vector<std::uint8_t> excluded(n, 0);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    SaliencyMap map = compute_saliency(m, ds.scenes[i].image);
    try {
      fb[i] = f_beta(map.mask, ds.scenes[i].gt_mask);
      er[i] = mae(map.mask, ds.scenes[i].gt_mask);
    } catch (const metric_error &) {
      excluded[i] = 1;
    }
  }
  std::ostringstream csv;
  csv << "scene_id,method,f_beta,mae\n";
  double sum_f = 0.0, sum_e = 0.0;
  int counted = 0;
  for (int i = 0; i < n; ++i) {
    if (excluded[i]) {
      std::cerr << "scene " << ds.scenes[i].scene_id
                << ": empty ground truth, excluded\n";
      continue;
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%llu,%s,%.9g,%.9g\n",
                  static_cast<unsigned long long>(ds.scenes[i].scene_id),
                  method.c_str(), fb[i], er[i]);
    csv << buf;
    sum_f += fb[i];
    sum_e += er[i];
    ++counted;
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(out);
    if (!f)
      throw io_error("eval-saliency: cannot write " + out);
    f << csv.str();
  }
  if (counted)
    std::cerr << "mean f_beta " << sum_f / counted << ", mean mae "
              << sum_e / counted << " over " << counted << " scenes\n";
  return 0;
}

int cmd_augment(const std::string &in, const std::string &mask,
                const std::string &bg, const std::string &blend, double ratio,
                std::uint64_t seed, const std::string &out) {
  AugmentationConfig cfg;
  cfg.aug_ratio = ratio;
  cfg.blend = blend_mode_from_string(blend);
  cfg.seed = seed;
  BackgroundProvider provider = provider_from_spec(bg, cfg, seed);
  cfg.validate();

  Image img = read_rgb(in);
  SaliencyMap sal;
  sal.mask = mask_read(mask);
  if (sal.mask.height != img.height || sal.mask.width != img.width)
    throw dimension_error("augment: mask dims do not match image");
  cfg.output_size = std::min({img.height, img.width, cfg.output_size});

  std::error_code ec;
  fs::create_directories(out, ec);
  Rng rng(seed);
  auto [vq, vk] = augment_pair(img, sal, cfg, provider, rng);
  png_write((fs::path(out) / "view_q.png").string(), vq);
  png_write((fs::path(out) / "view_k.png").string(), vk);
  return 0;
}

int cmd_train(const std::string &config_path, bool dilo_mode, bool baseline,
              const std::string &out) {
  RunConfig cfg = config_path.empty() ? RunConfig{}
                                      : RunConfig::parse_file(config_path);
  if (baseline)
    cfg.aug.aug_ratio = 0.0;
  (void)dilo_mode; // --dilo keeps the configured ratio
  if (cfg.dataset_dir.empty())
    throw config_error("train: config is missing [dataset] dir");

  shapesworld::Dataset ds = shapesworld::load_dataset(cfg.dataset_dir);
  TrainResult result = train_model(ds, cfg.train_options());
  write_training_outputs(out, result, cfg.seed);
  std::ofstream eff(fs::path(out) / "config.ini");
  if (!eff)
    throw io_error("train: cannot write effective config in " + out);
  eff << cfg.serialize();
  std::cout << "trained " << result.log.size() << " steps; checkpoint in "
            << out << "\n";
  return 0;
}

std::string run_id_of(const std::string &ckpt) {
  fs::path p = fs::path(ckpt);
  return p.filename().empty() ? p.parent_path().filename().string()
                              : p.filename().string();
}

std::string digest_of_run(const std::string &ckpt) {
  fs::path cfg = fs::path(ckpt) / "config.ini";
  if (fs::exists(cfg))
    return RunConfig::parse_file(cfg.string()).digest();
  return "-";
}

int cmd_probe(const std::string &ckpt, const std::string &data,
              const std::string &target, const std::string &out) {
  nn::EncoderParams params = load_checkpoint(ckpt);
  shapesworld::Dataset ds = shapesworld::load_dataset(data);
  EmbeddingBank train = embed_scenes(params, ds, ds.train_indices());
  EmbeddingBank val = embed_scenes(params, ds, ds.val_indices());
  bool shapes = target == "shape";
  if (!shapes && target != "background")
    throw parameter_error("probe: --target must be shape or background");
  const std::vector<int> &ty = shapes ? train.shape_class : train.background_family;
  const std::vector<int> &vy = shapes ? val.shape_class : val.background_family;
  int classes = shapes ? shapesworld::kShapeClasses
                       : shapesworld::kBackgroundFamilies;
  double acc = linear_probe(train.data, ty, val.data, vy, train.dim, classes)
                   .best_val_accuracy;
  std::cout << "probe " << target << " accuracy: " << acc << "\n";
  if (!out.empty()) {
    std::ofstream f(out);
    f << "target,accuracy\n" << target << ',' << acc << "\n";
  }
  return 0;
}

int cmd_knn(const std::string &ckpt, const std::string &data, int k,
            const std::string &out) {
  nn::EncoderParams params = load_checkpoint(ckpt);
  shapesworld::Dataset ds = shapesworld::load_dataset(data);
  EmbeddingBank train = embed_scenes(params, ds, ds.train_indices());
  EmbeddingBank val = embed_scenes(params, ds, ds.val_indices());
  KnnOptions opts;
  opts.k = std::min(k, train.count);
  double acc =
      knn_classify(train, train.shape_class, val, val.shape_class, opts);
  std::cout << "knn shape accuracy (k=" << opts.k << "): " << acc << "\n";
  if (!out.empty()) {
    std::ofstream f(out);
    f << "k,accuracy\n" << opts.k << ',' << acc << "\n";
  }
  return 0;
}

int cmd_gradmap(const std::string &ckpt, const std::string &data,
                const std::string &in, int target_class,
                const std::string &out) {
  nn::EncoderParams params = load_checkpoint(ckpt);
  shapesworld::Dataset ds = shapesworld::load_dataset(data);
  EmbeddingBank train = embed_scenes(params, ds, ds.train_indices());
  EmbeddingBank val = embed_scenes(params, ds, ds.val_indices());
  ProbeResult probe =
      linear_probe(train.data, train.shape_class, val.data, val.shape_class,
                   train.dim, shapesworld::kShapeClasses);

  Image img = read_rgb(in);
  CnnEmbedder embedder(params.cast<double>(), true);
  if (target_class < 0) {
    std::vector<double> emb = embedder.embed(img);
    double best = -1e300;
    for (int c = 0; c < probe.classes; ++c) {
      double s = probe.bias[c];
      for (int d = 0; d < probe.dim; ++d)
        s += probe.weights[static_cast<std::size_t>(c) * probe.dim + d] * emb[d];
      if (s > best) {
        best = s;
        target_class = c;
      }
    }
    std::cerr << "gradmap: using predicted class " << target_class << "\n";
  }
  Mask map = gradient_saliency(embedder, probe.weights, probe.classes, img,
                               target_class);
  mask_write(out, map);
  return 0;
}

int cmd_invariance(const std::string &ckpt, const std::string &data,
                   const std::string &out) {
  nn::EncoderParams params = load_checkpoint(ckpt);
  shapesworld::Dataset ds = shapesworld::load_dataset(data);
  InvarianceReport rep = invariance_report(params, ds);
  std::string csv = invariance_csv(run_id_of(ckpt), digest_of_run(ckpt), rep);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out);
    if (!f)
      throw io_error("invariance: cannot write " + out);
    f << csv;
    std::cout << "shape_probe_acc " << rep.shape_probe_acc << ", bg_probe_acc "
              << rep.bg_probe_acc << ", knn_shape_acc " << rep.knn_shape_acc
              << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
#ifdef _OPENMP
  if (const char *threads = std::getenv("DILO_THREADS"))
    omp_set_num_threads(std::max(1, std::atoi(threads)));
#endif

  CLI::App app{"DiLo: background-invariant contrastive learning pipeline"};
  app.require_subcommand(1);

  // gen-shapes
  int gen_n = 100;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto *gen = app.add_subcommand("gen-shapes", "Generate a ShapesWorld dataset");
  gen->add_option("--n", gen_n, "Number of scenes")->required();
  gen->add_option("--seed", gen_seed, "Master seed");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // saliency
  std::string sal_method, sal_in, sal_out, sal_params, sal_labels;
  auto *sal = app.add_subcommand("saliency", "Compute a saliency map");
  sal->add_option("--method", sal_method, "gs | mc | rbd")->required();
  sal->add_option("--in", sal_in, "Input PNG")->required();
  sal->add_option("--out", sal_out, "Output saliency PNG")->required();
  sal->add_option("--params", sal_params, "Config file for saliency params");
  sal->add_option("--labels-out", sal_labels, "Dump superpixel labels (16-bit PNG)");

  // eval-saliency
  std::string ev_method, ev_data, ev_out;
  auto *ev = app.add_subcommand("eval-saliency",
                                "F_beta / MAE against dataset ground truth");
  ev->add_option("--method", ev_method, "gs | mc | rbd")->required();
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--out", ev_out, "Output CSV (stdout if omitted)");

  // augment
  std::string au_in, au_mask, au_bg = "gray", au_blend = "mix", au_out;
  double au_ratio = 0.3;
  std::uint64_t au_seed = 1;
  auto *au = app.add_subcommand("augment", "Emit the two augmented views");
  au->add_option("--in", au_in, "Input PNG")->required();
  au->add_option("--mask", au_mask, "Saliency map PNG")->required();
  au->add_option("--bg", au_bg, "gray | texture:DIR | crops:DIR");
  au->add_option("--blend", au_blend, "none | gaussian | mix");
  au->add_option("--ratio", au_ratio, "Copy-paste probability");
  au->add_option("--seed", au_seed, "Seed");
  au->add_option("--out", au_out, "Output directory")->required();

  // train
  std::string tr_config, tr_out;
  bool tr_dilo = false, tr_baseline = false;
  auto *tr = app.add_subcommand("train", "Contrastive training");
  tr->add_option("--config", tr_config, "Run config file")->required();
  auto *flag_dilo = tr->add_flag("--dilo", tr_dilo, "Copy-paste at the configured ratio");
  auto *flag_base = tr->add_flag("--baseline", tr_baseline, "Force ratio 0");
  flag_dilo->excludes(flag_base);
  tr->add_option("--out", tr_out, "Output directory")->required();

  // probe / knn / gradmap / invariance
  std::string pr_ckpt, pr_data, pr_target = "shape", pr_out;
  auto *pr = app.add_subcommand("probe", "Linear probe on frozen embeddings");
  pr->add_option("--ckpt", pr_ckpt)->required();
  pr->add_option("--data", pr_data)->required();
  pr->add_option("--target", pr_target, "shape | background");
  pr->add_option("--out", pr_out, "Output CSV");

  std::string kn_ckpt, kn_data, kn_out;
  int kn_k = 20;
  auto *kn = app.add_subcommand("knn", "kNN shape accuracy");
  kn->add_option("--ckpt", kn_ckpt)->required();
  kn->add_option("--data", kn_data)->required();
  kn->add_option("--k", kn_k);
  kn->add_option("--out", kn_out, "Output CSV");

  std::string gm_ckpt, gm_data, gm_in, gm_out;
  int gm_class = -1;
  auto *gm = app.add_subcommand("gradmap", "Class-gradient saliency map");
  gm->add_option("--ckpt", gm_ckpt)->required();
  gm->add_option("--data", gm_data, "Dataset for probe training")->required();
  gm->add_option("--in", gm_in, "Input PNG")->required();
  gm->add_option("--class", gm_class, "Target class (default: predicted)");
  gm->add_option("--out", gm_out, "Output PNG")->required();

  std::string iv_ckpt, iv_data, iv_out;
  auto *iv = app.add_subcommand("invariance", "Background-invariance report");
  iv->add_option("--ckpt", iv_ckpt)->required();
  iv->add_option("--data", iv_data)->required();
  iv->add_option("--out", iv_out, "Output CSV (stdout if omitted)");

  auto *st = app.add_subcommand("selftest",
                                "Gradient checks and metric oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return cmd_gen_shapes(gen_n, gen_seed, gen_out);
    if (sal->parsed())
      return cmd_saliency(sal_method, sal_in, sal_out, sal_params, sal_labels);
    if (ev->parsed())
      return cmd_eval_saliency(ev_method, ev_data, ev_out);
    if (au->parsed())
      return cmd_augment(au_in, au_mask, au_bg, au_blend, au_ratio, au_seed,
                         au_out);
    if (tr->parsed())
      return cmd_train(tr_config, tr_dilo, tr_baseline, tr_out);
    if (pr->parsed())
      return cmd_probe(pr_ckpt, pr_data, pr_target, pr_out);
    if (kn->parsed())
      return cmd_knn(kn_ckpt, kn_data, kn_k, kn_out);
    if (gm->parsed())
      return cmd_gradmap(gm_ckpt, gm_data, gm_in, gm_class, gm_out);
    if (iv->parsed())
      return cmd_invariance(iv_ckpt, iv_data, iv_out);
    if (st->parsed())
      return dilo_run_selftest();
  } catch (const parameter_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const config_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dimension_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const metric_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

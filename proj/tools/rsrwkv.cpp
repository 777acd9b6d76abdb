// Command-line front end: verification suites, kernel benchmarks, the toy
// trainer, inference on PPM images, and the analysis reports.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsrwkv/analysis.hpp"
#include "rsrwkv/bench.hpp"
#include "rsrwkv/io.hpp"
#include "rsrwkv/model.hpp"
#include "rsrwkv/scan2d.hpp"
#include "rsrwkv/train.hpp"
#include "rsrwkv/verify.hpp"

namespace {

using namespace rsrwkv;

struct CommonOpts {
  std::uint64_t seed = 7;
  std::string dtype = "f64";
  int dirs = 4;
  std::size_t patch = 16;
  std::size_t dim = 192;
  std::vector<std::size_t> depths{3, 3, 3, 3};
  std::size_t classes = 45;
  std::size_t rate = 2;
  std::size_t eca = 0;
  std::string out;
};

void add_model_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "RNG seed (drives init and synthesis)");
  cmd->add_option("--dtype", o.dtype, "f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}));
  cmd->add_option("--dirs", o.dirs, "scan direction count")
      ->check(CLI::IsMember({1, 2, 4}));
  cmd->add_option("--patch", o.patch, "patch size");
  cmd->add_option("--dim", o.dim, "embed dim");
  cmd->add_option("--depths", o.depths, "stage depths a,b,c,d")
      ->delimiter(',')
      ->expected(4);
  cmd->add_option("--classes", o.classes, "class count");
  cmd->add_option("--rate", o.rate, "channel-mix hidden rate");
  cmd->add_option("--eca", o.eca, "channel-gate kernel size (0 = adaptive)");
  cmd->add_option("--out", o.out, "output path prefix");
}

ModelConfig config_from(const CommonOpts& o) {
  ModelConfig cfg;
  cfg.patch_size = o.patch;
  cfg.embed_dim = o.dim;
  for (std::size_t i = 0; i < 4; ++i) cfg.stage_depths[i] = o.depths[i];
  cfg.hidden_rate = o.rate;
  cfg.directions = o.dirs;
  cfg.num_classes = o.classes;
  cfg.eca_kernel = o.eca;
  return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::fwrite(text.data(), 1, text.size(), stdout);
  else
    io::write_text_file(out_path, text);
}

int cmd_verify(const std::string& suite, const CommonOpts& o) {
  const auto rows = verify::run_suite(suite, o.seed);
  emit(verify::rows_csv(rows), o.out);
  return verify::all_pass(rows) ? 0 : 1;
}

int cmd_bench(const std::string& kernel, std::vector<std::size_t> sizes,
              int reps, std::size_t channels, const CommonOpts& o) {
  check_usage(reps >= 1, "bench: reps must be positive");
  const auto k = bench::kernel_by_name(kernel);
  const auto samples = bench::run_scaling(k, sizes, channels, reps, o.seed);
  emit(bench::samples_csv(samples, bench::loglog_slope(samples)), o.out);
  return 0;
}

template <typename T>
int run_train_toy(const CommonOpts& o, std::size_t steps, double lr,
                  std::size_t img_extent, std::size_t count) {
  ModelConfig cfg = config_from(o);
  train::check_toy_bounds(cfg, img_extent);
  auto weights = init_backbone<T>(cfg, o.seed);
  const auto data = train::make_toy_dataset<T>(o.seed + 1, count, img_extent);
  const auto result = train::train_toy(weights, data, steps, lr);

  std::string csv = "step,loss\n";
  for (std::size_t s = 0; s < result.losses.size(); ++s)
    csv += io::fmt(s) + "," + io::fmt(result.losses[s]) + "\n";
  csv += "final," + io::fmt(result.final_loss) + "\n";
  csv += "accuracy," + io::fmt(result.accuracy) + "\n";
  std::fwrite(csv.data(), 1, csv.size(), stdout);

  if (!o.out.empty()) io::save_checkpoint(o.out, weights);
  return 0;
}

template <typename T>
BackboneWeights<T> weights_from_flags(const CommonOpts& o,
                                      const std::string& checkpoint) {
  if (!checkpoint.empty()) return io::load_checkpoint<T>(checkpoint);
  return init_backbone<T>(config_from(o), o.seed);
}

template <typename T>
int run_infer(const CommonOpts& o, const std::string& image_path,
              const std::string& checkpoint) {
  const auto weights = weights_from_flags<T>(o, checkpoint);
  const auto image = io::read_ppm<T>(image_path);
  const auto out = backbone_forward(image, weights);
  std::string csv = "class,logit\n";
  for (std::size_t k = 0; k < out.logits.numel(); ++k)
    csv += io::fmt(k) + "," + io::fmt(static_cast<double>(out.logits.data[k])) + "\n";
  emit(csv, o.out);
  return 0;
}

template <typename T>
std::vector<Tensor<T>> gather_images(const CommonOpts& o,
                                     const std::vector<std::string>& paths,
                                     std::size_t synthetic,
                                     std::size_t img_extent) {
  std::vector<Tensor<T>> images;
  for (const auto& p : paths) images.push_back(io::read_ppm<T>(p));
  if (images.empty()) {
    const auto ds = train::make_toy_dataset<T>(o.seed + 1, synthetic, img_extent);
    images = ds.images;
  }
  return images;
}

template <typename T>
int run_erf(const CommonOpts& o, const std::vector<std::string>& paths,
            std::size_t synthetic, std::size_t img_extent,
            const std::string& checkpoint) {
  const auto weights = weights_from_flags<T>(o, checkpoint);
  const auto images = gather_images<T>(o, paths, synthetic, img_extent);
  const auto report = analysis::erf_map(weights, images);

  std::string csv = "metric,value\n";
  csv += "high_ratio," + io::fmt(report.high_ratio) + "\n";
  csv += "pixels," + io::fmt(report.grid.numel()) + "\n";
  std::fwrite(csv.data(), 1, csv.size(), stdout);
  if (!o.out.empty()) {
    io::write_pgm(o.out + ".pgm", report.grid);
    std::string grid_csv = "row,col,log_contribution\n";
    const std::size_t H = report.grid.shape[0], W = report.grid.shape[1];
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        grid_csv += io::fmt(i) + "," + io::fmt(j) + "," +
                    io::fmt(static_cast<double>(report.grid.data[i * W + j])) + "\n";
    io::write_text_file(o.out + ".csv", grid_csv);
  }
  return 0;
}

template <typename T>
int run_stats(const CommonOpts& o, const std::vector<std::string>& paths,
              std::size_t img_extent, const std::string& checkpoint,
              long block) {
  const auto weights = weights_from_flags<T>(o, checkpoint);
  const auto images = gather_images<T>(o, paths, 1, img_extent);
  EcaCapture<T> capture;
  backbone_forward(images[0], weights, &capture);
  const long nblocks = static_cast<long>(capture.before.size());
  if (block < 0) block = nblocks - 1;
  check_usage(block >= 0 && block < nblocks, "stats: block index out of range");
  const auto stats = analysis::channel_stats(
      capture.before[static_cast<std::size_t>(block)],
      capture.after[static_cast<std::size_t>(block)]);
  emit(analysis::channel_stats_csv(stats.before, stats.after), o.out);
  return 0;
}

int cmd_params(const CommonOpts& o, std::size_t img_extent) {
  const ModelConfig cfg = config_from(o);
  const auto p = analysis::count_params(cfg);
  const auto f = analysis::count_flops(cfg, img_extent, img_extent);
  std::string csv = "name,value\n";
  csv += "patch_embed," + io::fmt(p.patch_embed) + "\n";
  csv += "spatial_rkv_per_block," + io::fmt(p.spatial_rkv) + "\n";
  csv += "spatial_per_block," + io::fmt(p.spatial_total) + "\n";
  csv += "channel_per_block," + io::fmt(p.channel_total) + "\n";
  csv += "blocks_total," + io::fmt(p.blocks_total) + "\n";
  csv += "head," + io::fmt(p.head) + "\n";
  csv += "total," + io::fmt(p.total) + "\n";
  csv += "macs@" + io::fmt(img_extent) + "x" + io::fmt(img_extent) + "," +
         io::fmt(f.total) + "\n";
  csv += "flops@" + io::fmt(img_extent) + "x" + io::fmt(img_extent) + "," +
         io::fmt(2 * f.total) + "\n";
  emit(csv, o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "linear-complexity 2-D WKV attention backbone: kernels, verification "
      "suites, benchmarks and desk-scale training"};
  app.require_subcommand(1);

  CommonOpts o;

  std::string verify_suite = "all";
  auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  verify_cmd->add_option("suite", verify_suite, "kernel|scan|shift|model|all");
  add_model_flags(verify_cmd, o);

  std::string bench_kernel = "bi_wkv_scan";
  std::vector<std::size_t> bench_sizes;
  int bench_reps = 9;
  std::size_t bench_channels = 8;
  auto* bench_cmd = app.add_subcommand("bench", "time a kernel over sizes");
  bench_cmd->add_option("kernel", bench_kernel, "bi_wkv_scan|bi_wkv_oracle|wkv_2d");
  bench_cmd->add_option("--sizes", bench_sizes, "ascending token counts")
      ->delimiter(',')
      ->required();
  bench_cmd->add_option("--reps", bench_reps, "repetitions per size");
  bench_cmd->add_option("--channels", bench_channels, "channel count");
  add_model_flags(bench_cmd, o);

  std::size_t train_steps = 500;
  double train_lr = 0.2;
  std::size_t train_img = 32;
  std::size_t train_count = 8;
  auto* train_cmd = app.add_subcommand("train_toy", "overfit the synthetic task");
  train_cmd->add_option("--steps", train_steps, "gradient-descent steps");
  train_cmd->add_option("--lr", train_lr, "learning rate");
  train_cmd->add_option("--img", train_img, "image extent");
  train_cmd->add_option("--count", train_count, "dataset size");
  add_model_flags(train_cmd, o);

  std::string infer_image, infer_ckpt;
  auto* infer_cmd = app.add_subcommand("infer", "classify a P6 PPM image");
  infer_cmd->add_option("image", infer_image, "input .ppm")->required();
  infer_cmd->add_option("--checkpoint", infer_ckpt, "checkpoint prefix");
  add_model_flags(infer_cmd, o);

  std::vector<std::string> erf_images;
  std::size_t erf_synth = 1, erf_img = 32;
  std::string erf_ckpt;
  auto* erf_cmd = app.add_subcommand("erf", "effective receptive field report");
  erf_cmd->add_option("--images", erf_images, "input .ppm files");
  erf_cmd->add_option("--synthetic", erf_synth, "synthetic image count if no files");
  erf_cmd->add_option("--img", erf_img, "synthetic image extent");
  erf_cmd->add_option("--checkpoint", erf_ckpt, "checkpoint prefix");
  add_model_flags(erf_cmd, o);

  std::vector<std::string> stats_images;
  std::size_t stats_img = 32;
  std::string stats_ckpt;
  long stats_block = -1;
  auto* stats_cmd =
      app.add_subcommand("stats", "channel activations around the gate");
  stats_cmd->add_option("--images", stats_images, "input .ppm files");
  stats_cmd->add_option("--img", stats_img, "synthetic image extent");
  stats_cmd->add_option("--checkpoint", stats_ckpt, "checkpoint prefix");
  stats_cmd->add_option("--block", stats_block, "block index (-1 = last)");
  add_model_flags(stats_cmd, o);

  std::size_t params_img = 224;
  auto* params_cmd = app.add_subcommand("params", "parameter and work accounting");
  params_cmd->add_option("--img-size", params_img, "input extent for the work count");
  add_model_flags(params_cmd, o);

  std::size_t scan_h = 4, scan_w = 4;
  auto* scan_cmd = app.add_subcommand("scan_orders", "emit scan permutations as CSV");
  scan_cmd->add_option("--height", scan_h, "grid rows");
  scan_cmd->add_option("--width", scan_w, "grid cols");
  scan_cmd->add_option("--out", o.out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const bool f32 = o.dtype == "f32";
    if (verify_cmd->parsed()) return cmd_verify(verify_suite, o);
    if (bench_cmd->parsed())
      return cmd_bench(bench_kernel, bench_sizes, bench_reps, bench_channels, o);
    if (train_cmd->parsed()) {
      ModelConfig toy = train::toy_config();
      // toy defaults unless the user overrode the model flags
      if (train_cmd->count("--patch") == 0) o.patch = toy.patch_size;
      if (train_cmd->count("--dim") == 0) o.dim = toy.embed_dim;
      if (train_cmd->count("--depths") == 0)
        o.depths = {toy.stage_depths[0], toy.stage_depths[1],
                    toy.stage_depths[2], toy.stage_depths[3]};
      if (train_cmd->count("--classes") == 0) o.classes = toy.num_classes;
      return f32 ? run_train_toy<float>(o, train_steps, train_lr, train_img,
                                        train_count)
                 : run_train_toy<double>(o, train_steps, train_lr, train_img,
                                         train_count);
    }
    if (infer_cmd->parsed())
      return f32 ? run_infer<float>(o, infer_image, infer_ckpt)
                 : run_infer<double>(o, infer_image, infer_ckpt);
    if (erf_cmd->parsed())
      return f32 ? run_erf<float>(o, erf_images, erf_synth, erf_img, erf_ckpt)
                 : run_erf<double>(o, erf_images, erf_synth, erf_img, erf_ckpt);
    if (stats_cmd->parsed())
      return f32 ? run_stats<float>(o, stats_images, stats_img, stats_ckpt,
                                    stats_block)
                 : run_stats<double>(o, stats_images, stats_img, stats_ckpt,
                                     stats_block);
    if (params_cmd->parsed()) return cmd_params(o, params_img);
    if (scan_cmd->parsed()) {
      emit(scan_orders_csv(scan_h, scan_w), o.out);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

// kgin: phantom datasets, masks, training, inference and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "kgin/error.hpp"
#include "kgin/model/checkpoint.hpp"
#include "kgin/phantom/phantom.hpp"
#include "kgin/pipeline/recon.hpp"
#include "kgin/pipeline/train.hpp"
#include "kgin/sampling/mask.hpp"

namespace fs = std::filesystem;
using namespace kgin;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool verbose = false;
};

struct DatasetArgs {
  Common c;
  std::size_t n_train = 8;
  std::size_t n_test = 5;
  std::string dims = "32,32,8";
  int min_ellipses = 3;
  int max_ellipses = 6;
  double motion = 0.08;
};

struct MaskArgs {
  Common c;
  std::string dims = "32,32,8";
  double r = 4.0;
};

struct TrainArgs {
  Common c;
  std::string manifest;
  std::optional<std::string> dims;
  double r = 4.0;
  std::uint64_t steps = 200;
  bool tiny = false;
  std::optional<std::size_t> embed_dim, heads, layers, mlp_ratio, patch;
  std::optional<std::string> planes;
  std::optional<double> lambda, hdr_eps;
  double max_lr = 1e-4;
  double warmup = 0.3;
  double initial_div = 25.0;
  double final_div = 1e4;
  std::uint64_t log_interval = 10;
};

struct InferArgs {
  Common c;
  std::string checkpoint;
  std::string input;
  std::string mask;
  double r = 4.0;
};

struct EvalArgs {
  Common c;
  std::string checkpoint;
  std::string manifest;
  std::string r_list = "4,6,8";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Flat 'key = value' file; keys mirror flag names");
  sub->add_option("--seed", c.seed, "Seed for every random draw of this command")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->required();
  sub->add_flag("-v,--verbose", c.verbose, "Log progress");
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is required");
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path);
}

fs::path prepare_out(const Common& c) {
  fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());
  return out;
}

void echo_common(cli::ResolvedConfig& rc, const Common& c) {
  rc.set("seed", c.seed);
  rc.set("out", c.out);
}

int cmd_dataset(const DatasetArgs& a) {
  const auto d = cli::parse_dims(a.dims);
  const auto out = prepare_out(a.c);
  phantom::DatasetSpec spec;
  spec.x = d.x;
  spec.y = d.y;
  spec.t = d.t;
  spec.min_ellipses = a.min_ellipses;
  spec.max_ellipses = a.max_ellipses;
  spec.motion_amplitude = a.motion;
  const auto items = phantom::make_dataset(a.n_train, a.n_test, spec, a.c.seed, out);

  cli::ResolvedConfig rc;
  echo_common(rc, a.c);
  rc.set("n-train", a.n_train);
  rc.set("n-test", a.n_test);
  rc.set("dims", cli::format_dims(d));
  rc.set("min-ellipses", a.min_ellipses);
  rc.set("max-ellipses", a.max_ellipses);
  rc.set("motion", a.motion);
  rc.write(out / "resolved.cfg");
  std::printf("dataset: %zu sequences, manifest %s\n", items.size(), (out / "manifest.txt").string().c_str());
  return 0;
}

int cmd_mask(const MaskArgs& a) {
  const auto d = cli::parse_dims(a.dims);
  const auto out = prepare_out(a.c);
  const auto m = sampling::generate_mask(d.y, d.t, a.r, a.c.seed);
  sampling::write_mask(m, out / "mask.kmask");

  cli::ResolvedConfig rc;
  echo_common(rc, a.c);
  rc.set("dims", cli::format_dims(d));
  rc.set("R", a.r);
  rc.write(out / "resolved.cfg");
  std::printf("mask: %zux%zu, %zu lines sampled (fraction %.4f)\n", d.y, d.t, m.total_sampled(), m.sampled_fraction());
  return 0;
}

model::ModelConfig model_config(const TrainArgs& a, const cli::Dims& d) {
  auto cfg = a.tiny ? model::ModelConfig::tiny(d.x, d.y, d.t) : model::ModelConfig::full(d.x, d.y, d.t);
  if (a.embed_dim) cfg.embed_dim = *a.embed_dim;
  if (a.heads) cfg.n_heads = *a.heads;
  if (a.layers) cfg.n_layers = *a.layers;
  if (a.mlp_ratio) cfg.mlp_ratio = *a.mlp_ratio;
  if (a.patch) cfg.kirm_patch = *a.patch;
  if (a.lambda) cfg.loss_weight_hdr = *a.lambda;
  if (a.hdr_eps) cfg.hdr_eps = *a.hdr_eps;
  if (a.planes) {
    cfg.kirm_planes = {false, false, false};
    std::string rest = *a.planes;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto name = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      bool found = false;
      for (auto p : model::kAllPlanes) {
        if (name == model::to_string(p)) {
          cfg.kirm_planes[static_cast<std::size_t>(p)] = true;
          found = true;
        }
      }
      if (!found && name != "none") throw ConfigError("unknown plane '" + name + "' (ky_t, kx_t, kx_ky or none)");
    }
  }
  cfg.validate();
  return cfg;
}

std::string planes_string(const model::ModelConfig& cfg) {
  std::string s;
  for (auto p : model::kAllPlanes) {
    if (!cfg.plane_enabled(p)) continue;
    s += (s.empty() ? "" : ",") + std::string(model::to_string(p));
  }
  return s.empty() ? "none" : s;
}

int cmd_train(const TrainArgs& a) {
  if (a.steps < 1) throw ConfigError("--steps must be >= 1");
  require_file(a.manifest, "manifest");
  const auto manifest = pipeline::Manifest::read(a.manifest);
  const auto train_split = manifest.split("train");
  if (train_split.empty()) throw DegenerateInputError("manifest has no train sequences");

  cli::Dims d;
  if (a.dims) {
    d = cli::parse_dims(*a.dims);
  } else {
    const auto first = manifest.load_kspace(train_split.front());
    d = {first.x_dim(), first.y_dim(), first.t_dim()};
  }
  const auto out = prepare_out(a.c);

  pipeline::TrainRunConfig cfg;
  cfg.model = model_config(a, d);
  cfg.manifest = a.manifest;
  cfg.r_train = a.r;
  cfg.steps = a.steps;
  cfg.seed = a.c.seed;
  cfg.checkpoint = out / "model.ckpt";
  cfg.loss_log = out / "loss.csv";
  cfg.log_interval = a.log_interval;
  cfg.schedule.max_lr = a.max_lr;
  cfg.schedule.warmup_fraction = a.warmup;
  cfg.schedule.initial_div = a.initial_div;
  cfg.schedule.final_div = a.final_div;
  cfg.validate();

  cli::ResolvedConfig rc;
  echo_common(rc, a.c);
  rc.set("manifest", a.manifest);
  rc.set("dims", cli::format_dims(d));
  rc.set("R", a.r);
  rc.set("steps", a.steps);
  rc.set("tiny", a.tiny);
  rc.set("embed-dim", cfg.model.embed_dim);
  rc.set("heads", cfg.model.n_heads);
  rc.set("layers", cfg.model.n_layers);
  rc.set("mlp-ratio", cfg.model.mlp_ratio);
  rc.set("patch", cfg.model.kirm_patch);
  rc.set("planes", planes_string(cfg.model));
  rc.set("lambda", cfg.model.loss_weight_hdr);
  rc.set("hdr-eps", cfg.model.hdr_eps);
  rc.set("max-lr", a.max_lr);
  rc.set("warmup", a.warmup);
  rc.set("initial-div", a.initial_div);
  rc.set("final-div", a.final_div);
  rc.set("log-interval", a.log_interval);
  rc.write(out / "resolved.cfg");

  const bool verbose = a.c.verbose;
  const auto every = a.log_interval;
  const auto last = a.steps - 1;
  const auto result = pipeline::train(cfg, manifest, [&](const pipeline::LossRecord& r) {
    if (verbose && (r.step % every == 0 || r.step == last)) {
      std::printf("step %llu lr %.3e l1 %.6f hdr %.6f total %.6f\n", static_cast<unsigned long long>(r.step), r.lr,
                  r.l1, r.hdr, r.total);
      std::fflush(stdout);
    }
  });
  std::printf("train: %llu steps, loss %.6f -> %.6f, checkpoint %s (%s)\n",
              static_cast<unsigned long long>(a.steps), result.log.front().total, result.log.back().total,
              cfg.checkpoint.string().c_str(), model::checkpoint_id(cfg.checkpoint).c_str());
  return 0;
}

int cmd_infer(const InferArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.input, "input");
  if (!a.mask.empty()) require_file(a.mask, "mask");
  const auto net = model::load_network<float>(a.checkpoint);
  const auto k = kspace::read_volume(a.input);
  if (k.domain() != kspace::Domain::kspace) throw FormatError("input " + a.input + " is not a k-space volume");
  const auto out = prepare_out(a.c);

  const auto& cfg = net.config();
  const auto mask = a.mask.empty() ? sampling::generate_mask(cfg.y, cfg.t, a.r, a.c.seed) : sampling::read_mask(a.mask);
  const auto result = pipeline::infer(net, k, mask);

  sampling::write_mask(mask, out / "mask.kmask");
  kspace::write_volume(result.kspace, out / "recon.k.kvol");
  kspace::write_volume(result.image, out / "recon.img.kvol");
  pipeline::write_pgm_frames(result.image, out / "frames", "recon");
  pipeline::write_pgm_frames(pipeline::zero_filled(k, mask), out / "frames", "zero_filled");

  cli::ResolvedConfig rc;
  echo_common(rc, a.c);
  rc.set("checkpoint", a.checkpoint);
  rc.set("input", a.input);
  if (!a.mask.empty()) rc.set("mask", a.mask);
  rc.set("R", a.r);
  rc.write(out / "resolved.cfg");
  std::printf("infer: %zux%zux%zu, %zu lines sampled, image %s\n", k.x_dim(), k.y_dim(), k.t_dim(),
              mask.total_sampled(), (out / "recon.img.kvol").string().c_str());
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  const auto rs = cli::parse_r_list(a.r_list);
  require_file(a.checkpoint, "checkpoint");
  require_file(a.manifest, "manifest");
  const auto net = model::load_network<float>(a.checkpoint);
  const auto manifest = pipeline::Manifest::read(a.manifest);
  const auto out = prepare_out(a.c);

  const auto reports = pipeline::evaluate(net, manifest, rs, a.c.seed, model::checkpoint_id(a.checkpoint));
  pipeline::write_report_csv(reports, out / "report.csv");
  pipeline::write_report_csv(reports, out / "report_zero_filled.csv", true);
  pipeline::write_summary_csv(reports, out / "summary.csv");

  cli::ResolvedConfig rc;
  echo_common(rc, a.c);
  rc.set("checkpoint", a.checkpoint);
  rc.set("manifest", a.manifest);
  rc.set("R", a.r_list);
  rc.write(out / "resolved.cfg");
  for (const auto& r : reports) {
    const auto& s = r.recon_summary;
    const auto& z = r.zero_filled_summary;
    std::printf("R=%g  PSNR %.2f (zero-filled %.2f)  SSIM %.4f (%.4f)  NMSE %.5f (%.5f)\n", r.r,
                s.psnr.infinite ? INFINITY : s.psnr.mean, z.psnr.infinite ? INFINITY : z.psnr.mean, s.ssim.mean,
                z.ssim.mean, s.nmse.mean, z.nmse.mean);
  }
  return 0;
}

int fail(const std::string& kind, const std::string& message) {
  const int code = cli::exit_code_for(kind);
  std::cerr << cli::error_line(kind, code, message) << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-space interpolation for dynamic MRI: datasets, masks, training, inference, evaluation"};
  app.require_subcommand(1);

  DatasetArgs ds;
  auto* dataset = app.add_subcommand("dataset", "Generate a phantom dataset and manifest");
  add_common(dataset, ds.c);
  dataset->add_option("--n-train", ds.n_train, "Training sequences")->capture_default_str();
  dataset->add_option("--n-test", ds.n_test, "Held-out sequences")->capture_default_str();
  dataset->add_option("--dims", ds.dims, "X,Y,T")->capture_default_str();
  dataset->add_option("--min-ellipses", ds.min_ellipses)->capture_default_str();
  dataset->add_option("--max-ellipses", ds.max_ellipses)->capture_default_str();
  dataset->add_option("--motion", ds.motion, "Motion amplitude as a fraction of Y")->capture_default_str();

  MaskArgs ms;
  auto* mask = app.add_subcommand("mask", "Generate a ky-t sampling mask");
  add_common(mask, ms.c);
  mask->add_option("--dims", ms.dims, "X,Y,T (X is ignored)")->capture_default_str();
  mask->add_option("--R", ms.r, "Undersampling factor")->capture_default_str();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train on the manifest's train split");
  add_common(train, tr.c);
  train->add_option("--manifest", tr.manifest, "Dataset manifest")->required();
  train->add_option("--dims", tr.dims, "X,Y,T (default: from the data)");
  train->add_option("--R", tr.r, "Training undersampling factor")->capture_default_str();
  train->add_option("--steps", tr.steps)->capture_default_str();
  train->add_flag("--tiny", tr.tiny, "Desk-scale model preset (32 dims, 4 heads, 2 layers)");
  train->add_option("--embed-dim", tr.embed_dim);
  train->add_option("--heads", tr.heads);
  train->add_option("--layers", tr.layers);
  train->add_option("--mlp-ratio", tr.mlp_ratio);
  train->add_option("--patch", tr.patch, "kx-ky patch size");
  train->add_option("--planes", tr.planes, "Refinement planes, e.g. ky_t,kx_t,kx_ky or none");
  train->add_option("--lambda", tr.lambda, "HDR loss weight");
  train->add_option("--hdr-eps", tr.hdr_eps);
  train->add_option("--max-lr", tr.max_lr)->capture_default_str();
  train->add_option("--warmup", tr.warmup, "Warmup fraction")->capture_default_str();
  train->add_option("--initial-div", tr.initial_div)->capture_default_str();
  train->add_option("--final-div", tr.final_div)->capture_default_str();
  train->add_option("--log-interval", tr.log_interval)->capture_default_str();

  InferArgs in;
  auto* infer = app.add_subcommand("infer", "Reconstruct one k-space sequence");
  add_common(infer, in.c);
  infer->add_option("--checkpoint", in.checkpoint)->required();
  infer->add_option("--input", in.input, "Fully or partially sampled k-space .kvol")->required();
  infer->add_option("--mask", in.mask, ".kmask file (default: generate from --R and --seed)");
  infer->add_option("--R", in.r, "Undersampling factor when no mask is given")->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the manifest's test split");
  add_common(eval, ev.c);
  eval->add_option("--checkpoint", ev.checkpoint)->required();
  eval->add_option("--manifest", ev.manifest)->required();
  eval->add_option("--R", ev.r_list, "Comma-separated undersampling factors")->capture_default_str();

  try {
    if (const auto cfg_path = cli::find_config_arg(argc, argv)) {
      CLI::App* target = nullptr;
      for (int i = 1; i < argc && target == nullptr; ++i) {
        for (auto* sub : app.get_subcommands({})) {
          if (sub->get_name() == argv[i]) target = sub;
        }
      }
      if (target == nullptr) return fail("usage", "--config needs a subcommand");
      cli::apply_config(*target, cli::read_config_file(*cfg_path));
    }
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  }

  try {
    if (dataset->parsed()) return cmd_dataset(ds);
    if (mask->parsed()) return cmd_mask(ms);
    if (train->parsed()) return cmd_train(tr);
    if (infer->parsed()) return cmd_infer(in);
    if (eval->parsed()) return cmd_eval(ev);
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail("io", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return fail("usage", "no subcommand");
}

// vsr: one binary tying the engine together — dataset synthesis, MSE
// pretraining, adversarial training, inference, evaluation, gradient
// checking, checkpoint/dataset inspection, and loss-curve plotting.
//
// Exit codes: 0 success, 1 runtime error, 2 config/validation error.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vsr/checkpoint.hpp"
#include "vsr/config.hpp"
#include "vsr/data.hpp"
#include "vsr/gradcheck_suite.hpp"
#include "vsr/image_io.hpp"
#include "vsr/losses.hpp"
#include "vsr/metrics.hpp"
#include "vsr/models.hpp"
#include "vsr/training.hpp"

namespace fs = std::filesystem;

namespace {

const std::string* cfg_find(const vsr::CheckpointData& cd, const std::string& key) {
  for (const auto& [k, v] : cd.config)
    if (k == key) return &v;
  return nullptr;
}

// --data fallback: $VSR_DATA_DIR/train.vsrd when the flag is omitted.
std::string resolve_data_path(const std::string& given) {
  if (!given.empty()) return given;
  if (const char* dir = std::getenv("VSR_DATA_DIR"))
    return (fs::path(dir) / "train.vsrd").string();
  throw vsr::ConfigError("no dataset path given and VSR_DATA_DIR is not set");
}

void print_warnings(const vsr::TrainLog& log) {
  for (const std::string& w : log.warnings) std::cerr << "warning: " << w << "\n";
}

vsr::Generator load_generator(const std::string& path, vsr::TrainState* st) {
  vsr::CheckpointData cd = vsr::load_checkpoint(path);
  std::int64_t step = 0;
  vsr::Generator g = vsr::generator_from_checkpoint(cd, &step);
  if (st) {
    st->adam_t = step;
    st->next_epoch = 0;
    if (step > 0)
      if (const std::string* v = cfg_find(cd, "train.next_epoch")) st->next_epoch = std::stoi(*v);
  }
  return g;
}

std::pair<double, double> parse_motion(const std::string& s) {
  std::size_t comma = s.find(',');
  try {
    if (comma == std::string::npos) {
      double m = std::stod(s);
      return {m, m};
    }
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw vsr::ConfigError("--motion expects 'dy,dx' (or one shared value), got '" + s + "'");
  }
}

// ---------------------------------------------------------------- synth-data

struct SynthOpts {
  std::uint64_t seed = 1;
  int frames = 16;
  std::int64_t size = 72;
  std::string motion = "0.6,-0.35";
  int scale = 2;
  int patch = 36;
  int stride = 36;
  std::string out;
};

int cmd_synth_data(const SynthOpts& o) {
  auto [my, mx] = parse_motion(o.motion);
  const std::string out = resolve_data_path(o.out);
  vsr::Dataset ds = vsr::make_synthetic_dataset(o.seed, o.frames, o.size, my, mx, o.scale,
                                                o.patch, o.stride);
  vsr::save_dataset(out, ds,
                    {{"seed", std::to_string(o.seed)},
                     {"frames", std::to_string(o.frames)},
                     {"size", std::to_string(o.size)},
                     {"motion", o.motion},
                     {"scale", std::to_string(o.scale)},
                     {"patch", std::to_string(o.patch)},
                     {"stride", std::to_string(o.stride)}});
  std::cout << "wrote " << ds.samples.size() << " samples (scale " << ds.scale << ", patch "
            << ds.patch << ", " << ds.frames << " frames) to " << out << "\n";
  return 0;
}

// ------------------------------------------------------- pretrain / train-gan

struct TrainOpts {
  std::string config;
  std::string data;
  std::string init;
  std::string transfer_from;
  std::string out;
  std::string log;
  // quick overrides so smoke runs don't need a config file
  int epochs = -1;
  int batch = -1;
  std::int64_t max_steps = -1;
  double lr = 0.0;
  int checkpoint_every = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
};

vsr::RunConfig load_opts_config(const TrainOpts& o, bool gan) {
  vsr::RunConfig rc = o.config.empty() ? vsr::RunConfig{} : vsr::load_run_config(o.config);
  if (o.epochs >= 0) (gan ? rc.train.gan_epochs : rc.train.pretrain_epochs) = o.epochs;
  if (o.batch >= 1) rc.train.batch_size = o.batch;
  if (o.max_steps >= 0) rc.train.max_steps = o.max_steps;
  if (o.lr > 0.0) (gan ? rc.train.gan_lr : rc.train.pretrain_lr) = o.lr;
  if (o.checkpoint_every >= 0) rc.train.checkpoint_every = o.checkpoint_every;
  if (o.seed_set) rc.train.seed = o.seed;
  if (o.deterministic) {
    rc.train.deterministic = true;
    omp_set_num_threads(1);
  }
  rc.train.validate();
  return rc;
}

void print_train_summary(const char* what, const vsr::TrainResult& res) {
  if (res.log.records.empty()) {
    std::cout << what << ": no steps run\n";
    return;
  }
  const vsr::TrainLogRecord& last = res.log.records.back();
  std::cout << what << ": " << res.log.records.size() << " steps, final loss_g "
            << vsr::format_double(last.loss_g);
  if (last.loss_d != 0.0) std::cout << ", final loss_d " << vsr::format_double(last.loss_d);
  std::cout << "\n";
  if (!res.last_checkpoint.empty()) std::cout << "checkpoint: " << res.last_checkpoint << "\n";
}

int finish_train(const char* what, const vsr::TrainResult& res, const std::string& log_path) {
  if (!log_path.empty()) res.log.save_csv(log_path);
  print_warnings(res.log);
  if (res.aborted) {
    std::cerr << "error: " << res.abort_message << "\n";
    return 1;
  }
  print_train_summary(what, res);
  if (!log_path.empty()) std::cout << "log: " << log_path << "\n";
  return 0;
}

int cmd_pretrain(const TrainOpts& o) {
  vsr::RunConfig rc = load_opts_config(o, /*gan=*/false);
  vsr::Dataset ds = vsr::load_dataset(resolve_data_path(o.data));
  vsr::TrainState st;
  vsr::Generator g = o.init.empty() ? vsr::Generator(rc.gen, rc.train.seed)
                                    : load_generator(o.init, &st);
  if (!o.init.empty() && !o.config.empty() && !(g.config() == rc.gen))
    throw vsr::ConfigError("--init checkpoint architecture differs from the --config gen section");
  vsr::TrainResult res = vsr::pretrain(g, ds, rc.train, o.out, st);
  return finish_train("pretrain", res,
                      o.log.empty() && !o.out.empty() ? o.out + ".log.csv" : o.log);
}

int cmd_train_gan(const TrainOpts& o) {
  vsr::RunConfig rc = load_opts_config(o, /*gan=*/true);
  vsr::Dataset ds = vsr::load_dataset(resolve_data_path(o.data));
  vsr::TrainState init_state;
  vsr::Generator g = o.init.empty() ? vsr::Generator(rc.gen, rc.train.seed)
                                    : load_generator(o.init, &init_state);
  if (!o.init.empty() && !o.config.empty() && !(g.config() == rc.gen))
    throw vsr::ConfigError("--init checkpoint architecture differs from the --config gen section");
  if (!o.transfer_from.empty()) vsr::transfer_init(o.transfer_from, g);

  // A .disc sibling next to --init marks an interrupted GAN run: resume it.
  // Anything else (fresh start, pretrained generator) begins a new GAN phase
  // with a fresh discriminator and fresh optimizer state.
  vsr::TrainState st;
  const bool resume = !o.init.empty() && fs::exists(o.init + ".disc");
  vsr::Discriminator d = [&] {
    if (resume) {
      std::int64_t dstep = 0;
      vsr::Discriminator loaded =
          vsr::discriminator_from_checkpoint(vsr::load_checkpoint(o.init + ".disc"), &dstep);
      st = init_state;
      st.adam_t_d = dstep;
      return loaded;
    }
    for (vsr::Parameter* p : g.params()) {
      p->adam_m.zero();
      p->adam_v.zero();
    }
    return vsr::Discriminator(rc.disc, rc.train.seed + 1);
  }();

  vsr::FeatureNet fn = vsr::make_feature_net(rc.feat);
  const bool pretrained = !o.init.empty() || !o.transfer_from.empty();
  vsr::TrainResult res = vsr::train_gan(g, &d, &fn, ds, rc.train, o.out, st, pretrained);
  return finish_train("train-gan", res,
                      o.log.empty() && !o.out.empty() ? o.out + ".log.csv" : o.log);
}

// --------------------------------------------------------------------- infer

struct InferOpts {
  std::string checkpoint;
  std::string frames_dir;
  std::string out;
  bool deterministic = false;
};

int cmd_infer(const InferOpts& o) {
  if (o.deterministic) omp_set_num_threads(1);
  std::vector<std::string> paths;
  if (!fs::is_directory(o.frames_dir))
    throw vsr::ConfigError("--frames must name a directory of PGM/PPM files");
  for (const fs::directory_entry& e : fs::directory_iterator(o.frames_dir)) {
    const std::string ext = e.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.size() != 5)
    throw vsr::ConfigError("expected exactly 5 frames in " + o.frames_dir + ", found " +
                           std::to_string(paths.size()));

  std::vector<vsr::Tensor> frames;
  for (const std::string& p : paths) {
    vsr::Tensor img = vsr::read_pnm(p);
    if (img.dim(0) == 3) img = vsr::rgb_to_luminance(img);
    if (!frames.empty() && !img.same_shape(frames.front()))
      throw vsr::ConfigError("frame size mismatch: " + p);
    frames.push_back(std::move(img));
  }

  vsr::Generator g = load_generator(o.checkpoint, nullptr);
  const std::int64_t h = frames[0].dim(1), w = frames[0].dim(2);
  vsr::Tensor y = vsr::Tensor::zeros({1, 5, 1, h, w});
  for (int f = 0; f < 5; ++f)
    std::copy(frames[static_cast<std::size_t>(f)].data(),
              frames[static_cast<std::size_t>(f)].data() + h * w, y.data() + f * h * w);
  vsr::Tensor xhat = g.forward(y);
  for (std::int64_t i = 0; i < xhat.numel(); ++i)
    xhat[i] = std::clamp(xhat[i], 0.0, 1.0);
  vsr::write_pgm(o.out, xhat.reshaped({h, w}), 65535);
  std::cout << "wrote " << o.out << " (" << h << "x" << w << ")\n";
  return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalOpts {
  std::string checkpoint;
  std::string data;
  int crop = -1;  // default: dataset scale
  bool center_only = false;
  std::string out;
  std::string config;  // optional, for the feature-net spec
  bool deterministic = false;
};

int cmd_eval(const EvalOpts& o) {
  if (o.deterministic) omp_set_num_threads(1);
  vsr::Dataset ds = vsr::load_dataset(resolve_data_path(o.data));
  if (ds.samples.empty()) throw vsr::ConfigError("eval: dataset is empty");

  const bool passthrough = o.checkpoint == "passthrough";
  std::unique_ptr<vsr::Generator> g;
  if (!passthrough) g = std::make_unique<vsr::Generator>(load_generator(o.checkpoint, nullptr));

  vsr::FeatureNetSpec feat_spec =
      o.config.empty() ? vsr::FeatureNetSpec{} : vsr::load_run_config(o.config).feat;
  vsr::FeatureNet fn = vsr::make_feature_net(feat_spec);

  vsr::EvalReport report;
  report.crop = o.crop >= 0 ? o.crop : ds.scale;
  report.scale = ds.scale;
  report.model_id = passthrough ? "passthrough" : o.checkpoint;
  report.center_frame_only = o.center_only;

  const std::int64_t n = ds.patch, f = ds.frames;
  for (const vsr::FrameSequenceSample& sample_in : ds.samples) {
    const vsr::FrameSequenceSample sample =
        o.center_only ? vsr::replicate_center(sample_in) : sample_in;
    vsr::Tensor xhat;
    if (passthrough) {
      // zero-residual stub: the interpolated center frame itself
      xhat = vsr::Tensor::zeros({1, 1, n, n});
      std::copy(sample.lr_frames.data() + (f / 2) * n * n,
                sample.lr_frames.data() + (f / 2 + 1) * n * n, xhat.data());
    } else {
      xhat = g->forward(sample.lr_frames.reshaped({1, f, 1, n, n}));
    }
    for (std::int64_t i = 0; i < xhat.numel(); ++i) xhat[i] = std::clamp(xhat[i], 0.0, 1.0);
    const vsr::Tensor hr = sample.hr_center.reshaped({1, 1, n, n});
    report.rows.push_back({sample.source_id, vsr::psnr(hr, xhat, 1.0, report.crop),
                           vsr::ssim(hr, xhat, 1.0, report.crop),
                           vsr::feature_distance(hr, xhat, fn)});
  }
  report.finalize();
  std::cout << report.to_text();
  if (!o.out.empty()) {
    std::ofstream csv(o.out, std::ios::binary);
    if (!csv) throw vsr::IoError("cannot open report file: " + o.out);
    csv << report.to_csv();
    std::cout << "report: " << o.out << "\n";
  }
  return 0;
}

// ----------------------------------------------------------------- gradcheck

int cmd_gradcheck(const std::string& which) {
  const std::vector<vsr::GradCheckRow> rows = vsr::run_gradcheck_suite(which);
  if (rows.empty()) throw vsr::ConfigError("gradcheck: unknown layer name '" + which + "'");
  bool ok = true;
  std::printf("%-28s %12s %9s  %s\n", "check", "max_rel_err", "tol", "status");
  for (const vsr::GradCheckRow& r : rows) {
    ok = ok && r.pass();
    std::printf("%-28s %12.3e %9.0e  %s\n", r.name.c_str(), r.max_rel, r.tol,
                r.pass() ? "PASS" : "FAIL");
  }
  return ok ? 0 : 1;
}

// ------------------------------------------------------------------- inspect

int cmd_inspect(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw vsr::IoError("cannot open " + path);
  char magic[4] = {};
  f.read(magic, 4);
  const std::string m(magic, 4);
  f.close();

  if (m == "VSRC") {
    vsr::CheckpointData cd = vsr::load_checkpoint(path);
    std::cout << "checkpoint " << path << "\n  kind: " << cd.kind << "\n  config:\n";
    for (const auto& [k, v] : cd.config) std::cout << "    " << k << " = " << v << "\n";
    std::int64_t total = 0;
    for (const vsr::NamedTensor& nt : cd.tensors) total += nt.tensor.numel();
    std::cout << "  tensors: " << cd.tensors.size() << " (" << total << " values)\n";
    for (const vsr::NamedTensor& nt : cd.tensors)
      std::cout << "    " << nt.name << " " << vsr::shape_str(nt.tensor.shape()) << "\n";
    if (cd.has_optimizer) {
      double step = 0;
      for (const vsr::NamedTensor& nt : cd.optimizer)
        if (nt.name == "opt.step") step = nt.tensor[0];
      std::cout << "  optimizer state: yes (step " << static_cast<std::int64_t>(step) << ")\n";
    } else {
      std::cout << "  optimizer state: no\n";
    }
    std::cout << "  crc: ok\n";
    return 0;
  }
  if (m == "VSRD") {
    vsr::Dataset ds = vsr::load_dataset(path);
    std::cout << "dataset " << path << "\n  scale: " << ds.scale << "\n  patch: " << ds.patch
              << "\n  frames per sample: " << ds.frames << "\n  samples: " << ds.samples.size()
              << "\n";
    if (fs::exists(path + ".manifest")) std::cout << "  manifest: " << path << ".manifest\n";
    return 0;
  }
  throw vsr::ConfigError("unrecognized file magic '" + m + "' in " + path);
}

// ---------------------------------------------------------------------- plot

struct PlotOpts {
  std::vector<std::string> logs;
  std::string out = "curves.svg";
  std::string column = "loss_g";
};

int cmd_plot(const PlotOpts& o) {
  static const std::vector<std::string> kColumns{"epoch",      "step",    "loss_d",
                                                 "loss_g",     "loss_pixel", "loss_feat",
                                                 "lr",         "seconds"};
  const auto col_it = std::find(kColumns.begin(), kColumns.end(), o.column);
  if (col_it == kColumns.end())
    throw vsr::ConfigError("plot: unknown column '" + o.column + "'");
  const std::size_t col = static_cast<std::size_t>(col_it - kColumns.begin());

  std::vector<std::vector<double>> series;
  for (const std::string& path : o.logs) {
    std::ifstream f(path);
    if (!f) throw vsr::IoError("cannot open log: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("epoch,step,", 0) != 0)
      throw vsr::ConfigError("plot: " + path + " is not a training log");
    std::vector<double> ys;
    while (std::getline(f, line)) {
      std::istringstream ss(line);
      std::string cell;
      std::size_t i = 0;
      double v = 0;
      while (std::getline(ss, cell, ',')) {
        if (i++ == col) v = std::strtod(cell.c_str(), nullptr);
      }
      ys.push_back(v);
    }
    if (ys.empty()) throw vsr::ConfigError("plot: " + path + " has no records");
    series.push_back(std::move(ys));
  }

  double lo = 1e300, hi = -1e300;
  std::size_t steps = 0;
  for (const auto& ys : series) {
    steps = std::max(steps, ys.size());
    for (double v : ys) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;

  const double width = 900, height = 420, ml = 70, mr = 20, mt = 30, mb = 40;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](std::size_t i, std::size_t n) {
    return ml + (n < 2 ? 0.0 : pw * static_cast<double>(i) / static_cast<double>(n - 1));
  };
  auto sy = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << " " << height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << ml << "' y='20' font-family='sans-serif' font-size='14'>" << o.column
      << " per step</text>\n";
  for (int gi = 0; gi <= 4; ++gi) {
    const double v = lo + (hi - lo) * gi / 4.0;
    svg << "<line x1='" << ml << "' y1='" << sy(v) << "' x2='" << width - mr << "' y2='" << sy(v)
        << "' stroke='#ddd'/>\n"
        << "<text x='4' y='" << sy(v) + 4 << "' font-family='sans-serif' font-size='11'>"
        << vsr::format_double(v) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    svg << "<polyline fill='none' stroke='" << kColors[s % 4] << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < series[s].size(); ++i)
      svg << sx(i, series[s].size()) << "," << sy(series[s][i]) << " ";
    svg << "'/>\n<text x='" << ml + 8 << "' y='" << mt + 16 + 16 * static_cast<double>(s)
        << "' font-family='sans-serif' font-size='12' fill='" << kColors[s % 4] << "'>"
        << o.logs[s] << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw vsr::IoError("cannot open " + o.out);
  out << svg.str();
  std::cout << "wrote " << o.out << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------- main

int main(int argc, char** argv) {
  CLI::App app{"video super-resolution engine: synthesis, training, evaluation"};
  app.require_subcommand(1);
  std::function<int()> run;

  SynthOpts so;
  CLI::App* synth = app.add_subcommand("synth-data", "generate a packed synthetic dataset");
  synth->add_option("--seed", so.seed, "rng seed");
  synth->add_option("--frames", so.frames, "video length in frames");
  synth->add_option("--size", so.size, "square frame size in pixels");
  synth->add_option("--motion", so.motion, "per-frame translation 'dy,dx' in pixels");
  synth->add_option("--scale", so.scale, "downscale factor (1-4)");
  synth->add_option("--patch", so.patch, "patch size");
  synth->add_option("--stride", so.stride, "patch grid stride");
  synth->add_option("--out", so.out, "output .vsrd path (default $VSR_DATA_DIR/train.vsrd)");
  synth->callback([&] { run = [&] { return cmd_synth_data(so); }; });

  auto add_train_opts = [](CLI::App* c, TrainOpts& t) {
    c->add_option("--config", t.config, "run-config file");
    c->add_option("--data", t.data, "dataset path (default $VSR_DATA_DIR/train.vsrd)");
    c->add_option("--out", t.out, "output checkpoint path");
    c->add_option("--log", t.log, "training-log CSV path (default <out>.log.csv)");
    c->add_option("--epochs", t.epochs, "override epoch count");
    c->add_option("--batch", t.batch, "override batch size");
    c->add_option("--max-steps", t.max_steps, "stop after this many optimizer steps");
    c->add_option("--lr", t.lr, "override learning rate");
    c->add_option("--checkpoint-every", t.checkpoint_every, "periodic checkpoint cadence (epochs)");
    c->add_option("--seed", t.seed, "override rng seed")->each([&t](const std::string&) {
      t.seed_set = true;
    });
    c->add_flag("--deterministic", t.deterministic, "single thread, zeroed wall-time column");
  };

  TrainOpts po;
  CLI::App* pre = app.add_subcommand("pretrain", "MSE-pretrain the generator");
  add_train_opts(pre, po);
  pre->add_option("--init", po.init, "initial/resume generator checkpoint");
  pre->callback([&] { run = [&] { return cmd_pretrain(po); }; });

  TrainOpts go;
  CLI::App* gan = app.add_subcommand("train-gan", "adversarial training");
  add_train_opts(gan, go);
  gan->add_option("--init", go.init, "pretrained generator checkpoint (resumes if it has "
                                     "optimizer state and a .disc sibling)");
  gan->add_option("--transfer-from", go.transfer_from,
                  "initialize generator weights from another scale's checkpoint")
      ->excludes("--init");
  gan->callback([&] { run = [&] { return cmd_train_gan(go); }; });

  InferOpts io;
  CLI::App* infer = app.add_subcommand("infer", "super-resolve five frames");
  infer->add_option("--checkpoint", io.checkpoint, "generator checkpoint")->required();
  infer->add_option("--frames", io.frames_dir, "directory holding exactly 5 PGM/PPM frames")
      ->required();
  infer->add_option("--out", io.out, "output PGM (16-bit)")->required();
  infer->add_flag("--deterministic", io.deterministic, "single thread");
  infer->callback([&] { run = [&] { return cmd_infer(io); }; });

  EvalOpts eo;
  CLI::App* eval = app.add_subcommand("eval", "metric report over a dataset");
  eval->add_option("--checkpoint", eo.checkpoint,
                   "generator checkpoint, or 'passthrough' for the interpolation baseline")
      ->required();
  eval->add_option("--data", eo.data, "dataset path (default $VSR_DATA_DIR/train.vsrd)");
  eval->add_option("--crop", eo.crop, "border crop in pixels (default: dataset scale)");
  eval->add_option("--out", eo.out, "write per-sample CSV here");
  eval->add_option("--config", eo.config, "run-config file (feature-net spec)");
  eval->add_flag("--center-frame-only", eo.center_only,
                 "replace all five inputs with the center frame");
  eval->add_flag("--deterministic", eo.deterministic, "single thread");
  eval->callback([&] { run = [&] { return cmd_eval(eo); }; });

  std::string which = "all";
  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference checks of every backward");
  gc->add_option("--which", which, "all, or a row-name prefix such as conv2d");
  gc->callback([&] { run = [&] { return cmd_gradcheck(which); }; });

  std::string inspect_path;
  CLI::App* insp = app.add_subcommand("inspect", "describe a checkpoint or dataset file");
  insp->add_option("path", inspect_path, "VSRC/VSRD file")->required();
  insp->callback([&] { run = [&] { return cmd_inspect(inspect_path); }; });

  PlotOpts plo;
  CLI::App* plot = app.add_subcommand("plot", "render training-log curves to SVG");
  plot->add_option("--log", plo.logs, "training-log CSV (repeatable)")->required();
  plot->add_option("--out", plo.out, "output SVG path");
  plot->add_option("--column", plo.column, "log column to plot (default loss_g)");
  plot->callback([&] { run = [&] { return cmd_plot(plo); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return run ? run() : 2;
  } catch (const vsr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// End-to-end checks of the command-line binary: every subcommand is exercised
// through std::system against a scratch directory, asserting on exit codes,
// console output, and produced files. The binary path arrives via the
// VSR_CLI_PATH compile definition.

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "vsr/image_io.hpp"
#include "vsr/tensor.hpp"

using vsrtest::read_file;
using vsrtest::write_file;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const vsrtest::ScratchDir& dir, const std::string& args) {
  static int counter = 0;
  const std::string tag = std::to_string(counter++);
  const std::string out_path = dir.file("stdout" + tag + ".txt");
  const std::string err_path = dir.file("stderr" + tag + ".txt");
  const std::string cmd =
      std::string(VSR_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

// Small generator + clean schedule so smoke runs finish in seconds.
const char* kSmokeConfig =
    "train.batch_size = 4\n"
    "train.lr_drop_epochs = \n"
    "train.deterministic = 1\n"
    "gen.base_channels = 8\n"
    "gen.num_res_blocks = 1\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with the config status") {
  vsrtest::ScratchDir dir("cli_usage");
  CHECK(run_cli(dir, "--help").code == 0);
  CHECK(run_cli(dir, "").code == 2);                 // a subcommand is required
  CHECK(run_cli(dir, "frobnicate").code == 2);       // unknown subcommand
  CHECK(run_cli(dir, "synth-data --scale five").code == 2);
  CHECK(run_cli(dir, "infer --checkpoint g.ckpt").code == 2);  // missing required flags
}

TEST_CASE("synth-data writes a deterministic packed dataset") {
  vsrtest::ScratchDir dir("cli_synth");
  const std::string base = "synth-data --seed 1 --frames 16 --size 72 --motion 0.6,-0.35"
                           " --scale 2 --patch 36 --stride 36 --out ";
  CliResult a = run_cli(dir, base + dir.file("a.vsrd"));
  CHECK(a.code == 0);
  CHECK(a.out.find("wrote 48 samples") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("a.vsrd.manifest")));

  CliResult b = run_cli(dir, base + dir.file("b.vsrd"));
  CHECK(b.code == 0);
  CHECK(read_file(dir.file("a.vsrd")) == read_file(dir.file("b.vsrd")));

  CHECK(run_cli(dir, "synth-data --scale 5 --out " + dir.file("bad.vsrd")).code == 2);
  CHECK(run_cli(dir, "synth-data --motion fast --out " + dir.file("bad.vsrd")).code == 2);
}

TEST_CASE("gradcheck subcommand reports pass and fail states") {
  vsrtest::ScratchDir dir("cli_gradcheck");
  CliResult ok = run_cli(dir, "gradcheck --which conv2d");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  // the deliberately broken self-test row must be caught
  CliResult bad = run_cli(dir, "gradcheck --which selftest-corrupted");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("FAIL") != std::string::npos);

  CHECK(run_cli(dir, "gradcheck --which warp-drive").code == 2);
}

TEST_CASE("train, inspect, eval, plot, and infer chain together") {
  vsrtest::ScratchDir dir("cli_pipeline");
  write_file(dir.file("run.cfg"), kSmokeConfig);

  // data: 6-frame video of 24px frames -> 2 windows x 4 patches of 12
  CliResult synth = run_cli(dir, "synth-data --seed 3 --frames 6 --size 24 --patch 12"
                                 " --stride 12 --out " + dir.file("train.vsrd"));
  CHECK(synth.code == 0);
  CHECK(synth.out.find("wrote 8 samples") != std::string::npos);

  // zero-epoch run: writes the untouched init as a checkpoint
  CliResult noop = run_cli(dir, "pretrain --config " + dir.file("run.cfg") + " --data " +
                                dir.file("train.vsrd") + " --epochs 0 --out " +
                                dir.file("init.ckpt"));
  CHECK(noop.code == 0);
  CHECK(noop.out.find("no steps run") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("init.ckpt")));

  // real pretraining run with a log
  CliResult pre = run_cli(dir, "pretrain --config " + dir.file("run.cfg") + " --data " +
                               dir.file("train.vsrd") + " --epochs 3 --out " +
                               dir.file("g.ckpt"));
  CHECK(pre.code == 0);
  CHECK(pre.out.find("pretrain: 6 steps") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("g.ckpt")));
  const std::string log = read_file(dir.file("g.ckpt.log.csv"));
  CHECK(log.rfind("epoch,step,", 0) == 0);

  // resuming from the final checkpoint with the same horizon is a no-op
  CliResult done = run_cli(dir, "pretrain --config " + dir.file("run.cfg") + " --data " +
                                dir.file("train.vsrd") + " --epochs 3 --init " +
                                dir.file("g.ckpt") + " --out " + dir.file("g2.ckpt"));
  CHECK(done.code == 0);
  CHECK(done.out.find("no steps run") != std::string::npos);

  // inspect understands both container formats
  CliResult ickpt = run_cli(dir, "inspect " + dir.file("g.ckpt"));
  CHECK(ickpt.code == 0);
  CHECK(ickpt.out.find("kind: generator") != std::string::npos);
  CHECK(ickpt.out.find("optimizer state: yes") != std::string::npos);
  CHECK(ickpt.out.find("crc: ok") != std::string::npos);
  CliResult idata = run_cli(dir, "inspect " + dir.file("train.vsrd"));
  CHECK(idata.code == 0);
  CHECK(idata.out.find("samples: 8") != std::string::npos);
  CHECK(run_cli(dir, "inspect " + dir.file("run.cfg")).code == 2);

  // metric report for the trained model and the interpolation baseline
  // --crop 0: the structural metric needs an 11x11 window, patches are 12px
  CliResult ev = run_cli(dir, "eval --checkpoint " + dir.file("g.ckpt") + " --data " +
                              dir.file("train.vsrd") + " --crop 0 --deterministic --out " +
                              dir.file("report.csv"));
  CHECK(ev.code == 0);
  CHECK(ev.out.find("mean PSNR:") != std::string::npos);
  CHECK(read_file(dir.file("report.csv")).rfind("frame_id,psnr,ssim,featdist", 0) == 0);

  CliResult base = run_cli(dir, "eval --checkpoint passthrough --data " +
                                dir.file("train.vsrd") + " --crop 0 --center-frame-only");
  CHECK(base.code == 0);
  CHECK(base.out.find("passthrough") != std::string::npos);

  // loss curves for the pretraining log
  CliResult plot = run_cli(dir, "plot --log " + dir.file("g.ckpt.log.csv") + " --out " +
                                dir.file("curves.svg"));
  CHECK(plot.code == 0);
  CHECK(read_file(dir.file("curves.svg")).find("<svg") != std::string::npos);
  CHECK(run_cli(dir, "plot --log " + dir.file("g.ckpt.log.csv") + " --column bogus --out " +
                     dir.file("x.svg")).code == 2);
  CHECK(run_cli(dir, "plot --log " + dir.file("report.csv") + " --out " +
                     dir.file("x.svg")).code == 2);  // not a training log

  // five 12x12 frames on disk -> one super-resolved 16-bit PGM
  std::filesystem::create_directories(dir.file("frames"));
  vsr::Rng rng(9);
  for (int f = 0; f < 5; ++f) {
    vsr::Tensor img({1, 12, 12});
    for (std::int64_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform();
    vsr::write_pgm(dir.file("frames/f" + std::to_string(f) + ".pgm"), img.reshaped({12, 12}),
                   65535);
  }
  CliResult inf = run_cli(dir, "infer --checkpoint " + dir.file("g.ckpt") + " --frames " +
                               dir.file("frames") + " --out " + dir.file("sr.pgm") +
                               " --deterministic");
  CHECK(inf.code == 0);
  CHECK(inf.out.find("wrote") != std::string::npos);
  vsr::Tensor sr = vsr::read_pnm(dir.file("sr.pgm"));
  CHECK(sr.shape() == vsr::Shape{1, 12, 12});

  // infer refuses a frame count other than five
  std::filesystem::remove(dir.file("frames/f4.pgm"));
  CHECK(run_cli(dir, "infer --checkpoint " + dir.file("g.ckpt") + " --frames " +
                     dir.file("frames") + " --out " + dir.file("sr2.pgm")).code == 2);
}

TEST_CASE("training failures surface as distinct exit codes") {
  vsrtest::ScratchDir dir("cli_failures");
  write_file(dir.file("run.cfg"), kSmokeConfig);
  run_cli(dir, "synth-data --seed 3 --frames 6 --size 24 --patch 12 --stride 12 --out " +
               dir.file("train.vsrd"));

  // missing dataset -> runtime error
  CHECK(run_cli(dir, "pretrain --config " + dir.file("run.cfg") + " --data " +
                     dir.file("gone.vsrd") + " --epochs 1 --out " + dir.file("g.ckpt")).code == 1);

  // malformed config -> config error
  write_file(dir.file("bad.cfg"), "train.bogus = 1\n");
  CHECK(run_cli(dir, "pretrain --config " + dir.file("bad.cfg") + " --data " +
                     dir.file("train.vsrd") + " --epochs 1 --out " + dir.file("g.ckpt")).code == 2);

  // a diverging run aborts with status 1 and an explanatory message
  CliResult blown = run_cli(dir, "pretrain --config " + dir.file("run.cfg") + " --data " +
                                 dir.file("train.vsrd") + " --epochs 2 --lr 1e308 --out " +
                                 dir.file("g.ckpt"));
  CHECK(blown.code == 1);
  CHECK(blown.err.find("non-finite") != std::string::npos);
}

}  // TEST_SUITE

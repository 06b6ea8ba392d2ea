#pragma once

// Optimization and training: ADAM with classic L2 weight decay, the stepped
// learning-rate schedule, MSE pretraining, the alternating GAN loop, and
// transfer initialization from an earlier checkpoint.

#include <cstdint>
#include <string>
#include <vector>

#include "vsr/data.hpp"
#include "vsr/losses.hpp"
#include "vsr/models.hpp"
#include "vsr/tensor.hpp"

namespace vsr {

struct TrainConfig {
  int scale = 2;
  int batch_size = 64;
  int pretrain_epochs = 100;
  double pretrain_lr = 0.001;
  std::vector<int> lr_drop_epochs{50, 75};
  double lr_drop_factor = 10.0;
  int gan_epochs = 30;
  double gan_lr = 1e-4;  // constant across the GAN phase
  double weight_decay_g = 1e-4;
  double weight_decay_d = 1e-3;
  LossWeights loss_weights;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int d_steps_per_g_step = 1;
  PixelLossKind pixel_loss = PixelLossKind::kCharbonnier;
  GanMode gan_mode = GanMode::kMinimax;
  int checkpoint_every = 0;      // epochs between periodic checkpoints; 0 = final only
  std::int64_t max_steps = 0;    // stop after this many optimizer steps; 0 = no cap
  bool deterministic = false;    // zero the wall-time column of the log
  void validate() const;
};

// One ADAM update; weight decay enters as classic L2 on the gradient:
// g = grad + wd*value, then the usual bias-corrected moment update.
// t is the 1-based step index.
void adam_step(Parameter& p, double lr, double beta1, double beta2, double eps,
               double weight_decay, std::int64_t t);

// pretrain_lr divided by lr_drop_factor once per drop epoch <= epoch.
double lr_at_epoch(const TrainConfig& c, int epoch);

struct TrainLogRecord {
  int epoch = 0;
  std::int64_t step = 0;  // global optimizer-step index, 1-based
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_pixel = 0.0;
  double loss_feat = 0.0;
  double lr = 0.0;
  double seconds = 0.0;  // wall time since loop start; 0 in deterministic mode
};

struct TrainLog {
  std::vector<TrainLogRecord> records;
  std::vector<std::string> warnings;

  // header: epoch,step,loss_d,loss_g,loss_pixel,loss_feat,lr,seconds
  std::string to_csv() const;
  void save_csv(const std::string& path) const;
};

// Cursor carried across checkpoint/resume boundaries.
struct TrainState {
  int next_epoch = 0;
  std::int64_t adam_t = 0;    // generator optimizer steps taken
  std::int64_t adam_t_d = 0;  // discriminator optimizer steps taken
};

struct TrainResult {
  TrainLog log;
  TrainState state;
  bool aborted = false;  // non-finite loss; last checkpoint left untouched
  std::string abort_message;
  std::string last_checkpoint;  // most recent file written; empty if none
};

// Copies batch `order[begin:end)` of the dataset into dense batch tensors:
// y (B,F,1,N,N) and x (B,1,N,N).
void assemble_batch(const Dataset& data, const std::vector<std::int64_t>& order,
                    std::int64_t begin, std::int64_t end, Tensor* y, Tensor* x);

// Per-epoch sample order: Fisher-Yates under a per-epoch stream so that
// resuming at an epoch boundary replays the identical order.
std::vector<std::int64_t> epoch_order(std::int64_t count, std::uint64_t seed, int epoch);

// MSE pretraining. Writes periodic checkpoints to "<path>.epoch<k>" when
// checkpoint_every > 0 and the final state to <path> (optimizer included);
// empty path disables persistence. `start` resumes a partially trained run.
TrainResult pretrain(Generator& g, const Dataset& data, const TrainConfig& cfg,
                     const std::string& checkpoint_path = "", TrainState start = {});

// Alternating GAN training: d_steps_per_g_step discriminator updates on
// (real, detached fake), then one generator update on the weighted total
// loss. Passing d = nullptr skips the discriminator entirely (only valid
// with beta = 0, the degenerate harness). The discriminator checkpoint
// rides next to the generator's as "<path>.disc".
TrainResult train_gan(Generator& g, Discriminator* d, const FeatureNet* fn,
                      const Dataset& data, const TrainConfig& cfg,
                      const std::string& checkpoint_path = "", TrainState start = {},
                      bool generator_pretrained = true);

// Copies every named parameter of the checkpoint into g and resets ADAM
// moments to zero. Missing or shape-mismatched names raise CheckpointError
// listing all offenders.
void transfer_init(const std::string& checkpoint_path, Generator& g);

}  // namespace vsr

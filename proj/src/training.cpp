#include "vsr/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "vsr/checkpoint.hpp"

namespace vsr {

namespace {

// Distinct shuffle stream per epoch so that resuming at an epoch boundary
// replays the identical order without replaying earlier epochs.
constexpr std::uint64_t kEpochStride = 0x9E3779B97F4A7C15ull;

double elapsed_or_zero(std::chrono::steady_clock::time_point t0, bool deterministic) {
  if (deterministic) return 0.0;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_dataset(const Dataset& data, const Generator& g, const char* what) {
  if (data.samples.empty()) throw ConfigError(std::string(what) + ": dataset is empty");
  if (data.frames != g.config().input_frames)
    throw ConfigError(std::string(what) + ": dataset has " + std::to_string(data.frames) +
                      "-frame windows but the generator expects " +
                      std::to_string(g.config().input_frames));
}

void append_record(TrainLog& log, TrainLogRecord rec) {
  if (!std::isfinite(rec.loss_d) || !std::isfinite(rec.loss_g) ||
      !std::isfinite(rec.loss_pixel) || !std::isfinite(rec.loss_feat))
    throw NumericError("train log: refusing to record a non-finite loss");
  log.records.push_back(std::move(rec));
}

std::string abort_message(const char* what, int epoch, std::int64_t step,
                          const std::string& last_checkpoint) {
  std::ostringstream os;
  os << what << ": non-finite loss at epoch " << epoch << " step " << step
     << "; last good checkpoint: "
     << (last_checkpoint.empty() ? std::string("none") : last_checkpoint);
  return os.str();
}

void write_generator_checkpoint(const std::string& path, const Generator& g,
                                const TrainState& st) {
  CheckpointData cd = generator_to_checkpoint(g, /*with_optimizer=*/true, st.adam_t);
  cd.config.emplace_back("train.next_epoch", std::to_string(st.next_epoch));
  save_checkpoint(path, cd);
}

void write_gan_checkpoint(const std::string& path, const Generator& g, Discriminator* d,
                          const TrainState& st) {
  write_generator_checkpoint(path, g, st);
  if (d) save_checkpoint(path + ".disc",
                         discriminator_to_checkpoint(*d, /*with_optimizer=*/true, st.adam_t_d));
}

}  // namespace

void TrainConfig::validate() const {
  if (scale < 1 || scale > 4) throw ConfigError("train: scale must be in 1..4");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (pretrain_epochs < 0) throw ConfigError("train: pretrain_epochs must be >= 0");
  if (gan_epochs < 0) throw ConfigError("train: gan_epochs must be >= 0");
  if (!(pretrain_lr > 0.0)) throw ConfigError("train: pretrain_lr must be positive");
  if (!(gan_lr > 0.0)) throw ConfigError("train: gan_lr must be positive");
  if (!(lr_drop_factor > 0.0)) throw ConfigError("train: lr_drop_factor must be positive");
  if (weight_decay_g < 0.0 || weight_decay_d < 0.0)
    throw ConfigError("train: weight decay must be >= 0");
  for (std::size_t i = 0; i < lr_drop_epochs.size(); ++i) {
    if (lr_drop_epochs[i] < 0 || lr_drop_epochs[i] >= pretrain_epochs)
      throw ConfigError("train: lr_drop_epochs must lie in [0, pretrain_epochs)");
    if (i > 0 && lr_drop_epochs[i] <= lr_drop_epochs[i - 1])
      throw ConfigError("train: lr_drop_epochs must be strictly increasing");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("train: adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train: adam_eps must be positive");
  if (d_steps_per_g_step < 1) throw ConfigError("train: d_steps_per_g_step must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("train: checkpoint_every must be >= 0");
  if (max_steps < 0) throw ConfigError("train: max_steps must be >= 0");
  loss_weights.validate(/*full_gan=*/false);
}

void adam_step(Parameter& p, double lr, double beta1, double beta2, double eps,
               double weight_decay, std::int64_t t) {
  if (t < 1) throw ConfigError("adam_step: step index must be >= 1");
  if (!p.grad.all_finite())
    throw NumericError("adam_step: non-finite gradient for parameter '" + p.name + "'");
  const double* g = p.grad.data();
  const std::int64_t n = p.value.numel();
  double* w = p.value.data();
  double* m = p.adam_m.data();
  double* v = p.adam_v.data();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::int64_t i = 0; i < n; ++i) {
    const double gi = g[i] + weight_decay * w[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
    v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

double lr_at_epoch(const TrainConfig& c, int epoch) {
  if (epoch < 0 || epoch >= c.pretrain_epochs)
    throw ConfigError("lr_at_epoch: epoch " + std::to_string(epoch) +
                      " outside [0, " + std::to_string(c.pretrain_epochs) + ")");
  double lr = c.pretrain_lr;
  for (int drop : c.lr_drop_epochs)
    if (drop <= epoch) lr /= c.lr_drop_factor;
  return lr;
}

std::string TrainLog::to_csv() const {
  std::ostringstream os;
  os << "epoch,step,loss_d,loss_g,loss_pixel,loss_feat,lr,seconds\n";
  for (const TrainLogRecord& r : records)
    os << r.epoch << ',' << r.step << ',' << format_double(r.loss_d) << ','
       << format_double(r.loss_g) << ',' << format_double(r.loss_pixel) << ','
       << format_double(r.loss_feat) << ',' << format_double(r.lr) << ','
       << format_double(r.seconds) << '\n';
  return os.str();
}

void TrainLog::save_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open log file for writing: " + path);
  f << to_csv();
  if (!f) throw IoError("failed writing log file: " + path);
}

std::vector<std::int64_t> epoch_order(std::int64_t count, std::uint64_t seed, int epoch) {
  std::vector<std::int64_t> order(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed + kEpochStride * static_cast<std::uint64_t>(epoch + 1));
  for (std::int64_t i = count - 1; i > 0; --i) {
    std::int64_t j = rng.index(i + 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  return order;
}

void assemble_batch(const Dataset& data, const std::vector<std::int64_t>& order,
                    std::int64_t begin, std::int64_t end, Tensor* y, Tensor* x) {
  if (begin < 0 || end <= begin || end > static_cast<std::int64_t>(order.size()))
    throw ConfigError("assemble_batch: bad index range");
  const std::int64_t b = end - begin;
  const std::int64_t f = data.frames;
  const std::int64_t n = data.patch;
  *y = Tensor::zeros({b, f, 1, n, n});
  *x = Tensor::zeros({b, 1, n, n});
  for (std::int64_t k = 0; k < b; ++k) {
    const FrameSequenceSample& s =
        data.samples[static_cast<std::size_t>(order[static_cast<std::size_t>(begin + k)])];
    if (s.lr_frames.shape() != Shape{f, 1, n, n} || s.hr_center.shape() != Shape{1, n, n})
      throw ShapeError("assemble_batch: sample '" + s.source_id +
                       "' does not match the dataset geometry");
    std::memcpy(y->data() + k * f * n * n, s.lr_frames.data(),
                static_cast<std::size_t>(f * n * n) * sizeof(double));
    std::memcpy(x->data() + k * n * n, s.hr_center.data(),
                static_cast<std::size_t>(n * n) * sizeof(double));
  }
}

TrainResult pretrain(Generator& g, const Dataset& data, const TrainConfig& cfg,
                     const std::string& checkpoint_path, TrainState start) {
  cfg.validate();
  check_dataset(data, g, "pretrain");

  TrainResult r;
  r.state = start;
  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t count = static_cast<std::int64_t>(data.samples.size());
  bool step_cap_hit = false;

  for (int epoch = r.state.next_epoch; epoch < cfg.pretrain_epochs && !step_cap_hit; ++epoch) {
    const std::vector<std::int64_t> order = epoch_order(count, cfg.seed, epoch);
    const double lr = lr_at_epoch(cfg, epoch);
    for (std::int64_t b0 = 0; b0 < count; b0 += cfg.batch_size) {
      if (cfg.max_steps > 0 && r.state.adam_t >= cfg.max_steps) {
        step_cap_hit = true;
        break;
      }
      Tensor y, x;
      assemble_batch(data, order, b0, std::min(b0 + cfg.batch_size, count), &y, &x);
      GeneratorCache cache;
      Tensor xhat = g.forward(y, &cache);
      LossGrad l = mse_loss(x, xhat, Reduction::kMean);
      if (!std::isfinite(l.loss)) {
        r.aborted = true;
        r.abort_message = abort_message("pretrain", epoch, r.state.adam_t + 1, r.last_checkpoint);
        return r;
      }
      g.zero_grads();
      g.backward(l.grad, cache);
      ++r.state.adam_t;
      for (Parameter* p : g.params())
        adam_step(*p, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, 0.0, r.state.adam_t);
      append_record(r.log, {epoch, r.state.adam_t, 0.0, l.loss, l.loss, 0.0, lr,
                            elapsed_or_zero(t0, cfg.deterministic)});
    }
    if (!step_cap_hit) r.state.next_epoch = epoch + 1;
    if (!checkpoint_path.empty() && cfg.checkpoint_every > 0 && !step_cap_hit &&
        (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.pretrain_epochs) {
      const std::string path = checkpoint_path + ".epoch" + std::to_string(epoch + 1);
      write_generator_checkpoint(path, g, r.state);
      r.last_checkpoint = path;
    }
  }
  if (!checkpoint_path.empty()) {
    write_generator_checkpoint(checkpoint_path, g, r.state);
    r.last_checkpoint = checkpoint_path;
  }
  return r;
}

TrainResult train_gan(Generator& g, Discriminator* d, const FeatureNet* fn,
                      const Dataset& data, const TrainConfig& cfg,
                      const std::string& checkpoint_path, TrainState start,
                      bool generator_pretrained) {
  cfg.validate();
  check_dataset(data, g, "train_gan");
  const LossWeights& w = cfg.loss_weights;
  if (w.beta > 0.0 && d == nullptr)
    throw ConfigError("train_gan: adversarial weight is positive but no discriminator given");
  if (w.alpha > 0.0 && fn == nullptr)
    throw ConfigError("train_gan: feature weight is positive but no feature net given");
  if (d && data.patch != d->config().input_size)
    throw ConfigError("train_gan: dataset patch " + std::to_string(data.patch) +
                      " does not match discriminator input size " +
                      std::to_string(d->config().input_size));

  TrainResult r;
  r.state = start;
  if (!generator_pretrained)
    r.log.warnings.push_back(
        "generator was not pretrained; adversarial training from a random start is unstable");
  if (w.beta == 0.0)
    r.log.warnings.push_back(
        "adversarial weight beta = 0: the discriminator (if any) trains but cannot influence "
        "the generator");

  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t count = static_cast<std::int64_t>(data.samples.size());
  const bool adversarial = d != nullptr;
  bool step_cap_hit = false;
  int collapse_run = 0;  // consecutive generator steps with L_D below threshold

  for (int epoch = r.state.next_epoch; epoch < cfg.gan_epochs && !step_cap_hit; ++epoch) {
    const std::vector<std::int64_t> order = epoch_order(count, cfg.seed, epoch);
    for (std::int64_t b0 = 0; b0 < count; b0 += cfg.batch_size) {
      if (cfg.max_steps > 0 && r.state.adam_t >= cfg.max_steps) {
        step_cap_hit = true;
        break;
      }
      Tensor y, x;
      assemble_batch(data, order, b0, std::min(b0 + cfg.batch_size, count), &y, &x);
      GeneratorCache gcache;
      Tensor xhat = g.forward(y, &gcache);

      // Discriminator update(s) on (real, detached fake); the same minibatch
      // serves every d-step of this iteration.
      double loss_d = 0.0;
      if (adversarial) {
        for (int k = 0; k < cfg.d_steps_per_g_step; ++k) {
          d->zero_grads();
          DiscriminatorCache cache_real, cache_fake;
          Tensor p_real = d->forward(x, BnMode::kTrain, &cache_real);
          Tensor p_fake = d->forward(xhat, BnMode::kTrain, &cache_fake);
          GanLossResult gl = gan_losses(p_real, p_fake, cfg.gan_mode);
          if (!std::isfinite(gl.loss_d)) {
            r.aborted = true;
            r.abort_message =
                abort_message("train_gan[D]", epoch, r.state.adam_t + 1, r.last_checkpoint);
            return r;
          }
          d->backward(gl.grad_d_real, cache_real);
          d->backward(gl.grad_d_fake_d, cache_fake);
          ++r.state.adam_t_d;
          for (Parameter* p : d->params())
            adam_step(*p, cfg.gan_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
                      cfg.weight_decay_d, r.state.adam_t_d);
          loss_d = gl.loss_d;
        }
      }

      // Generator update on the weighted total objective.
      g.zero_grads();
      TotalLossParts parts;
      LossGrad tl = total_loss_at(xhat, x, d, fn, w, cfg.pixel_loss, cfg.gan_mode, &parts);
      if (!std::isfinite(tl.loss)) {
        r.aborted = true;
        r.abort_message =
            abort_message("train_gan[G]", epoch, r.state.adam_t + 1, r.last_checkpoint);
        return r;
      }
      g.backward(tl.grad, gcache);
      ++r.state.adam_t;
      for (Parameter* p : g.params())
        adam_step(*p, cfg.gan_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
                  cfg.weight_decay_g, r.state.adam_t);

      append_record(r.log, {epoch, r.state.adam_t, loss_d, tl.loss, parts.pixel, parts.feature,
                            cfg.gan_lr, elapsed_or_zero(t0, cfg.deterministic)});

      if (adversarial && w.beta > 0.0) {
        collapse_run = loss_d < 1e-3 ? collapse_run + 1 : 0;
        if (collapse_run == 100)
          r.log.warnings.push_back("discriminator collapse suspected: L_D < 1e-3 for 100 "
                                   "consecutive steps ending at step " +
                                   std::to_string(r.state.adam_t));
      }
    }
    if (!step_cap_hit) r.state.next_epoch = epoch + 1;
    if (!checkpoint_path.empty() && cfg.checkpoint_every > 0 && !step_cap_hit &&
        (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.gan_epochs) {
      const std::string path = checkpoint_path + ".epoch" + std::to_string(epoch + 1);
      write_gan_checkpoint(path, g, d, r.state);
      r.last_checkpoint = path;
    }
  }
  if (!checkpoint_path.empty()) {
    write_gan_checkpoint(checkpoint_path, g, d, r.state);
    r.last_checkpoint = checkpoint_path;
  }
  return r;
}

void transfer_init(const std::string& checkpoint_path, Generator& g) {
  CheckpointData cd = load_checkpoint(checkpoint_path);
  if (cd.kind != "generator")
    throw CheckpointError("transfer_init: '" + checkpoint_path + "' holds a '" + cd.kind +
                          "' checkpoint, not a generator");
  std::string missing, mismatched;
  std::size_t matched = 0;
  for (Parameter* p : g.params()) {
    const NamedTensor* nt = cd.find(p->name);
    if (!nt) {
      missing += missing.empty() ? p->name : ", " + p->name;
      continue;
    }
    if (!nt->tensor.same_shape(p->value)) {
      mismatched += (mismatched.empty() ? "" : ", ") + p->name + " " +
                    shape_str(nt->tensor.shape()) + " vs " + shape_str(p->value.shape());
      continue;
    }
    ++matched;
  }
  std::string extra;
  if (missing.empty() && mismatched.empty() && matched != cd.tensors.size())
    for (const NamedTensor& nt : cd.tensors) {
      bool known = false;
      for (const Parameter* p : std::as_const(g).params())
        if (p->name == nt.name) known = true;
      if (!known) extra += extra.empty() ? nt.name : ", " + nt.name;
    }
  if (!missing.empty() || !mismatched.empty() || !extra.empty()) {
    std::string msg = "transfer_init from '" + checkpoint_path + "':";
    if (!missing.empty()) msg += " missing tensors: " + missing + ";";
    if (!mismatched.empty()) msg += " shape mismatches: " + mismatched + ";";
    if (!extra.empty()) msg += " unexpected tensors: " + extra + ";";
    msg.pop_back();
    throw CheckpointError(msg);
  }
  for (Parameter* p : g.params()) {
    p->value = cd.find(p->name)->tensor;
    p->grad.zero();
    p->adam_m.zero();
    p->adam_v.zero();
  }
}

}  // namespace vsr

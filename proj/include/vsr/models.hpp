#pragma once

// The three networks: the multi-frame super-resolution generator, the patch
// discriminator, and the small frozen feature extractor used by the
// perceptual loss and metric. Backprop is hand-wired: forward fills a cache,
// backward consumes it and accumulates into Parameter::grad.

#include <cstdint>
#include <string>
#include <vector>

#include "vsr/kernels.hpp"
#include "vsr/tensor.hpp"

namespace vsr {

struct GeneratorConfig {
  int input_frames = 5;
  int base_channels = 64;
  int num_res_blocks = 15;
  int kernel = 3;
  int patch_size = 36;
  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

struct GeneratorCache {
  std::vector<Tensor> frame_in;   // F x (B,1,N,N): shared-conv inputs
  std::vector<Tensor> frame_pre;  // F x (B,C,N,N): shared-conv outputs, pre-ReLU
  Tensor concat;                  // (B,F*C,N,N): fusion-conv input
  Tensor fuse_pre;                // pre-ReLU
  Tensor mid_in;                  // ReLU(fuse_pre)
  Tensor mid_pre;                 // pre-ReLU
  std::vector<Tensor> res_in;     // R+1 entries; res_in[R] is the output-conv input
  std::vector<Tensor> res_pre1;   // R x first-conv outputs, pre-ReLU
};

// Per-frame shared conv(1->C)+ReLU, concat to F*C maps, fusion conv(F*C->C)+ReLU,
// conv(C->C)+ReLU, R residual blocks (conv+ReLU, conv, add input), conv(C->1).
// pad = kernel/2 everywhere, so spatial size is preserved.
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, std::uint64_t seed);

  // y: (B,F,1,N,N) -> (B,1,N,N). Pass a cache to enable backward.
  Tensor forward(const Tensor& y, GeneratorCache* cache = nullptr) const;
  // Accumulates parameter gradients, returns grad w.r.t. y.
  Tensor backward(const Tensor& grad_out, const GeneratorCache& cache);

  const GeneratorConfig& config() const { return cfg_; }
  std::vector<Parameter*> params();
  std::vector<const Parameter*> params() const;
  Parameter& param(const std::string& name);
  const Tensor& param_ref(const std::string& name) const;
  std::int64_t param_count() const;
  void zero_grads();
  int conv_count() const { return 3 + 2 * cfg_.num_res_blocks + 1; }

 private:
  GeneratorConfig cfg_;
  std::vector<Parameter> params_;  // declaration order, stable
};

struct DiscriminatorConfig {
  std::vector<int> conv_channels{64, 128, 256};
  int kernel = 3;
  int stride = 2;
  double leaky_slope = 0.2;
  int input_size = 36;
  void validate() const;
  bool operator==(const DiscriminatorConfig&) const = default;
};

struct DiscriminatorCache {
  std::vector<Tensor> conv_in;   // per stage
  std::vector<BatchNormCache> bn;
  std::vector<Tensor> bn_out;    // pre-LeakyReLU
  Tensor fc_in;                  // last stage activation
  Tensor prob;                   // sigmoid output
  BnMode mode = BnMode::kTrain;
};

// Stages of conv(k, stride, pad=k/2) + BN + LeakyReLU, then a dense layer to
// one logit and a sigmoid; output is the real-patch probability in (0,1).
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

  // patch: (B,1,N,N) -> (B,1). Train mode updates BN running stats.
  Tensor forward(const Tensor& patch, BnMode mode, DiscriminatorCache* cache = nullptr);
  // Accumulates parameter gradients, returns grad w.r.t. patch.
  Tensor backward(const Tensor& grad_out, const DiscriminatorCache& cache);

  const DiscriminatorConfig& config() const { return cfg_; }
  std::vector<Parameter*> params();
  std::vector<const Parameter*> params() const;
  Parameter& param(const std::string& name);
  std::int64_t param_count() const;
  void zero_grads();
  // BN running stats: state that is serialized but not learned.
  std::vector<std::pair<std::string, Tensor*>> state_tensors();
  const std::vector<std::int64_t>& stage_sizes() const { return sizes_; }

 private:
  DiscriminatorConfig cfg_;
  std::vector<Parameter> params_;
  std::vector<RunningStats> stats_;
  std::vector<std::int64_t> sizes_;  // spatial size after each stage
  std::int64_t fc_dim_ = 0;
};

struct FeatureNetSpec {
  std::vector<int> channels{16, 16, 32, 32};  // conv layers, 3x3 pad 1, ReLU
  std::vector<int> pool_after{2};             // 2x average pool after these layers (1-based)
  std::vector<int> taps{3, 4};                // layer outputs emitted as feature maps (1-based)
  std::uint64_t seed = 42;
  std::string weight_file;  // empty: random-seeded init
  void validate() const;
  bool operator==(const FeatureNetSpec&) const = default;
};

struct FeatureCache {
  std::vector<Tensor> conv_in;  // per layer
  std::vector<Tensor> pre;      // per layer, pre-ReLU
};

// Frozen feature extractor standing in for a pretrained perceptual network.
class FeatureNet {
 public:
  explicit FeatureNet(const FeatureNetSpec& spec);

  // image: (B,1,N,N) -> tapped feature maps in layer order.
  std::vector<Tensor> forward(const Tensor& image, FeatureCache* cache = nullptr) const;
  // Backprop tap gradients to the image; the net's own weights stay frozen.
  Tensor backward_to_input(const std::vector<Tensor>& tap_grads,
                           const FeatureCache& cache) const;

  const FeatureNetSpec& spec() const { return spec_; }
  std::vector<Parameter*> params();
  std::vector<const Parameter*> params() const;
  Parameter& param(const std::string& name);
  std::int64_t param_count() const;

 private:
  FeatureNetSpec spec_;
  std::vector<Parameter> params_;
};

}  // namespace vsr

#include "vsr/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vsr {

namespace {

Tensor he_conv(std::int64_t cout, std::int64_t cin, std::int64_t k, Rng& rng) {
  return randn({cout, cin, k, k}, rng,
               std::sqrt(2.0 / static_cast<double>(cin * k * k)));
}

void add_into(Tensor& dst, const Tensor& src) {
  check_same_shape(dst, src, "grad accumulate");
  double* d = dst.data();
  const double* s = src.data();
  const std::int64_t n = dst.numel();
  for (std::int64_t i = 0; i < n; ++i) d[i] += s[i];
}

Parameter* find_param(std::vector<Parameter>& params, const std::string& name) {
  for (Parameter& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

std::int64_t total_count(const std::vector<Parameter>& params) {
  std::int64_t n = 0;
  for (const Parameter& p : params) n += p.value.numel();
  return n;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (input_frames < 1 || input_frames % 2 == 0)
    throw ConfigError("generator: input_frames must be odd and >= 1");
  if (num_res_blocks < 0) throw ConfigError("generator: num_res_blocks must be >= 0");
  if (base_channels < 1) throw ConfigError("generator: base_channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("generator: kernel must be odd");
  if (patch_size < kernel) throw ConfigError("generator: patch_size must be >= kernel");
}

Generator::Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::int64_t c = cfg_.base_channels, k = cfg_.kernel, f = cfg_.input_frames;
  params_.emplace_back("conv_frame.weight", he_conv(c, 1, k, rng));
  params_.emplace_back("conv_frame.bias", Tensor({c}));
  params_.emplace_back("conv_fuse.weight", he_conv(c, f * c, k, rng));
  params_.emplace_back("conv_fuse.bias", Tensor({c}));
  params_.emplace_back("conv_mid.weight", he_conv(c, c, k, rng));
  params_.emplace_back("conv_mid.bias", Tensor({c}));
  for (int i = 0; i < cfg_.num_res_blocks; ++i) {
    const std::string base = "res" + std::to_string(i);
    params_.emplace_back(base + ".conv1.weight", he_conv(c, c, k, rng));
    params_.emplace_back(base + ".conv1.bias", Tensor({c}));
    params_.emplace_back(base + ".conv2.weight", he_conv(c, c, k, rng));
    params_.emplace_back(base + ".conv2.bias", Tensor({c}));
  }
  params_.emplace_back("conv_out.weight", he_conv(1, c, k, rng));
  params_.emplace_back("conv_out.bias", Tensor({1}));
}

Tensor Generator::forward(const Tensor& y, GeneratorCache* cache) const {
  const std::int64_t f = cfg_.input_frames;
  if (y.rank() != 5 || y.dim(1) != f || y.dim(2) != 1)
    throw ShapeError("generator: input must be (B," + std::to_string(f) + ",1,N,N), got " +
                     shape_str(y.shape()));
  const std::int64_t batch = y.dim(0), n = y.dim(3);
  if (y.dim(4) != n || n < cfg_.kernel)
    throw ShapeError("generator: frames must be square and at least kernel-sized");
  const int pad = cfg_.kernel / 2;

  const Parameter& wf = params_[0];
  const Parameter& bf = params_[1];
  if (cache) {
    cache->frame_in.clear();
    cache->frame_pre.clear();
    cache->res_in.clear();
    cache->res_pre1.clear();
  }

  std::vector<Tensor> acts;  // per-frame post-ReLU maps
  acts.reserve(static_cast<std::size_t>(f));
  const std::int64_t plane = n * n;
  for (std::int64_t fi = 0; fi < f; ++fi) {
    Tensor frame({batch, 1, n, n});
    for (std::int64_t b = 0; b < batch; ++b)
      std::memcpy(frame.data() + b * plane, y.data() + (b * f + fi) * plane,
                  sizeof(double) * static_cast<std::size_t>(plane));
    Tensor pre = conv2d_forward(frame, wf.value, bf.value, 1, pad);
    acts.push_back(leaky_relu_forward(pre, 0.0));
    if (cache) {
      cache->frame_in.push_back(std::move(frame));
      cache->frame_pre.push_back(std::move(pre));
    }
  }

  std::vector<const Tensor*> act_ptrs;
  for (const Tensor& t : acts) act_ptrs.push_back(&t);
  Tensor x = channel_concat(act_ptrs);
  if (cache) cache->concat = x;

  Tensor fuse_pre = conv2d_forward(x, param_ref("conv_fuse.weight"), param_ref("conv_fuse.bias"), 1, pad);
  x = leaky_relu_forward(fuse_pre, 0.0);
  if (cache) {
    cache->fuse_pre = std::move(fuse_pre);
    cache->mid_in = x;
  }

  Tensor mid_pre = conv2d_forward(x, param_ref("conv_mid.weight"), param_ref("conv_mid.bias"), 1, pad);
  x = leaky_relu_forward(mid_pre, 0.0);
  if (cache) cache->mid_pre = std::move(mid_pre);

  for (int i = 0; i < cfg_.num_res_blocks; ++i) {
    const std::string base = "res" + std::to_string(i);
    if (cache) cache->res_in.push_back(x);
    Tensor p1 = conv2d_forward(x, param_ref(base + ".conv1.weight"),
                               param_ref(base + ".conv1.bias"), 1, pad);
    Tensor a1 = leaky_relu_forward(p1, 0.0);
    Tensor p2 = conv2d_forward(a1, param_ref(base + ".conv2.weight"),
                               param_ref(base + ".conv2.bias"), 1, pad);
    x = add_forward(x, p2);
    if (cache) cache->res_pre1.push_back(std::move(p1));
  }

  if (cache) cache->res_in.push_back(x);
  return conv2d_forward(x, param_ref("conv_out.weight"), param_ref("conv_out.bias"), 1, pad);
}

Tensor Generator::backward(const Tensor& grad_out, const GeneratorCache& cache) {
  const int pad = cfg_.kernel / 2;
  const int r = cfg_.num_res_blocks;
  const std::int64_t f = cfg_.input_frames;

  Conv2dGrads g = conv2d_backward(grad_out, cache.res_in[static_cast<std::size_t>(r)],
                                  param("conv_out.weight").value, 1, pad);
  add_into(param("conv_out.weight").grad, g.weight);
  add_into(param("conv_out.bias").grad, g.bias);
  Tensor gx = std::move(g.input);

  for (int i = r - 1; i >= 0; --i) {
    const std::string base = "res" + std::to_string(i);
    Tensor a1 = leaky_relu_forward(cache.res_pre1[static_cast<std::size_t>(i)], 0.0);
    Conv2dGrads g2 = conv2d_backward(gx, a1, param(base + ".conv2.weight").value, 1, pad);
    add_into(param(base + ".conv2.weight").grad, g2.weight);
    add_into(param(base + ".conv2.bias").grad, g2.bias);
    Tensor gp1 =
        leaky_relu_backward(g2.input, cache.res_pre1[static_cast<std::size_t>(i)], 0.0);
    Conv2dGrads g1 = conv2d_backward(gp1, cache.res_in[static_cast<std::size_t>(i)],
                                     param(base + ".conv1.weight").value, 1, pad);
    add_into(param(base + ".conv1.weight").grad, g1.weight);
    add_into(param(base + ".conv1.bias").grad, g1.bias);
    gx = add_forward(gx, g1.input);  // skip connection
  }

  Tensor gmid = leaky_relu_backward(gx, cache.mid_pre, 0.0);
  Conv2dGrads gm = conv2d_backward(gmid, cache.mid_in, param("conv_mid.weight").value, 1, pad);
  add_into(param("conv_mid.weight").grad, gm.weight);
  add_into(param("conv_mid.bias").grad, gm.bias);

  Tensor gfuse = leaky_relu_backward(gm.input, cache.fuse_pre, 0.0);
  Conv2dGrads gf = conv2d_backward(gfuse, cache.concat, param("conv_fuse.weight").value, 1, pad);
  add_into(param("conv_fuse.weight").grad, gf.weight);
  add_into(param("conv_fuse.bias").grad, gf.bias);

  const std::int64_t c = cfg_.base_channels;
  std::vector<Tensor> parts =
      channel_split(gf.input, std::vector<std::int64_t>(static_cast<std::size_t>(f), c));

  const std::int64_t batch = cache.frame_in[0].dim(0), n = cache.frame_in[0].dim(2);
  const std::int64_t plane = n * n;
  Tensor gy({batch, f, 1, n, n});
  for (std::int64_t fi = 0; fi < f; ++fi) {
    Tensor gpre = leaky_relu_backward(parts[static_cast<std::size_t>(fi)],
                                      cache.frame_pre[static_cast<std::size_t>(fi)], 0.0);
    Conv2dGrads gc = conv2d_backward(gpre, cache.frame_in[static_cast<std::size_t>(fi)],
                                     param("conv_frame.weight").value, 1, pad);
    add_into(param("conv_frame.weight").grad, gc.weight);
    add_into(param("conv_frame.bias").grad, gc.bias);
    for (std::int64_t b = 0; b < batch; ++b)
      std::memcpy(gy.data() + (b * f + fi) * plane, gc.input.data() + b * plane,
                  sizeof(double) * static_cast<std::size_t>(plane));
  }
  return gy;
}

std::vector<Parameter*> Generator::params() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> Generator::params() const {
  std::vector<const Parameter*> out;
  for (const Parameter& p : params_) out.push_back(&p);
  return out;
}

Parameter& Generator::param(const std::string& name) {
  Parameter* p = find_param(params_, name);
  if (!p) throw ConfigError("generator: no parameter named " + name);
  return *p;
}

const Tensor& Generator::param_ref(const std::string& name) const {
  for (const Parameter& p : params_)
    if (p.name == name) return p.value;
  throw ConfigError("generator: no parameter named " + name);
}

std::int64_t Generator::param_count() const { return total_count(params_); }

void Generator::zero_grads() {
  for (Parameter& p : params_) p.zero_grad();
}

void DiscriminatorConfig::validate() const {
  if (conv_channels.empty()) throw ConfigError("discriminator: conv_channels empty");
  for (int c : conv_channels)
    if (c < 1) throw ConfigError("discriminator: conv channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("discriminator: kernel must be odd");
  if (stride < 1) throw ConfigError("discriminator: stride must be >= 1");
  if (leaky_slope < 0.0 || leaky_slope >= 1.0)
    throw ConfigError("discriminator: leaky_slope must be in [0,1)");
  std::int64_t s = input_size;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    s = (s + 2 * (kernel / 2) - kernel) / stride + 1;
    if (s < 1) throw ConfigError("discriminator: spatial size collapses below 1");
  }
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::int64_t k = cfg_.kernel;
  std::int64_t cin = 1;
  std::int64_t s = cfg_.input_size;
  for (std::size_t i = 0; i < cfg_.conv_channels.size(); ++i) {
    const std::int64_t c = cfg_.conv_channels[i];
    const std::string base = "stage" + std::to_string(i);
    params_.emplace_back(base + ".conv.weight", he_conv(c, cin, k, rng));
    params_.emplace_back(base + ".conv.bias", Tensor({c}));
    params_.emplace_back(base + ".bn.gamma", Tensor::full({c}, 1.0));
    params_.emplace_back(base + ".bn.beta", Tensor({c}));
    stats_.push_back(RunningStats{Tensor({c}), Tensor::full({c}, 1.0)});
    s = (s + 2 * (k / 2) - k) / cfg_.stride + 1;
    sizes_.push_back(s);
    cin = c;
  }
  fc_dim_ = cin * s * s;
  params_.emplace_back("fc.weight",
                       randn({1, fc_dim_}, rng, std::sqrt(2.0 / static_cast<double>(fc_dim_))));
  params_.emplace_back("fc.bias", Tensor({1}));
}

Tensor Discriminator::forward(const Tensor& patch, BnMode mode, DiscriminatorCache* cache) {
  if (patch.rank() != 4 || patch.dim(1) != 1 || patch.dim(2) != cfg_.input_size ||
      patch.dim(3) != cfg_.input_size)
    throw ShapeError("discriminator: input must be (B,1," + std::to_string(cfg_.input_size) +
                     "," + std::to_string(cfg_.input_size) + "), got " +
                     shape_str(patch.shape()));
  const int pad = cfg_.kernel / 2;
  if (cache) {
    cache->conv_in.clear();
    cache->bn.clear();
    cache->bn_out.clear();
    cache->mode = mode;
  }

  Tensor x = patch;
  for (std::size_t i = 0; i < cfg_.conv_channels.size(); ++i) {
    const std::string base = "stage" + std::to_string(i);
    if (cache) cache->conv_in.push_back(x);
    Tensor pre = conv2d_forward(x, param(base + ".conv.weight").value,
                                param(base + ".conv.bias").value, cfg_.stride, pad);
    BatchNormCache bn_cache;
    Tensor bn = batchnorm_forward(pre, param(base + ".bn.gamma").value,
                                  param(base + ".bn.beta").value, stats_[i], mode, 0.1, 1e-5,
                                  cache ? &bn_cache : nullptr);
    x = leaky_relu_forward(bn, cfg_.leaky_slope);
    if (cache) {
      cache->bn.push_back(std::move(bn_cache));
      cache->bn_out.push_back(std::move(bn));
    }
  }

  if (cache) cache->fc_in = x;
  Tensor logit = fully_connected_forward(x, param("fc.weight").value, param("fc.bias").value);
  Tensor prob = sigmoid_forward(logit);
  if (cache) cache->prob = prob;
  return prob;
}

Tensor Discriminator::backward(const Tensor& grad_out, const DiscriminatorCache& cache) {
  const int pad = cfg_.kernel / 2;
  Tensor g = sigmoid_backward(grad_out, cache.prob);
  FcGrads fg = fully_connected_backward(g, cache.fc_in, param("fc.weight").value);
  add_into(param("fc.weight").grad, fg.weight);
  add_into(param("fc.bias").grad, fg.bias);
  Tensor gx = std::move(fg.input);

  for (std::size_t i = cfg_.conv_channels.size(); i-- > 0;) {
    const std::string base = "stage" + std::to_string(i);
    gx = leaky_relu_backward(gx, cache.bn_out[i], cfg_.leaky_slope);
    BatchNormGrads bg =
        batchnorm_backward(gx, param(base + ".bn.gamma").value, cache.bn[i], cache.mode);
    add_into(param(base + ".bn.gamma").grad, bg.gamma);
    add_into(param(base + ".bn.beta").grad, bg.beta);
    Conv2dGrads cg = conv2d_backward(bg.input, cache.conv_in[i],
                                     param(base + ".conv.weight").value, cfg_.stride, pad);
    add_into(param(base + ".conv.weight").grad, cg.weight);
    add_into(param(base + ".conv.bias").grad, cg.bias);
    gx = std::move(cg.input);
  }
  return gx;
}

std::vector<Parameter*> Discriminator::params() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> Discriminator::params() const {
  std::vector<const Parameter*> out;
  for (const Parameter& p : params_) out.push_back(&p);
  return out;
}

Parameter& Discriminator::param(const std::string& name) {
  Parameter* p = find_param(params_, name);
  if (!p) throw ConfigError("discriminator: no parameter named " + name);
  return *p;
}

std::int64_t Discriminator::param_count() const { return total_count(params_); }

void Discriminator::zero_grads() {
  for (Parameter& p : params_) p.zero_grad();
}

std::vector<std::pair<std::string, Tensor*>> Discriminator::state_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t i = 0; i < stats_.size(); ++i) {
    const std::string base = "stage" + std::to_string(i);
    out.emplace_back(base + ".bn.running_mean", &stats_[i].mean);
    out.emplace_back(base + ".bn.running_var", &stats_[i].var);
  }
  return out;
}

void FeatureNetSpec::validate() const {
  if (channels.empty()) throw ConfigError("featurenet: no conv layers");
  for (int c : channels)
    if (c < 1) throw ConfigError("featurenet: channels must be >= 1");
  if (taps.empty()) throw ConfigError("featurenet: at least one tap point required");
  const int layers = static_cast<int>(channels.size());
  int prev = 0;
  for (int t : taps) {
    if (t < 1 || t > layers) throw ConfigError("featurenet: tap index out of range");
    if (t <= prev) throw ConfigError("featurenet: taps must be strictly increasing");
    prev = t;
  }
  for (int p : pool_after)
    if (p < 1 || p > layers) throw ConfigError("featurenet: pool index out of range");
}

FeatureNet::FeatureNet(const FeatureNetSpec& spec) : spec_(spec) {
  spec_.validate();
  Rng rng(spec_.seed);
  std::int64_t cin = 1;
  for (std::size_t i = 0; i < spec_.channels.size(); ++i) {
    const std::string base = "conv" + std::to_string(i + 1);
    params_.emplace_back(base + ".weight", he_conv(spec_.channels[i], cin, 3, rng));
    params_.emplace_back(base + ".bias", Tensor({spec_.channels[i]}));
    cin = spec_.channels[i];
  }
}

std::vector<Tensor> FeatureNet::forward(const Tensor& image, FeatureCache* cache) const {
  if (image.rank() != 4 || image.dim(1) != 1)
    throw ShapeError("featurenet: input must be (B,1,N,N), got " + shape_str(image.shape()));
  if (cache) {
    cache->conv_in.clear();
    cache->pre.clear();
  }
  std::vector<Tensor> taps;
  Tensor x = image;
  for (std::size_t i = 0; i < spec_.channels.size(); ++i) {
    const int layer = static_cast<int>(i) + 1;
    if (cache) cache->conv_in.push_back(x);
    Tensor pre = conv2d_forward(x, params_[2 * i].value, params_[2 * i + 1].value, 1, 1);
    x = leaky_relu_forward(pre, 0.0);
    if (cache) cache->pre.push_back(std::move(pre));
    if (std::find(spec_.pool_after.begin(), spec_.pool_after.end(), layer) !=
        spec_.pool_after.end())
      x = avgpool2_forward(x);
    if (std::find(spec_.taps.begin(), spec_.taps.end(), layer) != spec_.taps.end())
      taps.push_back(x);
  }
  return taps;
}

Tensor FeatureNet::backward_to_input(const std::vector<Tensor>& tap_grads,
                                     const FeatureCache& cache) const {
  if (tap_grads.size() != spec_.taps.size())
    throw ShapeError("featurenet: expected " + std::to_string(spec_.taps.size()) +
                     " tap gradients, got " + std::to_string(tap_grads.size()));
  Tensor g;
  bool have_g = false;
  for (std::size_t i = spec_.channels.size(); i-- > 0;) {
    const int layer = static_cast<int>(i) + 1;
    auto tap_it = std::find(spec_.taps.begin(), spec_.taps.end(), layer);
    if (tap_it != spec_.taps.end()) {
      const Tensor& tg = tap_grads[static_cast<std::size_t>(tap_it - spec_.taps.begin())];
      if (have_g)
        g = add_forward(g, tg);
      else {
        g = tg;
        have_g = true;
      }
    }
    if (!have_g) continue;  // layers above the deepest tap carry no gradient
    if (std::find(spec_.pool_after.begin(), spec_.pool_after.end(), layer) !=
        spec_.pool_after.end())
      g = avgpool2_backward(g);
    g = leaky_relu_backward(g, cache.pre[i], 0.0);
    // frozen network: weight/bias gradients are computed and dropped
    Conv2dGrads cg = conv2d_backward(g, cache.conv_in[i], params_[2 * i].value, 1, 1);
    g = std::move(cg.input);
  }
  if (!have_g) throw ShapeError("featurenet: no tap gradient reached the input");
  return g;
}

std::vector<Parameter*> FeatureNet::params() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> FeatureNet::params() const {
  std::vector<const Parameter*> out;
  for (const Parameter& p : params_) out.push_back(&p);
  return out;
}

Parameter& FeatureNet::param(const std::string& name) {
  Parameter* p = find_param(params_, name);
  if (!p) throw ConfigError("featurenet: no parameter named " + name);
  return *p;
}

std::int64_t FeatureNet::param_count() const { return total_count(params_); }

}  // namespace vsr
